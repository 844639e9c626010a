#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "reqgen/experiment.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw reqgen::UsageError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_keywords(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reqgen: keywords-to-requirement generation pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::string keywords_csv;
  std::string roles_path;
  std::string request_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--seed", seed, "override rng seed");
  app.add_option("--out", out_dir, "override output directory");

  CLI::App* prepare = app.add_subcommand("prepare", "tokenize, extract keywords, build vocabulary");
  CLI::App* train = app.add_subcommand("train", "train the model on the prepared dataset");
  CLI::App* generate = app.add_subcommand("generate", "decode a requirement from keywords");
  generate->add_option("--keywords", keywords_csv, "comma-separated keyword phrases");
  generate->add_option("--roles", roles_path, "JSON file with element word sets and weights");
  generate->add_option("--request", request_path, "generation request JSON");
  CLI::App* evaluate = app.add_subcommand("evaluate", "decode and score the prepared dataset");
  CLI::App* crossval = app.add_subcommand("crossval", "k-fold cross-validated evaluation");
  CLI::App* ablate = app.add_subcommand("ablate", "layer/threshold/component ablation grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    reqgen::ExperimentConfig config = reqgen::ExperimentConfig::from_json_file(config_path);
    if (seed) {
      config.rng_seed = *seed;
      config.model.rng_seed = *seed;
    }
    if (!out_dir.empty()) config.output_dir = out_dir;

    if (prepare->parsed()) {
      const auto result = reqgen::cmd_prepare(config);
      std::cout << "prepared " << result.prepared << " records (" << result.skipped
                << " skipped), keyword coverage " << result.keyword_coverage << "\n";
      for (const auto& line : result.skip_log) std::cerr << "skipped " << line << "\n";
      std::cout << "wrote " << config.prepared_path() << ", " << config.vocab_path() << ", "
                << config.coverage_path() << "\n";
    } else if (train->parsed()) {
      const auto summary = reqgen::cmd_train(config);
      for (std::size_t i = 0; i < summary.epoch_losses.size(); ++i)
        std::cout << "epoch " << i + 1 << " loss " << summary.epoch_losses[i] << "\n";
      std::cout << "teacher-forced token accuracy " << summary.token_accuracy << "\n";
      std::cout << "wrote " << summary.checkpoint_path << "\n";
    } else if (generate->parsed()) {
      reqgen::GenerateRequest request;
      if (!request_path.empty())
        request = reqgen::GenerateRequest::from_json_text(read_file(request_path));
      if (!keywords_csv.empty()) request.keywords = split_keywords(keywords_csv);
      if (!roles_path.empty())
        request.roles = reqgen::roles_from_json_text(read_file(roles_path));
      const auto outcome = reqgen::cmd_generate(config, request);
      std::cout << outcome.result.best().text << "\n";
      std::cout << outcome.response_json << "\n";
    } else if (evaluate->parsed()) {
      const auto report = reqgen::cmd_evaluate(config);
      std::cout << reqgen::render_metrics_table({{"evaluate", report}});
    } else if (crossval->parsed()) {
      const auto result = reqgen::cmd_crossval(config);
      for (const auto& err : result.fold_errors) std::cerr << err << "\n";
      std::cout << result.table;
    } else if (ablate->parsed()) {
      const auto result = reqgen::cmd_ablate(config);
      for (const auto& row : result.rows)
        if (row.failed)
          std::cerr << row.plan_label << " | " << row.threshold_label << " | " << row.toggle_label
                    << " failed: " << row.error << "\n";
      std::cout << result.table;
    }
    return 0;
  } catch (const reqgen::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
