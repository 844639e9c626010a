// End-to-end smoke test of the installed CLI binary: exercises every
// subcommand through argv and checks the documented exit codes.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <nlohmann/json.hpp>

#include "support/toydata.hpp"

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(REQGEN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAIL: " << what << "\n";
  }
}

}  // namespace

int main() {
  const std::string dir = reqgen::test::scratch_dir("cli");
  reqgen::test::write_toy_ontology(dir + "/ontology.jsonl");
  reqgen::test::write_toy_corpus(dir + "/corpus.jsonl", reqgen::test::toy_records(8));
  const std::string config_path = dir + "/config.json";
  {
    nlohmann::json config{
        {"paths",
         {{"ontology", dir + "/ontology.jsonl"},
          {"corpus", dir + "/corpus.jsonl"},
          {"output_dir", dir + "/out"}}},
        {"model",
         {{"depth", 2}, {"d_model", 16}, {"heads", 2}, {"d_ffn", 32}, {"max_len", 48},
          {"knowledge_hidden", 4}, {"epochs", 1}, {"batch_size", 4}}},
        {"plan", {{"entries", {{1, 3, 0}, {2, 1, 0}}}, {"token_cap_per_layer", 128}}},
        {"generation", {{"beam_size", 3}, {"max_len", 20}}},
        {"k_folds", 2},
        {"rng_seed", 5}};
    std::ofstream(config_path) << config.dump(2);
  }

  expect(run("") == 2 || run("") == 106, "no subcommand is a usage error");
  expect(run("prepare --config " + dir + "/missing.json") == 2,
         "missing config file exits 2");
  expect(run("prepare --config " + config_path) == 0, "prepare succeeds");
  expect(run("train --config " + config_path) == 0, "train succeeds");
  expect(run("train --config " + config_path + " --out " + dir + "/elsewhere") == 2,
         "train without a prepared dataset exits 2");
  expect(run("generate --config " + config_path + " --keywords uav") == 2,
         "single keyword exits 2");
  expect(run("generate --config " + config_path + " --keywords uav,ground") == 0,
         "generate succeeds");
  {
    std::ofstream(dir + "/request.json")
        << R"({"keywords": ["uav", "ground"], "beam_size": 2, "max_len": 16})";
    expect(run("generate --config " + config_path + " --request " + dir + "/request.json") == 0,
           "generate via request JSON succeeds");
    std::ofstream(dir + "/roles.json")
        << R"({"subject": {"words": ["uav"], "alpha": 0.5},
               "object": {"words": ["ground"], "alpha": 0.5}})";
    expect(run("generate --config " + config_path + " --keywords uav,ground --roles " + dir +
               "/roles.json") == 0,
           "generate with roles succeeds");
  }
  expect(run("evaluate --config " + config_path) == 0, "evaluate succeeds");
  expect(run("crossval --config " + config_path) == 0, "crossval succeeds");
  // ablate without grids in the config is a usage error
  expect(run("ablate --config " + config_path) == 2, "ablate without grids exits 2");

  if (failures == 0) std::puts("cli smoke: all checks passed");
  return failures == 0 ? 0 : 1;
}
