#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reqgen/decoder.hpp"
#include "reqgen/metrics.hpp"
#include "reqgen/model.hpp"

namespace reqgen {

// Bad invocation or missing/invalid input file; the CLI maps it to exit 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AblationToggles {
  bool injection = true;
  bool copy = true;
  bool syntax_decoding = true;

  std::string label() const;  // "injection+copy+syntax (full)", "copy", "none", ...
};

struct GenerationSettings {
  int beam_size = 5;
  int max_len = 64;
  double lambda_rs = 1.0;
  bool length_norm = true;
};

struct ExperimentConfig {
  std::string ontology_path;
  std::string corpus_path;
  std::string checkpoint_path;
  std::string output_dir = ".";

  ModelConfig model;
  InjectionPlan plan = InjectionPlan::default_plan();
  GenerationSettings generation;
  AblationToggles toggles;
  int k_folds = 5;
  std::uint64_t rng_seed = 1;
  int min_count = 1;

  std::vector<std::vector<std::pair<int, int>>> ablation_layer_plans;  // (layer, hop)
  std::vector<std::uint64_t> ablation_thresholds;
  std::vector<AblationToggles> ablation_toggles;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);

  std::string prepared_path() const { return output_dir + "/prepared.jsonl"; }
  std::string vocab_path() const { return output_dir + "/vocab.json"; }
  std::string coverage_path() const { return output_dir + "/coverage.json"; }
  std::string effective_checkpoint_path() const {
    return checkpoint_path.empty() ? output_dir + "/model.json" : checkpoint_path;
  }
};

struct PrepareResult {
  int prepared = 0;
  int skipped = 0;
  std::size_t total_keywords = 0;
  std::size_t matched_keywords = 0;
  double keyword_coverage = 0.0;
  std::vector<std::string> skip_log;
};

// Fills in missing keywords, enforces the training invariants, marks copy
// labels, builds the vocabulary over requirements + ontology pseudo-sentences,
// and writes prepared.jsonl / vocab.json / coverage.json to the output dir.
PrepareResult cmd_prepare(const ExperimentConfig& config);

struct TrainSummary {
  std::vector<double> epoch_losses;
  std::string checkpoint_path;
  double token_accuracy = 0.0;
};

TrainSummary cmd_train(const ExperimentConfig& config);

struct GenerateRequest {
  std::vector<std::string> keywords;  // raw phrase strings
  std::optional<SyntaxReference> roles;
  std::optional<int> beam_size;
  std::optional<int> max_len;
  std::optional<double> lambda_rs;

  static GenerateRequest from_json_text(const std::string& text);
};

struct GenerateOutcome {
  GenerationResult result;
  std::string response_json;  // {"text","score","rs4re","complete","candidates":[...]}
};

GenerateOutcome cmd_generate(const ExperimentConfig& config, const GenerateRequest& request);

MetricsReport cmd_evaluate(const ExperimentConfig& config);

struct CrossvalResult {
  std::vector<MetricsReport> fold_reports;   // successful folds, in fold order
  std::vector<std::string> fold_errors;      // "fold3: <what>" for aborted folds
  MetricsReport mean;                        // over successful folds
  std::string table;
};

CrossvalResult cmd_crossval(const ExperimentConfig& config);

struct AblationRow {
  std::string plan_label;
  std::string threshold_label;  // "no" for 0
  std::string toggle_label;
  MetricsReport mean;
  bool failed = false;
  std::string error;
};

struct AblationResult {
  std::vector<AblationRow> rows;  // |plans| x |thresholds| x |toggles|
  std::string table;
};

AblationResult cmd_ablate(const ExperimentConfig& config);

// Source packing shared by training and generation:
// [CLS] k1 [SEP] k2 [SEP] ... kn [SEP].
std::vector<int> build_source_ids(const std::vector<Phrase>& keywords, const Vocabulary& vocab);

}  // namespace reqgen
