#include "reqgen/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reqgen/checkpoint.hpp"
#include "reqgen/rng.hpp"

namespace reqgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw UsageError("no " + what + " path configured");
  if (!fs::exists(path)) throw UsageError(what + " not found: " + path);
}

void ensure_dir(const std::string& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

json roles_to_json(const SyntaxReference& ref) {
  json out = json::object();
  for (const auto& e : ref.elements) {
    json words = json::array();
    for (const auto& w : e.words) words.push_back(w);
    out[e.name] = {{"words", std::move(words)}, {"alpha", e.alpha}};
  }
  return out;
}

std::vector<std::string> keyword_strings(const RequirementRecord& rec) {
  std::vector<std::string> out;
  out.reserve(rec.keywords.size());
  for (const auto& p : rec.keywords) out.push_back(phrase_text(p));
  return out;
}

// Injection layers always mirror the plan; the copy toggle zeroes the copy
// loss so the head stays untrained when the mechanism is off.
ModelConfig effective_model_config(const ExperimentConfig& config, int vocab_size) {
  ModelConfig mc = config.model;
  mc.vocab_size = vocab_size;
  mc.injection_layers.clear();
  if (config.toggles.injection)
    for (const auto& e : config.plan.entries) mc.injection_layers.push_back(e.layer);
  if (!config.toggles.copy) mc.copy_loss_weight = 0.0;
  return mc;
}

Vocabulary load_vocab_file(const std::string& path) {
  require_file(path, "vocabulary file");
  std::ifstream in(path);
  json doc = json::parse(in);
  return Vocabulary::from_tokens(doc.at("tokens").get<std::vector<std::string>>());
}

struct PreparedInputs {
  std::vector<RequirementRecord> records;
  Vocabulary vocab;
};

PreparedInputs load_prepared(const ExperimentConfig& config) {
  if (!fs::exists(config.prepared_path()) || !fs::exists(config.vocab_path()))
    throw UsageError("prepared dataset not found in " + config.output_dir +
                     " (run the prepare command first)");
  PreparedInputs out;
  out.records = load_corpus(config.prepared_path());
  out.vocab = load_vocab_file(config.vocab_path());
  if (out.records.empty()) throw UsageError("prepared dataset is empty");
  return out;
}

KnowledgeProvider make_provider(const OntologyGraph* graph, const InjectionPlan& plan) {
  if (!graph) return nullptr;
  return [graph, plan](const std::vector<Phrase>& keywords) {
    std::vector<std::string> strings;
    strings.reserve(keywords.size());
    for (const auto& p : keywords) strings.push_back(phrase_text(p));
    return build_injection_knowledge(*graph, strings, plan);
  };
}

std::map<int, KnowledgeEncoding> encode_record_knowledge(const RequirementRecord& rec,
                                                         const OntologyGraph* graph,
                                                         const ExperimentConfig& config,
                                                         const Vocabulary& vocab,
                                                         const Parameters& params) {
  std::map<int, KnowledgeEncoding> out;
  if (!graph || !params.config.has_injection()) return out;
  auto sentences = build_injection_knowledge(*graph, keyword_strings(rec), config.plan);
  for (int layer : params.config.injection_layers) {
    auto it = sentences.find(layer);
    if (it == sentences.end()) continue;
    out[layer] = encode_knowledge(it->second, vocab, params, config.plan.token_cap_per_layer);
  }
  return out;
}

GenerationCandidate decode_record(const RequirementRecord& rec, const OntologyGraph* graph,
                                  const ExperimentConfig& config, const Vocabulary& vocab,
                                  const Parameters& params) {
  GenerationConstraints constraints;
  for (const auto& p : rec.keywords) constraints.keyword_phrases.push_back(vocab.encode(p));
  constraints.beam_size = config.generation.beam_size;
  constraints.max_len = config.generation.max_len;
  constraints.length_norm = config.generation.length_norm;
  constraints.copy_enabled = config.toggles.copy;
  constraints.lambda_rs = config.generation.lambda_rs;
  std::optional<SyntaxReference> ref;
  if (config.toggles.syntax_decoding && rec.roles) ref = rec.roles;
  const auto src = build_source_ids(rec.keywords, vocab);
  const auto knowledge = encode_record_knowledge(rec, graph, config, vocab, params);
  return beam_search(src, knowledge, constraints, ref, vocab, params).best();
}

MetricsReport mean_report(const std::vector<MetricsReport>& reports) {
  MetricsReport mean;
  if (reports.empty()) return mean;
  const double n = static_cast<double>(reports.size());
  for (const char* key : {"1", "2", "L"}) mean.rouge[key] = {};
  for (const auto& r : reports) {
    mean.bleu1 += r.bleu1 / n;
    mean.bleu2 += r.bleu2 / n;
    for (const char* key : {"1", "2", "L"}) {
      mean.rouge[key].recall += r.rouge.at(key).recall / n;
      mean.rouge[key].precision += r.rouge.at(key).precision / n;
      mean.rouge[key].f_measure += r.rouge.at(key).f_measure / n;
    }
    mean.rs4re_mean += r.rs4re_mean / n;
    mean.rs4re_count += r.rs4re_count;
  }
  return mean;
}

struct SharedInputs {
  std::vector<RequirementRecord> records;
  Vocabulary vocab;
  OntologyGraph graph;
  bool has_graph = false;
};

SharedInputs load_shared(const ExperimentConfig& config) {
  SharedInputs shared;
  auto prepared = load_prepared(config);
  shared.records = std::move(prepared.records);
  shared.vocab = std::move(prepared.vocab);
  if (config.toggles.injection || !config.ontology_path.empty()) {
    require_file(config.ontology_path, "ontology file");
    shared.graph = load_triples(config.ontology_path);
    shared.has_graph = true;
  }
  return shared;
}

CrossvalResult crossval_impl(const ExperimentConfig& config, const SharedInputs& shared) {
  if (config.k_folds < 2) throw UsageError("k_folds must be >= 2");
  if (static_cast<std::size_t>(config.k_folds) > shared.records.size())
    throw UsageError("k_folds exceeds the number of prepared records");
  config.plan.validate(config.model.depth);

  const FoldSplit split = make_folds(shared.records, config.k_folds, config.rng_seed);
  std::map<std::string, const RequirementRecord*> by_id;
  for (const auto& r : shared.records) by_id[r.id] = &r;
  const OntologyGraph* graph =
      shared.has_graph && config.toggles.injection ? &shared.graph : nullptr;
  const ModelConfig mc = effective_model_config(config, shared.vocab.size());
  const KnowledgeProvider provider = make_provider(graph, config.plan);

  CrossvalResult result;
  std::vector<std::pair<std::string, MetricsReport>> table_rows;
  for (int fold = 0; fold < config.k_folds; ++fold) {
    std::set<std::string> test_ids(split.folds[static_cast<std::size_t>(fold)].begin(),
                                   split.folds[static_cast<std::size_t>(fold)].end());
    std::vector<RequirementRecord> train_set;
    for (const auto& r : shared.records)
      if (!test_ids.count(r.id)) train_set.push_back(r);

    try {
      TrainResult trained = train(train_set, shared.vocab, mc, provider);
      std::vector<EvaluatedPair> pairs;
      for (const auto& id : split.folds[static_cast<std::size_t>(fold)]) {
        const RequirementRecord* rec = by_id.at(id);
        GenerationCandidate best =
            decode_record(*rec, graph, config, shared.vocab, trained.params);
        pairs.push_back({best.surface, rec});
      }
      MetricsReport report = evaluate_corpus(pairs);
      table_rows.emplace_back("fold" + std::to_string(fold + 1), report);
      result.fold_reports.push_back(std::move(report));
    } catch (const std::exception& e) {
      result.fold_errors.push_back("fold" + std::to_string(fold + 1) + ": " + e.what());
    }
  }
  if (result.fold_reports.empty())
    throw std::runtime_error("every fold failed: " +
                             (result.fold_errors.empty() ? "no folds" : result.fold_errors[0]));
  result.mean = mean_report(result.fold_reports);
  table_rows.emplace_back("mean", result.mean);
  result.table = render_metrics_table(table_rows);
  return result;
}

json report_to_json(const MetricsReport& r) { return json::parse(metrics_report_json(r)); }

}  // namespace

std::string AblationToggles::label() const {
  std::vector<std::string> parts;
  if (injection) parts.push_back("injection");
  if (copy) parts.push_back("copy");
  if (syntax_decoding) parts.push_back("syntax");
  if (parts.empty()) return "none";
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out.push_back('+');
    out += p;
  }
  if (injection && copy && syntax_decoding) out += " (full)";
  return out;
}

namespace {

AblationToggles toggles_from_json(const json& j) {
  AblationToggles t;
  if (j.contains("injection")) t.injection = j.at("injection").get<bool>();
  if (j.contains("copy")) t.copy = j.at("copy").get<bool>();
  if (j.contains("syntax_decoding")) t.syntax_decoding = j.at("syntax_decoding").get<bool>();
  return t;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  const json doc = json::parse(text);
  ExperimentConfig c;
  if (doc.contains("paths")) {
    const json& p = doc.at("paths");
    if (p.contains("ontology")) c.ontology_path = p.at("ontology").get<std::string>();
    if (p.contains("corpus")) c.corpus_path = p.at("corpus").get<std::string>();
    if (p.contains("checkpoint")) c.checkpoint_path = p.at("checkpoint").get<std::string>();
    if (p.contains("output_dir")) c.output_dir = p.at("output_dir").get<std::string>();
  }
  if (doc.contains("rng_seed")) c.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
  c.model.rng_seed = c.rng_seed;
  if (doc.contains("model")) {
    const json& m = doc.at("model");
    if (m.contains("depth")) c.model.depth = m.at("depth").get<int>();
    if (m.contains("d_model")) c.model.d_model = m.at("d_model").get<int>();
    if (m.contains("heads")) c.model.heads = m.at("heads").get<int>();
    if (m.contains("d_ffn")) c.model.d_ffn = m.at("d_ffn").get<int>();
    if (m.contains("max_len")) c.model.max_len = m.at("max_len").get<int>();
    if (m.contains("knowledge_hidden"))
      c.model.knowledge_hidden = m.at("knowledge_hidden").get<int>();
    if (m.contains("learning_rate")) c.model.learning_rate = m.at("learning_rate").get<double>();
    if (m.contains("batch_size")) c.model.batch_size = m.at("batch_size").get<int>();
    if (m.contains("epochs")) c.model.epochs = m.at("epochs").get<int>();
    if (m.contains("rng_seed")) c.model.rng_seed = m.at("rng_seed").get<std::uint64_t>();
    if (m.contains("copy_loss_weight"))
      c.model.copy_loss_weight = m.at("copy_loss_weight").get<double>();
  }
  if (doc.contains("plan")) {
    const json& p = doc.at("plan");
    if (p.contains("entries")) {
      c.plan.entries.clear();
      for (const auto& e : p.at("entries")) {
        InjectionPlanEntry entry;
        entry.layer = e.at(0).get<int>();
        entry.hop_limit = e.at(1).get<int>();
        entry.freq_threshold = e.size() > 2 ? e.at(2).get<std::uint64_t>() : 0;
        c.plan.entries.push_back(entry);
      }
    }
    if (p.contains("token_cap_per_layer"))
      c.plan.token_cap_per_layer = p.at("token_cap_per_layer").get<int>();
  }
  if (doc.contains("generation")) {
    const json& g = doc.at("generation");
    if (g.contains("beam_size")) c.generation.beam_size = g.at("beam_size").get<int>();
    if (g.contains("max_len")) c.generation.max_len = g.at("max_len").get<int>();
    if (g.contains("lambda_rs")) c.generation.lambda_rs = g.at("lambda_rs").get<double>();
    if (g.contains("length_norm")) c.generation.length_norm = g.at("length_norm").get<bool>();
  }
  if (doc.contains("toggles")) c.toggles = toggles_from_json(doc.at("toggles"));
  if (doc.contains("k_folds")) c.k_folds = doc.at("k_folds").get<int>();
  if (doc.contains("min_count")) c.min_count = doc.at("min_count").get<int>();
  if (doc.contains("ablation")) {
    const json& a = doc.at("ablation");
    if (a.contains("layer_plans")) {
      for (const auto& plan : a.at("layer_plans")) {
        std::vector<std::pair<int, int>> entries;
        for (const auto& e : plan) entries.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
        c.ablation_layer_plans.push_back(std::move(entries));
      }
    }
    if (a.contains("freq_thresholds"))
      c.ablation_thresholds = a.at("freq_thresholds").get<std::vector<std::uint64_t>>();
    if (a.contains("toggles"))
      for (const auto& t : a.at("toggles")) c.ablation_toggles.push_back(toggles_from_json(t));
  }
  c.plan.validate(c.model.depth);
  return c;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  require_file(path, "config file");
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return from_json_text(text);
  } catch (const json::exception& e) {
    throw UsageError("invalid config " + path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError("invalid config " + path + ": " + e.what());
  }
}

std::vector<int> build_source_ids(const std::vector<Phrase>& keywords, const Vocabulary& vocab) {
  std::vector<int> src{kClsId};
  for (const auto& phrase : keywords) {
    for (int id : vocab.encode(phrase)) src.push_back(id);
    src.push_back(kSepId);
  }
  return src;
}

PrepareResult cmd_prepare(const ExperimentConfig& config) {
  require_file(config.corpus_path, "corpus file");
  require_file(config.ontology_path, "ontology file");
  const OntologyGraph graph = load_triples(config.ontology_path);
  std::vector<RequirementRecord> records = load_corpus(config.corpus_path);
  if (records.empty()) throw UsageError("corpus has no records");

  PrepareResult result;
  std::vector<RequirementRecord> kept;
  for (auto& rec : records) {
    const Tokens tokens = tokenize(rec.text);
    try {
      if (rec.keywords.empty())
        rec.keywords = extract_keywords(rec, mix_seed(config.rng_seed, fnv1a(rec.id)));
      if (rec.keywords.size() < 2)
        throw std::runtime_error("fewer than two keyword phrases");
      for (const auto& phrase : rec.keywords) {
        const auto labels = mark_copy_labels({phrase}, tokens);
        if (std::find(labels.begin(), labels.end(), 1) == labels.end())
          throw std::runtime_error("keyword \"" + phrase_text(phrase) +
                                   "\" does not occur in the text");
      }
    } catch (const std::exception& e) {
      ++result.skipped;
      result.skip_log.push_back(rec.id + ": " + e.what());
      continue;
    }
    kept.push_back(rec);
  }
  if (kept.empty()) throw UsageError("no record survived preparation");
  result.prepared = static_cast<int>(kept.size());

  std::vector<std::string> sentence_texts;
  for (const auto& s : triples_to_pseudo_sentences(graph.triples, {}))
    sentence_texts.push_back(s.text);
  const Vocabulary vocab = build_vocabulary(kept, sentence_texts, config.min_count);

  for (const auto& rec : kept) {
    for (const auto& phrase : rec.keywords) {
      ++result.total_keywords;
      if (!graph.match_entities(phrase_text(phrase)).empty()) ++result.matched_keywords;
    }
  }
  result.keyword_coverage =
      result.total_keywords == 0
          ? 0.0
          : static_cast<double>(result.matched_keywords) /
                static_cast<double>(result.total_keywords);

  ensure_dir(config.output_dir);
  {
    std::ofstream out(config.prepared_path(), std::ios::binary);
    for (const auto& rec : kept) {
      const Tokens tokens = tokenize(rec.text);
      json line{{"id", rec.id}, {"text", rec.text}};
      json kws = json::array();
      for (const auto& p : rec.keywords) kws.push_back(phrase_text(p));
      line["keywords"] = std::move(kws);
      line["tokens"] = tokens;
      line["copy_labels"] = mark_copy_labels(rec.keywords, tokens);
      if (rec.roles) line["roles"] = roles_to_json(*rec.roles);
      out << line.dump() << '\n';
    }
  }
  {
    std::ofstream out(config.vocab_path(), std::ios::binary);
    out << json{{"tokens", vocab.tokens()}}.dump(2) << '\n';
  }
  {
    std::ofstream out(config.coverage_path(), std::ios::binary);
    out << json{{"total_keywords", result.total_keywords},
                {"matched_keywords", result.matched_keywords},
                {"coverage", result.keyword_coverage},
                {"records_prepared", result.prepared},
                {"records_skipped", result.skipped},
                {"skip_log", result.skip_log}}
               .dump(2)
        << '\n';
  }
  return result;
}

TrainSummary cmd_train(const ExperimentConfig& config) {
  auto prepared = load_prepared(config);
  config.plan.validate(config.model.depth);
  const OntologyGraph* graph = nullptr;
  OntologyGraph graph_storage;
  if (config.toggles.injection) {
    require_file(config.ontology_path, "ontology file");
    graph_storage = load_triples(config.ontology_path);
    graph = &graph_storage;
  }
  const ModelConfig mc = effective_model_config(config, prepared.vocab.size());
  const KnowledgeProvider provider = make_provider(graph, config.plan);
  const auto examples = build_train_examples(prepared.records, prepared.vocab, mc, provider);
  TrainResult trained = train(examples, mc);

  TrainSummary summary;
  summary.epoch_losses = trained.epoch_losses;
  summary.token_accuracy = teacher_forced_accuracy(examples, trained.params);
  summary.checkpoint_path = config.effective_checkpoint_path();
  const fs::path parent = fs::path(summary.checkpoint_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  save_checkpoint({1, std::move(trained.params), prepared.vocab}, summary.checkpoint_path);
  return summary;
}

GenerateRequest GenerateRequest::from_json_text(const std::string& text) {
  const json doc = json::parse(text);
  GenerateRequest req;
  if (doc.contains("keywords"))
    req.keywords = doc.at("keywords").get<std::vector<std::string>>();
  if (doc.contains("roles") && doc.at("roles").is_object() && !doc.at("roles").empty())
    req.roles = roles_from_json_text(doc.at("roles").dump());
  if (doc.contains("beam_size")) req.beam_size = doc.at("beam_size").get<int>();
  if (doc.contains("max_len")) req.max_len = doc.at("max_len").get<int>();
  if (doc.contains("lambda_rs")) req.lambda_rs = doc.at("lambda_rs").get<double>();
  return req;
}

GenerateOutcome cmd_generate(const ExperimentConfig& config, const GenerateRequest& request) {
  if (request.keywords.size() < 2)
    throw UsageError("at least two keywords (phrases) are required");
  require_file(config.effective_checkpoint_path(), "checkpoint");
  Checkpoint ckpt = load_checkpoint(config.effective_checkpoint_path());

  RequirementRecord rec;
  rec.id = "request";
  for (const auto& kw : request.keywords) {
    Phrase phrase = tokenize(kw);
    if (phrase.empty()) throw UsageError("empty keyword phrase");
    rec.keywords.push_back(std::move(phrase));
  }

  GenerationConstraints constraints;
  for (const auto& p : rec.keywords) constraints.keyword_phrases.push_back(ckpt.vocab.encode(p));
  constraints.beam_size = request.beam_size.value_or(config.generation.beam_size);
  constraints.max_len = request.max_len.value_or(config.generation.max_len);
  constraints.lambda_rs = request.lambda_rs.value_or(config.generation.lambda_rs);
  constraints.length_norm = config.generation.length_norm;
  constraints.copy_enabled = config.toggles.copy;

  std::optional<SyntaxReference> ref;
  if (config.toggles.syntax_decoding && request.roles) ref = request.roles;

  std::map<int, KnowledgeEncoding> knowledge;
  if (ckpt.params.config.has_injection() && !config.ontology_path.empty()) {
    require_file(config.ontology_path, "ontology file");
    const OntologyGraph graph = load_triples(config.ontology_path);
    std::vector<std::string> strings;
    for (const auto& p : rec.keywords) strings.push_back(phrase_text(p));
    auto sentences = build_injection_knowledge(graph, strings, config.plan);
    for (int layer : ckpt.params.config.injection_layers) {
      auto it = sentences.find(layer);
      if (it == sentences.end()) continue;
      knowledge[layer] =
          encode_knowledge(it->second, ckpt.vocab, ckpt.params, config.plan.token_cap_per_layer);
    }
  }

  const auto src = build_source_ids(rec.keywords, ckpt.vocab);
  GenerateOutcome outcome;
  outcome.result = beam_search(src, knowledge, constraints, ref, ckpt.vocab, ckpt.params);

  const GenerationCandidate& best = outcome.result.best();
  json doc{{"text", best.text},
           {"score", best.score},
           {"rs4re", best.rs4re_score},
           {"complete", best.complete}};
  json cands = json::array();
  for (const auto& c : outcome.result.candidates)
    cands.push_back(json{{"text", c.text},
                         {"score", c.score},
                         {"log_prob", c.log_prob},
                         {"rs4re", c.rs4re_score},
                         {"complete", c.complete}});
  doc["candidates"] = std::move(cands);
  if (request.roles) {
    json elems = json::object();
    const auto ratios = rs4re_per_element(best.surface, *request.roles);
    for (std::size_t i = 0; i < ratios.size(); ++i)
      elems[request.roles->elements[i].name] = ratios[i];
    doc["element_overlap"] = std::move(elems);
  }
  outcome.response_json = doc.dump(2);
  return outcome;
}

MetricsReport cmd_evaluate(const ExperimentConfig& config) {
  require_file(config.effective_checkpoint_path(), "checkpoint");
  SharedInputs shared = load_shared(config);
  Checkpoint ckpt = load_checkpoint(config.effective_checkpoint_path());
  const OntologyGraph* graph =
      shared.has_graph && ckpt.params.config.has_injection() ? &shared.graph : nullptr;

  std::vector<EvaluatedPair> pairs;
  for (const auto& rec : shared.records) {
    GenerationCandidate best = decode_record(rec, graph, config, ckpt.vocab, ckpt.params);
    pairs.push_back({best.surface, &rec});
  }
  MetricsReport report = evaluate_corpus(pairs);
  ensure_dir(config.output_dir);
  std::ofstream(config.output_dir + "/metrics.json") << metrics_report_json(report) << '\n';
  std::ofstream(config.output_dir + "/metrics.txt")
      << render_metrics_table({{"evaluate", report}});
  return report;
}

CrossvalResult cmd_crossval(const ExperimentConfig& config) {
  SharedInputs shared = load_shared(config);
  CrossvalResult result = crossval_impl(config, shared);
  ensure_dir(config.output_dir);
  json doc;
  doc["mean"] = report_to_json(result.mean);
  json folds = json::array();
  for (const auto& r : result.fold_reports) folds.push_back(report_to_json(r));
  doc["folds"] = std::move(folds);
  std::ofstream(config.output_dir + "/crossval.json") << doc.dump(2) << '\n';
  std::ofstream(config.output_dir + "/crossval.txt") << result.table;
  return result;
}

AblationResult cmd_ablate(const ExperimentConfig& config) {
  if (config.ablation_layer_plans.empty() || config.ablation_thresholds.empty() ||
      config.ablation_toggles.empty())
    throw UsageError("ablation requires non-empty layer_plans, freq_thresholds, and toggles");
  SharedInputs shared = load_shared(config);

  AblationResult result;
  std::vector<std::pair<std::string, MetricsReport>> table_rows;
  for (const auto& plan_entries : config.ablation_layer_plans) {
    for (std::uint64_t threshold : config.ablation_thresholds) {
      for (const auto& toggles : config.ablation_toggles) {
        ExperimentConfig point = config;
        point.plan.entries.clear();
        for (const auto& [layer, hop] : plan_entries)
          point.plan.entries.push_back({layer, hop, threshold});
        point.toggles = toggles;

        AblationRow row;
        row.plan_label = point.plan.label();
        row.threshold_label = threshold == 0 ? "no" : std::to_string(threshold);
        row.toggle_label = toggles.label();
        try {
          point.plan.validate(point.model.depth);
          row.mean = crossval_impl(point, shared).mean;
        } catch (const std::exception& e) {
          row.failed = true;
          row.error = e.what();
        }
        if (!row.failed)
          table_rows.emplace_back(
              row.plan_label + " | " + row.threshold_label + " | " + row.toggle_label, row.mean);
        result.rows.push_back(std::move(row));
      }
    }
  }
  result.table = render_metrics_table(table_rows);

  ensure_dir(config.output_dir);
  json rows = json::array();
  for (const auto& row : result.rows) {
    json j{{"layer_plan", row.plan_label},
           {"frequency", row.threshold_label},
           {"components", row.toggle_label},
           {"failed", row.failed}};
    if (row.failed)
      j["error"] = row.error;
    else
      j["metrics"] = report_to_json(row.mean);
    rows.push_back(std::move(j));
  }
  std::ofstream(config.output_dir + "/ablation.json") << rows.dump(2) << '\n';
  std::ofstream(config.output_dir + "/ablation.txt") << result.table;
  return result;
}

}  // namespace reqgen
