#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "reqgen/checkpoint.hpp"
#include "reqgen/model.hpp"
#include "support/toydata.hpp"

using namespace reqgen;

namespace {

struct TrainFixture {
  std::vector<RequirementRecord> records;
  Vocabulary vocab;
  ModelConfig config;
  KnowledgeProvider provider;
  OntologyGraph graph;
};

TrainFixture small_fixture(int n_records, int epochs, bool with_knowledge) {
  TrainFixture fx;
  fx.records = test::toy_records(n_records);
  fx.graph = test::toy_graph();
  std::vector<std::string> sentence_texts;
  for (const auto& s : triples_to_pseudo_sentences(fx.graph.triples, {}))
    sentence_texts.push_back(s.text);
  fx.vocab = build_vocabulary(fx.records, sentence_texts, 1);
  fx.config.depth = 2;
  fx.config.d_model = 32;
  fx.config.heads = 2;
  fx.config.d_ffn = 64;
  fx.config.max_len = 48;
  fx.config.vocab_size = fx.vocab.size();
  fx.config.injection_layers = with_knowledge ? std::vector<int>{1, 2} : std::vector<int>{};
  fx.config.knowledge_hidden = 8;
  fx.config.epochs = epochs;
  fx.config.batch_size = 4;
  fx.config.rng_seed = 7;
  if (with_knowledge) {
    InjectionPlan plan;
    plan.entries = {{1, 3, 0}, {2, 1, 0}};
    const auto graph = std::make_shared<OntologyGraph>(fx.graph);
    fx.provider = [graph, plan](const std::vector<Phrase>& keywords) {
      std::vector<std::string> strings;
      for (const auto& p : keywords) strings.push_back(phrase_text(p));
      return build_injection_knowledge(*graph, strings, plan);
    };
  }
  return fx;
}

}  // namespace

TEST_CASE("training is deterministic: identical seeds give bitwise-identical loss logs") {
  const TrainFixture fx = small_fixture(6, 3, true);
  const TrainResult a = train(fx.records, fx.vocab, fx.config, fx.provider);
  const TrainResult b = train(fx.records, fx.vocab, fx.config, fx.provider);
  REQUIRE(a.epoch_losses.size() == b.epoch_losses.size());
  for (std::size_t i = 0; i < a.epoch_losses.size(); ++i)
    CHECK(a.epoch_losses[i] == b.epoch_losses[i]);

  bool same_params = true;
  std::vector<const Matrix*> av;
  a.params.visit([&](const std::string&, const Matrix& m) { av.push_back(&m); });
  std::size_t idx = 0;
  b.params.visit([&](const std::string&, const Matrix& m) {
    same_params &= (*av[idx++] - m).cwiseAbs().maxCoeff() == 0.0;
  });
  CHECK(same_params);
}

TEST_CASE("loss decreases over training on a small set") {
  const TrainFixture fx = small_fixture(8, 12, false);
  const TrainResult result = train(fx.records, fx.vocab, fx.config, fx.provider);
  REQUIRE(result.epoch_losses.size() == 12);
  CHECK(result.epoch_losses.back() < result.epoch_losses.front());
}

TEST_CASE("overfit sanity: small corpus memorized within the epoch budget") {
  TrainFixture fx = small_fixture(12, 120, true);
  const auto examples = build_train_examples(fx.records, fx.vocab, fx.config, fx.provider);
  const TrainResult result = train(examples, fx.config);
  CHECK(result.epoch_losses.back() <= result.epoch_losses.front());
  const double acc = teacher_forced_accuracy(examples, result.params);
  CHECK(acc >= 0.95);
}

TEST_CASE("empty dataset is rejected") {
  const TrainFixture fx = small_fixture(4, 1, false);
  CHECK_THROWS(train(std::vector<TrainExample>{}, fx.config));
}

TEST_CASE("checkpoint round trip is loss-identical and byte-identical") {
  const TrainFixture fx = small_fixture(5, 2, true);
  const auto examples = build_train_examples(fx.records, fx.vocab, fx.config, fx.provider);
  const TrainResult result = train(examples, fx.config);

  const auto dir = test::scratch_dir("ckpt");
  const auto path = dir + "/model.json";
  save_checkpoint({1, result.params, fx.vocab}, path);
  const Checkpoint loaded = load_checkpoint(path);

  double before = 0.0, after = 0.0;
  for (const auto& ex : examples) {
    std::map<int, KnowledgeEncoding> ka, kb;
    for (const auto& [layer, ids] : ex.knowledge_ids) {
      ka[layer] = encode_knowledge_ids(ids, result.params);
      kb[layer] = encode_knowledge_ids(ids, loaded.params);
    }
    before += loss(forward(ex.pair, ka, result.params), fx.config.copy_loss_weight);
    after += loss(forward(ex.pair, kb, loaded.params), fx.config.copy_loss_weight);
  }
  CHECK(before == after);

  const auto path2 = dir + "/model2.json";
  save_checkpoint(loaded, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
}

TEST_CASE("checkpoint without injection carries no injection tensors") {
  const TrainFixture fx = small_fixture(4, 1, false);
  const TrainResult result = train(fx.records, fx.vocab, fx.config, fx.provider);
  const auto dir = test::scratch_dir("ckpt_plain");
  const auto path = dir + "/plain.json";
  save_checkpoint({1, result.params, fx.vocab}, path);
  std::ifstream in(path);
  const auto doc = nlohmann::json::parse(in);
  bool has_injection_tensor = false, has_copy_head = false;
  for (const auto& [name, value] : doc.at("parameters").items()) {
    (void)value;
    has_injection_tensor |= name.rfind("inject", 0) == 0 || name.rfind("know.", 0) == 0;
    has_copy_head |= name == "copy.w";
  }
  CHECK(!has_injection_tensor);
  CHECK(has_copy_head);
}
