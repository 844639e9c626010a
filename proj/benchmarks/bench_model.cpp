#include <benchmark/benchmark.h>

#include <memory>

#include "reqgen/model.hpp"
#include "support/toydata.hpp"

using namespace reqgen;

namespace {

struct ModelFixture {
  Vocabulary vocab;
  ModelConfig config;
  Parameters params;
  EncodedPair pair;
  std::map<int, KnowledgeEncoding> knowledge;

  explicit ModelFixture(int d_model) {
    const auto records = test::toy_records(20);
    const OntologyGraph graph = test::toy_graph();
    std::vector<std::string> stexts;
    for (const auto& s : triples_to_pseudo_sentences(graph.triples, {}))
      stexts.push_back(s.text);
    vocab = build_vocabulary(records, stexts, 1);
    config.depth = 4;
    config.d_model = d_model;
    config.heads = 4;
    config.d_ffn = 2 * d_model;
    config.max_len = 64;
    config.vocab_size = vocab.size();
    config.injection_layers = {1, 2, 4};
    config.knowledge_hidden = d_model / 2;
    config.rng_seed = 17;
    params = Parameters::init(config);
    pair = encode_pair(records[0], vocab, config.max_len);
    InjectionPlan plan = InjectionPlan::default_plan();
    for (auto& entry : plan.entries) entry.freq_threshold = 0;
    std::vector<std::string> strings;
    for (const auto& p : records[0].keywords) strings.push_back(phrase_text(p));
    for (const auto& [layer, sentences] : build_injection_knowledge(graph, strings, plan))
      knowledge[layer] = encode_knowledge(sentences, vocab, params, 128);
  }
};

void BM_forward(benchmark::State& state) {
  const ModelFixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const ForwardTrace trace = forward(fx.pair, fx.knowledge, fx.params);
    benchmark::DoNotOptimize(trace.lm_logits);
  }
}
BENCHMARK(BM_forward)->Arg(32)->Arg(64)->Arg(128);

void BM_forward_backward(benchmark::State& state) {
  const ModelFixture fx(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const ForwardTrace trace = forward(fx.pair, fx.knowledge, fx.params);
    const Parameters grad = gradients(trace, fx.params);
    benchmark::DoNotOptimize(grad.tok_embed);
  }
}
BENCHMARK(BM_forward_backward)->Arg(32)->Arg(64)->Arg(128);

void BM_encode_knowledge(benchmark::State& state) {
  const ModelFixture fx(64);
  std::vector<int> ids;
  for (int i = 0; i < state.range(0); ++i)
    ids.push_back(4 + static_cast<int>(i % (fx.vocab.size() - 4)));
  for (auto _ : state) {
    const KnowledgeEncoding ke = encode_knowledge_ids(ids, fx.params);
    benchmark::DoNotOptimize(ke.matrix);
  }
}
BENCHMARK(BM_encode_knowledge)->Arg(32)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
