#include <benchmark/benchmark.h>

#include "reqgen/decoder.hpp"
#include "reqgen/metrics.hpp"
#include "reqgen/ontology.hpp"
#include "reqgen/rng.hpp"
#include "support/toydata.hpp"

using namespace reqgen;

namespace {

void BM_multi_hop_search(benchmark::State& state) {
  Rng rng(100);
  OntologyGraph graph;
  const int n = static_cast<int>(state.range(0));
  for (int e = 0; e < 3 * n; ++e) {
    const std::string a = "n" + std::to_string(rng.next_index(static_cast<std::size_t>(n)));
    const std::string b = "n" + std::to_string(rng.next_index(static_cast<std::size_t>(n)));
    if (a != b) graph.add_triple({a, "linksTo", b});
  }
  for (auto _ : state) {
    const HopResult result = multi_hop_search(graph, {"n0", "n1"}, 5);
    benchmark::DoNotOptimize(result.frequency);
  }
}
BENCHMARK(BM_multi_hop_search)->Arg(50)->Arg(200)->Arg(1000);

void BM_beam_search(benchmark::State& state) {
  const auto records = test::toy_records(10);
  const OntologyGraph graph = test::toy_graph();
  std::vector<std::string> stexts;
  for (const auto& s : triples_to_pseudo_sentences(graph.triples, {})) stexts.push_back(s.text);
  const Vocabulary vocab = build_vocabulary(records, stexts, 1);
  ModelConfig cfg;
  cfg.depth = 2;
  cfg.d_model = 32;
  cfg.heads = 2;
  cfg.d_ffn = 64;
  cfg.max_len = 64;
  cfg.vocab_size = vocab.size();
  cfg.injection_layers = {};
  cfg.rng_seed = 4;
  const Parameters params = Parameters::init(cfg);
  GenerationConstraints constraints;
  for (const auto& p : records[0].keywords) constraints.keyword_phrases.push_back(vocab.encode(p));
  constraints.beam_size = static_cast<int>(state.range(0));
  constraints.max_len = 24;
  std::vector<int> src{kClsId};
  for (const auto& p : records[0].keywords) {
    for (int id : vocab.encode(p)) src.push_back(id);
    src.push_back(kSepId);
  }
  for (auto _ : state) {
    const GenerationResult result =
        beam_search(src, {}, constraints, std::nullopt, vocab, params);
    benchmark::DoNotOptimize(result.candidates);
  }
}
BENCHMARK(BM_beam_search)->Arg(1)->Arg(5)->Arg(10);

void BM_metrics(benchmark::State& state) {
  Rng rng(7);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "g", "h"};
  Tokens cand, ref;
  for (int i = 0; i < state.range(0); ++i) {
    cand.push_back(pool[rng.next_index(pool.size())]);
    ref.push_back(pool[rng.next_index(pool.size())]);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(bleu(cand, ref, 2));
    benchmark::DoNotOptimize(rouge_n(cand, ref, 2));
    benchmark::DoNotOptimize(rouge_l(cand, ref));
  }
}
BENCHMARK(BM_metrics)->Arg(16)->Arg(64)->Arg(256);

}  // namespace
