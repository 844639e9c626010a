#pragma once

#include <map>
#include <string>
#include <vector>

#include "reqgen/corpus.hpp"
#include "reqgen/text.hpp"

namespace reqgen {

struct RougeScore {
  double recall = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
};

// Single-reference BLEU-n (n = 1 or 2), clipped modified precision, geometric
// mean over orders, brevity penalty exp(1 - |ref|/|cand|) when the candidate
// is not longer. Any zero precision gives 0. Scaled to [0, 100].
double bleu(const Tokens& candidate, const Tokens& reference, int max_n);

// Clipped multiset n-gram overlap recall/precision/F, scaled to [0, 100].
RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, int n);

// Longest-common-subsequence recall/precision/F, scaled to [0, 100].
RougeScore rouge_l(const Tokens& candidate, const Tokens& reference);

struct ExampleMetrics {
  std::string id;
  double bleu1 = 0.0, bleu2 = 0.0;
  RougeScore rouge1, rouge2, rougel;
  double rs4re_score = 0.0;  // in [0, 1]
  bool has_roles = false;
};

struct MetricsReport {
  double bleu1 = 0.0, bleu2 = 0.0;
  std::map<std::string, RougeScore> rouge;  // keys "1", "2", "L"
  double rs4re_mean = 0.0;                  // corpus mean x100, over records with roles
  int rs4re_count = 0;
  std::vector<ExampleMetrics> per_example;
};

struct EvaluatedPair {
  Tokens generated;
  const RequirementRecord* record = nullptr;
};

// Arithmetic means of the per-example metrics; rs4re only over records that
// carry roles (reference word sets come from the target requirement).
MetricsReport evaluate_corpus(const std::vector<EvaluatedPair>& pairs);

// Aligned plain-text table with the BLEU1/BLEU2/ROUGE-1/2/L R P F/RS4RE
// column layout; one row per (label, report).
std::string render_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);
std::string metrics_report_json(const MetricsReport& report);

}  // namespace reqgen
