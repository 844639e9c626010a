#include "reqgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "reqgen/syntax.hpp"

namespace reqgen {

namespace {

using NGramCounts = std::map<std::vector<std::string>, std::size_t>;

NGramCounts ngram_counts(const Tokens& tokens, int n) {
  NGramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
    counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(i) +
                                        n)]++;
  return counts;
}

std::size_t clipped_overlap(const NGramCounts& cand, const NGramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

RougeScore make_rouge(double overlap, double ref_total, double cand_total) {
  RougeScore s;
  s.recall = ref_total > 0.0 ? 100.0 * overlap / ref_total : 0.0;
  s.precision = cand_total > 0.0 ? 100.0 * overlap / cand_total : 0.0;
  s.f_measure = (s.precision + s.recall) > 0.0
                    ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                    : 0.0;
  return s;
}

}  // namespace

double bleu(const Tokens& candidate, const Tokens& reference, int max_n) {
  if (max_n != 1 && max_n != 2) throw std::invalid_argument("bleu supports n = 1 or 2");
  if (reference.empty()) throw std::invalid_argument("bleu needs a non-empty reference");
  if (candidate.empty()) return 0.0;
  double log_precision_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const NGramCounts cand = ngram_counts(candidate, n);
    const NGramCounts ref = ngram_counts(reference, n);
    std::size_t total = 0;
    for (const auto& [gram, count] : cand) {
      (void)gram;
      total += count;
    }
    if (total == 0) return 0.0;
    const std::size_t overlap = clipped_overlap(cand, ref);
    if (overlap == 0) return 0.0;
    log_precision_sum +=
        std::log(static_cast<double>(overlap) / static_cast<double>(total)) / max_n;
  }
  const double bp =
      candidate.size() > reference.size()
          ? 1.0
          : std::exp(1.0 - static_cast<double>(reference.size()) /
                               static_cast<double>(candidate.size()));
  return 100.0 * bp * std::exp(log_precision_sum);
}

RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, int n) {
  if (n < 1) throw std::invalid_argument("rouge_n needs n >= 1");
  const NGramCounts cand = ngram_counts(candidate, n);
  const NGramCounts ref = ngram_counts(reference, n);
  std::size_t cand_total = 0, ref_total = 0;
  for (const auto& [gram, count] : cand) {
    (void)gram;
    cand_total += count;
  }
  for (const auto& [gram, count] : ref) {
    (void)gram;
    ref_total += count;
  }
  const std::size_t overlap = clipped_overlap(cand, ref);
  return make_rouge(static_cast<double>(overlap), static_cast<double>(ref_total),
                    static_cast<double>(cand_total));
}

RougeScore rouge_l(const Tokens& candidate, const Tokens& reference) {
  const std::size_t nc = candidate.size();
  const std::size_t nr = reference.size();
  std::vector<std::vector<std::size_t>> dp(nc + 1, std::vector<std::size_t>(nr + 1, 0));
  for (std::size_t i = 1; i <= nc; ++i)
    for (std::size_t j = 1; j <= nr; ++j)
      dp[i][j] = candidate[i - 1] == reference[j - 1] ? dp[i - 1][j - 1] + 1
                                                      : std::max(dp[i - 1][j], dp[i][j - 1]);
  return make_rouge(static_cast<double>(dp[nc][nr]), static_cast<double>(nr),
                    static_cast<double>(nc));
}

MetricsReport evaluate_corpus(const std::vector<EvaluatedPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_corpus needs at least one pair");
  MetricsReport report;
  RougeScore sum1, sum2, suml;
  double rs_sum = 0.0;
  for (const auto& pair : pairs) {
    const Tokens reference = tokenize(pair.record->text);
    ExampleMetrics ex;
    ex.id = pair.record->id;
    ex.bleu1 = bleu(pair.generated, reference, 1);
    ex.bleu2 = bleu(pair.generated, reference, 2);
    ex.rouge1 = rouge_n(pair.generated, reference, 1);
    ex.rouge2 = rouge_n(pair.generated, reference, 2);
    ex.rougel = rouge_l(pair.generated, reference);
    if (pair.record->roles) {
      ex.has_roles = true;
      ex.rs4re_score = rs4re(pair.generated, *pair.record->roles);
      rs_sum += ex.rs4re_score;
      ++report.rs4re_count;
    }
    report.bleu1 += ex.bleu1;
    report.bleu2 += ex.bleu2;
    for (auto [sum, value] : {std::pair<RougeScore*, const RougeScore*>{&sum1, &ex.rouge1},
                              {&sum2, &ex.rouge2},
                              {&suml, &ex.rougel}}) {
      sum->recall += value->recall;
      sum->precision += value->precision;
      sum->f_measure += value->f_measure;
    }
    report.per_example.push_back(std::move(ex));
  }
  const double n = static_cast<double>(pairs.size());
  report.bleu1 /= n;
  report.bleu2 /= n;
  for (auto [key, sum] : {std::pair<const char*, RougeScore*>{"1", &sum1},
                          {"2", &sum2},
                          {"L", &suml}}) {
    report.rouge[key] = {sum->recall / n, sum->precision / n, sum->f_measure / n};
  }
  if (report.rs4re_count > 0)
    report.rs4re_mean = 100.0 * rs_sum / static_cast<double>(report.rs4re_count);
  return report;
}

std::string render_metrics_table(
    const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t label_width = 8;
  for (const auto& [label, report] : rows) {
    (void)report;
    label_width = std::max(label_width, label.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width + 2)) << "Setting";
  for (const char* col : {"BLEU1", "BLEU2", "R1-R", "R1-P", "R1-F", "R2-R", "R2-P", "R2-F",
                          "RL-R", "RL-P", "RL-F", "RS4RE"})
    out << std::right << std::setw(8) << col;
  out << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& [label, report] : rows) {
    out << std::left << std::setw(static_cast<int>(label_width + 2)) << label;
    const auto& r1 = report.rouge.at("1");
    const auto& r2 = report.rouge.at("2");
    const auto& rl = report.rouge.at("L");
    for (double v : {report.bleu1, report.bleu2, r1.recall, r1.precision, r1.f_measure, r2.recall,
                     r2.precision, r2.f_measure, rl.recall, rl.precision, rl.f_measure,
                     report.rs4re_mean})
      out << std::right << std::setw(8) << v;
    out << '\n';
  }
  return out.str();
}

std::string metrics_report_json(const MetricsReport& report) {
  nlohmann::json doc;
  doc["bleu1"] = report.bleu1;
  doc["bleu2"] = report.bleu2;
  for (const auto& [key, score] : report.rouge)
    doc["rouge"][key] = {{"recall", score.recall},
                         {"precision", score.precision},
                         {"f_measure", score.f_measure}};
  doc["rs4re_mean"] = report.rs4re_mean;
  doc["rs4re_count"] = report.rs4re_count;
  nlohmann::json per = nlohmann::json::array();
  for (const auto& ex : report.per_example) {
    nlohmann::json j{{"id", ex.id},       {"bleu1", ex.bleu1},
                     {"bleu2", ex.bleu2}, {"rouge1_f", ex.rouge1.f_measure},
                     {"rouge2_f", ex.rouge2.f_measure}, {"rougeL_f", ex.rougel.f_measure}};
    if (ex.has_roles) j["rs4re"] = ex.rs4re_score;
    per.push_back(std::move(j));
  }
  doc["per_example"] = std::move(per);
  return doc.dump(2);
}

}  // namespace reqgen
