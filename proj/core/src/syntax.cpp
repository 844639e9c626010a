#include "reqgen/syntax.hpp"

#include <cmath>
#include <stdexcept>

namespace reqgen {

void SyntaxReference::validate() const {
  if (elements.empty()) throw std::invalid_argument("syntax reference needs at least one element");
  double sum = 0.0;
  for (const auto& e : elements) {
    if (e.words.empty())
      throw std::invalid_argument("syntax element '" + e.name + "' has an empty word set");
    if (e.alpha <= 0.0 || e.alpha > 1.0)
      throw std::invalid_argument("syntax element '" + e.name + "' weight must be in (0,1]");
    sum += e.alpha;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("syntax element weights must sum to 1");
}

std::vector<double> rs4re_per_element(const Tokens& candidate_tokens, const SyntaxReference& ref) {
  std::set<std::string> cand;
  for (const auto& t : candidate_tokens) cand.insert(to_lower(t));
  std::vector<double> out;
  out.reserve(ref.elements.size());
  for (const auto& e : ref.elements) {
    std::size_t overlap = 0;
    for (const auto& w : e.words)
      if (cand.count(to_lower(w))) ++overlap;
    out.push_back(static_cast<double>(overlap) / static_cast<double>(e.words.size()));
  }
  return out;
}

double rs4re(const Tokens& candidate_tokens, const SyntaxReference& ref) {
  ref.validate();
  const auto ratios = rs4re_per_element(candidate_tokens, ref);
  double score = 0.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) score += ref.elements[i].alpha * ratios[i];
  return score;
}

}  // namespace reqgen
