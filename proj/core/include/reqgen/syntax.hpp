#pragma once

#include <set>
#include <string>
#include <vector>

#include "reqgen/text.hpp"

namespace reqgen {

struct SyntaxElement {
  std::string name;
  std::set<std::string> words;  // lowercase reference word set, non-empty
  double alpha = 0.0;           // in (0, 1]
};

// Per-element reference word sets with weights summing to 1. Elements are
// kept sorted by name so JSON round-trips are stable.
struct SyntaxReference {
  std::vector<SyntaxElement> elements;

  void validate() const;  // throws on empty words, bad alpha, sum != 1
  bool empty() const { return elements.empty(); }
};

// Weighted element-overlap score in [0, 1]:
//   sum_i alpha_i * |E_i_ref ∩ candidate tokens| / |E_i_ref|
// Candidate membership is by lowercase surface form, so the score is monotone
// non-decreasing as tokens are added.
double rs4re(const Tokens& candidate_tokens, const SyntaxReference& ref);

// Per-element overlap ratios, aligned with ref.elements (for diagnostics).
std::vector<double> rs4re_per_element(const Tokens& candidate_tokens, const SyntaxReference& ref);

}  // namespace reqgen
