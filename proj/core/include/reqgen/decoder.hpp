#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reqgen/model.hpp"
#include "reqgen/syntax.hpp"

namespace reqgen {

struct GenerationConstraints {
  std::vector<std::vector<int>> keyword_phrases;  // token id sequences, >= 2 of them
  int beam_size = 5;
  int max_len = 64;        // generated tokens, including the closing [SEP]
  double lambda_rs = 1.0;  // weight of the syntax score at ranking time
  bool length_norm = true;
  bool copy_enabled = true;  // copy mixing + end-token masking

  void validate() const;
};

struct PhraseState {
  enum Kind { Pending, InProgress, Done };
  Kind kind = Pending;
  int offset = 0;  // matched prefix length when InProgress
};

struct BeamHypothesis {
  std::vector<int> tokens;  // generated target ids
  double log_prob = 0.0;
  std::vector<PhraseState> phrase_state;
  bool finished = false;

  bool all_done() const;
  int in_progress_index() const;  // -1 when none
};

// Recomputes phrase states from the token sequence: a phrase is Done once it
// occurs contiguously anywhere; otherwise the longest token suffix that is a
// proper phrase prefix puts that phrase InProgress (ties to the lowest
// index). At most one phrase is InProgress.
void update_phrase_states(BeamHypothesis& hyp, const GenerationConstraints& constraints);

// (1 - p_copy) * lm + p_copy * C, where C forces an in-progress phrase's next
// token, spreads uniformly over pending phrase starts, or falls back to the
// lm distribution when nothing is pending. Output sums to 1.
Vector mix_distribution(const Vector& lm_probs, double p_copy, const BeamHypothesis& hyp,
                        const GenerationConstraints& constraints);

// The per-step distribution beam_search expands: mixed (when copy is on),
// with [PAD]/[CLS] always removed and [SEP] removed while phrases are
// outstanding, then renormalized.
Vector step_distribution(const Vector& lm_probs, double p_copy, const BeamHypothesis& hyp,
                         const GenerationConstraints& constraints);

struct GenerationCandidate {
  std::vector<int> tokens;
  Tokens surface;
  std::string text;
  double log_prob = 0.0;
  double score = 0.0;
  double rs4re_score = 0.0;
  bool complete = false;
};

struct GenerationResult {
  std::vector<GenerationCandidate> candidates;  // ranked, best first
  const GenerationCandidate& best() const { return candidates.front(); }
};

// Final objective: log_prob (length-normalized when configured) plus
// lambda_rs * rs4re when a reference is given. Complete candidates always
// rank ahead of incomplete ones.
double hypothesis_score(const BeamHypothesis& hyp, const GenerationConstraints& constraints,
                        double rs4re_score);

std::vector<GenerationCandidate> rank_candidates(std::vector<GenerationCandidate> candidates);

// Constrained beam search over next_token. While any keyword phrase is
// outstanding the end token stays masked, so every complete hypothesis
// contains all phrases; hypotheses that hit max_len first are kept and
// flagged incomplete. Throws when no hypothesis can be expanded or finished.
GenerationResult beam_search(const std::vector<int>& src_ids,
                             const std::map<int, KnowledgeEncoding>& knowledge,
                             const GenerationConstraints& constraints,
                             const std::optional<SyntaxReference>& ref, const Vocabulary& vocab,
                             const Parameters& params);

bool contains_phrase(const std::vector<int>& tokens, const std::vector<int>& phrase);

}  // namespace reqgen
