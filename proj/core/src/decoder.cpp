#include "reqgen/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reqgen {

void GenerationConstraints::validate() const {
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (keyword_phrases.size() < 2)
    throw std::invalid_argument("at least two keyword phrases are required");
  for (const auto& p : keyword_phrases)
    if (p.empty()) throw std::invalid_argument("keyword phrase must be non-empty");
}

bool BeamHypothesis::all_done() const {
  for (const auto& s : phrase_state)
    if (s.kind != PhraseState::Done) return false;
  return true;
}

int BeamHypothesis::in_progress_index() const {
  for (std::size_t i = 0; i < phrase_state.size(); ++i)
    if (phrase_state[i].kind == PhraseState::InProgress) return static_cast<int>(i);
  return -1;
}

bool contains_phrase(const std::vector<int>& tokens, const std::vector<int>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  for (std::size_t start = 0; start + phrase.size() <= tokens.size(); ++start) {
    bool match = true;
    for (std::size_t j = 0; j < phrase.size(); ++j)
      if (tokens[start + j] != phrase[j]) {
        match = false;
        break;
      }
    if (match) return true;
  }
  return false;
}

namespace {

// Longest suffix of tokens that is a proper prefix of phrase.
int suffix_prefix_overlap(const std::vector<int>& tokens, const std::vector<int>& phrase) {
  const int limit =
      static_cast<int>(std::min(tokens.size(), phrase.size() - 1));
  for (int len = limit; len >= 1; --len) {
    bool match = true;
    for (int j = 0; j < len; ++j)
      if (tokens[tokens.size() - static_cast<std::size_t>(len) + static_cast<std::size_t>(j)] !=
          phrase[static_cast<std::size_t>(j)]) {
        match = false;
        break;
      }
    if (match) return len;
  }
  return 0;
}

}  // namespace

void update_phrase_states(BeamHypothesis& hyp, const GenerationConstraints& constraints) {
  const auto& phrases = constraints.keyword_phrases;
  hyp.phrase_state.assign(phrases.size(), PhraseState{});
  for (std::size_t i = 0; i < phrases.size(); ++i)
    if (contains_phrase(hyp.tokens, phrases[i])) hyp.phrase_state[i].kind = PhraseState::Done;
  int best_idx = -1, best_len = 0;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (hyp.phrase_state[i].kind == PhraseState::Done) continue;
    const int len = suffix_prefix_overlap(hyp.tokens, phrases[i]);
    if (len > best_len) {
      best_len = len;
      best_idx = static_cast<int>(i);
    }
  }
  if (best_idx >= 0) {
    hyp.phrase_state[static_cast<std::size_t>(best_idx)].kind = PhraseState::InProgress;
    hyp.phrase_state[static_cast<std::size_t>(best_idx)].offset = best_len;
  }
}

Vector mix_distribution(const Vector& lm_probs, double p_copy, const BeamHypothesis& hyp,
                        const GenerationConstraints& constraints) {
  if (p_copy < 0.0 || p_copy > 1.0) throw std::invalid_argument("p_copy must be in [0,1]");
  Vector copy_dist = Vector::Zero(lm_probs.size());
  const int active = hyp.in_progress_index();
  if (active >= 0) {
    const auto& phrase = constraints.keyword_phrases[static_cast<std::size_t>(active)];
    const int offset = hyp.phrase_state[static_cast<std::size_t>(active)].offset;
    copy_dist(phrase[static_cast<std::size_t>(offset)]) = 1.0;
  } else {
    std::vector<int> starts;
    for (std::size_t i = 0; i < constraints.keyword_phrases.size(); ++i)
      if (hyp.phrase_state[i].kind == PhraseState::Pending)
        starts.push_back(constraints.keyword_phrases[i][0]);
    if (starts.empty()) {
      copy_dist = lm_probs;
    } else {
      const double share = 1.0 / static_cast<double>(starts.size());
      for (int t : starts) copy_dist(t) += share;
    }
  }
  return (1.0 - p_copy) * lm_probs + p_copy * copy_dist;
}

Vector step_distribution(const Vector& lm_probs, double p_copy, const BeamHypothesis& hyp,
                         const GenerationConstraints& constraints) {
  Vector dist = constraints.copy_enabled ? mix_distribution(lm_probs, p_copy, hyp, constraints)
                                         : lm_probs;
  dist(kPadId) = 0.0;
  dist(kClsId) = 0.0;
  if (constraints.copy_enabled && !hyp.all_done()) dist(kSepId) = 0.0;
  const double total = dist.sum();
  if (total > 0.0) dist /= total;
  return dist;
}

double hypothesis_score(const BeamHypothesis& hyp, const GenerationConstraints& constraints,
                        double rs4re_score) {
  double score = hyp.log_prob;
  if (constraints.length_norm && !hyp.tokens.empty())
    score /= static_cast<double>(hyp.tokens.size());
  return score + constraints.lambda_rs * rs4re_score;
}

std::vector<GenerationCandidate> rank_candidates(std::vector<GenerationCandidate> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const GenerationCandidate& a, const GenerationCandidate& b) {
                     if (a.complete != b.complete) return a.complete;
                     if (a.score != b.score) return a.score > b.score;
                     return a.tokens < b.tokens;
                   });
  return candidates;
}

GenerationResult beam_search(const std::vector<int>& src_ids,
                             const std::map<int, KnowledgeEncoding>& knowledge,
                             const GenerationConstraints& constraints,
                             const std::optional<SyntaxReference>& ref, const Vocabulary& vocab,
                             const Parameters& params) {
  constraints.validate();
  const int room = params.config.max_len - static_cast<int>(src_ids.size());
  const int max_gen = std::min(constraints.max_len, room);
  if (max_gen < 1) throw std::runtime_error("no room to generate: source fills max_len");

  auto finalize = [&](const BeamHypothesis& hyp) {
    GenerationCandidate cand;
    cand.tokens = hyp.tokens;
    cand.surface = vocab.decode(hyp.tokens);
    if (!cand.surface.empty() && cand.surface.back() == "[SEP]") cand.surface.pop_back();
    cand.text = detokenize(cand.surface);
    cand.log_prob = hyp.log_prob;
    cand.complete = hyp.finished;
    cand.rs4re_score = ref ? rs4re(cand.surface, *ref) : 0.0;
    cand.score = hypothesis_score(hyp, constraints, ref ? cand.rs4re_score : 0.0);
    return cand;
  };

  BeamHypothesis root;
  update_phrase_states(root, constraints);
  std::vector<BeamHypothesis> live{root};
  std::vector<GenerationCandidate> pool;

  for (int step = 0; step < max_gen && !live.empty(); ++step) {
    struct Expansion {
      std::size_t parent;
      int token;
      double log_prob;
    };
    std::vector<Expansion> expansions;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const NextTokenOutput nt = next_token(src_ids, live[h].tokens, knowledge, params);
      const Vector lm_probs = nt.log_probs.array().exp();
      const double p_copy = constraints.copy_enabled ? nt.p_copy : 0.0;
      const Vector dist = step_distribution(lm_probs, p_copy, live[h], constraints);
      for (int t = 0; t < dist.size(); ++t)
        if (dist(t) > 0.0)
          expansions.push_back({h, t, live[h].log_prob + std::log(dist(t))});
    }
    if (expansions.empty()) {
      if (pool.empty())
        throw std::runtime_error("beam collapse: no hypothesis could be expanded (" +
                                 std::to_string(live.size()) + " stuck, none finished)");
      break;
    }
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) { return a.log_prob > b.log_prob; });
    if (expansions.size() > static_cast<std::size_t>(constraints.beam_size))
      expansions.resize(static_cast<std::size_t>(constraints.beam_size));

    std::vector<BeamHypothesis> next_live;
    for (const auto& ex : expansions) {
      BeamHypothesis hyp = live[ex.parent];
      hyp.tokens.push_back(ex.token);
      hyp.log_prob = ex.log_prob;
      update_phrase_states(hyp, constraints);
      if (ex.token == kSepId) {
        hyp.finished = true;
        pool.push_back(finalize(hyp));
      } else if (static_cast<int>(hyp.tokens.size()) >= max_gen) {
        pool.push_back(finalize(hyp));  // out of room, kept as incomplete
      } else {
        next_live.push_back(std::move(hyp));
      }
    }
    live = std::move(next_live);
  }
  for (const auto& hyp : live)
    if (!hyp.tokens.empty()) pool.push_back(finalize(hyp));

  if (pool.empty())
    throw std::runtime_error("beam collapse: no hypothesis could be expanded or finished");
  GenerationResult result;
  result.candidates = rank_candidates(std::move(pool));
  return result;
}

}  // namespace reqgen
