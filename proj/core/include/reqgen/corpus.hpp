#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reqgen/syntax.hpp"
#include "reqgen/text.hpp"

namespace reqgen {

struct RequirementRecord {
  std::string id;
  std::string text;
  std::vector<Phrase> keywords;          // >= 2 phrases for training records
  std::optional<SyntaxReference> roles;  // analyst-provided element word sets
};

constexpr int kPadId = 0;
constexpr int kUnkId = 1;
constexpr int kClsId = 2;
constexpr int kSepId = 3;

class Vocabulary {
 public:
  Vocabulary();

  int id_of(const std::string& token) const;  // [UNK] for unseen tokens
  const std::string& token_of(int id) const;
  int size() const { return static_cast<int>(tokens_.size()); }

  std::vector<int> encode(const Tokens& tokens) const;
  Tokens decode(const std::vector<int>& ids) const;

  // Token list indexed by id; specials occupy 0..3.
  const std::vector<std::string>& tokens() const { return tokens_; }
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

 private:
  friend Vocabulary build_vocabulary(const std::vector<RequirementRecord>&,
                                     const std::vector<std::string>&, int);
  void add(const std::string& token);
  std::vector<std::string> tokens_;
  std::map<std::string, int> ids_;
};

// Tokens of every record text plus every pseudo-sentence text; kept when
// count >= min_count; ids assigned by descending count then lexicographic.
Vocabulary build_vocabulary(const std::vector<RequirementRecord>& records,
                            const std::vector<std::string>& pseudo_sentence_texts,
                            int min_count = 1);

// Nominal-run noun phrase candidates: maximal runs of tokens outside the
// built-in closed-class lexicon. Used by extract_keywords.
std::vector<Phrase> noun_phrase_candidates(const Tokens& tokens);
bool is_closed_class(const std::string& token);

// Picks n ~ Uniform[2, N] of the N candidate phrases without replacement,
// returned in text order. Deterministic for a given seed; throws when the
// text yields fewer than two candidates.
std::vector<Phrase> extract_keywords(const RequirementRecord& record, std::uint64_t rng_seed);

// 1 at every position of every contiguous occurrence of any keyword phrase.
std::vector<int> mark_copy_labels(const std::vector<Phrase>& keywords, const Tokens& target_tokens);

struct EncodedPair {
  std::vector<int> src_ids;     // [CLS] k1 [SEP] k2 [SEP] ... kn [SEP]
  std::vector<int> tgt_ids;     // target tokens + [SEP]
  std::vector<int> segments;    // 0 over src, 1 over tgt
  std::vector<int> copy_labels; // aligned with tgt_ids
};

// Builds the packed pair; the target (never the source) is truncated so that
// src+tgt fits max_len, keeping the trailing [SEP]. Throws when the source
// alone does not fit.
EncodedPair encode_pair(const RequirementRecord& record, const Vocabulary& vocab, int max_len);

struct FoldSplit {
  int k = 0;
  std::vector<std::vector<std::string>> folds;  // record ids
};

// Seeded shuffle then round-robin assignment; fold sizes differ by at most 1.
FoldSplit make_folds(const std::vector<RequirementRecord>& records, int k, std::uint64_t rng_seed);

// JSON-lines corpus: {"id", "text", "keywords": [string]?, "roles": {...}?}.
// Malformed lines raise with their line number.
std::vector<RequirementRecord> load_corpus(const std::string& path);

SyntaxReference roles_from_json_text(const std::string& json_text);

}  // namespace reqgen
