#include "reqgen/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "reqgen/rng.hpp"

namespace reqgen {

Vocabulary::Vocabulary() {
  add("[PAD]");
  add("[UNK]");
  add("[CLS]");
  add("[SEP]");
}

void Vocabulary::add(const std::string& token) {
  if (ids_.count(token)) return;
  ids_[token] = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id_of(t));
  return out;
}

Tokens Vocabulary::decode(const std::vector<int>& ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token_of(id));
  return out;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  if (tokens.size() < 4 || tokens[0] != "[PAD]" || tokens[1] != "[UNK]" || tokens[2] != "[CLS]" ||
      tokens[3] != "[SEP]")
    throw std::runtime_error("vocabulary token list must start with the four specials");
  for (std::size_t i = 4; i < tokens.size(); ++i) v.add(tokens[i]);
  if (v.tokens_.size() != tokens.size()) throw std::runtime_error("duplicate vocabulary token");
  return v;
}

Vocabulary build_vocabulary(const std::vector<RequirementRecord>& records,
                            const std::vector<std::string>& pseudo_sentence_texts, int min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& r : records)
    for (const auto& t : tokenize(r.text)) counts[t]++;
  for (const auto& s : pseudo_sentence_texts)
    for (const auto& t : tokenize(s)) counts[t]++;

  std::vector<std::pair<std::string, std::uint64_t>> order(counts.begin(), counts.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, count] : order)
    if (count >= static_cast<std::uint64_t>(min_count)) v.add(tok);
  return v;
}

namespace {
bool has_alnum(const std::string& tok) {
  for (unsigned char c : tok)
    if (std::isalnum(c)) return true;
  return false;
}
}  // namespace

std::vector<Phrase> noun_phrase_candidates(const Tokens& tokens) {
  std::vector<Phrase> out;
  Phrase run;
  auto flush = [&] {
    if (!run.empty()) {
      out.push_back(run);
      run.clear();
    }
  };
  for (const auto& t : tokens) {
    if (!is_closed_class(t) && has_alnum(t)) {
      run.push_back(t);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::vector<Phrase> extract_keywords(const RequirementRecord& record, std::uint64_t rng_seed) {
  const Tokens tokens = tokenize(record.text);
  const std::vector<Phrase> candidates = noun_phrase_candidates(tokens);
  const std::size_t n_cand = candidates.size();
  if (n_cand < 2) throw std::runtime_error("insufficient noun phrases in record " + record.id);
  Rng rng(rng_seed);
  const std::size_t n = 2 + rng.next_index(n_cand - 1);  // uniform over [2, N]
  std::vector<std::size_t> picked = rng.sample_without_replacement(n_cand, n);
  std::sort(picked.begin(), picked.end());  // keep text order
  std::vector<Phrase> out;
  out.reserve(n);
  for (std::size_t i : picked) out.push_back(candidates[i]);
  return out;
}

std::vector<int> mark_copy_labels(const std::vector<Phrase>& keywords,
                                  const Tokens& target_tokens) {
  std::vector<int> labels(target_tokens.size(), 0);
  for (const auto& phrase : keywords) {
    if (phrase.empty() || phrase.size() > target_tokens.size()) continue;
    for (std::size_t start = 0; start + phrase.size() <= target_tokens.size(); ++start) {
      bool match = true;
      for (std::size_t j = 0; j < phrase.size(); ++j) {
        if (target_tokens[start + j] != phrase[j]) {
          match = false;
          break;
        }
      }
      if (match)
        for (std::size_t j = 0; j < phrase.size(); ++j) labels[start + j] = 1;
    }
  }
  return labels;
}

EncodedPair encode_pair(const RequirementRecord& record, const Vocabulary& vocab, int max_len) {
  EncodedPair pair;
  pair.src_ids.push_back(kClsId);
  for (const auto& phrase : record.keywords) {
    for (const auto& tok : phrase) pair.src_ids.push_back(vocab.id_of(tok));
    pair.src_ids.push_back(kSepId);
  }
  const int available = max_len - static_cast<int>(pair.src_ids.size());
  if (available < 1)
    throw std::runtime_error("source exceeds max_len for record " + record.id);

  Tokens tgt_tokens = tokenize(record.text);
  if (static_cast<int>(tgt_tokens.size()) > available - 1)
    tgt_tokens.resize(static_cast<std::size_t>(available - 1));
  pair.copy_labels = mark_copy_labels(record.keywords, tgt_tokens);
  pair.copy_labels.push_back(0);  // trailing [SEP]
  pair.tgt_ids = vocab.encode(tgt_tokens);
  pair.tgt_ids.push_back(kSepId);

  pair.segments.assign(pair.src_ids.size(), 0);
  pair.segments.insert(pair.segments.end(), pair.tgt_ids.size(), 1);
  return pair;
}

FoldSplit make_folds(const std::vector<RequirementRecord>& records, int k, std::uint64_t rng_seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (static_cast<std::size_t>(k) > records.size())
    throw std::invalid_argument("k exceeds number of records");
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) ids.push_back(r.id);
  Rng rng(rng_seed);
  rng.shuffle(ids);
  FoldSplit split;
  split.k = k;
  split.folds.assign(static_cast<std::size_t>(k), {});
  for (std::size_t i = 0; i < ids.size(); ++i)
    split.folds[i % static_cast<std::size_t>(k)].push_back(ids[i]);
  return split;
}

namespace {

SyntaxReference roles_from_json(const nlohmann::json& obj) {
  SyntaxReference ref;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    SyntaxElement elem;
    elem.name = it.key();
    const auto& val = it.value();
    if (!val.is_object() || !val.contains("words") || !val.contains("alpha"))
      throw std::runtime_error("role '" + elem.name + "' needs \"words\" and \"alpha\"");
    for (const auto& w : val.at("words")) elem.words.insert(to_lower(w.get<std::string>()));
    elem.alpha = val.at("alpha").get<double>();
    ref.elements.push_back(std::move(elem));
  }
  std::sort(ref.elements.begin(), ref.elements.end(),
            [](const SyntaxElement& a, const SyntaxElement& b) { return a.name < b.name; });
  ref.validate();
  return ref;
}

}  // namespace

SyntaxReference roles_from_json_text(const std::string& json_text) {
  return roles_from_json(nlohmann::json::parse(json_text));
}

std::vector<RequirementRecord> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<RequirementRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("text") ||
        !obj["text"].is_string()) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": invalid requirement record");
    }
    RequirementRecord rec;
    rec.text = obj["text"].get<std::string>();
    rec.id = obj.contains("id") ? obj["id"].get<std::string>() : "r" + std::to_string(lineno);
    if (obj.contains("keywords")) {
      for (const auto& kw : obj["keywords"]) {
        Phrase phrase = tokenize(kw.get<std::string>());
        if (!phrase.empty()) rec.keywords.push_back(std::move(phrase));
      }
    }
    if (obj.contains("roles") && obj["roles"].is_object() && !obj["roles"].empty()) {
      try {
        rec.roles = roles_from_json(obj["roles"]);
      } catch (const std::exception& e) {
        throw std::runtime_error("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace reqgen
