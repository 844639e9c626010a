#include "reqgen/ontology.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace reqgen {

RelationKind classify_relation(const std::string& relation) {
  const std::string r = normalize_name(relation);
  if (r == "subclassof") return RelationKind::Subclass;
  if (r == "hassuperclasses") return RelationKind::SuperClass;
  if (r == "subpropertyof") return RelationKind::SubProperty;
  if (r == "hasdomain" || r == "has domain") return RelationKind::HasDomain;
  if (r == "hasrange" || r == "has range") return RelationKind::HasRange;
  return RelationKind::Other;
}

void OntologyGraph::add_triple(Triple t) {
  const std::size_t idx = triples.size();
  entities.insert(t.subject);
  entities.insert(t.object);
  adjacency[t.subject].emplace_back(idx, t.object);
  adjacency[t.object].emplace_back(idx, t.subject);
  triples.push_back(std::move(t));
}

std::vector<std::string> OntologyGraph::match_entities(const std::string& phrase) const {
  const std::string key = normalize_name(phrase);
  std::vector<std::string> out;
  for (const auto& e : entities)
    if (normalize_name(e) == key) out.push_back(e);
  return out;
}

OntologyGraph load_triples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ontology file: " + path);
  OntologyGraph graph;
  std::set<std::array<std::string, 3>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("s") || !obj.contains("r") ||
        !obj.contains("o") || !obj["s"].is_string() || !obj["r"].is_string() ||
        !obj["o"].is_string() || obj["s"].get<std::string>().empty() ||
        obj["o"].get<std::string>().empty()) {
      throw std::runtime_error("line " + std::to_string(lineno) + ": invalid triple");
    }
    std::array<std::string, 3> key{obj["s"].get<std::string>(), obj["r"].get<std::string>(),
                                   obj["o"].get<std::string>()};
    if (!seen.insert(key).second) continue;
    graph.add_triple(Triple(key[0], key[1], key[2]));
  }
  return graph;
}

HopResult multi_hop_search(const OntologyGraph& graph, const std::vector<std::string>& keywords,
                           int max_hops, std::vector<std::string>* unmatched) {
  if (max_hops < 1) throw std::invalid_argument("max_hops must be >= 1");
  HopResult result;
  result.max_hops = max_hops;
  std::set<std::string> seed_set;
  for (const auto& kw : keywords) {
    auto matches = graph.match_entities(kw);
    if (matches.empty()) {
      if (unmatched) unmatched->push_back(kw);
      continue;
    }
    for (auto& m : matches)
      if (seed_set.insert(m).second) result.seeds.push_back(m);
  }
  if (seed_set.empty()) throw std::runtime_error("no keyword matched ontology");

  // BFS over the undirected view for min hop distances.
  std::map<std::string, int> dist;
  std::vector<std::string> frontier(result.seeds);
  for (const auto& s : seed_set) dist[s] = 0;
  for (int d = 1; d <= max_hops && !frontier.empty(); ++d) {
    std::vector<std::string> next;
    for (const auto& u : frontier) {
      auto it = graph.adjacency.find(u);
      if (it == graph.adjacency.end()) continue;
      for (const auto& [tidx, v] : it->second) {
        (void)tidx;
        if (dist.count(v)) continue;
        dist[v] = d;
        next.push_back(v);
      }
    }
    frontier = std::move(next);
  }
  for (const auto& [e, d] : dist)
    if (d >= 1) result.hop_of[e] = d;

  // Walk-count DP; parallel edges contribute separately.
  std::map<std::string, std::uint64_t> prev;
  for (const auto& s : seed_set) prev[s] += 1;
  std::map<std::string, std::uint64_t> total;
  for (int d = 1; d <= max_hops; ++d) {
    std::map<std::string, std::uint64_t> cur;
    for (const auto& [u, count] : prev) {
      auto it = graph.adjacency.find(u);
      if (it == graph.adjacency.end()) continue;
      for (const auto& [tidx, v] : it->second) {
        (void)tidx;
        cur[v] += count;
      }
    }
    for (const auto& [v, count] : cur) total[v] += count;
    prev = std::move(cur);
  }
  for (const auto& [e, d] : result.hop_of) {
    (void)d;
    result.frequency[e] = total[e];
  }
  return result;
}

HopResult filter_by_frequency(const HopResult& result, std::uint64_t threshold) {
  HopResult out;
  out.max_hops = result.max_hops;
  out.seeds = result.seeds;
  for (const auto& [e, hop] : result.hop_of) {
    auto it = result.frequency.find(e);
    const std::uint64_t freq = it == result.frequency.end() ? 0 : it->second;
    if (freq > threshold) {
      out.hop_of[e] = hop;
      out.frequency[e] = freq;
    }
  }
  return out;
}

namespace {

int sentence_hop(const std::vector<Triple>& sources, const std::map<std::string, int>& hop_of) {
  int hop = 0;
  bool found = false;
  auto consider = [&](const std::string& e) {
    auto it = hop_of.find(e);
    if (it == hop_of.end()) return;
    if (!found || it->second < hop) hop = it->second;
    found = true;
  };
  for (const auto& t : sources) {
    consider(t.subject);
    consider(t.object);
  }
  return found ? hop : 1;
}

std::string capitalize_sentence(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  s.push_back('.');
  return s;
}

}  // namespace

std::vector<PseudoSentence> triples_to_pseudo_sentences(const std::vector<Triple>& triples,
                                                        const std::map<std::string, int>& hop_of) {
  // Pair the k-th hasDomain with the k-th hasRange of the same property.
  std::map<std::string, std::vector<std::size_t>> domains, ranges;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (triples[i].kind == RelationKind::HasDomain) domains[triples[i].subject].push_back(i);
    if (triples[i].kind == RelationKind::HasRange) ranges[triples[i].subject].push_back(i);
  }
  std::map<std::size_t, std::size_t> pair_of;  // earlier index -> partner
  std::set<std::size_t> consumed;
  for (const auto& [prop, dlist] : domains) {
    auto rit = ranges.find(prop);
    if (rit == ranges.end()) continue;
    const auto& rlist = rit->second;
    for (std::size_t k = 0; k < dlist.size() && k < rlist.size(); ++k) {
      std::size_t a = std::min(dlist[k], rlist[k]);
      std::size_t b = std::max(dlist[k], rlist[k]);
      pair_of[a] = b;
      consumed.insert(b);
    }
  }

  std::vector<PseudoSentence> out;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (consumed.count(i)) continue;
    const Triple& t = triples[i];
    PseudoSentence ps;
    auto paired = pair_of.find(i);
    if (paired != pair_of.end()) {
      const Triple& other = triples[paired->second];
      const Triple& dom = t.kind == RelationKind::HasDomain ? t : other;
      const Triple& rng = t.kind == RelationKind::HasDomain ? other : t;
      ps.text = capitalize_sentence(dom.object + " is " + dom.subject + " " + rng.object);
      ps.sources = {dom, rng};
    } else {
      ps.sources = {t};
      switch (t.kind) {
        case RelationKind::Subclass:
          ps.text = t.subject + " is subclass of " + t.object;
          break;
        case RelationKind::SuperClass:
          ps.text = t.subject + " has super class " + t.object;
          break;
        case RelationKind::SubProperty:
          ps.text = t.subject + " is subproperty of " + t.object;
          break;
        case RelationKind::HasDomain:
          ps.text = t.subject + " has domain " + t.object;
          break;
        case RelationKind::HasRange:
          ps.text = t.subject + " has range " + t.object;
          break;
        case RelationKind::Other:
          ps.text = t.subject + " " + t.relation + " " + t.object;
          break;
      }
    }
    ps.hop = sentence_hop(ps.sources, hop_of);
    out.push_back(std::move(ps));
  }
  return out;
}

void InjectionPlan::validate(int model_depth) const {
  if (token_cap_per_layer < 1) throw std::invalid_argument("token_cap_per_layer must be >= 1");
  int prev_layer = 0;
  int prev_hop = -1;
  for (const auto& e : entries) {
    if (e.layer <= prev_layer) throw std::invalid_argument("plan layers must be strictly increasing");
    if (e.layer > model_depth) throw std::invalid_argument("plan layer exceeds model depth");
    if (e.hop_limit < 1) throw std::invalid_argument("plan hop_limit must be >= 1");
    if (prev_hop >= 0 && e.hop_limit > prev_hop)
      throw std::invalid_argument("plan hop limits must be non-increasing");
    prev_layer = e.layer;
    prev_hop = e.hop_limit;
  }
}

InjectionPlan InjectionPlan::default_plan() {
  InjectionPlan plan;
  plan.entries = {{1, 5, 10}, {2, 2, 10}, {4, 1, 10}};
  plan.token_cap_per_layer = 512;
  return plan;
}

int InjectionPlan::max_hop() const {
  int m = 1;
  for (const auto& e : entries) m = std::max(m, e.hop_limit);
  return m;
}

std::string InjectionPlan::label() const {
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out.push_back(',');
    out += std::to_string(e.layer) + "(" + std::to_string(e.hop_limit) + ")";
  }
  return out;
}

std::map<int, std::vector<PseudoSentence>> build_injection_knowledge(
    const OntologyGraph& graph, const std::vector<std::string>& keywords,
    const InjectionPlan& plan, std::vector<std::string>* unmatched) {
  std::map<int, std::vector<PseudoSentence>> out;
  if (plan.entries.empty()) return out;
  for (const auto& e : plan.entries) out[e.layer] = {};

  HopResult search;
  try {
    search = multi_hop_search(graph, keywords, plan.max_hop(), unmatched);
  } catch (const std::runtime_error&) {
    return out;  // nothing matched: every layer injects nothing
  }

  std::set<std::string> visited(search.seeds.begin(), search.seeds.end());
  for (const auto& [e, hop] : search.hop_of) {
    (void)hop;
    visited.insert(e);
  }

  for (const auto& entry : plan.entries) {
    HopResult filtered = filter_by_frequency(search, entry.freq_threshold);
    std::set<std::string> kept;
    for (const auto& [e, hop] : filtered.hop_of)
      if (hop <= entry.hop_limit) kept.insert(e);
    if (kept.empty()) continue;

    std::vector<Triple> candidates;
    for (const auto& t : graph.triples) {
      if (!visited.count(t.subject) || !visited.count(t.object)) continue;
      if (kept.count(t.subject) || kept.count(t.object)) candidates.push_back(t);
    }
    std::vector<PseudoSentence> sentences = triples_to_pseudo_sentences(candidates, search.hop_of);

    // Admission priority: highest kept-entity frequency first, names break ties.
    auto priority = [&](const PseudoSentence& ps) {
      std::uint64_t best_freq = 0;
      std::string best_name;
      for (const auto& t : ps.sources) {
        for (const std::string* e : {&t.subject, &t.object}) {
          if (!kept.count(*e)) continue;
          const std::uint64_t f = search.frequency.at(*e);
          if (f > best_freq || (f == best_freq && (best_name.empty() || *e < best_name))) {
            best_freq = f;
            best_name = *e;
          }
        }
      }
      return std::make_pair(best_freq, best_name);
    };

    std::vector<std::size_t> order(sentences.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      auto [fa, na] = priority(sentences[a]);
      auto [fb, nb] = priority(sentences[b]);
      if (fa != fb) return fa > fb;
      return na < nb;
    });

    std::set<std::size_t> selected;
    int budget = plan.token_cap_per_layer;
    for (std::size_t idx : order) {
      const int cost = static_cast<int>(tokenize(sentences[idx].text).size());
      if (cost > budget) break;
      budget -= cost;
      selected.insert(idx);
    }

    std::vector<PseudoSentence> layer_sentences;
    for (std::size_t i = 0; i < sentences.size(); ++i)
      if (selected.count(i)) layer_sentences.push_back(sentences[i]);
    out[entry.layer] = std::move(layer_sentences);
  }
  return out;
}

}  // namespace reqgen
