#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "reqgen/text.hpp"

namespace reqgen {

enum class RelationKind { Subclass, SuperClass, SubProperty, HasDomain, HasRange, Other };

// Case-insensitive, whitespace-normalized mapping of relation names onto the
// template families used for pseudo-sentence construction. Total function.
RelationKind classify_relation(const std::string& relation);

struct Triple {
  std::string subject;
  std::string relation;
  std::string object;
  RelationKind kind;

  Triple(std::string s, std::string r, std::string o)
      : subject(std::move(s)),
        relation(std::move(r)),
        object(std::move(o)),
        kind(classify_relation(relation)) {}

  bool operator==(const Triple& other) const {
    return subject == other.subject && relation == other.relation && object == other.object;
  }
};

// Undirected view of a triple store. Adjacency keeps one entry per triple
// endpoint, so parallel edges (same pair, different relation) stay distinct
// for walk counting.
struct OntologyGraph {
  std::vector<Triple> triples;
  std::set<std::string> entities;
  // entity -> list of (triple index, neighbor entity)
  std::map<std::string, std::vector<std::pair<std::size_t, std::string>>> adjacency;

  void add_triple(Triple t);
  bool empty() const { return triples.empty(); }

  // Entities whose normalized name equals normalize_name(phrase).
  std::vector<std::string> match_entities(const std::string& phrase) const;
};

// JSON-lines file, one {"s": ..., "r": ..., "o": ...} object per line.
// Malformed lines raise with their 1-based line number; exact duplicate
// triples are dropped.
OntologyGraph load_triples(const std::string& path);

struct HopResult {
  std::map<std::string, int> hop_of;             // entity -> min hops from seed set, 1..max_hops
  std::map<std::string, std::uint64_t> frequency;  // entity -> number of walks ending there
  int max_hops = 0;
  std::vector<std::string> seeds;
};

// BFS distances plus the walk-count dynamic program
//   c_0(v) = [v is a seed],  c_d(v) = sum over incident edges (u,v) of c_{d-1}(u),
//   frequency(e) = sum_{d=1..max_hops} c_d(e)
// restricted to non-seed entities within max_hops. Keywords are matched to
// entities by normalized exact name; unmatched ones are appended to
// *unmatched when given. Throws if no keyword matches any entity.
HopResult multi_hop_search(const OntologyGraph& graph, const std::vector<std::string>& keywords,
                           int max_hops, std::vector<std::string>* unmatched = nullptr);

// Keeps entities with frequency strictly greater than threshold. Threshold 0
// is the identity (every retained frequency is >= 1).
HopResult filter_by_frequency(const HopResult& result, std::uint64_t threshold);

struct PseudoSentence {
  std::string text;
  int hop = 1;
  std::vector<Triple> sources;
};

// Template rendering, in triple input order. hasDomain/hasRange triples that
// share a property are paired into "<Domain> is <property> <range>." with the
// leading capital and trailing period; leftovers fall back to the unpaired
// forms. A sentence's hop is the minimum hop_of over its entities (1 when
// only seeds are involved).
std::vector<PseudoSentence> triples_to_pseudo_sentences(const std::vector<Triple>& triples,
                                                        const std::map<std::string, int>& hop_of);

struct InjectionPlanEntry {
  int layer = 1;
  int hop_limit = 1;
  std::uint64_t freq_threshold = 0;
};

struct InjectionPlan {
  std::vector<InjectionPlanEntry> entries;
  int token_cap_per_layer = 512;

  // Layers strictly increasing, hop limits non-increasing, layers within
  // [1, model_depth]. Throws on violation.
  void validate(int model_depth) const;

  // Mirrors the 1(5),2(2),4(1) layer/hop assignment with threshold 10.
  static InjectionPlan default_plan();

  int max_hop() const;
  std::string label() const;  // "1(5),2(2),4(1)"
};

// For each plan entry: one shared multi-hop search to the plan's deepest hop,
// frequency filtering with the entry's threshold, hop_limit restriction, then
// pseudo-sentences for the retrieved triples incident to the kept entities.
// Sentences are admitted by descending entity frequency (ties by name) until
// token_cap_per_layer tokenized words are used. Layers may come back empty.
std::map<int, std::vector<PseudoSentence>> build_injection_knowledge(
    const OntologyGraph& graph, const std::vector<std::string>& keywords,
    const InjectionPlan& plan, std::vector<std::string>* unmatched = nullptr);

}  // namespace reqgen
