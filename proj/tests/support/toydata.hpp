#pragma once

#include <string>
#include <vector>

#include "reqgen/corpus.hpp"
#include "reqgen/ontology.hpp"
#include "reqgen/rng.hpp"

namespace reqgen::test {

// Small deterministic UAV-flavoured fixtures shared by unit, integration, and
// acceptance tests.

std::vector<Triple> toy_triples();
OntologyGraph toy_graph();
void write_toy_ontology(const std::string& path);

// count <= 50 records, each with 2-3 keyword phrases that occur contiguously
// in the text; every third record carries a syntax-role annotation.
std::vector<RequirementRecord> toy_records(int count);
void write_toy_corpus(const std::string& path, const std::vector<RequirementRecord>& records);

// Random undirected graph for oracle comparisons: <= max_nodes nodes, edge
// count ~ 1.5x nodes, single-token entity names.
OntologyGraph random_graph(Rng& rng, int max_nodes);

// Unique writable scratch directory under the system temp dir.
std::string scratch_dir(const std::string& tag);

}  // namespace reqgen::test
