#include <doctest.h>

#include "reqgen/rng.hpp"
#include "reqgen/syntax.hpp"

using namespace reqgen;

namespace {
SyntaxReference two_element_ref() {
  SyntaxReference ref;
  ref.elements = {{"e1", {"system", "shall"}, 0.5}, {"e2", {"display", "altitude"}, 0.5}};
  return ref;
}
}  // namespace

TEST_CASE("rs4re hand cases") {
  const SyntaxReference ref = two_element_ref();
  SUBCASE("full coverage scores 1") {
    CHECK(rs4re({"system", "shall", "display", "altitude"}, ref) == doctest::Approx(1.0));
  }
  SUBCASE("empty candidate scores 0") { CHECK(rs4re({}, ref) == doctest::Approx(0.0)); }
  SUBCASE("half of one element covered gives 0.75") {
    CHECK(rs4re({"system", "shall", "display"}, ref) == doctest::Approx(0.75));
  }
  SUBCASE("matching is case-insensitive on surface forms") {
    CHECK(rs4re({"SYSTEM", "shall", "display", "ALTITUDE"}, ref) == doctest::Approx(1.0));
  }
}

TEST_CASE("syntax reference validation") {
  SyntaxReference ref = two_element_ref();
  CHECK_NOTHROW(ref.validate());
  SUBCASE("weights must sum to 1") {
    ref.elements[0].alpha = 0.6;
    CHECK_THROWS(ref.validate());
  }
  SUBCASE("weights must be in (0,1]") {
    ref.elements[0].alpha = 0.0;
    ref.elements[1].alpha = 1.0;
    CHECK_THROWS(ref.validate());
  }
  SUBCASE("word sets must be non-empty") {
    ref.elements[0].words.clear();
    CHECK_THROWS(ref.validate());
  }
  SUBCASE("at least one element") {
    ref.elements.clear();
    CHECK_THROWS(ref.validate());
  }
}

TEST_CASE("rs4re is monotone under adding tokens and bounded in [0,1]") {
  Rng rng(4242);
  const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 100; ++trial) {
    SyntaxReference ref;
    const std::size_t n_elems = 1 + rng.next_index(3);
    for (std::size_t i = 0; i < n_elems; ++i) {
      SyntaxElement e;
      e.name = "e" + std::to_string(i);
      const std::size_t n_words = 1 + rng.next_index(3);
      for (std::size_t w = 0; w < n_words; ++w) e.words.insert(pool[rng.next_index(pool.size())]);
      e.alpha = 1.0 / static_cast<double>(n_elems);
      ref.elements.push_back(std::move(e));
    }
    Tokens cand;
    double prev = 0.0;
    for (int step = 0; step < 10; ++step) {
      cand.push_back(pool[rng.next_index(pool.size())]);
      const double score = rs4re(cand, ref);
      REQUIRE(score >= prev - 1e-12);
      REQUIRE(score >= 0.0);
      REQUIRE(score <= 1.0 + 1e-12);
      prev = score;
    }
    // covering every element word from the candidate forces a perfect score
    Tokens full;
    for (const auto& e : ref.elements) full.insert(full.end(), e.words.begin(), e.words.end());
    CHECK(rs4re(full, ref) == doctest::Approx(1.0));
  }
}
