#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "oag/dtb.hpp"
#include "oag/exact.hpp"
#include "oag/matching.hpp"
#include "test_support.hpp"

using namespace oag;
using namespace oag::matching;

namespace {

// Ranking by hand: each arrival takes its unmatched neighbor of lowest rank.
int ranking_by_hand(const BipartiteInstance& g, const std::vector<int>& rank) {
  std::vector<bool> used(g.n_offline);
  int size = 0;
  for (Vertex u : g.arrival) {
    int best = -1;
    for (Vertex v : g.adjacency[u]) {
      if (!used[v] && (best < 0 || rank[v] < rank[best])) best = v;
    }
    if (best >= 0) {
      used[best] = true;
      ++size;
    }
  }
  return size;
}

BipartiteInstance random_small(RandomStream& rng, int n_on, int n_off) {
  BipartiteInstance g;
  g.n_online = n_on;
  g.n_offline = n_off;
  g.adjacency.resize(n_on);
  for (int u = 0; u < n_on; ++u) {
    for (int v = 0; v < n_off; ++v) {
      if (rng.bernoulli(Probability::from_fraction(2, 5))) g.adjacency[u].push_back(v);
    }
  }
  g.arrival.resize(n_on);
  std::iota(g.arrival.begin(), g.arrival.end(), 0);
  for (int i = n_on - 1; i > 0; --i) std::swap(g.arrival[i], g.arrival[rng.uniform_index(i + 1)]);
  return g;
}

}  // namespace

TEST_CASE("upper triangular instance shape") {
  const auto g = gen_upper_triangular(4);
  CHECK(g.edge_count() == 10);
  CHECK(g.has_edge(0, 3));
  CHECK_FALSE(g.has_edge(3, 0));
  CHECK(max_matching(g).size == 4);
  CHECK_THROWS_AS(gen_upper_triangular(0), Error);
}

TEST_CASE("maximum matching agrees with subset brute force") {
  RandomStream rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_on = 1 + static_cast<int>(rng.uniform_index(5));
    const int n_off = 1 + static_cast<int>(rng.uniform_index(5));
    const auto g = random_small(rng, n_on, n_off);
    if (g.edge_count() > 16) continue;
    const auto m = max_matching(g);
    CHECK(m.size == testing::brute_force_matching(n_off, g.adjacency));
    std::vector<Vertex> answers;
    for (Vertex u : g.arrival) answers.push_back(m.online_partner[u]);
    CHECK(evaluate(g, answers) == m.size);
  }
}

TEST_CASE("ranking on UT(3) matches a permutation brute force exactly") {
  const auto g = gen_upper_triangular(3);
  std::vector<int> perm = {0, 1, 2};
  mpq_class total = 0;
  int count = 0;
  do {
    total += ranking_by_hand(g, perm);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  total /= count;
  CHECK(total == testing::q("13/6"));

  const auto exact = exact_expectation(
      [&](RandomSource& src) {
        Ranking r(g);
        return mpq_class(evaluate(g, run_online(r, src).answers));
      },
      1000);
  CHECK(exact.expectation == total);
}

TEST_CASE("ranking answers are legal and maximal") {
  RandomStream rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = gen_random_perfect(20, 0.15, trial + 1);
    Ranking r(g);
    const auto run = run_online(r, rng);
    CHECK_NOTHROW(evaluate(g, run.answers));
    CHECK(is_maximal(g, run.answers));
  }
}

TEST_CASE("ranking base step prefers the lowest rank") {
  const auto g = gen_upper_triangular(3);
  MatchingState s;
  s.rank = {2, 0, 1};
  s.matched_offline = {0, 0, 0};
  s.matched_online = {kNoMatch, kNoMatch, kNoMatch};
  auto c = ranking_base_step(g, s, 0);
  CHECK(c.valid_set == std::vector<Vertex>{0, 1, 2});
  testing::ScriptedSource src;
  CHECK(c.sample(src) == 1);
  CHECK(src.log.empty());
  s.matched_offline = {0, 1, 1};
  c = ranking_base_step(g, s, 2);
  CHECK(c.valid_set == std::vector<Vertex>{kNoMatch});
}

TEST_CASE("the matching bound at the corners") {
  CHECK(bound_matching(0.0, 0.0) == doctest::Approx(0.632120559).epsilon(1e-9));
  CHECK(bound_matching(0.0, 1.0) == 1.0);
  CHECK(bound_matching(1.0, 1.0) == 0.5);
  CHECK(bound_matching(0.0, 0.5) == doctest::Approx(0.786938681).epsilon(1e-9));
  CHECK(bound_matching(0.5, 0.5) == doctest::Approx(0.75 * 0.786938681).epsilon(1e-9));
  CHECK(bound_matching(1.0, 0.5) >= 0.5);
}

TEST_CASE("optimal guide follows M*") {
  const auto g = gen_upper_triangular(3);
  const auto m = max_matching(g);
  OptimalGuide good(g, m);
  auto algo = dtb_transform(Ranking(g), Probability::from_fraction(1, 1));
  RandomStream env(1), alg(2);
  const auto run = run_oag(algo, good, good,
                           OagConfig(Probability{}, Probability::from_fraction(1, 1)), env, alg);
  CHECK(evaluate(g, run.answers) == 3);
}

TEST_CASE("greedy harm steals the partner needed latest") {
  const auto g = gen_upper_triangular(4);
  const auto m = max_matching(g);
  REQUIRE(m.online_partner == std::vector<Vertex>{0, 1, 2, 3});
  GreedyHarmGuide bad(g, m);
  const std::vector<Vertex> valid = {0, 1, 2, 3};
  CHECK(bad(GuideQuery<Vertex>{1, {}, valid}) == 3);
  const std::vector<Vertex> only_partner = {0};
  CHECK(bad(GuideQuery<Vertex>{1, {}, only_partner}) == 0);
  // node 1's partner arrives at step 2, already past at step 3
  const std::vector<Vertex> stale = {1, 2};
  CHECK(bad.choose(3, stale) == 1);
}

TEST_CASE("instance text round trip") {
  const auto g = gen_random_perfect(12, 0.3, 5);
  std::stringstream ss;
  write_instance(ss, g);
  const auto back = read_instance(ss);
  CHECK(back.adjacency == g.adjacency);
  CHECK(back.arrival == g.arrival);
  CHECK(back.n_offline == g.n_offline);
}

TEST_CASE("instance parse errors carry a line number") {
  std::istringstream bad("2 2\n0: 0 1\n1: x\narrival: 0 1\n");
  try {
    read_instance(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::istringstream not_perm("2 2\n0: 0\n1: 1\narrival: 0 0\n");
  CHECK_THROWS_AS(read_instance(not_perm), Error);
  std::istringstream out_of_range("2 2\n0: 5\n1: 1\narrival: 0 1\n");
  CHECK_THROWS_AS(read_instance(out_of_range), Error);
}

TEST_CASE("evaluate rejects illegal answers") {
  const auto g = gen_upper_triangular(3);
  CHECK_THROWS_AS(evaluate(g, std::vector<Vertex>{0, 1}), Error);
  try {
    evaluate(g, std::vector<Vertex>{0, 0, kNoMatch});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIllegalAnswer);
  }
  CHECK_THROWS_AS(evaluate(g, std::vector<Vertex>{1, 0, 2}), Error);
  CHECK(evaluate(g, std::vector<Vertex>{kNoMatch, 1, 2}) == 2);
}

TEST_CASE("node removal renumbers") {
  const auto g = gen_upper_triangular(3);
  const auto a = remove_online(g, 0);
  CHECK(a.n_online == 2);
  CHECK(a.adjacency[0] == std::vector<Vertex>{1, 2});
  CHECK(a.arrival == std::vector<Vertex>{0, 1});
  const auto b = remove_offline(g, 1);
  CHECK(b.n_offline == 2);
  CHECK(b.adjacency[0] == std::vector<Vertex>{0, 1});
  CHECK(b.adjacency[2] == std::vector<Vertex>{1});
}

TEST_CASE("random perfect instances have a perfect matching") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto g = gen_random_perfect(50, 0.05, seed);
    CHECK_NOTHROW(g.validate());
    CHECK(max_matching(g).size == 50);
  }
  CHECK(gen_random_perfect(10, 0.1, 3).adjacency == gen_random_perfect(10, 0.1, 3).adjacency);
}
