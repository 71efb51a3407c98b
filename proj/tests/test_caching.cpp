#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oag/caching.hpp"
#include "oag/dtb.hpp"
#include "oag/exact.hpp"
#include "test_support.hpp"

using namespace oag;
using namespace oag::caching;

namespace {

CacheTrace random_trace(RandomStream& rng, int k, int pages, int length) {
  CacheTrace t;
  t.k = k;
  for (int p = 1; p <= k && p <= pages; ++p) {
    if (rng.bernoulli(Probability::from_fraction(1, 2))) t.initial_cache.push_back(p);
  }
  for (int i = 0; i < length; ++i) t.requests.push_back(1 + static_cast<Page>(rng.uniform_index(pages)));
  return t;
}

template <typename Good, typename Bad>
GuidedRun<Page> run_guided(const PreparedTrace& prepared, Good& good, Bad& bad, double beta,
                           double tau, std::uint64_t seed) {
  auto algo = dtb_transform(RandomMark(prepared), tau);
  RandomStream env(seed), alg(seed + 1000);
  return run_oag(algo, good, bad, OagConfig::from_decimal(beta, tau), env, alg);
}

}  // namespace

TEST_CASE("trace validation") {
  CacheTrace t{2, {1, 1}, {1}};
  CHECK_THROWS_AS(t.validate(), Error);
  t = CacheTrace{2, {1, 2, 3}, {1}};
  CHECK_THROWS_AS(t.validate(), Error);
  t = CacheTrace{0, {}, {1}};
  CHECK_THROWS_AS(t.validate(), Error);
  t = CacheTrace{2, {}, {-3}};
  CHECK_THROWS_AS(t.validate(), Error);
  t = CacheTrace{2, {5}, {1, 5}};
  CHECK_NOTHROW(t.validate());
}

TEST_CASE("belady matches exhaustive eviction search") {
  RandomStream rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_index(3));
    const int pages = k + 1 + static_cast<int>(rng.uniform_index(3));
    const auto t = random_trace(rng, k, pages, 1 + static_cast<int>(rng.uniform_index(12)));
    CHECK(belady_opt(t) == testing::brute_force_paging(k, t.initial_cache, t.requests));
  }
}

TEST_CASE("cyclic trace costs") {
  const auto t = gen_cyclic(2, 3, true);
  CHECK(t.requests == std::vector<Page>{1, 2, 3, 1, 2, 3, 1, 2, 3});
  CHECK(t.initial_cache == std::vector<Page>{1, 2});
  CHECK(belady_opt(t) == testing::brute_force_paging(2, t.initial_cache, t.requests));
  const auto cold = gen_cyclic(3, 1, false);
  CHECK(cold.initial_cache.empty());
  CHECK(belady_opt(cold) == 4);
}

TEST_CASE("evaluate enforces the eviction rules") {
  const CacheTrace t{2, {1, 2}, {1, 3, 1}};
  CHECK(evaluate(t, std::vector<Page>{kNoEvict, 2, kNoEvict}) == 1);
  CHECK_THROWS_AS(evaluate(t, std::vector<Page>{kNoEvict, kNoEvict, kNoEvict}), Error);
  CHECK_THROWS_AS(evaluate(t, std::vector<Page>{1, 2, kNoEvict}), Error);
  CHECK_THROWS_AS(evaluate(t, std::vector<Page>{kNoEvict, 7, kNoEvict}), Error);
  CHECK_THROWS_AS(evaluate(t, std::vector<Page>{kNoEvict}), Error);
  const CacheTrace room{3, {1}, {2}};
  CHECK(evaluate(room, std::vector<Page>{kNoEvict}) == 1);
  CHECK_THROWS_AS(evaluate(room, std::vector<Page>{1}), Error);
}

TEST_CASE("marking base step offers unmarked cached pages") {
  const CacheTrace t{2, {1, 2}, {1, 3}};
  const PreparedTrace prepared(t);
  RandomMark algo(prepared);
  testing::ScriptedSource src;
  algo.start(src);
  auto c = algo.offer();
  CHECK(c.valid_set == std::vector<Page>{kNoEvict});
  algo.commit(kNoEvict);
  c = algo.offer();
  CHECK(c.valid_set == std::vector<Page>{2});
  CHECK(c.sampler.kind == Sampler::Kind::kUniform);
}

TEST_CASE("random mark invariants hold after every request") {
  RandomStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_index(5));
    const auto t = random_trace(rng, k, k + 1 + static_cast<int>(rng.uniform_index(4)), 60);
    const PreparedTrace prepared(t);
    FarthestInFutureGuide good(prepared);
    SoonestRequestGuide bad(prepared);
    const double beta = rng.next_unit(), tau = rng.next_unit();
    auto algo = dtb_transform(RandomMark(prepared), tau);
    RandomStream env(trial), alg(trial + 1);
    int broken = 0;
    const auto run = run_oag(algo, good, bad, OagConfig::from_decimal(beta, tau), env, alg, false,
                             [&](const auto& a, std::size_t) {
                               broken += !a.base().invariants_hold();
                             });
    CHECK(broken == 0);
    const std::int64_t cost = evaluate(t, run.answers);
    CHECK(cost >= belady_opt(t));
  }
}

TEST_CASE("phase partitions") {
  const std::vector<Page> r = {1, 2, 1, 3, 2, 4};
  const auto greedy = phase_partition(r, 2);
  REQUIRE(greedy.size() == 3);
  CHECK(greedy[0].begin == 0);
  CHECK(greedy[0].end == 3);
  CHECK(greedy[1].end == 5);
  CHECK(greedy[2].end == 6);
  const auto marking = marking_phases(r, 2);
  REQUIRE(marking.size() == 3);
  CHECK(marking[0].end == 2);
  CHECK(marking[1].end == 4);
  CHECK(marking[2].end == 6);
  CHECK(phase_partition(std::vector<Page>{}, 3).empty());
}

TEST_CASE("perfectly trusted farthest-in-future guidance pays only clean faults") {
  RandomStream rng(55);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_index(3));
    const auto t = random_trace(rng, k, k + 3, 50);
    const PreparedTrace prepared(t);
    FarthestInFutureGuide good(prepared);
    const auto run = run_guided(prepared, good, good, 0.0, 1.0, trial);
    const auto phases = marking_phases(t.requests, k);
    const auto stats = phase_stats(t, run.answers, phases);
    int faults = 0, clean = 0;
    for (const auto& s : stats) {
      CHECK(s.alg_faults == s.clean);
      faults += s.alg_faults;
      clean += s.clean;
    }
    CHECK(faults == evaluate(t, run.answers));
    CHECK(clean == faults);
  }
}

TEST_CASE("phase stats classify pages against the phase-start cache") {
  const CacheTrace t{2, {1, 2}, {1, 3, 2, 4}};
  const std::vector<Page> answers = {kNoEvict, 2, 1, 3};
  const auto phases = marking_phases(t.requests, 2);
  const auto stats = phase_stats(t, answers, phases);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].clean == 1);
  CHECK(stats[0].returning == 1);
  CHECK(stats[0].vanishing == 1);
  CHECK(stats[0].alg_faults == 1);
  // second phase: cache {1,3}; requests 2, 4 are both clean
  CHECK(stats[1].clean == 2);
  CHECK(stats[1].alg_faults == 2);
  int chain_faults = 0;
  for (const auto& s : stats) {
    for (int c : s.blame_chain_lengths) chain_faults += c;
  }
  CHECK(chain_faults == 3);
}

TEST_CASE("caching bound values") {
  CHECK(harmonic(3) == testing::q("11/6"));
  CHECK(bound_caching(1.0, 0.3, 10) == doctest::Approx(8.36848).epsilon(1e-5));
  CHECK(bound_caching(0.0, 1.0, 10) == 2.0);
  CHECK(bound_caching(1.0, 1.0, 10) == 10.0);
  CHECK(bound_caching(0.0, 0.0, 10) == doctest::Approx(2 * harmonic(10).get_d()));
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) {
      mpq_class beta(i, 10), tau(j, 10);
      beta.canonicalize();
      tau.canonicalize();
      const auto exact = bound_caching_exact(beta, tau, 10);
      REQUIRE(exact.has_value());
      CHECK(exact->get_d() ==
            doctest::Approx(bound_caching(beta.get_d(), tau.get_d(), 10)).epsilon(1e-12));
    }
  }
}

TEST_CASE("zipf traces are reproducible and popular pages dominate") {
  const auto a = gen_zipf(4, 20, 5000, 1.2, 9);
  const auto b = gen_zipf(4, 20, 5000, 1.2, 9);
  CHECK(a.requests == b.requests);
  CHECK(a.initial_cache == std::vector<Page>{1, 2, 3, 4});
  int ones = 0, twenties = 0;
  for (Page p : a.requests) {
    CHECK(p >= 1);
    CHECK(p <= 20);
    ones += p == 1;
    twenties += p == 20;
  }
  CHECK(ones > 5 * twenties);
}

TEST_CASE("trace text round trip and errors") {
  const auto t = gen_zipf(3, 10, 40, 1.0, 2);
  std::stringstream ss;
  write_trace(ss, t);
  const auto back = read_trace(ss);
  CHECK(back.k == t.k);
  CHECK(back.initial_cache == t.initial_cache);
  CHECK(back.requests == t.requests);

  std::istringstream empty_cache("2\n\n1 2 3\n");
  CHECK(read_trace(empty_cache).initial_cache.empty());
  std::istringstream bad("2\n1\n1 z 3\n");
  try {
    read_trace(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("exact random mark cost on the tiny cyclic trace") {
  const CacheTrace t{2, {1, 2}, {1, 2, 3, 1, 2, 3, 1, 2}};
  const PreparedTrace prepared(t);
  CHECK(belady_opt(t) == 3);
  const auto result = exact_expectation(
      [&](RandomSource& src) {
        RandomMark algo(prepared);
        return mpq_class(evaluate(t, run_online(algo, src).answers));
      },
      10000);
  // ratio 3/2 against the optimum of 3
  CHECK(result.expectation == testing::q("9/2"));
}
