#include <doctest.h>

#include "oag/dtb.hpp"
#include "oag/exact.hpp"
#include "oag/harness.hpp"
#include "oag/matching.hpp"
#include "test_support.hpp"

using namespace oag;
using testing::q;

TEST_CASE("expected number of heads") {
  const Probability p = Probability::from_fraction(1, 3);
  const auto result = exact_expectation(
      [&](RandomSource& src) {
        int heads = 0;
        for (int i = 0; i < 4; ++i) heads += src.bernoulli(p);
        return mpq_class(heads);
      },
      100);
  CHECK(result.expectation == q("4/3"));
  CHECK(result.leaves == 16);
}

TEST_CASE("draws may depend on earlier outcomes") {
  // a die roll n in {1,2,3}, then n fair coins
  const auto result = exact_expectation(
      [](RandomSource& src) {
        const std::size_t n = 1 + src.uniform_index(3);
        int heads = 0;
        for (std::size_t i = 0; i < n; ++i) heads += src.bernoulli(Probability::from_fraction(1, 2));
        return mpq_class(heads);
      },
      100);
  CHECK(result.expectation == 1);
  CHECK(result.leaves == 2 + 4 + 8);
}

TEST_CASE("zero-probability branches are skipped") {
  const auto result = exact_expectation(
      [](RandomSource& src) {
        const bool never = src.bernoulli(Probability{});
        const bool always = src.bernoulli(Probability::from_fraction(1, 1));
        return mpq_class(never ? 100 : 0) + (always ? 1 : 0);
      },
      10);
  CHECK(result.expectation == 1);
  CHECK(result.leaves == 1);
}

TEST_CASE("the leaf budget is enforced") {
  try {
    exact_expectation(
        [](RandomSource& src) {
          for (int i = 0; i < 10; ++i) src.bernoulli(Probability::from_fraction(1, 2));
          return mpq_class(0);
        },
        1000);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kTooLarge);
  }
}

TEST_CASE("a nondeterministic value function is detected") {
  int calls = 0;
  CHECK_THROWS_AS(exact_expectation(
                      [&](RandomSource& src) {
                        ++calls;
                        if (calls % 2) src.bernoulli(Probability::from_fraction(1, 2));
                        else src.uniform_index(3);
                        return mpq_class(0);
                      },
                      100),
                  std::logic_error);
}

TEST_CASE("a single edge is always matched") {
  matching::BipartiteInstance g;
  g.n_offline = g.n_online = 1;
  g.adjacency = {{0}};
  g.arrival = {0};
  const auto experiment = make_matching_experiment(g, {});
  for (auto [b, t] : {std::pair{0.0, 0.0}, {0.5, 0.5}, {1.0, 1.0}}) {
    CHECK(experiment->exact_value(OagConfig::from_decimal(b, t), 100).expectation == 1);
  }
}

TEST_CASE("tau zero exact value equals the unguided base") {
  const auto g = matching::gen_upper_triangular(3);
  const auto base = exact_expectation(
      [&](RandomSource& src) {
        matching::Ranking r(g);
        return mpq_class(matching::evaluate(g, run_online(r, src).answers));
      },
      1000);
  for (Adversary adv : {Adversary::kPrimary, Adversary::kRandomValid}) {
    const auto experiment = make_matching_experiment(g, {adv, 5, false});
    for (double beta : {0.0, 0.5, 1.0}) {
      CHECK(experiment->exact_value(OagConfig::from_decimal(beta, 0.0), 100000).expectation ==
            base.expectation);
    }
  }
}

TEST_CASE("exact values on the tiny suite") {
  const auto suite = tiny_suite(7);
  const auto& ut = suite[0];
  REQUIRE(ut.problem == Problem::kMatching);
  const auto value = [&](const OracleCase& c, const char* beta, const char* tau) {
    const mpq_class b = q(beta), t = q(tau);
    const OagConfig config(Probability::from_fraction(b.get_num().get_si(), b.get_den().get_si()),
                           Probability::from_fraction(t.get_num().get_si(), t.get_den().get_si()));
    return mpq_class(c.experiment->exact_value(config, 1000000).expectation / c.experiment->opt());
  };
  CHECK(value(ut, "0", "0") == q("13/18"));
  CHECK(value(ut, "0", "1/2") == q("5/6"));
  CHECK(value(ut, "1", "1") == q("2/3"));
  CHECK(value(ut, "0", "1") == 1);
}
