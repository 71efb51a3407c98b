#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "oag/harness.hpp"
#include "test_support.hpp"

using namespace oag;

namespace {

std::unique_ptr<Experiment> build(Problem p, const std::string& gen, GeneratorParams params,
                                  ExperimentOptions options = {}) {
  return build_experiment(p, gen, params, "", options);
}

}  // namespace

TEST_CASE("names round trip") {
  for (Problem p : {Problem::kMatching, Problem::kCaching, Problem::kMts}) {
    CHECK(parse_problem(problem_name(p)) == p);
    for (Adversary a : {Adversary::kPrimary, Adversary::kRandomValid}) {
      CHECK(parse_adversary(p, adversary_name(p, a)) == a);
    }
  }
  CHECK(std::string(adversary_name(Problem::kCaching, Adversary::kPrimary)) == "anti_belady");
  CHECK_THROWS_AS(parse_problem("knapsack"), Error);
  CHECK_THROWS_AS(parse_adversary(Problem::kMts, "greedy_harm"), Error);
  CHECK(objective_of(Problem::kMatching) == Objective::kMaximize);
  CHECK(objective_of(Problem::kMts) == Objective::kMinimize);
}

TEST_CASE("ratio conventions") {
  CHECK(ratio_of(0, 0) == 1.0);
  CHECK(std::isinf(ratio_of(1, 0)));
  CHECK(ratio_of(3, 2) == 1.5);
}

TEST_CASE("estimate statistics") {
  const Estimate e = estimate({1.0, 2.0, 3.0});
  CHECK(e.trials == 3);
  CHECK(e.mean == 2.0);
  REQUIRE(e.std_error);
  CHECK(*e.std_error == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(e.ci_low == doctest::Approx(2.0 - 2.576 / std::sqrt(3.0)));
  CHECK(e.ci_high == doctest::Approx(2.0 + 2.576 / std::sqrt(3.0)));

  const Estimate single = estimate({0.7});
  CHECK_FALSE(single.std_error.has_value());
  CHECK(single.mean == 0.7);

  const Estimate constant = estimate(std::vector<double>(1000, 0.1));
  CHECK(constant.mean == 0.1);
  CHECK(*constant.std_error == 0.0);

  try {
    estimate({});
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::kEmptySample);
  }
}

TEST_CASE("bound comparisons") {
  Estimate e;
  e.mean = 2.0;
  e.std_error = 0.1;
  auto c = compare_to_bound(e, Objective::kMinimize, 1.8, 0.0);
  CHECK(c.margin == doctest::Approx(-0.2));
  CHECK(c.pass);
  c = compare_to_bound(e, Objective::kMinimize, 1.5, 0.0);
  CHECK_FALSE(c.pass);
  c = compare_to_bound(e, Objective::kMinimize, 1.5, 0.25);
  CHECK(c.pass);
  c = compare_to_bound(e, Objective::kMinimize, std::numeric_limits<double>::infinity(), 0.0);
  CHECK(c.pass);
  e.mean = 0.5;
  e.std_error = 0.01;
  CHECK_FALSE(compare_to_bound(e, Objective::kMaximize, 0.6, 0.0).pass);
  CHECK(compare_to_bound(e, Objective::kMaximize, 0.52, 0.0).pass);
  CHECK(compare_to_bound(e, Objective::kMaximize, 0.5, 0.0).margin == 0.0);
}

TEST_CASE("seed derivation is deterministic and collision-free") {
  const TrialSeeds a = derive_seeds(1, 3, 7), b = derive_seeds(1, 3, 7);
  CHECK(a.env == b.env);
  CHECK(a.alg == b.alg);
  CHECK(a.env != a.alg);
  CHECK(derive_seeds(2, 3, 7).env != a.env);
  CHECK(derive_seeds(1, 4, 7).env != a.env);
  CHECK(derive_seeds(1, 3, 8).env != a.env);
  CHECK_NOTHROW(check_seed_collisions(1, 25, 10000));
}

TEST_CASE("grid parsing") {
  auto g = parse_grid("0:1:0.25");
  REQUIRE(g.size() == 5);
  CHECK(g[1] == Probability::from_fraction(1, 4));
  CHECK(g[4].is_one());
  g = parse_grid("0:1:0.1");
  CHECK(g.size() == 11);
  CHECK(g[3] == Probability::from_fraction(3, 10));
  g = parse_grid("0.5,0.25,0.5");
  REQUIRE(g.size() == 2);
  CHECK(g[0] == Probability::from_fraction(1, 4));
  CHECK(parse_grid("0.3").size() == 1);
  CHECK_THROWS_AS(parse_grid("0:1:0"), Error);
  CHECK_THROWS_AS(parse_grid("0:1.5:0.5"), Error);
  CHECK_THROWS_AS(parse_grid("abc"), Error);
  CHECK_THROWS_AS(parse_grid(""), Error);
  const auto grid = make_grid(parse_grid("0,1"), parse_grid("0,0.5,1"));
  REQUIRE(grid.size() == 6);
  CHECK(grid[1].beta.is_zero());
  CHECK(grid[1].tau == Probability::from_fraction(1, 2));
  CHECK(grid[5].index == 5);
}

TEST_CASE("serial and parallel kernels agree") {
  const auto experiments = {
      build(Problem::kMatching, "random_perfect", {{"n", "40"}}),
      build(Problem::kCaching, "zipf", {{"k", "4"}, {"pages", "12"}, {"length", "200"}}),
      build(Problem::kMts, "random", {{"n", "4"}, {"m", "60"}}),
  };
  for (const auto& e : experiments) {
    const OagConfig config = OagConfig::from_decimal(0.3, 0.6);
    const auto serial = run_point_serial(*e, config, 2, 300, 17);
    const auto parallel = run_point_parallel(*e, config, 2, 300, 17, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t i = 0; i < serial.size(); ++i) {
      CHECK(serial[i].trial == i);
      CHECK(parallel[i].alg == serial[i].alg);
      CHECK(parallel[i].seeds.env == serial[i].seeds.env);
      CHECK(parallel[i].good_steps == serial[i].good_steps);
    }
  }
}

TEST_CASE("full trust in the good guide is optimal for matching") {
  const auto e = build(Problem::kMatching, "random_perfect", {{"n", "60"}});
  const auto records = run_point_serial(*e, OagConfig::from_decimal(0.0, 1.0), 0, 200, 3);
  for (const auto& r : records) {
    CHECK(r.ratio == 1.0);
    CHECK(r.bad_steps == 0);
  }
}

TEST_CASE("audited trials report no violations") {
  ExperimentOptions options;
  options.audit = true;
  const auto caching = build(Problem::kCaching, "cyclic", {{"k", "5"}, {"rounds", "20"}}, options);
  const auto mts = build(Problem::kMts, "elevator", {{"n", "5"}, {"rounds", "10"}}, options);
  for (const auto* e : {caching.get(), mts.get()}) {
    for (const auto& r : run_point_serial(*e, OagConfig::from_decimal(0.5, 0.5), 0, 50, 9)) {
      CHECK(r.violations == 0);
    }
  }
}

TEST_CASE("experiment construction errors") {
  CHECK_THROWS_AS(build(Problem::kMatching, "no_such_generator", {}), Error);
  CHECK_THROWS_AS(build(Problem::kCaching, "cyclic", {{"k", "3"}, {"colour", "red"}}), Error);
  CHECK_THROWS_AS(build(Problem::kCaching, "cyclic", {{"k", "x"}}), Error);
  try {
    build_experiment(Problem::kMts, "", {}, "/nonexistent/instance.txt", {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIo);
  }
}

TEST_CASE("bound lookups") {
  CHECK(bound_value(Problem::kMatching, 0.0, 1.0, 0) == 1.0);
  CHECK(bound_value(Problem::kMts, 1.0, 1.0, 5) == 10.0);
  CHECK_FALSE(bound_value_exact(Problem::kMatching, 0, 1, 0).has_value());
  CHECK(*bound_value_exact(Problem::kCaching, 1, 1, 10) == 10);
  const auto e = build(Problem::kCaching, "cyclic", {{"k", "10"}, {"rounds", "2"}});
  CHECK(e->bound_parameter() == 10);
  CHECK(e->additive_constant() == 10.0);
  CHECK(e->bound(0.0, 1.0) == 2.0);
}

TEST_CASE("csv output is deterministic") {
  const auto e = build(Problem::kMts, "random", {{"n", "3"}, {"m", "20"}});
  const auto render = [&] {
    const auto records = run_point_parallel(*e, OagConfig::from_decimal(0.5, 0.5), 0, 50, 4, 2);
    std::ostringstream out;
    write_records_csv(out, Problem::kMts, records, {"note"});
    std::vector<EstimateRow> rows;
    for (const auto& est : estimate_grid(records)) {
      rows.push_back({est, compare_to_bound(est, Objective::kMinimize, 4.0, 0.0)});
    }
    write_estimates_csv(out, Problem::kMts, rows);
    return out.str();
  };
  const std::string a = render();
  CHECK(a == render());
  CHECK(a.rfind("# note\nproblem,beta,tau,trial,alg,opt,ratio", 0) == 0);
}

TEST_CASE("formatting") {
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(1.0 / 3.0) == "0.333333333");
}

TEST_CASE("svg plot renders") {
  const auto e = build(Problem::kMatching, "upper_triangular", {{"n", "10"}});
  std::vector<TrialRecord> records;
  std::size_t index = 0;
  for (const auto& p : make_grid(parse_grid("0,1"), parse_grid("0,1"))) {
    auto r = run_point_serial(*e, OagConfig(p.beta, p.tau), index++, 20, 1);
    records.insert(records.end(), r.begin(), r.end());
  }
  std::vector<EstimateRow> rows;
  for (const auto& est : estimate_grid(records)) {
    rows.push_back({est, compare_to_bound(est, Objective::kMaximize,
                                          e->bound(est.beta.value(), est.tau.value()), 0.0)});
  }
  REQUIRE(rows.size() == 4);
  std::ostringstream out;
  write_svg_plot(out, Problem::kMatching, 0, rows);
  CHECK(out.str().find("<svg") != std::string::npos);
  CHECK(out.str().find("</svg>") != std::string::npos);
}
