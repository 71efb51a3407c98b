#include "oag/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oag/dtb.hpp"
#include "oag/exact.hpp"

namespace oag {

const char* problem_name(Problem problem) {
  switch (problem) {
    case Problem::kMatching: return "matching";
    case Problem::kCaching: return "caching";
    case Problem::kMts: return "mts";
  }
  return "?";
}

Problem parse_problem(const std::string& name) {
  if (name == "matching") return Problem::kMatching;
  if (name == "caching") return Problem::kCaching;
  if (name == "mts") return Problem::kMts;
  throw Error(ErrorCode::kInvalidParam, "unknown problem '" + name + "'");
}

Objective objective_of(Problem problem) {
  return problem == Problem::kMatching ? Objective::kMaximize : Objective::kMinimize;
}

const char* adversary_name(Problem problem, Adversary adversary) {
  if (adversary == Adversary::kRandomValid) return "random_valid";
  switch (problem) {
    case Problem::kMatching: return "greedy_harm";
    case Problem::kCaching: return "anti_belady";
    case Problem::kMts: return "nearest_saturation";
  }
  return "?";
}

Adversary parse_adversary(Problem problem, const std::string& name) {
  if (name == "random_valid") return Adversary::kRandomValid;
  if (name == adversary_name(problem, Adversary::kPrimary)) return Adversary::kPrimary;
  throw Error(ErrorCode::kInvalidParam,
              "unknown adversary '" + name + "' for " + problem_name(problem) + " (use " +
                  adversary_name(problem, Adversary::kPrimary) + " or random_valid)");
}

double bound_value(Problem problem, double beta, double tau, int parameter) {
  switch (problem) {
    case Problem::kMatching: return matching::bound_matching(beta, tau);
    case Problem::kCaching: return caching::bound_caching(beta, tau, parameter);
    case Problem::kMts: return mts::bound_mts(beta, tau, parameter);
  }
  return 0.0;
}

std::optional<mpq_class> bound_value_exact(Problem problem, const mpq_class& beta,
                                           const mpq_class& tau, int parameter) {
  switch (problem) {
    case Problem::kMatching: return std::nullopt;
    case Problem::kCaching: return caching::bound_caching_exact(beta, tau, parameter);
    case Problem::kMts: return mts::bound_mts_exact(beta, tau, parameter);
  }
  return std::nullopt;
}

double Experiment::bound(double beta, double tau) const {
  return bound_value(problem(), beta, tau, bound_parameter());
}

namespace {

template <typename T>
std::vector<std::int64_t> widen(const std::vector<T>& answers) {
  return std::vector<std::int64_t>(answers.begin(), answers.end());
}

mpq_class from_scaled(std::int64_t value, std::int64_t scale) {
  mpq_class q(mpz_class(static_cast<long>(value)), mpz_class(static_cast<long>(scale)));
  q.canonicalize();
  return q;
}

class MatchingExperiment final : public Experiment {
 public:
  MatchingExperiment(matching::BipartiteInstance instance, const ExperimentOptions& options)
      : instance_((instance.validate(), std::move(instance))),
        m_star_(matching::max_matching(instance_)),
        opt_(m_star_.size),
        options_(options),
        good_(instance_, m_star_),
        harm_(instance_, m_star_),
        random_(options.guide_salt) {}

  Problem problem() const override { return Problem::kMatching; }
  const mpq_class& opt() const override { return opt_; }
  int bound_parameter() const override { return 0; }
  double additive_constant() const override { return 0.0; }

  TrialOutcome run_trial(const OagConfig& config, std::uint64_t env_seed,
                         std::uint64_t alg_seed) const override {
    RngStreams streams = RngStreams::from_seeds(env_seed, alg_seed);
    const auto run = guided(config, streams.environment, streams.algorithm);
    TrialOutcome out;
    out.alg = static_cast<long>(matching::evaluate(instance_, run.answers));
    out.good_steps = run.good_steps;
    out.bad_steps = run.bad_steps;
    if (options_.audit && !matching::is_maximal(instance_, run.answers)) out.violations = 1;
    return out;
  }

  ExactResult exact_value(const OagConfig& config, std::uint64_t budget) const override {
    return exact_expectation(
               [&](RandomSource& source) {
                 const auto run = guided(config, source, source);
                 return mpq_class(static_cast<long>(matching::evaluate(instance_, run.answers)));
               },
               budget);
  }

  std::vector<std::int64_t> base_answers(std::uint64_t alg_seed) const override {
    matching::Ranking ranking(instance_);
    RandomStream alg(alg_seed);
    return widen(run_online(ranking, alg).answers);
  }

  std::vector<std::int64_t> dtb_answers(const OagConfig& config, std::uint64_t env_seed,
                                        std::uint64_t alg_seed) const override {
    RngStreams streams = RngStreams::from_seeds(env_seed, alg_seed);
    return widen(guided(config, streams.environment, streams.algorithm).answers);
  }

 private:
  GuidedRun<matching::Vertex> guided(const OagConfig& config, RandomSource& env,
                                     RandomSource& alg) const {
    auto algo = dtb_transform(matching::Ranking(instance_), config.tau);
    if (options_.adversary == Adversary::kPrimary) {
      return run_oag(algo, good_, harm_, config, env, alg);
    }
    return run_oag(algo, good_, random_, config, env, alg);
  }

  matching::BipartiteInstance instance_;
  matching::OptimalMatching m_star_;
  mpq_class opt_;
  ExperimentOptions options_;
  matching::OptimalGuide good_;
  matching::GreedyHarmGuide harm_;
  HashedUniformGuide<matching::Vertex> random_;
};

class CachingExperiment final : public Experiment {
 public:
  CachingExperiment(caching::CacheTrace trace, const ExperimentOptions& options)
      : prepared_(std::move(trace)),
        opt_(static_cast<long>(caching::belady_opt(prepared_.trace()))),
        options_(options),
        good_(prepared_),
        harm_(prepared_),
        random_(options.guide_salt) {}

  Problem problem() const override { return Problem::kCaching; }
  const mpq_class& opt() const override { return opt_; }
  int bound_parameter() const override { return prepared_.k(); }
  double additive_constant() const override { return prepared_.k(); }

  TrialOutcome run_trial(const OagConfig& config, std::uint64_t env_seed,
                         std::uint64_t alg_seed) const override {
    RngStreams streams = RngStreams::from_seeds(env_seed, alg_seed);
    TrialOutcome out;
    const auto run = guided(config, streams.environment, streams.algorithm, &out.violations);
    out.alg = static_cast<long>(caching::evaluate(prepared_.trace(), run.answers));
    out.good_steps = run.good_steps;
    out.bad_steps = run.bad_steps;
    return out;
  }

  ExactResult exact_value(const OagConfig& config, std::uint64_t budget) const override {
    return exact_expectation(
               [&](RandomSource& source) {
                 const auto run = guided(config, source, source, nullptr);
                 return mpq_class(
                     static_cast<long>(caching::evaluate(prepared_.trace(), run.answers)));
               },
               budget);
  }

  std::vector<std::int64_t> base_answers(std::uint64_t alg_seed) const override {
    caching::RandomMark marking(prepared_);
    RandomStream alg(alg_seed);
    return widen(run_online(marking, alg).answers);
  }

  std::vector<std::int64_t> dtb_answers(const OagConfig& config, std::uint64_t env_seed,
                                        std::uint64_t alg_seed) const override {
    RngStreams streams = RngStreams::from_seeds(env_seed, alg_seed);
    return widen(guided(config, streams.environment, streams.algorithm, nullptr).answers);
  }

 private:
  GuidedRun<caching::Page> guided(const OagConfig& config, RandomSource& env, RandomSource& alg,
                                  std::size_t* violations) const {
    auto algo = dtb_transform(caching::RandomMark(prepared_), config.tau);
    auto observe = [&](const auto& a, std::size_t) {
      if (violations && options_.audit && !a.base().invariants_hold()) ++*violations;
    };
    if (options_.adversary == Adversary::kPrimary) {
      return run_oag(algo, good_, harm_, config, env, alg, false, observe);
    }
    return run_oag(algo, good_, random_, config, env, alg, false, observe);
  }

  caching::PreparedTrace prepared_;
  mpq_class opt_;
  ExperimentOptions options_;
  caching::FarthestInFutureGuide good_;
  caching::SoonestRequestGuide harm_;
  HashedUniformGuide<caching::Page> random_;
};

class MtsExperiment final : public Experiment {
 public:
  MtsExperiment(mts::UniformMTSInstance instance, const ExperimentOptions& options)
      : instance_((instance.validate(), std::move(instance))),
        schedule_(instance_),
        scaled_(instance_),
        opt_(mts::mts_offline_opt(instance_)),
        options_(options),
        good_(schedule_),
        harm_(schedule_),
        random_(options.guide_salt) {}

  Problem problem() const override { return Problem::kMts; }
  const mpq_class& opt() const override { return opt_; }
  int bound_parameter() const override { return instance_.n; }
  double additive_constant() const override { return 2.0; }

  TrialOutcome run_trial(const OagConfig& config, std::uint64_t env_seed,
                         std::uint64_t alg_seed) const override {
    RngStreams streams = RngStreams::from_seeds(env_seed, alg_seed);
    const auto run = guided(config, streams.environment, streams.algorithm);
    TrialOutcome out;
    out.alg = value(run.answers);
    out.good_steps = run.good_steps;
    out.bad_steps = run.bad_steps;
    if (options_.audit) out.violations = audit_violations(run.answers);
    return out;
  }

  ExactResult exact_value(const OagConfig& config, std::uint64_t budget) const override {
    return exact_expectation(
               [&](RandomSource& source) { return value(guided(config, source, source).answers); },
               budget);
  }

  std::vector<std::int64_t> base_answers(std::uint64_t alg_seed) const override {
    mts::SaturationWalk walk(schedule_);
    RandomStream alg(alg_seed);
    return widen(run_online(walk, alg).answers);
  }

  std::vector<std::int64_t> dtb_answers(const OagConfig& config, std::uint64_t env_seed,
                                        std::uint64_t alg_seed) const override {
    RngStreams streams = RngStreams::from_seeds(env_seed, alg_seed);
    return widen(guided(config, streams.environment, streams.algorithm).answers);
  }

 private:
  GuidedRun<mts::State> guided(const OagConfig& config, RandomSource& env,
                               RandomSource& alg) const {
    auto algo = dtb_transform(mts::SaturationWalk(schedule_), config.tau);
    if (options_.adversary == Adversary::kPrimary) {
      return run_oag(algo, good_, harm_, config, env, alg);
    }
    return run_oag(algo, good_, random_, config, env, alg);
  }

  mpq_class value(const std::vector<mts::State>& answers) const {
    if (scaled_.available()) return from_scaled(scaled_.cost(answers), scaled_.scale());
    return mts::evaluate(instance_, answers);
  }

  std::size_t audit_violations(const std::vector<mts::State>& answers) const {
    std::size_t bad = 0;
    for (const mts::PhaseAudit& a : mts::audit_phases(schedule_, answers)) {
      if (a.transitions > instance_.n - 1) ++bad;
      if (a.closing_processing > 1) ++bad;
      for (const mpq_class& paid : a.resident_processing) {
        if (paid > 1) ++bad;
      }
    }
    return bad;
  }

  mts::UniformMTSInstance instance_;
  mts::SaturationSchedule schedule_;
  mts::ScaledCosts scaled_;
  mpq_class opt_;
  ExperimentOptions options_;
  mts::LatestSaturationGuide good_;
  mts::EarliestSaturationGuide harm_;
  HashedUniformGuide<mts::State> random_;
};

}  // namespace

std::unique_ptr<Experiment> make_matching_experiment(matching::BipartiteInstance instance,
                                                     const ExperimentOptions& options) {
  return std::make_unique<MatchingExperiment>(std::move(instance), options);
}

std::unique_ptr<Experiment> make_caching_experiment(caching::CacheTrace trace,
                                                    const ExperimentOptions& options) {
  return std::make_unique<CachingExperiment>(std::move(trace), options);
}

std::unique_ptr<Experiment> make_mts_experiment(mts::UniformMTSInstance instance,
                                                const ExperimentOptions& options) {
  return std::make_unique<MtsExperiment>(std::move(instance), options);
}

// ---- generators ----

namespace {

class ParamReader {
 public:
  ParamReader(const std::string& generator, const GeneratorParams& params)
      : generator_(generator), params_(params) {}

  long long get_int(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    const std::string* text = lookup(key);
    if (!text) return require(key, fallback);
    std::size_t used = 0;
    long long value = 0;
    try {
      value = std::stoll(*text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text->size()) bad(key, *text);
    return value;
  }

  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback) {
    const std::string* text = lookup(key);
    if (!text) return fallback.value_or(0);
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
      if (!text->empty() && text->front() != '-') value = std::stoull(*text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text->size()) bad(key, *text);
    return value;
  }

  double get_double(const std::string& key, std::optional<double> fallback) {
    const std::string* text = lookup(key);
    if (!text) return require(key, fallback);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(*text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text->size() || !std::isfinite(value)) bad(key, *text);
    return value;
  }

  int get_small(const std::string& key, std::optional<long long> fallback = std::nullopt) {
    const long long v = get_int(key, fallback);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      bad(key, std::to_string(v));
    }
    return static_cast<int>(v);
  }

  void finish() const {
    for (const auto& [key, value] : params_) {
      if (!used_.count(key)) {
        throw Error(ErrorCode::kInvalidParam,
                    "generator '" + generator_ + "' has no parameter '" + key + "'");
      }
    }
  }

 private:
  const std::string* lookup(const std::string& key) {
    used_.insert(key);
    auto it = params_.find(key);
    return it == params_.end() ? nullptr : &it->second;
  }

  template <typename T>
  T require(const std::string& key, std::optional<T> fallback) const {
    if (!fallback) {
      throw Error(ErrorCode::kInvalidParam,
                  "generator '" + generator_ + "' needs parameter '" + key + "'");
    }
    return *fallback;
  }

  [[noreturn]] void bad(const std::string& key, const std::string& text) const {
    throw Error(ErrorCode::kInvalidParam, "bad value '" + text + "' for " + key);
  }

  std::string generator_;
  const GeneratorParams& params_;
  std::set<std::string> used_;
};

template <typename Reader>
auto read_file(const std::string& path, Reader reader) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open instance file '" + path + "'");
  try {
    return reader(in);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw Error(ErrorCode::kParse, path + ": " + e.what());
    throw;
  }
}

}  // namespace

std::unique_ptr<Experiment> build_experiment(Problem problem, const std::string& generator,
                                             const GeneratorParams& params,
                                             const std::string& instance_path,
                                             const ExperimentOptions& options) {
  if (!instance_path.empty()) {
    if (!generator.empty()) {
      throw Error(ErrorCode::kInvalidParam, "give either --generator or --instance, not both");
    }
    switch (problem) {
      case Problem::kMatching:
        return make_matching_experiment(
            read_file(instance_path, [](std::istream& in) { return matching::read_instance(in); }),
            options);
      case Problem::kCaching:
        return make_caching_experiment(
            read_file(instance_path, [](std::istream& in) { return caching::read_trace(in); }),
            options);
      case Problem::kMts:
        return make_mts_experiment(
            read_file(instance_path, [](std::istream& in) { return mts::read_mts(in); }), options);
    }
  }
  if (generator.empty()) throw Error(ErrorCode::kInvalidParam, "no generator or instance given");
  ParamReader p(generator, params);
  auto wrong = [&] {
    return Error(ErrorCode::kInvalidParam, "generator '" + generator + "' does not make " +
                                               problem_name(problem) + " instances");
  };
  if (generator == "upper_triangular" || generator == "random_perfect") {
    if (problem != Problem::kMatching) throw wrong();
    matching::BipartiteInstance g;
    if (generator == "upper_triangular") {
      const int n = p.get_small("n");
      p.finish();
      g = matching::gen_upper_triangular(n);
    } else {
      const int n = p.get_small("n");
      const double prob = p.get_double("p", 0.1);
      const std::uint64_t seed = p.get_u64("seed", 1);
      p.finish();
      g = matching::gen_random_perfect(n, prob, seed);
    }
    return make_matching_experiment(std::move(g), options);
  }
  if (generator == "cyclic" || generator == "zipf") {
    if (problem != Problem::kCaching) throw wrong();
    caching::CacheTrace trace;
    if (generator == "cyclic") {
      const int k = p.get_small("k");
      const int rounds = p.get_small("rounds");
      const bool warm = p.get_int("warm", 1) != 0;
      p.finish();
      trace = caching::gen_cyclic(k, rounds, warm);
    } else {
      const int k = p.get_small("k");
      const int pages = p.get_small("pages");
      const int length = p.get_small("length");
      const double exponent = p.get_double("exponent", 1.0);
      const std::uint64_t seed = p.get_u64("seed", 1);
      const bool warm = p.get_int("warm", 1) != 0;
      p.finish();
      trace = caching::gen_zipf(k, pages, length, exponent, seed, warm);
    }
    return make_caching_experiment(std::move(trace), options);
  }
  if (generator == "random" || generator == "elevator") {
    if (problem != Problem::kMts) throw wrong();
    mts::UniformMTSInstance instance;
    if (generator == "random") {
      const int n = p.get_small("n");
      const int m = p.get_small("m");
      const int q = p.get_small("q", 4);
      const std::uint64_t seed = p.get_u64("seed", 1);
      p.finish();
      instance = mts::gen_mts_random(n, m, q, seed);
    } else {
      const int n = p.get_small("n");
      const int rounds = p.get_small("rounds");
      p.finish();
      instance = mts::gen_mts_elevator(n, rounds);
    }
    return make_mts_experiment(std::move(instance), options);
  }
  throw Error(ErrorCode::kInvalidParam, "unknown generator '" + generator + "'");
}

// ---- trials ----

TrialSeeds derive_seeds(std::uint64_t master, std::size_t grid_index, std::size_t trial) {
  std::uint64_t h = splitmix64(master ^ splitmix64(grid_index + 0x632BE59BD9B4E019ULL));
  h = splitmix64(h ^ splitmix64(trial * 0x9E3779B97F4A7C15ULL + 0xD1B54A32D192ED03ULL));
  return {splitmix64(h ^ 0xA0761D6478BD642FULL), splitmix64(h ^ 0xE7037ED1A0B428DBULL)};
}

double ratio_of(const mpq_class& alg, const mpq_class& opt) {
  if (sgn(opt) == 0) return sgn(alg) == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return mpq_class(alg / opt).get_d();
}

namespace {

TrialRecord make_record(const Experiment& experiment, const OagConfig& config,
                        std::size_t grid_index, std::size_t trial, std::uint64_t master) {
  TrialRecord r;
  r.grid_index = grid_index;
  r.beta = config.beta;
  r.tau = config.tau;
  r.trial = trial;
  r.seeds = derive_seeds(master, grid_index, trial);
  TrialOutcome out = experiment.run_trial(config, r.seeds.env, r.seeds.alg);
  r.alg = std::move(out.alg);
  r.opt = experiment.opt();
  r.ratio = ratio_of(r.alg, r.opt);
  r.good_steps = out.good_steps;
  r.bad_steps = out.bad_steps;
  r.violations = out.violations;
  return r;
}

}  // namespace

std::vector<TrialRecord> run_point_serial(const Experiment& experiment, const OagConfig& config,
                                          std::size_t grid_index, std::size_t trials,
                                          std::uint64_t master_seed) {
  std::vector<TrialRecord> records;
  records.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    records.push_back(make_record(experiment, config, grid_index, t, master_seed));
  }
  return records;
}

std::vector<TrialRecord> run_point_parallel(const Experiment& experiment,
                                            const OagConfig& config, std::size_t grid_index,
                                            std::size_t trials, std::uint64_t master_seed,
                                            int threads) {
  std::vector<TrialRecord> records(trials);
  std::exception_ptr failure;
  const auto count = static_cast<long long>(trials);
#ifdef _OPENMP
  const int workers = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 64) num_threads(workers)
#else
  (void)threads;
#endif
  for (long long t = 0; t < count; ++t) {
    try {
      records[t] = make_record(experiment, config, grid_index, static_cast<std::size_t>(t),
                               master_seed);
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(oag_trial_failure)
#endif
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::vector<GridPoint> make_grid(const std::vector<Probability>& betas,
                                 const std::vector<Probability>& taus) {
  std::vector<GridPoint> grid;
  for (const Probability& b : betas) {
    for (const Probability& t : taus) grid.push_back({grid.size(), b, t});
  }
  return grid;
}

void check_seed_collisions(std::uint64_t master, std::size_t grid_points, std::size_t trials) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(grid_points * trials);
  for (std::size_t g = 0; g < grid_points; ++g) {
    for (std::size_t t = 0; t < trials; ++t) {
      if (!seen.insert(derive_seeds(master, g, t).env).second) {
        throw std::logic_error("environment seed collision at grid point " + std::to_string(g) +
                               ", trial " + std::to_string(t));
      }
    }
  }
}

namespace {

double parse_number(const std::string& text, const std::string& spec) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(value)) {
    throw Error(ErrorCode::kInvalidParam, "bad number '" + text + "' in grid '" + spec + "'");
  }
  return value;
}

}  // namespace

std::vector<Probability> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream ss(spec);
  const char sep = spec.find(':') != std::string::npos ? ':' : ',';
  while (std::getline(ss, part, sep)) parts.push_back(part);
  std::vector<Probability> values;
  if (sep == ',' || parts.size() == 1) {
    for (const std::string& p : parts) values.push_back(Probability::from_decimal(parse_number(p, spec)));
  } else {
    if (parts.size() != 3) throw Error(ErrorCode::kInvalidParam, "grid must be a:b:step, got '" + spec + "'");
    const double a = parse_number(parts[0], spec);
    const double b = parse_number(parts[1], spec);
    const double step = parse_number(parts[2], spec);
    if (!(step > 0.0) || a > b) {
      throw Error(ErrorCode::kInvalidParam, "grid '" + spec + "' needs a <= b and step > 0");
    }
    const auto count = static_cast<long long>(std::floor((b - a) / step + 1e-9)) + 1;
    for (long long i = 0; i < count; ++i) {
      values.push_back(Probability::from_decimal(std::min(b, a + static_cast<double>(i) * step)));
    }
  }
  if (values.empty()) throw Error(ErrorCode::kInvalidParam, "empty grid '" + spec + "'");
  std::sort(values.begin(), values.end(),
            [](const Probability& x, const Probability& y) { return x.value() < y.value(); });
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

// ---- statistics ----

Estimate estimate(const std::vector<double>& ratios) {
  if (ratios.empty()) throw Error(ErrorCode::kEmptySample, "no trials to estimate from");
  Estimate e;
  e.trials = ratios.size();
  double sum = 0.0;
  for (double r : ratios) sum += r;
  e.mean = sum / static_cast<double>(ratios.size());
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  if (*lo == *hi) {
    // A constant sample: report it exactly rather than with rounding noise.
    e.mean = *lo;
    if (ratios.size() >= 2) e.std_error = 0.0;
  } else if (ratios.size() >= 2) {
    double ss = 0.0;
    for (double r : ratios) ss += (r - e.mean) * (r - e.mean);
    const double var = ss / static_cast<double>(ratios.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(ratios.size()));
  }
  const double half = 2.576 * e.std_error.value_or(0.0);
  e.ci_low = e.mean - half;
  e.ci_high = e.mean + half;
  return e;
}

std::vector<Estimate> estimate_grid(const std::vector<TrialRecord>& records) {
  std::map<std::size_t, std::vector<double>> ratios;
  std::map<std::size_t, std::pair<Probability, Probability>> points;
  for (const TrialRecord& r : records) {
    ratios[r.grid_index].push_back(r.ratio);
    points.emplace(r.grid_index, std::make_pair(r.beta, r.tau));
  }
  std::vector<Estimate> out;
  for (const auto& [index, values] : ratios) {
    Estimate e = estimate(values);
    e.grid_index = index;
    e.beta = points[index].first;
    e.tau = points[index].second;
    out.push_back(e);
  }
  return out;
}

BoundCheck compare_to_bound(const Estimate& estimate, Objective objective, double bound,
                            double slack) {
  BoundCheck c;
  c.bound = bound;
  c.slack = objective == Objective::kMinimize ? slack : 0.0;
  if (std::isinf(bound)) {
    c.margin = std::numeric_limits<double>::infinity();
    c.pass = true;
    return c;
  }
  const double allowance = 3.0 * estimate.std_error.value_or(0.0);
  if (objective == Objective::kMinimize) {
    c.margin = bound + c.slack - estimate.mean;
  } else {
    c.margin = estimate.mean - bound;
  }
  c.pass = c.margin + allowance >= 0.0;
  return c;
}

// ---- output ----

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

namespace {

void write_comments(std::ostream& out, const std::vector<std::string>& comments) {
  for (const std::string& c : comments) out << "# " << c << '\n';
}

}  // namespace

void write_records_csv(std::ostream& out, Problem problem,
                       const std::vector<TrialRecord>& records,
                       const std::vector<std::string>& header_comments) {
  write_comments(out, header_comments);
  out << "problem,beta,tau,trial,alg,opt,ratio,good_steps,bad_steps,alg_exact,opt_exact,"
         "env_seed,alg_seed\n";
  for (const TrialRecord& r : records) {
    out << problem_name(problem) << ',' << format_double(r.beta.value()) << ','
        << format_double(r.tau.value()) << ',' << r.trial << ',' << format_double(r.alg.get_d())
        << ',' << format_double(r.opt.get_d()) << ',' << format_double(r.ratio) << ','
        << r.good_steps << ',' << r.bad_steps << ',' << r.alg.get_str() << ','
        << r.opt.get_str() << ',' << r.seeds.env << ',' << r.seeds.alg << '\n';
  }
}

void write_estimates_csv(std::ostream& out, Problem problem, const std::vector<EstimateRow>& rows,
                         const std::vector<std::string>& header_comments) {
  write_comments(out, header_comments);
  out << "problem,beta,tau,trials,mean_ratio,stderr,ci_low,ci_high,bound,margin,pass\n";
  for (const EstimateRow& row : rows) {
    const Estimate& e = row.estimate;
    out << problem_name(problem) << ',' << format_double(e.beta.value()) << ','
        << format_double(e.tau.value()) << ',' << e.trials << ',' << format_double(e.mean) << ','
        << (e.std_error ? format_double(*e.std_error) : "") << ',' << format_double(e.ci_low)
        << ',' << format_double(e.ci_high) << ',' << format_double(row.check.bound) << ','
        << format_double(row.check.margin) << ',' << (row.check.pass ? "true" : "false") << '\n';
  }
}

void write_svg_plot(std::ostream& out, Problem problem, int bound_parameter,
                    const std::vector<EstimateRow>& rows) {
  constexpr double kWidth = 720, kHeight = 480, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  static const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                        "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::vector<double> taus;
  for (const EstimateRow& r : rows) taus.push_back(r.estimate.tau.value());
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto widen_range = [&](double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  };
  for (const EstimateRow& r : rows) {
    widen_range(r.estimate.ci_low);
    widen_range(r.estimate.ci_high);
    widen_range(r.check.bound);
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double beta) { return kLeft + beta * plot_w; };
  auto py = [&](double y) { return kTop + (hi - std::clamp(y, lo, hi)) / (hi - lo) * plot_h; };
  auto num = [](double v) { return format_double(std::round(v * 100.0) / 100.0); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"14\">" << problem_name(problem)
      << ": mean ratio (99% CI) vs bound</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
      << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double b = i / 4.0;
    out << "<text x=\"" << num(px(b)) << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\">" << format_double(b) << "</text>\n";
    const double y = lo + (hi - lo) * i / 4.0;
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(py(y) + 4)
        << "\" text-anchor=\"end\">" << format_double(std::round(y * 1000.0) / 1000.0)
        << "</text>\n";
  }
  out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">beta</text>\n";

  for (std::size_t s = 0; s < taus.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
    const double tau = taus[s];
    // Bound curve, broken where it is infinite.
    std::string path;
    bool pen_down = false;
    for (int i = 0; i <= 100; ++i) {
      const double b = i / 100.0;
      const double v = bound_value(problem, b, tau, bound_parameter);
      if (!std::isfinite(v)) {
        pen_down = false;
        continue;
      }
      path += (pen_down ? " L" : " M") + num(px(b)) + ' ' + num(py(v));
      pen_down = true;
    }
    if (!path.empty()) {
      out << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << color
          << "\" stroke-dasharray=\"5,3\"/>\n";
    }
    for (const EstimateRow& r : rows) {
      if (r.estimate.tau.value() != tau) continue;
      const double x = px(r.estimate.beta.value());
      out << "<line x1=\"" << num(x) << "\" x2=\"" << num(x) << "\" y1=\""
          << num(py(r.estimate.ci_low)) << "\" y2=\"" << num(py(r.estimate.ci_high))
          << "\" stroke=\"" << color << "\"/>\n";
      out << "<circle cx=\"" << num(x) << "\" cy=\"" << num(py(r.estimate.mean))
          << "\" r=\"3\" fill=\"" << (r.check.pass ? color : "black") << "\"/>\n";
    }
    const double ly = kTop + 14 + 18.0 * static_cast<double>(s);
    out << "<line x1=\"" << kWidth - kRight + 12 << "\" x2=\"" << kWidth - kRight + 32
        << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-dasharray=\"5,3\"/>\n";
    out << "<text x=\"" << kWidth - kRight + 38 << "\" y=\"" << ly << "\">tau="
        << format_double(tau) << "</text>\n";
  }
  out << "</svg>\n";
}

// ---- oracle suite ----

namespace {

caching::CacheTrace tiny_trace() {
  caching::CacheTrace trace;
  trace.k = 2;
  trace.initial_cache = {1, 2};
  trace.requests = {1, 2, 3, 1, 2, 3, 1, 2};
  return trace;
}

mts::UniformMTSInstance tiny_mts() {
  mts::UniformMTSInstance instance;
  instance.n = 2;
  instance.start_state = 0;
  const int table[5][4] = {{1, 2, 1, 4}, {1, 3, 1, 1}, {1, 4, 1, 2}, {1, 1, 1, 3}, {1, 2, 1, 2}};
  for (const auto& row : table) {
    instance.tasks.push_back({mpq_class(row[0], row[1]), mpq_class(row[2], row[3])});
  }
  return instance;
}

// With two states every valid set is a singleton, so this one carries the
// uniform moves: state 0 saturates in the first step, leaving {1, 2}.
mts::UniformMTSInstance tiny_mts3() {
  mts::UniformMTSInstance instance;
  instance.n = 3;
  instance.start_state = 0;
  const char* rows[6][3] = {{"1", "1/4", "1/2"}, {"1/2", "1/2", "1/8"}, {"0", "1/2", "1/2"},
                            {"1/4", "1/4", "1/4"}, {"1", "1", "1"}, {"1/2", "0", "1/2"}};
  for (const auto& row : rows) {
    mts::Task task;
    for (const char* c : row) task.emplace_back(c);
    for (mpq_class& c : task) c.canonicalize();
    instance.tasks.push_back(std::move(task));
  }
  return instance;
}

}  // namespace

std::vector<OracleCase> tiny_suite(std::uint64_t guide_salt) {
  std::vector<OracleCase> cases;
  for (Adversary adversary : {Adversary::kPrimary, Adversary::kRandomValid}) {
    ExperimentOptions options;
    options.adversary = adversary;
    options.guide_salt = guide_salt;
    cases.push_back({std::string("matching/upper_triangular3/") +
                         adversary_name(Problem::kMatching, adversary),
                     Problem::kMatching, adversary,
                     make_matching_experiment(matching::gen_upper_triangular(3), options)});
    cases.push_back({std::string("caching/cyclic_k2_len8/") +
                         adversary_name(Problem::kCaching, adversary),
                     Problem::kCaching, adversary, make_caching_experiment(tiny_trace(), options)});
    cases.push_back({std::string("mts/two_state_m5/") + adversary_name(Problem::kMts, adversary),
                     Problem::kMts, adversary, make_mts_experiment(tiny_mts(), options)});
    cases.push_back({std::string("mts/three_state_m6/") + adversary_name(Problem::kMts, adversary),
                     Problem::kMts, adversary, make_mts_experiment(tiny_mts3(), options)});
  }
  return cases;
}

std::vector<OracleLine> run_oracle_suite(const OracleOptions& options) {
  const std::vector<OracleCase> cases = tiny_suite(splitmix64(options.master_seed));
  const int halves[] = {0, 1, 2};
  std::vector<OracleLine> lines;
  std::size_t grid_index = 0;
  for (const OracleCase& c : cases) {
    const Experiment& exp = *c.experiment;
    for (int b : halves) {
      for (int t : halves) {
        const OagConfig exact_config(Probability::from_fraction(b, 2),
                                     Probability::from_fraction(t, 2));
        OracleLine line;
        line.case_name = c.name;
        line.beta = exact_config.beta;
        line.tau = exact_config.tau;
        const ExactResult exact = exp.exact_value(exact_config, options.leaf_budget);
        const mpq_class& value = exact.expectation;
        line.leaves = exact.leaves;
        line.exact_ratio = sgn(exp.opt()) == 0 ? mpq_class(1) : mpq_class(value / exp.opt());

        const double shifted = std::clamp(exact_config.tau.value() + options.tau_shift, 0.0, 1.0);
        const OagConfig mc_config(exact_config.beta, Probability::from_decimal(shifted));
        const auto records = run_point_parallel(exp, mc_config, grid_index++, options.trials,
                                                options.master_seed, options.threads);
        std::vector<double> ratios;
        ratios.reserve(records.size());
        for (const TrialRecord& r : records) ratios.push_back(r.ratio);
        const Estimate e = estimate(ratios);
        line.mc_mean = e.mean;
        line.mc_stderr = e.std_error.value_or(0.0);
        const double exact_d = line.exact_ratio.get_d();
        const double gap = std::fabs(e.mean - exact_d);
        line.agrees = line.mc_stderr > 0.0
                          ? gap <= 3.0 * line.mc_stderr
                          : gap <= 1e-12 * std::max(1.0, std::fabs(exact_d));

        line.bound = exp.bound(exact_config.beta.value(), exact_config.tau.value());
        const auto exact_bound = bound_value_exact(c.problem, exact_config.beta.exact(),
                                                   exact_config.tau.exact(),
                                                   exp.bound_parameter());
        if (exact_bound) {
          const mpq_class slack = sgn(exp.opt()) == 0
                                      ? mpq_class(0)
                                      : mpq_class(exp.additive_constant() / exp.opt());
          line.within_bound = line.exact_ratio <= *exact_bound + slack;
        } else {
          line.within_bound = within_bound(objective_of(c.problem), exact_d, line.bound);
        }
        lines.push_back(std::move(line));
      }
    }
  }
  return lines;
}

}  // namespace oag
