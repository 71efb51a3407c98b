#pragma once

// Experiment orchestration: per-problem experiments, seeded trials run
// serially or with OpenMP, estimates, bound checks and CSV / SVG output.

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oag/caching.hpp"
#include "oag/core.hpp"
#include "oag/exact.hpp"
#include "oag/matching.hpp"
#include "oag/mts.hpp"

namespace oag {

enum class Problem { kMatching, kCaching, kMts };

const char* problem_name(Problem problem);
/// Throws kInvalidParam on an unknown name.
Problem parse_problem(const std::string& name);
Objective objective_of(Problem problem);

/// kPrimary is the problem's own adversary (greedy_harm, anti_belady,
/// nearest_saturation); kRandomValid picks a hashed member of V_t.
enum class Adversary { kPrimary, kRandomValid };

const char* adversary_name(Problem problem, Adversary adversary);
Adversary parse_adversary(Problem problem, const std::string& name);

struct TrialOutcome {
  mpq_class alg;
  std::size_t good_steps = 0;
  std::size_t bad_steps = 0;
  std::size_t violations = 0;  // structural invariant failures, when audited
};

/// One instance with its guides. run_trial is const and safe to call from
/// several threads at once.
class Experiment {
 public:
  virtual ~Experiment() = default;

  virtual Problem problem() const = 0;
  virtual const mpq_class& opt() const = 0;
  /// Size parameter of the bound: k for caching, n for MTS, unused for matching.
  virtual int bound_parameter() const = 0;
  /// Additive constant of the competitive guarantee (0 for matching).
  virtual double additive_constant() const = 0;

  virtual TrialOutcome run_trial(const OagConfig& config, std::uint64_t env_seed,
                                 std::uint64_t alg_seed) const = 0;
  /// Exact expected algorithm value over all coins and samples.
  virtual ExactResult exact_value(const OagConfig& config, std::uint64_t leaf_budget) const = 0;

  /// Answers of the unguided base algorithm, and of the compiled algorithm,
  /// widened to int64 for comparison.
  virtual std::vector<std::int64_t> base_answers(std::uint64_t alg_seed) const = 0;
  virtual std::vector<std::int64_t> dtb_answers(const OagConfig& config, std::uint64_t env_seed,
                                                std::uint64_t alg_seed) const = 0;

  double bound(double beta, double tau) const;
};

struct ExperimentOptions {
  Adversary adversary = Adversary::kPrimary;
  std::uint64_t guide_salt = 0;  // for the random_valid adversary
  bool audit = false;            // count structural invariant failures per trial
};

std::unique_ptr<Experiment> make_matching_experiment(matching::BipartiteInstance instance,
                                                     const ExperimentOptions& options);
std::unique_ptr<Experiment> make_caching_experiment(caching::CacheTrace trace,
                                                    const ExperimentOptions& options);
std::unique_ptr<Experiment> make_mts_experiment(mts::UniformMTSInstance instance,
                                                const ExperimentOptions& options);

/// Bound for any problem; `parameter` is k or n.
double bound_value(Problem problem, double beta, double tau, int parameter);
/// Exact bound for caching and MTS; nullopt for matching, whose bound is
/// irrational in general.
std::optional<mpq_class> bound_value_exact(Problem problem, const mpq_class& beta,
                                           const mpq_class& tau, int parameter);

// ---- generators and instance files ----

using GeneratorParams = std::map<std::string, std::string>;

/// Builds an experiment from a named generator (`upper_triangular`,
/// `random_perfect`, `cyclic`, `zipf`, `random`, `elevator`) or, when
/// `instance_path` is nonempty, from an instance file. Throws kInvalidParam
/// for unknown generators or parameters, kParse / kIo for bad files.
std::unique_ptr<Experiment> build_experiment(Problem problem, const std::string& generator,
                                             const GeneratorParams& params,
                                             const std::string& instance_path,
                                             const ExperimentOptions& options);

// ---- trials ----

struct TrialSeeds {
  std::uint64_t env = 0;
  std::uint64_t alg = 0;
};

TrialSeeds derive_seeds(std::uint64_t master, std::size_t grid_index, std::size_t trial);

struct TrialRecord {
  std::size_t grid_index = 0;
  Probability beta;
  Probability tau;
  std::size_t trial = 0;
  TrialSeeds seeds;
  mpq_class alg;
  mpq_class opt;
  double ratio = 0.0;
  std::size_t good_steps = 0;
  std::size_t bad_steps = 0;
  std::size_t violations = 0;
};

/// alg/opt; 1 when both are zero, +inf when only opt is.
double ratio_of(const mpq_class& alg, const mpq_class& opt);

/// Serial reference kernel: trials 0..trials-1 of one grid point.
std::vector<TrialRecord> run_point_serial(const Experiment& experiment, const OagConfig& config,
                                          std::size_t grid_index, std::size_t trials,
                                          std::uint64_t master_seed);
/// Same records, computed with an OpenMP parallel loop. `threads` <= 0 keeps
/// the runtime default.
std::vector<TrialRecord> run_point_parallel(const Experiment& experiment,
                                            const OagConfig& config, std::size_t grid_index,
                                            std::size_t trials, std::uint64_t master_seed,
                                            int threads = 0);

struct GridPoint {
  std::size_t index = 0;
  Probability beta;
  Probability tau;
};

/// Row-major over (beta, tau).
std::vector<GridPoint> make_grid(const std::vector<Probability>& betas,
                                 const std::vector<Probability>& taus);

/// Throws std::logic_error if two trials of the grid would share an
/// environment seed.
void check_seed_collisions(std::uint64_t master, std::size_t grid_points, std::size_t trials);

/// Inclusive `a:b:step` grid snapped to 1e-9 decimals, or a single value.
/// Throws kInvalidParam on malformed or out-of-range specs.
std::vector<Probability> parse_grid(const std::string& spec);

// ---- statistics ----

struct Estimate {
  std::size_t grid_index = 0;
  Probability beta;
  Probability tau;
  std::size_t trials = 0;
  double mean = 0.0;
  std::optional<double> std_error;  // missing for a single trial
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Mean, standard error (sample sd / sqrt(T)) and 99% interval
/// mean +- 2.576 stderr. Throws kEmptySample.
Estimate estimate(const std::vector<double>& ratios);
std::vector<Estimate> estimate_grid(const std::vector<TrialRecord>& records);

struct BoundCheck {
  double bound = 0.0;
  double slack = 0.0;   // additive constant over opt, costs only
  double margin = 0.0;  // distance to the bound on the good side (negative: violated)
  bool pass = false;
};

/// Minimize: mean <= bound + 3 stderr + slack. Maximize: mean >= bound - 3
/// stderr. An infinite bound always passes.
BoundCheck compare_to_bound(const Estimate& estimate, Objective objective, double bound,
                            double slack);

// ---- output ----

std::string format_double(double value);  // %.9g, `inf` for infinity

void write_records_csv(std::ostream& out, Problem problem,
                       const std::vector<TrialRecord>& records,
                       const std::vector<std::string>& header_comments = {});
struct EstimateRow {
  Estimate estimate;
  BoundCheck check;
};
void write_estimates_csv(std::ostream& out, Problem problem, const std::vector<EstimateRow>& rows,
                         const std::vector<std::string>& header_comments = {});

/// Means with 99% intervals against the bound curves, one series per tau.
void write_svg_plot(std::ostream& out, Problem problem, int bound_parameter,
                    const std::vector<EstimateRow>& rows);

// ---- oracle suite ----

struct OracleCase {
  std::string name;
  Problem problem;
  Adversary adversary;
  std::unique_ptr<Experiment> experiment;
};

/// Tiny instances whose randomness trees are fully enumerable: upper
/// triangular n=3; cyclic trace 1 2 3 1 2 3 1 2 with k=2 and cache {1,2};
/// a two-state MTS instance with five fractional tasks, plus a three-state
/// one with six tasks (with two states every MTS valid set is a singleton).
/// Both adversaries each.
std::vector<OracleCase> tiny_suite(std::uint64_t guide_salt);

struct OracleLine {
  std::string case_name;
  Probability beta;
  Probability tau;
  mpq_class exact_ratio;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  bool agrees = false;       // |mean - exact| <= 3 stderr
  double bound = 0.0;
  bool within_bound = false;  // exact ratio vs bound, additive constant only
  std::uint64_t leaves = 0;
};

struct OracleOptions {
  std::size_t trials = 100000;
  std::uint64_t leaf_budget = 1000000;
  std::uint64_t master_seed = 1;
  int threads = 0;
  /// Monte-Carlo runs use tau + shift (clamped to [0, 1]); a mutation hook.
  double tau_shift = 0.0;
};

/// Runs the suite at (beta, tau) in {0, 0.5, 1}^2. Throws kTooLarge when an
/// enumeration exceeds the leaf budget.
std::vector<OracleLine> run_oracle_suite(const OracleOptions& options);

}  // namespace oag
