#pragma once

// Request-answer game plumbing: probabilities, random sources, step choices,
// the two-guide guidance channel and the plain / guided run loops.

#include <gmpxx.h>

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oag {

enum class ErrorCode {
  kLengthMismatch,
  kIllegalAnswer,
  kEmptyValidSet,
  kGuideProtocolError,
  kInvalidParam,
  kParse,
  kTooLarge,
  kEmptySample,
  kIo,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

enum class Objective { kMinimize, kMaximize };

/// True when `ratio` (alg/opt) is on the good side of `bound` for the
/// objective: at most the bound for costs, at least the bound for payoffs.
bool within_bound(Objective objective, double ratio, double bound);

/// A probability held both as a double and as an exact fraction num/den.
/// Values built from decimals are snapped to a 1e-9 grid so that grid points
/// such as 0.25 are represented exactly.
class Probability {
 public:
  Probability() = default;
  static Probability from_fraction(std::int64_t num, std::int64_t den);
  static Probability from_decimal(double value);

  double value() const { return value_; }
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  mpq_class exact() const { return mpq_class(num_, den_); }
  bool is_zero() const { return num_ == 0; }
  bool is_one() const { return num_ == den_; }
  Probability complement() const { return from_fraction(den_ - num_, den_); }

  friend bool operator==(const Probability&, const Probability&) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  double value_ = 0.0;
};

struct OagConfig {
  OagConfig() = default;
  OagConfig(Probability beta_in, Probability tau_in) : beta(beta_in), tau(tau_in) {}
  /// Rejects values outside [0,1] with kInvalidParam.
  static OagConfig from_decimal(double beta, double tau);

  Probability beta;
  Probability tau;
};

/// Source of randomness for coins and samplers. The Monte-Carlo stream and
/// the exact enumerator both implement it.
class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual bool bernoulli(const Probability& p) = 0;
  /// Uniform index in [0, n). Requires n >= 1.
  virtual std::size_t uniform_index(std::size_t n) = 0;
};

/// Deterministic 64-bit stream. Every call consumes exactly one engine draw
/// except for uniform_index rejections, so coin outcomes never depend on the
/// platform's distribution implementations.
class RandomStream final : public RandomSource {
 public:
  explicit RandomStream(std::uint64_t seed = 0) : engine_(seed) {}
  bool bernoulli(const Probability& p) override;
  std::size_t uniform_index(std::size_t n) override;
  std::uint64_t next_u64() { return engine_(); }
  double next_unit();

 private:
  std::mt19937_64 engine_;
};

struct RngStreams {
  RandomStream environment;
  RandomStream algorithm;

  static RngStreams from_seeds(std::uint64_t env_seed, std::uint64_t alg_seed) {
    return RngStreams{RandomStream(env_seed), RandomStream(alg_seed)};
  }
};

std::uint64_t splitmix64(std::uint64_t x);

enum class GuideSource : std::uint8_t { kGood, kBad };

template <typename Answer>
struct GuidanceEvent {
  std::size_t time = 0;  // 1-based
  GuideSource source = GuideSource::kGood;
  Answer guidance{};
  bool trusted = false;
  Answer adopted{};

  friend bool operator==(const GuidanceEvent&, const GuidanceEvent&) = default;
};

/// Distribution D_t over the valid set, by index into it.
struct Sampler {
  enum class Kind : std::uint8_t { kPointMass, kUniform };
  Kind kind = Kind::kPointMass;
  std::size_t index = 0;

  static Sampler point_mass(std::size_t i) { return {Kind::kPointMass, i}; }
  static Sampler uniform() { return {Kind::kUniform, 0}; }
};

/// The pair (V_t, D_t) a base algorithm exposes at each step. `valid_set` is
/// sorted ascending and nonempty.
template <typename Answer>
struct StepChoice {
  std::vector<Answer> valid_set;
  Sampler sampler;

  bool contains(const Answer& a) const {
    auto it = std::lower_bound(valid_set.begin(), valid_set.end(), a);
    return it != valid_set.end() && *it == a;
  }

  Answer sample(RandomSource& rng) const {
    if (sampler.kind == Sampler::Kind::kPointMass) return valid_set[sampler.index];
    return valid_set[rng.uniform_index(valid_set.size())];
  }

  static StepChoice forced(Answer a) {
    return StepChoice{{std::move(a)}, Sampler::point_mass(0)};
  }
};

/// What a guide sees at step `time`: the answer history and V_t. The full
/// request sequence is bound into the guide at construction.
template <typename Answer>
struct GuideQuery {
  std::size_t time = 0;  // 1-based
  std::span<const Answer> history;
  std::span<const Answer> valid_set;
};

template <typename T>
concept OnlineAlgorithm = requires(T algo, const T calgo, RandomSource& rng,
                                   const typename T::Answer& answer) {
  typename T::Answer;
  { calgo.horizon() } -> std::convertible_to<std::size_t>;
  algo.start(rng);
  { algo.offer() } -> std::same_as<StepChoice<typename T::Answer>>;
  algo.commit(answer);
  { calgo.in_answer_space(answer) } -> std::convertible_to<bool>;
};

template <typename G, typename Answer>
concept Guide = requires(G guide, const GuideQuery<Answer>& query) {
  { guide(query) } -> std::convertible_to<Answer>;
};

template <typename Answer>
struct OnlineRun {
  std::vector<Answer> answers;
};

template <typename Answer>
struct GuidedRun {
  std::vector<Answer> answers;
  std::vector<GuidanceEvent<Answer>> trace;  // empty unless requested
  std::size_t good_steps = 0;
  std::size_t bad_steps = 0;
  std::size_t trusted_steps = 0;
};

struct NoObserver {
  template <typename Algo>
  void operator()(const Algo&, std::size_t) const {}
};

inline void require_nonempty(std::size_t valid_size, std::size_t time) {
  if (valid_size == 0) {
    throw Error(ErrorCode::kEmptyValidSet,
                "no legal answer at step " + std::to_string(time));
  }
}

/// Prediction-oblivious run loop: every step's answer is drawn from the
/// algorithm's own sampler using the algorithm stream.
template <OnlineAlgorithm Algo, typename Observer = NoObserver>
OnlineRun<typename Algo::Answer> run_online(Algo& algo, RandomSource& alg_stream,
                                            Observer&& observe = {}) {
  OnlineRun<typename Algo::Answer> run;
  const std::size_t m = algo.horizon();
  run.answers.reserve(m);
  algo.start(alg_stream);
  for (std::size_t t = 1; t <= m; ++t) {
    StepChoice<typename Algo::Answer> choice = algo.offer();
    require_nonempty(choice.valid_set.size(), t);
    typename Algo::Answer answer = choice.sample(alg_stream);
    algo.commit(answer);
    run.answers.push_back(answer);
    observe(algo, t);
  }
  return run;
}

/// An OAG algorithm answers a step given the guidance and both streams.
template <typename T>
concept OagAlgorithm = requires(T algo, const T calgo, RandomSource& rng,
                                const StepChoice<typename T::Answer>& choice,
                                const typename T::Answer& answer) {
  typename T::Answer;
  { calgo.horizon() } -> std::convertible_to<std::size_t>;
  algo.start(rng);
  { algo.offer() } -> std::same_as<StepChoice<typename T::Answer>>;
  { algo.answer(choice, answer, rng, rng) }
      -> std::same_as<std::pair<typename T::Answer, bool>>;
  algo.commit(answer);
  { calgo.in_answer_space(answer) } -> std::convertible_to<bool>;
};

/// Guided run loop. Per step, draws are made in a fixed order: the
/// guide-source coin (environment stream), then whatever the OAG step draws
/// (trust coin on the environment stream, fallback on the algorithm stream).
template <OagAlgorithm Algo, typename Good, typename Bad, typename Observer = NoObserver>
  requires Guide<Good, typename Algo::Answer> && Guide<Bad, typename Algo::Answer>
GuidedRun<typename Algo::Answer> run_oag(Algo& algo, Good& good, Bad& bad,
                                         const OagConfig& config, RandomSource& env,
                                         RandomSource& alg, bool keep_trace = false,
                                         Observer&& observe = {}) {
  using Answer = typename Algo::Answer;
  GuidedRun<Answer> run;
  const std::size_t m = algo.horizon();
  run.answers.reserve(m);
  if (keep_trace) run.trace.reserve(m);
  algo.start(alg);
  for (std::size_t t = 1; t <= m; ++t) {
    const bool bad_source = env.bernoulli(config.beta);
    StepChoice<Answer> choice = algo.offer();
    require_nonempty(choice.valid_set.size(), t);
    GuideQuery<Answer> query{t, run.answers, choice.valid_set};
    Answer guidance = bad_source ? Answer(bad(query)) : Answer(good(query));
    if (!algo.in_answer_space(guidance)) {
      throw Error(ErrorCode::kGuideProtocolError,
                  "guide answer outside the answer space at step " + std::to_string(t));
    }
    auto [adopted, trusted] = algo.answer(choice, guidance, env, alg);
    algo.commit(adopted);
    run.answers.push_back(adopted);
    if (bad_source) {
      ++run.bad_steps;
    } else {
      ++run.good_steps;
    }
    if (trusted) ++run.trusted_steps;
    if (keep_trace) {
      run.trace.push_back(GuidanceEvent<Answer>{
          t, bad_source ? GuideSource::kBad : GuideSource::kGood, guidance, trusted, adopted});
    }
    observe(algo, t);
  }
  return run;
}

/// Deterministic stand-in for a uniformly random adversary: picks a member of
/// V_t from a hash of (salt, time, |V_t|). It is a fixed function of the
/// request sequence and answer history, as the guide model requires.
template <typename Answer>
class HashedUniformGuide {
 public:
  explicit HashedUniformGuide(std::uint64_t salt) : salt_(salt) {}
  Answer operator()(const GuideQuery<Answer>& q) const {
    const std::uint64_t h =
        splitmix64(salt_ ^ splitmix64(q.time * 0x9E3779B97F4A7C15ULL + q.valid_set.size()));
    return q.valid_set[h % q.valid_set.size()];
  }

 private:
  std::uint64_t salt_;
};

}  // namespace oag
