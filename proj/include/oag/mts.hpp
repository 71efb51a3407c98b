#pragma once

// Uniform metrical task systems: exact saturation bookkeeping in continuous
// time, the phase-walk algorithm and its guided variant, the two guides, the
// offline optimum by dynamic programming and per-phase audits.
//
// Time is 0-based: the task of step i is processed over [i, i+1].

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "oag/core.hpp"

namespace oag::mts {

using State = std::int32_t;
using Task = std::vector<mpq_class>;

struct UniformMTSInstance {
  int n = 1;
  std::vector<Task> tasks;
  State start_state = 0;

  /// Throws kInvalidParam on n < 1, a bad start state, a task of the wrong
  /// width or a negative cost.
  void validate() const;
  std::size_t length() const { return tasks.size(); }
};

/// Transition from the start state into the first answer, then processing
/// plus unit transitions. Throws kLengthMismatch or kIllegalAnswer.
mpq_class evaluate(const UniformMTSInstance& instance, std::span<const State> answers);

/// Integer costs scaled by the lcm of all cost denominators, when that fits
/// comfortably in 64 bits. Used to avoid rational arithmetic in hot loops.
class ScaledCosts {
 public:
  explicit ScaledCosts(const UniformMTSInstance& instance);
  bool available() const { return available_; }
  std::int64_t scale() const { return scale_; }
  /// Cost times scale(). Answers must be legal; requires available().
  std::int64_t cost(std::span<const State> answers) const;

 private:
  bool available_ = false;
  int n_ = 1;
  State start_ = 0;
  std::int64_t scale_ = 1;
  std::vector<std::int64_t> table_;  // step-major, n entries per step
};

struct SaturationEvent {
  State state = 0;
  mpq_class time;
  std::size_t phase = 0;
};

struct AdvanceResult {
  std::vector<SaturationEvent> saturations;  // by time, then state index
  std::vector<mpq_class> phase_ends;
};

/// Per-state processing accumulated in the current phase. A saturated state
/// holds exactly 1; the others hold their accumulation, which is below 1.
class SaturationLedger {
 public:
  explicit SaturationLedger(int n);

  /// Processes one task over [step, step+1]. Several phases may end inside
  /// the step; each new phase starts from the carried residual.
  AdvanceResult advance(const Task& task);

  int n() const { return static_cast<int>(acc_.size()); }
  std::size_t step() const { return step_; }
  std::size_t phase() const { return phase_; }
  const mpq_class& phase_start() const { return phase_start_; }
  const std::vector<mpq_class>& accumulated() const { return acc_; }
  bool saturated(State s) const { return saturated_[s] != 0; }
  bool consistent() const;

 private:
  std::vector<mpq_class> acc_;
  std::vector<std::uint8_t> saturated_;
  std::size_t phase_ = 0;
  mpq_class phase_start_ = 0;
  std::size_t step_ = 0;
};

struct StepInfo {
  std::size_t phase_at_start = 0;
  std::size_t phases_ended = 0;  // phase ends within (i, i+1]
  std::vector<std::uint8_t> saturated_after;  // flags at i+1; meaningful when no phase ended
  State s_min = 0;  // lowest-index minimizer of the task
};

struct PhaseInfo {
  mpq_class start;
  std::optional<mpq_class> end;  // nullopt for the open last phase
  std::vector<std::optional<mpq_class>> saturation_time;  // nullopt: never within the phase
};

/// Saturation facts for a whole instance, computed once. Step i's entry only
/// depends on tasks 0..i, so the algorithm may read it online; the guides
/// also read the saturation times, which look ahead.
class SaturationSchedule {
 public:
  explicit SaturationSchedule(const UniformMTSInstance& instance);

  const UniformMTSInstance& instance() const { return *instance_; }
  const StepInfo& step(std::size_t i) const { return steps_[i]; }
  const PhaseInfo& phase(std::size_t p) const { return phases_[p]; }
  std::size_t phase_count() const { return phases_.size(); }
  std::size_t completed_phases() const;

 private:
  const UniformMTSInstance* instance_;
  std::vector<StepInfo> steps_;
  std::vector<PhaseInfo> phases_;
};

/// Case 3 (the current phase ends by i+1): {s_min}. Case 2 (s saturates by
/// i+1): the states unsaturated at i+1, uniform. Case 1: stay at s.
StepChoice<State> mts_dtb_step(const SaturationSchedule& schedule, std::size_t i, State s);

/// Stays in a state until it saturates, then moves to a uniformly random
/// unsaturated state; at a phase end moves to the cheapest state.
class SaturationWalk {
 public:
  using Answer = State;

  explicit SaturationWalk(const SaturationSchedule& schedule) : schedule_(&schedule) {}

  std::size_t horizon() const { return schedule_->instance().length(); }
  void start(RandomSource&);
  StepChoice<State> offer() const { return mts_dtb_step(*schedule_, step_, current_); }
  void commit(State s);
  bool in_answer_space(State s) const { return s >= 0 && s < schedule_->instance().n; }

  State current() const { return current_; }
  std::size_t step() const { return step_; }

 private:
  const SaturationSchedule* schedule_;
  State current_ = 0;
  std::size_t step_ = 0;
};

/// Among V_t, the state saturating latest in the current phase (never
/// saturating ranks latest; ties to the lowest index).
class LatestSaturationGuide {
 public:
  explicit LatestSaturationGuide(const SaturationSchedule& schedule) : schedule_(&schedule) {}
  State operator()(const GuideQuery<State>& q) const;

 private:
  const SaturationSchedule* schedule_;
};

/// Adversary: among V_t, the state saturating soonest; ties to the lowest index.
class EarliestSaturationGuide {
 public:
  explicit EarliestSaturationGuide(const SaturationSchedule& schedule) : schedule_(&schedule) {}
  State operator()(const GuideQuery<State>& q) const;

 private:
  const SaturationSchedule* schedule_;
};

/// Optimal offline cost. Starting anywhere but start_state costs 1.
mpq_class mts_offline_opt(const UniformMTSInstance& instance);

struct PhaseAudit {
  std::size_t phase = 0;
  int transitions = 0;     // moves decided inside the phase
  int boundary_moves = 0;  // moves made at the step where the phase ends
  /// Processing paid per state while residing there in the phase, excluding
  /// the part of the phase-ending step before the end.
  std::vector<mpq_class> resident_processing;
  /// Processing paid in the phase-ending step before the phase end.
  mpq_class closing_processing = 0;
};

std::vector<PhaseAudit> audit_phases(const SaturationSchedule& schedule,
                                     std::span<const State> answers);

double bound_mts(double beta, double tau, int n);
/// Exact form; nullopt stands for +infinity.
std::optional<mpq_class> bound_mts_exact(const mpq_class& beta, const mpq_class& tau, int n);

/// m tasks; each cost an independent uniform multiple of 1/q in [0, 1].
UniformMTSInstance gen_mts_random(int n, int m, int q, std::uint64_t seed);
/// `rounds` rounds of n tasks; task j of a round costs 1 at state j only.
UniformMTSInstance gen_mts_elevator(int n, int rounds);

/// Text format: `n m start_state`, then m lines of n costs written as
/// integers or `p/q`.
UniformMTSInstance read_mts(std::istream& in);
void write_mts(std::ostream& out, const UniformMTSInstance& instance);

}  // namespace oag::mts
