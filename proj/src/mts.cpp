#include "oag/mts.hpp"

#include <algorithm>
#include <limits>
#include <ostream>

#include "line_reader.hpp"

namespace oag::mts {

void UniformMTSInstance::validate() const {
  if (n < 1) throw Error(ErrorCode::kInvalidParam, "MTS needs n >= 1 states");
  if (start_state < 0 || start_state >= n) {
    throw Error(ErrorCode::kInvalidParam, "start state out of range");
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].size() != static_cast<std::size_t>(n)) {
      throw Error(ErrorCode::kInvalidParam,
                  "task " + std::to_string(i) + " has " + std::to_string(tasks[i].size()) +
                      " costs, expected " + std::to_string(n));
    }
    for (const mpq_class& c : tasks[i]) {
      if (sgn(c) < 0) {
        throw Error(ErrorCode::kInvalidParam, "negative cost in task " + std::to_string(i));
      }
    }
  }
}

mpq_class evaluate(const UniformMTSInstance& instance, std::span<const State> answers) {
  if (answers.size() != instance.tasks.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(instance.tasks.size()) + " answers, got " +
                    std::to_string(answers.size()));
  }
  mpq_class cost = 0;
  State prev = instance.start_state;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const State s = answers[i];
    if (s < 0 || s >= instance.n) {
      throw Error(ErrorCode::kIllegalAnswer,
                  "step " + std::to_string(i + 1) + ": state " + std::to_string(s) +
                      " out of range");
    }
    if (s != prev) cost += 1;
    cost += instance.tasks[i][s];
    prev = s;
  }
  return cost;
}

ScaledCosts::ScaledCosts(const UniformMTSInstance& instance)
    : n_(instance.n), start_(instance.start_state) {
  mpz_class lcm = 1;
  for (const Task& task : instance.tasks) {
    for (const mpq_class& c : task) mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), c.get_den_mpz_t());
  }
  mpq_class worst = static_cast<unsigned long>(instance.tasks.size() + 1);
  for (const Task& task : instance.tasks) worst += *std::max_element(task.begin(), task.end());
  worst *= lcm;
  const mpz_class limit = mpz_class(1) << 62;
  if (cmp(worst, mpq_class(limit)) >= 0) return;
  scale_ = lcm.get_si();
  table_.reserve(instance.tasks.size() * instance.n);
  for (const Task& task : instance.tasks) {
    for (const mpq_class& c : task) {
      const mpq_class scaled = c * lcm;
      table_.push_back(scaled.get_num().get_si());
    }
  }
  available_ = true;
}

std::int64_t ScaledCosts::cost(std::span<const State> answers) const {
  std::int64_t total = 0;
  State prev = start_;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const State s = answers[i];
    if (s != prev) total += scale_;
    total += table_[i * n_ + s];
    prev = s;
  }
  return total;
}

SaturationLedger::SaturationLedger(int n) : acc_(n, mpq_class(0)), saturated_(n, 0) {}

AdvanceResult SaturationLedger::advance(const Task& task) {
  AdvanceResult result;
  mpq_class t = static_cast<unsigned long>(step_);
  const mpq_class end = t + 1;
  std::vector<std::pair<mpq_class, State>> upcoming;
  while (true) {
    upcoming.clear();
    bool all_saturate = true;
    mpq_class last = t;
    for (State s = 0; s < n(); ++s) {
      if (saturated_[s]) continue;
      if (sgn(task[s]) <= 0) {
        all_saturate = false;
        continue;
      }
      mpq_class when = t + (1 - acc_[s]) / task[s];
      if (when <= end) {
        if (when > last) last = when;
        upcoming.emplace_back(std::move(when), s);
      } else {
        all_saturate = false;
      }
    }
    std::sort(upcoming.begin(), upcoming.end());
    for (const auto& [when, s] : upcoming) result.saturations.push_back({s, when, phase_});
    if (all_saturate && !upcoming.empty()) {
      result.phase_ends.push_back(last);
      ++phase_;
      phase_start_ = last;
      std::fill(acc_.begin(), acc_.end(), mpq_class(0));
      std::fill(saturated_.begin(), saturated_.end(), 0);
      t = last;
      if (t == end) break;
      continue;
    }
    for (const auto& [when, s] : upcoming) saturated_[s] = 1;
    const mpq_class span = end - t;
    for (State s = 0; s < n(); ++s) {
      if (saturated_[s]) {
        acc_[s] = 1;
      } else {
        acc_[s] += span * task[s];
      }
    }
    break;
  }
  ++step_;
  return result;
}

bool SaturationLedger::consistent() const {
  for (State s = 0; s < n(); ++s) {
    if (sgn(acc_[s]) < 0 || acc_[s] > 1) return false;
    if ((acc_[s] == 1) != (saturated_[s] != 0)) return false;
  }
  return true;
}

SaturationSchedule::SaturationSchedule(const UniformMTSInstance& instance)
    : instance_(&instance) {
  instance.validate();
  const int n = instance.n;
  SaturationLedger ledger(n);
  phases_.push_back({mpq_class(0), std::nullopt, std::vector<std::optional<mpq_class>>(n)});
  steps_.reserve(instance.length());
  for (const Task& task : instance.tasks) {
    StepInfo info;
    info.phase_at_start = ledger.phase();
    AdvanceResult res = ledger.advance(task);
    for (const mpq_class& e : res.phase_ends) {
      phases_.back().end = e;
      phases_.push_back({e, std::nullopt, std::vector<std::optional<mpq_class>>(n)});
    }
    for (const SaturationEvent& ev : res.saturations) {
      phases_[ev.phase].saturation_time[ev.state] = ev.time;
    }
    info.phases_ended = res.phase_ends.size();
    info.saturated_after.resize(n);
    for (State s = 0; s < n; ++s) info.saturated_after[s] = ledger.saturated(s) ? 1 : 0;
    info.s_min = static_cast<State>(std::min_element(task.begin(), task.end()) - task.begin());
    steps_.push_back(std::move(info));
  }
}

std::size_t SaturationSchedule::completed_phases() const {
  return phases_.back().end ? phases_.size() : phases_.size() - 1;
}

StepChoice<State> mts_dtb_step(const SaturationSchedule& schedule, std::size_t i, State s) {
  const StepInfo& info = schedule.step(i);
  if (info.phases_ended > 0) return StepChoice<State>::forced(info.s_min);
  if (!info.saturated_after[s]) return StepChoice<State>::forced(s);
  StepChoice<State> choice;
  for (State v = 0; v < static_cast<State>(info.saturated_after.size()); ++v) {
    if (!info.saturated_after[v]) choice.valid_set.push_back(v);
  }
  choice.sampler = Sampler::uniform();
  return choice;
}

void SaturationWalk::start(RandomSource&) {
  current_ = schedule_->instance().start_state;
  step_ = 0;
}

void SaturationWalk::commit(State s) {
  current_ = s;
  ++step_;
}

namespace {

// Saturation time of s in the phase current at the start of step `time - 1`.
const std::optional<mpq_class>& saturation_time(const SaturationSchedule& schedule,
                                                std::size_t time, State s) {
  const std::size_t phase = schedule.step(time - 1).phase_at_start;
  return schedule.phase(phase).saturation_time[s];
}

// nullopt (never) is later than every time.
bool later(const std::optional<mpq_class>& a, const std::optional<mpq_class>& b) {
  if (!a) return b.has_value();
  if (!b) return false;
  return *a > *b;
}

}  // namespace

State LatestSaturationGuide::operator()(const GuideQuery<State>& q) const {
  State best = q.valid_set.front();
  if (q.valid_set.size() == 1) return best;
  const auto* best_time = &saturation_time(*schedule_, q.time, best);
  for (State s : q.valid_set.subspan(1)) {
    const auto& when = saturation_time(*schedule_, q.time, s);
    if (later(when, *best_time)) {
      best = s;
      best_time = &when;
    }
  }
  return best;
}

State EarliestSaturationGuide::operator()(const GuideQuery<State>& q) const {
  State best = q.valid_set.front();
  if (q.valid_set.size() == 1) return best;
  const auto* best_time = &saturation_time(*schedule_, q.time, best);
  for (State s : q.valid_set.subspan(1)) {
    const auto& when = saturation_time(*schedule_, q.time, s);
    if (later(*best_time, when)) {
      best = s;
      best_time = &when;
    }
  }
  return best;
}

mpq_class mts_offline_opt(const UniformMTSInstance& instance) {
  instance.validate();
  std::vector<mpq_class> c(instance.n);
  for (State s = 0; s < instance.n; ++s) c[s] = s == instance.start_state ? 0 : 1;
  for (const Task& task : instance.tasks) {
    const mpq_class move = *std::min_element(c.begin(), c.end()) + 1;
    for (State s = 0; s < instance.n; ++s) {
      if (move < c[s]) c[s] = move;
      c[s] += task[s];
    }
  }
  return *std::min_element(c.begin(), c.end());
}

std::vector<PhaseAudit> audit_phases(const SaturationSchedule& schedule,
                                     std::span<const State> answers) {
  const UniformMTSInstance& instance = schedule.instance();
  evaluate(instance, answers);  // legality
  std::vector<PhaseAudit> audits(schedule.phase_count());
  for (std::size_t p = 0; p < audits.size(); ++p) {
    audits[p].phase = p;
    audits[p].resident_processing.assign(instance.n, mpq_class(0));
  }
  State prev = instance.start_state;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    const State s = answers[i];
    const StepInfo& info = schedule.step(i);
    const std::size_t p = info.phase_at_start;
    const mpq_class& rate = instance.tasks[i][s];
    if (s != prev) {
      if (info.phases_ended > 0) {
        ++audits[p].boundary_moves;
      } else {
        ++audits[p].transitions;
      }
    }
    if (info.phases_ended == 0) {
      audits[p].resident_processing[s] += rate;
    } else {
      mpq_class lo = static_cast<unsigned long>(i);
      for (std::size_t j = 0; j <= info.phases_ended; ++j) {
        const std::size_t q = p + j;
        const mpq_class hi =
            j < info.phases_ended ? *schedule.phase(q).end : mpq_class(static_cast<unsigned long>(i + 1));
        const mpq_class portion = (hi - lo) * rate;
        if (j == 0) {
          audits[p].closing_processing += portion;
        } else {
          audits[q].resident_processing[s] += portion;
        }
        lo = hi;
      }
    }
    prev = s;
  }
  return audits;
}

double bound_mts(double beta, double tau, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  const double trust_good = tau * (1.0 - beta);
  const double not_trust_bad = 1.0 - tau * beta;
  const double b1 = trust_good > 0.0 ? 1.0 / trust_good + 1.0 : kInf;
  const double b2 =
      not_trust_bad > 0.0 ? (1.0 - tau) / (not_trust_bad * not_trust_bad) * h + 1.0 : kInf;
  return 2.0 * std::min({b1, b2, static_cast<double>(n)});
}

std::optional<mpq_class> bound_mts_exact(const mpq_class& beta, const mpq_class& tau, int n) {
  mpq_class h = 0;
  for (int i = 1; i <= n; ++i) h += mpq_class(1, i);
  const mpq_class trust_good = tau * (1 - beta);
  const mpq_class not_trust_bad = 1 - tau * beta;
  mpq_class best = n;
  if (trust_good > 0) best = std::min<mpq_class>(best, mpq_class(1 / trust_good + 1));
  if (not_trust_bad > 0) {
    best = std::min<mpq_class>(best,
                               mpq_class((1 - tau) / (not_trust_bad * not_trust_bad) * h + 1));
  }
  return mpq_class(2 * best);
}

UniformMTSInstance gen_mts_random(int n, int m, int q, std::uint64_t seed) {
  if (n < 1 || m < 0 || q < 1) {
    throw Error(ErrorCode::kInvalidParam, "random MTS needs n >= 1, m >= 0, q >= 1");
  }
  RandomStream rng(seed);
  UniformMTSInstance instance;
  instance.n = n;
  instance.tasks.resize(m);
  for (Task& task : instance.tasks) {
    task.reserve(n);
    for (int s = 0; s < n; ++s) {
      task.emplace_back(static_cast<long>(rng.uniform_index(q + 1)), q);
      task.back().canonicalize();
    }
  }
  return instance;
}

UniformMTSInstance gen_mts_elevator(int n, int rounds) {
  if (n < 1 || rounds < 0) throw Error(ErrorCode::kInvalidParam, "elevator needs n >= 1, rounds >= 0");
  UniformMTSInstance instance;
  instance.n = n;
  for (int r = 0; r < rounds; ++r) {
    for (int j = 0; j < n; ++j) {
      Task task(n, mpq_class(0));
      task[j] = 1;
      instance.tasks.push_back(std::move(task));
    }
  }
  return instance;
}

UniformMTSInstance read_mts(std::istream& in) {
  detail::LineReader reader(in);
  const auto header = reader.parse_all<long long>(reader.require("header line"), "header field");
  if (header.size() != 3) reader.fail("header must be `n m start_state`");
  if (header[0] < 1 || header[1] < 0) reader.fail("need n >= 1 and m >= 0");
  UniformMTSInstance instance;
  instance.n = static_cast<int>(header[0]);
  instance.start_state = static_cast<State>(header[2]);
  if (header[2] < 0 || header[2] >= header[0]) reader.fail("start state out of range");
  for (long long i = 0; i < header[1]; ++i) {
    const std::string line = reader.require("task line");
    std::istringstream ss(line);
    std::string token;
    Task task;
    while (ss >> token) {
      mpq_class value;
      const bool bad_chars = token.find_first_not_of("0123456789/") != std::string::npos ||
                             token.front() == '/' || token.back() == '/';
      if (bad_chars || value.set_str(token, 10) != 0 || value.get_den() == 0) {
        reader.fail("bad cost '" + token + "'");
      }
      value.canonicalize();
      task.push_back(std::move(value));
    }
    if (task.size() != static_cast<std::size_t>(instance.n)) {
      reader.fail("expected " + std::to_string(instance.n) + " costs, got " +
                  std::to_string(task.size()));
    }
    instance.tasks.push_back(std::move(task));
  }
  if (!reader.at_end()) reader.fail("trailing content after the last task");
  return instance;
}

void write_mts(std::ostream& out, const UniformMTSInstance& instance) {
  out << instance.n << ' ' << instance.tasks.size() << ' ' << instance.start_state << '\n';
  for (const Task& task : instance.tasks) {
    for (std::size_t s = 0; s < task.size(); ++s) out << (s ? " " : "") << task[s].get_str();
    out << '\n';
  }
}

}  // namespace oag::mts
