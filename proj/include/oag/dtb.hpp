#pragma once

// Drop-or-trust-blindly compiler.

#include <utility>

#include "oag/core.hpp"

namespace oag {

template <typename Answer>
struct DtbOutcome {
  Answer answer;
  bool trusted = false;
};

/// One compiled step. The trust coin comes from `env` and is drawn even when
/// the guidance is not a valid answer; the fallback comes from `alg`.
template <typename Answer>
DtbOutcome<Answer> dtb_step(const StepChoice<Answer>& choice, const Answer& guidance,
                            const Probability& tau, RandomSource& env, RandomSource& alg) {
  const bool coin = env.bernoulli(tau);
  if (coin && choice.contains(guidance)) return {guidance, true};
  return {choice.sample(alg), false};
}

/// A base online algorithm wrapped with trust parameter tau. State evolution
/// is entirely delegated to the base algorithm.
template <OnlineAlgorithm Base>
class DtbWrapped {
 public:
  using Answer = typename Base::Answer;

  DtbWrapped(Base base, Probability tau) : base_(std::move(base)), tau_(tau) {}

  std::size_t horizon() const { return base_.horizon(); }
  void start(RandomSource& alg) { base_.start(alg); }
  StepChoice<Answer> offer() { return base_.offer(); }
  std::pair<Answer, bool> answer(const StepChoice<Answer>& choice, const Answer& guidance,
                                 RandomSource& env, RandomSource& alg) {
    DtbOutcome<Answer> out = dtb_step(choice, guidance, tau_, env, alg);
    return {out.answer, out.trusted};
  }
  void commit(const Answer& a) { base_.commit(a); }
  bool in_answer_space(const Answer& a) const { return base_.in_answer_space(a); }

  const Base& base() const { return base_; }
  Base& base() { return base_; }
  const Probability& tau() const { return tau_; }

 private:
  Base base_;
  Probability tau_;
};

template <OnlineAlgorithm Base>
DtbWrapped<Base> dtb_transform(Base base, Probability tau) {
  return DtbWrapped<Base>(std::move(base), tau);
}

/// Throws kInvalidParam when tau is outside [0,1].
template <OnlineAlgorithm Base>
DtbWrapped<Base> dtb_transform(Base base, double tau) {
  return DtbWrapped<Base>(std::move(base), Probability::from_decimal(tau));
}

}  // namespace oag
