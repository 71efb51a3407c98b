#pragma once

// Exact expectation by exhaustive enumeration of every random draw a run makes.

#include <gmpxx.h>

#include <cstdint>
#include <vector>

#include "oag/core.hpp"

namespace oag {

/// A RandomSource that walks the tree of all draw outcomes depth first. Each
/// pass replays the current path; draws beyond it open new decisions at their
/// first branch. Zero-probability branches are never visited. Runs must be
/// deterministic given the draw outcomes.
class ExactEnumerator final : public RandomSource {
 public:
  bool bernoulli(const Probability& p) override;
  std::size_t uniform_index(std::size_t n) override;

  /// Call before each pass.
  void restart() { depth_ = 0; }
  /// Probability of the path just replayed.
  const mpq_class& leaf_weight() const;
  /// Moves to the next leaf; false once the tree is exhausted.
  bool advance();

 private:
  struct Decision {
    bool uniform = false;
    std::size_t branch = 0;
    std::size_t arity = 2;
    Probability p;    // success probability of a bernoulli draw
    mpq_class cumulative;  // path probability through this decision
  };

  mpq_class factor(const Decision& d) const;
  const mpq_class& prefix_weight(std::size_t depth) const;

  std::vector<Decision> path_;
  std::size_t depth_ = 0;
  mpq_class one_ = 1;
};

struct ExactResult {
  mpq_class expectation;
  std::uint64_t leaves = 0;
};

/// Sum of value(source) times the path probability over all leaves. `value`
/// must draw everything from the source it is given. Throws kTooLarge once
/// more than `leaf_budget` leaves would be visited.
template <typename ValueFn>
ExactResult exact_expectation(ValueFn&& value, std::uint64_t leaf_budget) {
  ExactEnumerator source;
  ExactResult result;
  result.expectation = 0;
  do {
    if (++result.leaves > leaf_budget) {
      throw Error(ErrorCode::kTooLarge,
                  "enumeration exceeds the leaf budget of " + std::to_string(leaf_budget));
    }
    source.restart();
    const mpq_class v = value(static_cast<RandomSource&>(source));
    if (sgn(v) != 0) result.expectation += v * source.leaf_weight();
  } while (source.advance());
  return result;
}

}  // namespace oag
