#pragma once

// Online bipartite matching with adversarial arrival order: Ranking and its
// guided variant, the M*-following good guide, adversaries, and the offline
// maximum matching.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "oag/core.hpp"

namespace oag::matching {

using Vertex = std::int32_t;
inline constexpr Vertex kNoMatch = -1;

/// Online nodes U are 0..n_online-1, offline nodes V are 0..n_offline-1.
/// `adjacency[u]` lists N(u) in V; `arrival[t]` is the online node revealed
/// at step t.
struct BipartiteInstance {
  int n_offline = 0;
  int n_online = 0;
  std::vector<std::vector<Vertex>> adjacency;
  std::vector<Vertex> arrival;

  /// Throws kInvalidParam on out-of-range or duplicate neighbors, or when
  /// `arrival` is not a permutation of U.
  void validate() const;
  std::size_t edge_count() const;
  bool has_edge(Vertex u, Vertex v) const;
};

struct OptimalMatching {
  std::vector<Vertex> online_partner;   // per u, kNoMatch if unmatched
  std::vector<Vertex> offline_partner;  // per v, kNoMatch if unmatched
  int size = 0;
};

/// Maximum-cardinality matching by augmenting paths. Online nodes are tried in
/// index order and neighbors in list order, so the result is deterministic.
/// The size is certified against a second run over the reversed node order.
OptimalMatching max_matching(const BipartiteInstance& instance);

/// Augmenting-path matching with online nodes tried in `order`.
OptimalMatching augmenting_path_matching(const BipartiteInstance& instance,
                                         std::span<const Vertex> order);

/// Payoff of `answers` (one per arrival step): the number of matched pairs.
/// Throws kLengthMismatch or kIllegalAnswer (non-edge or reused offline node).
std::int64_t evaluate(const BipartiteInstance& instance, std::span<const Vertex> answers);

/// True when no edge has both endpoints unmatched by `answers`.
bool is_maximal(const BipartiteInstance& instance, std::span<const Vertex> answers);

struct MatchingState {
  std::vector<int> rank;  // rank[v] = position of v in sigma; lower is preferred
  std::vector<std::uint8_t> matched_offline;
  std::vector<Vertex> matched_online;
};

/// V_t = unmatched neighbors of u (sorted), D_t = point mass on the one with
/// lowest rank. With no unmatched neighbor, the forced no-match answer.
StepChoice<Vertex> ranking_base_step(const BipartiteInstance& instance,
                                     const MatchingState& state, Vertex u);

class Ranking {
 public:
  using Answer = Vertex;

  explicit Ranking(const BipartiteInstance& instance) : instance_(&instance) {}

  std::size_t horizon() const { return instance_->arrival.size(); }
  /// Draws the ranking sigma (Fisher-Yates) from the algorithm stream.
  void start(RandomSource& alg);
  StepChoice<Vertex> offer() const;
  void commit(Vertex v);
  bool in_answer_space(Vertex v) const {
    return v == kNoMatch || (v >= 0 && v < instance_->n_offline);
  }

  const MatchingState& state() const { return state_; }
  std::size_t step() const { return step_; }

 private:
  const BipartiteInstance* instance_;
  MatchingState state_;
  std::size_t step_ = 0;
};

/// Suggests m*(u), or no-match when u is unmatched in M*. Ignores history.
class OptimalGuide {
 public:
  OptimalGuide(const BipartiteInstance& instance, const OptimalMatching& m_star)
      : instance_(&instance), m_star_(&m_star) {}
  Vertex operator()(const GuideQuery<Vertex>& q) const;

 private:
  const BipartiteInstance* instance_;
  const OptimalMatching* m_star_;
};

/// Adversary that steals the M*-partner needed furthest in the future: among
/// V_t minus m*(u), the offline node whose M*-partner arrives latest after the
/// current step. Nodes not needed by any future arrival rank below those that
/// are; ties go to the lowest index. Falls back to m*(u) when nothing else is
/// valid.
class GreedyHarmGuide {
 public:
  GreedyHarmGuide(const BipartiteInstance& instance, const OptimalMatching& m_star);
  Vertex operator()(const GuideQuery<Vertex>& q) const;
  /// Same rule on an explicit candidate set, for non-adaptive use.
  Vertex choose(std::size_t time, std::span<const Vertex> candidates) const;

 private:
  const BipartiteInstance* instance_;
  const OptimalMatching* m_star_;
  std::vector<int> arrival_step_;  // per online node
};

double bound_matching(double beta, double tau);

BipartiteInstance gen_upper_triangular(int n);
/// A hidden perfect matching plus independent extra edges with probability
/// `extra_edge_prob`; arrival order shuffled. Deterministic in `seed`.
BipartiteInstance gen_random_perfect(int n, double extra_edge_prob, std::uint64_t seed);

/// Text format (0-based ids):
///   n_offline n_online
///   u: v v v        (one line per online node, in index order)
///   arrival: u u u
BipartiteInstance read_instance(std::istream& in);
void write_instance(std::ostream& out, const BipartiteInstance& instance);

/// Removes online node `u` (renumbering later ones) from the instance.
BipartiteInstance remove_online(const BipartiteInstance& instance, Vertex u);
/// Removes offline node `v` (renumbering later ones) from the instance.
BipartiteInstance remove_offline(const BipartiteInstance& instance, Vertex v);

}  // namespace oag::matching
