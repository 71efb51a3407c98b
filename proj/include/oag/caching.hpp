#pragma once

// Online caching (paging): Random Mark and its guided variant, the
// farthest-in-future good guide, the soonest-request adversary, Belady's
// offline optimum and phase bookkeeping.

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "oag/core.hpp"

namespace oag::caching {

using Page = std::int64_t;
inline constexpr Page kNoEvict = -1;

struct CacheTrace {
  int k = 1;
  std::vector<Page> initial_cache;
  std::vector<Page> requests;

  /// Throws kInvalidParam on k < 1, an oversized or duplicated initial cache,
  /// or negative page ids.
  void validate() const;
};

/// Dense page ids and next-use tables for a validated trace. Immutable and
/// shared read-only by all trials on the trace.
class PreparedTrace {
 public:
  explicit PreparedTrace(CacheTrace trace);

  const CacheTrace& trace() const { return trace_; }
  int k() const { return trace_.k; }
  std::size_t length() const { return trace_.requests.size(); }
  std::size_t page_count() const { return pages_.size(); }
  Page page(int dense) const { return pages_[dense]; }
  /// Dense id of `page`, or -1 when it never appears in the trace or initial cache.
  int dense(Page page) const;
  int request(std::size_t t) const { return dense_requests_[t]; }
  std::span<const int> initial_dense() const { return initial_dense_; }
  /// First request index > t (0-based) for dense page p; length() if none.
  std::size_t next_request_after(int p, std::size_t t) const;

 private:
  CacheTrace trace_;
  std::vector<Page> pages_;
  std::unordered_map<Page, int> index_;
  std::vector<int> dense_requests_;
  std::vector<int> initial_dense_;
  std::vector<std::vector<std::size_t>> occurrences_;
};

/// Cost of `answers` (evicted page or kNoEvict per request): number of fetches.
/// A hit must answer kNoEvict; a fault with a full cache must evict a cached
/// page; a fault with room must answer kNoEvict.
std::int64_t evaluate(const CacheTrace& trace, std::span<const Page> answers);

/// Cache contents and mark bits over dense page ids.
struct MarkingState {
  std::vector<int> cache;               // dense ids, unordered
  std::vector<std::uint8_t> cached;     // per dense id
  std::vector<std::uint8_t> marked;     // per dense id
  int marked_count = 0;

  /// marked subset of cache, |cache| <= k, flags agree with the list.
  bool consistent(int k) const;
};

/// On a hit or with room in the cache, the forced no-evict answer. Otherwise
/// V_t = cached unmarked pages (sorted by page id), D_t uniform over them.
StepChoice<Page> marking_base_step(const PreparedTrace& trace, const MarkingState& state,
                                   int requested);

/// Random Mark: mark on request, unmark all once k pages are marked, evict a
/// uniformly random unmarked page on a fault with a full cache.
class RandomMark {
 public:
  using Answer = Page;

  explicit RandomMark(const PreparedTrace& trace) : trace_(&trace) {}

  std::size_t horizon() const { return trace_->length(); }
  void start(RandomSource&);
  StepChoice<Page> offer() const;
  void commit(Page evicted);
  bool in_answer_space(Page p) const { return p == kNoEvict || p >= 0; }

  const MarkingState& state() const { return state_; }
  std::size_t step() const { return step_; }
  /// Checked after every request by the invariant observers.
  bool invariants_hold() const;

 private:
  const PreparedTrace* trace_;
  MarkingState state_;
  std::size_t step_ = 0;
  bool unmark_fired_ = false;
};

/// Among V_t, the page whose next request is latest (never again counts as
/// infinity; ties to the lowest page id). kNoEvict when V_t is {kNoEvict}.
class FarthestInFutureGuide {
 public:
  explicit FarthestInFutureGuide(const PreparedTrace& trace) : trace_(&trace) {}
  Page operator()(const GuideQuery<Page>& q) const;

 private:
  const PreparedTrace* trace_;
};

/// Anti-Belady adversary: among V_t, the page requested soonest.
class SoonestRequestGuide {
 public:
  explicit SoonestRequestGuide(const PreparedTrace& trace) : trace_(&trace) {}
  Page operator()(const GuideQuery<Page>& q) const;

 private:
  const PreparedTrace* trace_;
};

/// Minimum number of fetches (farthest-in-future eviction).
std::int64_t belady_opt(const CacheTrace& trace);

struct PhaseSpan {
  std::size_t begin = 0;  // first request index
  std::size_t end = 0;    // one past the last
};

/// Greedy partition into longest segments with at most k distinct pages.
std::vector<PhaseSpan> phase_partition(std::span<const Page> requests, int k);

/// Phases as seen by the marking rule: a phase closes at the request that
/// brings the number of distinct pages requested since the last unmark to k.
std::vector<PhaseSpan> marking_phases(std::span<const Page> requests, int k);

struct PhaseStats {
  std::size_t phase_index = 0;
  PhaseSpan span;
  int clean = 0;       // requested, not cached at phase start
  int returning = 0;   // requested, cached at phase start
  int vanishing = 0;   // not requested, cached at phase start
  int alg_faults = 0;
  int evictions = 0;
  std::vector<int> blame_chain_lengths;  // faults per chain, one per clean fault that evicted
};

/// Replays `answers` and classifies each phase's pages against the cache at
/// the phase start. Blame chains follow each clean fault through the
/// returning-page faults its eviction triggers.
std::vector<PhaseStats> phase_stats(const CacheTrace& trace, std::span<const Page> answers,
                                    std::span<const PhaseSpan> phases);

double bound_caching(double beta, double tau, int k);
/// Exact form; nullopt stands for +infinity.
std::optional<mpq_class> bound_caching_exact(const mpq_class& beta, const mpq_class& tau, int k);
mpq_class harmonic(int k);

/// Pages 1..k+1 repeated `rounds` times. With `warm`, the cache starts with
/// pages 1..k.
CacheTrace gen_cyclic(int k, int rounds, bool warm = true);
/// Independent draws over pages 1..pages with P(page r) proportional to
/// r^-exponent. With `warm`, the cache starts with the k most popular pages.
CacheTrace gen_zipf(int k, int pages, int length, double exponent, std::uint64_t seed,
                    bool warm = true);

/// Text format: line 1 `k`, line 2 initial cache (may be empty), line 3 requests.
CacheTrace read_trace(std::istream& in);
void write_trace(std::ostream& out, const CacheTrace& trace);

}  // namespace oag::caching
