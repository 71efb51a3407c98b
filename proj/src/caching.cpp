#include "oag/caching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_set>

#include "line_reader.hpp"

namespace oag::caching {

void CacheTrace::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidParam, "cache capacity k must be >= 1");
  if (initial_cache.size() > static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kInvalidParam, "initial cache holds more than k pages");
  }
  std::unordered_set<Page> seen;
  for (Page p : initial_cache) {
    if (p < 0) throw Error(ErrorCode::kInvalidParam, "negative page id in initial cache");
    if (!seen.insert(p).second) {
      throw Error(ErrorCode::kInvalidParam, "duplicate page " + std::to_string(p) +
                                                " in initial cache");
    }
  }
  for (Page p : requests) {
    if (p < 0) throw Error(ErrorCode::kInvalidParam, "negative page id in requests");
  }
}

PreparedTrace::PreparedTrace(CacheTrace trace) : trace_(std::move(trace)) {
  trace_.validate();
  auto intern = [this](Page p) {
    auto [it, inserted] = index_.emplace(p, static_cast<int>(pages_.size()));
    if (inserted) pages_.push_back(p);
    return it->second;
  };
  for (Page p : trace_.initial_cache) initial_dense_.push_back(intern(p));
  dense_requests_.reserve(trace_.requests.size());
  for (Page p : trace_.requests) dense_requests_.push_back(intern(p));
  occurrences_.resize(pages_.size());
  for (std::size_t t = 0; t < dense_requests_.size(); ++t) {
    occurrences_[dense_requests_[t]].push_back(t);
  }
}

int PreparedTrace::dense(Page page) const {
  auto it = index_.find(page);
  return it == index_.end() ? -1 : it->second;
}

std::size_t PreparedTrace::next_request_after(int p, std::size_t t) const {
  const auto& occ = occurrences_[p];
  auto it = std::upper_bound(occ.begin(), occ.end(), t);
  return it == occ.end() ? length() : *it;
}

std::int64_t evaluate(const CacheTrace& trace, std::span<const Page> answers) {
  if (answers.size() != trace.requests.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(trace.requests.size()) + " answers, got " +
                    std::to_string(answers.size()));
  }
  std::unordered_set<Page> cache(trace.initial_cache.begin(), trace.initial_cache.end());
  std::int64_t cost = 0;
  for (std::size_t t = 0; t < answers.size(); ++t) {
    const Page x = trace.requests[t];
    const Page e = answers[t];
    auto illegal = [&](const char* why) {
      throw Error(ErrorCode::kIllegalAnswer,
                  "step " + std::to_string(t + 1) + " (page " + std::to_string(x) + "): " + why);
    };
    if (cache.count(x)) {
      if (e != kNoEvict) illegal("eviction on a hit");
      continue;
    }
    ++cost;
    if (cache.size() < static_cast<std::size_t>(trace.k)) {
      if (e != kNoEvict) illegal("eviction while the cache has room");
    } else {
      if (e == kNoEvict) illegal("fault with a full cache needs an eviction");
      if (!cache.erase(e)) illegal("evicted page is not cached");
    }
    cache.insert(x);
  }
  return cost;
}

bool MarkingState::consistent(int k) const {
  if (cache.size() > static_cast<std::size_t>(k)) return false;
  int cached_flags = 0;
  int marks = 0;
  for (std::size_t p = 0; p < cached.size(); ++p) {
    cached_flags += cached[p];
    if (marked[p]) {
      if (!cached[p]) return false;
      ++marks;
    }
  }
  return cached_flags == static_cast<int>(cache.size()) && marks == marked_count;
}

StepChoice<Page> marking_base_step(const PreparedTrace& trace, const MarkingState& state,
                                   int requested) {
  if (state.cached[requested] || state.cache.size() < static_cast<std::size_t>(trace.k())) {
    return StepChoice<Page>::forced(kNoEvict);
  }
  StepChoice<Page> choice;
  choice.valid_set.reserve(state.cache.size());
  for (int p : state.cache) {
    if (!state.marked[p]) choice.valid_set.push_back(trace.page(p));
  }
  std::sort(choice.valid_set.begin(), choice.valid_set.end());
  choice.sampler = Sampler::uniform();
  return choice;
}

void RandomMark::start(RandomSource&) {
  const std::size_t n = trace_->page_count();
  state_.cache.assign(trace_->initial_dense().begin(), trace_->initial_dense().end());
  state_.cached.assign(n, 0);
  state_.marked.assign(n, 0);
  state_.marked_count = 0;
  for (int p : state_.cache) state_.cached[p] = 1;
  step_ = 0;
  unmark_fired_ = false;
}

StepChoice<Page> RandomMark::offer() const {
  return marking_base_step(*trace_, state_, trace_->request(step_));
}

void RandomMark::commit(Page evicted) {
  const int x = trace_->request(step_);
  unmark_fired_ = false;
  if (!state_.cached[x]) {
    if (evicted != kNoEvict) {
      const int e = trace_->dense(evicted);
      auto it = std::find(state_.cache.begin(), state_.cache.end(), e);
      *it = state_.cache.back();
      state_.cache.pop_back();
      state_.cached[e] = 0;
      if (state_.marked[e]) {
        state_.marked[e] = 0;
        --state_.marked_count;
      }
    }
    state_.cache.push_back(x);
    state_.cached[x] = 1;
  }
  if (!state_.marked[x]) {
    state_.marked[x] = 1;
    ++state_.marked_count;
  }
  if (state_.marked_count == trace_->k()) {
    for (int p : state_.cache) state_.marked[p] = 0;
    state_.marked_count = 0;
    unmark_fired_ = true;
  }
  ++step_;
}

bool RandomMark::invariants_hold() const {
  if (!state_.consistent(trace_->k())) return false;
  if (step_ == 0) return true;
  const int x = trace_->request(step_ - 1);
  if (!state_.cached[x]) return false;
  return state_.marked[x] || (unmark_fired_ && state_.marked_count == 0);
}

Page FarthestInFutureGuide::operator()(const GuideQuery<Page>& q) const {
  if (q.valid_set.size() == 1) return q.valid_set.front();
  const std::size_t now = q.time - 1;
  Page best = q.valid_set.front();
  std::size_t best_next = 0;
  bool first = true;
  for (Page p : q.valid_set) {
    const int d = trace_->dense(p);
    const std::size_t next = d < 0 ? trace_->length() : trace_->next_request_after(d, now);
    if (first || next > best_next) {
      best = p;
      best_next = next;
      first = false;
    }
  }
  return best;
}

Page SoonestRequestGuide::operator()(const GuideQuery<Page>& q) const {
  if (q.valid_set.size() == 1) return q.valid_set.front();
  const std::size_t now = q.time - 1;
  Page best = q.valid_set.front();
  std::size_t best_next = 0;
  bool first = true;
  for (Page p : q.valid_set) {
    const int d = trace_->dense(p);
    const std::size_t next = d < 0 ? trace_->length() : trace_->next_request_after(d, now);
    if (first || next < best_next) {
      best = p;
      best_next = next;
      first = false;
    }
  }
  return best;
}

std::int64_t belady_opt(const CacheTrace& trace) {
  const PreparedTrace prepared(trace);
  const std::size_t m = prepared.length();
  std::vector<std::size_t> next_use(prepared.page_count(), 0);
  std::vector<std::uint8_t> cached(prepared.page_count(), 0);
  std::set<std::pair<std::size_t, int>> by_next;  // (next request, dense page)
  // Initial pages are keyed by their first request.
  for (int p : prepared.initial_dense()) {
    const std::size_t first =
        m == 0 ? 0 : (prepared.request(0) == p ? 0 : prepared.next_request_after(p, 0));
    next_use[p] = first;
    cached[p] = 1;
    by_next.emplace(first, p);
  }
  std::int64_t cost = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const int x = prepared.request(t);
    const std::size_t nxt = prepared.next_request_after(x, t);
    if (cached[x]) {
      by_next.erase({next_use[x], x});
    } else {
      ++cost;
      if (by_next.size() == static_cast<std::size_t>(trace.k)) {
        auto victim = std::prev(by_next.end());
        cached[victim->second] = 0;
        by_next.erase(victim);
      }
      cached[x] = 1;
    }
    next_use[x] = nxt;
    by_next.emplace(nxt, x);
  }
  return cost;
}

std::vector<PhaseSpan> phase_partition(std::span<const Page> requests, int k) {
  std::vector<PhaseSpan> phases;
  std::unordered_set<Page> distinct;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < requests.size(); ++t) {
    if (!distinct.count(requests[t]) && distinct.size() == static_cast<std::size_t>(k)) {
      phases.push_back({begin, t});
      begin = t;
      distinct.clear();
    }
    distinct.insert(requests[t]);
  }
  if (begin < requests.size()) phases.push_back({begin, requests.size()});
  return phases;
}

std::vector<PhaseSpan> marking_phases(std::span<const Page> requests, int k) {
  std::vector<PhaseSpan> phases;
  std::unordered_set<Page> distinct;
  std::size_t begin = 0;
  for (std::size_t t = 0; t < requests.size(); ++t) {
    distinct.insert(requests[t]);
    if (distinct.size() == static_cast<std::size_t>(k)) {
      phases.push_back({begin, t + 1});
      begin = t + 1;
      distinct.clear();
    }
  }
  if (begin < requests.size()) phases.push_back({begin, requests.size()});
  return phases;
}

std::vector<PhaseStats> phase_stats(const CacheTrace& trace, std::span<const Page> answers,
                                    std::span<const PhaseSpan> phases) {
  evaluate(trace, answers);  // legality
  std::unordered_set<Page> cache(trace.initial_cache.begin(), trace.initial_cache.end());
  std::vector<PhaseStats> out;
  std::size_t t = 0;
  for (std::size_t index = 0; index < phases.size(); ++index) {
    const PhaseSpan span = phases[index];
    PhaseStats stats;
    stats.phase_index = index;
    stats.span = span;
    // Requests between phases (none for a proper partition) are replayed silently.
    for (; t < span.begin; ++t) {
      if (!cache.count(trace.requests[t])) {
        if (answers[t] != kNoEvict) cache.erase(answers[t]);
        cache.insert(trace.requests[t]);
      }
    }
    const std::unordered_set<Page> at_start = cache;
    std::unordered_set<Page> requested;
    std::unordered_map<Page, int> evicted_by_chain;
    for (; t < span.end; ++t) {
      const Page x = trace.requests[t];
      requested.insert(x);
      if (cache.count(x)) continue;
      ++stats.alg_faults;
      int chain = -1;
      if (auto it = evicted_by_chain.find(x); it != evicted_by_chain.end()) {
        chain = it->second;
        ++stats.blame_chain_lengths[chain];
        evicted_by_chain.erase(it);
      }
      const Page e = answers[t];
      if (e != kNoEvict) {
        ++stats.evictions;
        if (chain < 0) {
          chain = static_cast<int>(stats.blame_chain_lengths.size());
          stats.blame_chain_lengths.push_back(1);
        }
        evicted_by_chain[e] = chain;
        cache.erase(e);
      }
      cache.insert(x);
    }
    for (Page p : requested) {
      if (at_start.count(p)) {
        ++stats.returning;
      } else {
        ++stats.clean;
      }
    }
    stats.vanishing = static_cast<int>(at_start.size()) - stats.returning;
    out.push_back(std::move(stats));
  }
  return out;
}

mpq_class harmonic(int k) {
  mpq_class h = 0;
  for (int i = 1; i <= k; ++i) h += mpq_class(1, i);
  return h;
}

double bound_caching(double beta, double tau, int k) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double h = 0.0;
  for (int i = 1; i <= k; ++i) h += 1.0 / i;
  const double trust_good = tau * (1.0 - beta);
  const double not_trust_bad = 1.0 - tau * beta;
  const double b1 = trust_good > 0.0 ? 2.0 / trust_good : kInf;
  const double b2 = not_trust_bad > 0.0 ? 2.0 * h / not_trust_bad : kInf;
  return std::min({b1, b2, static_cast<double>(k)});
}

std::optional<mpq_class> bound_caching_exact(const mpq_class& beta, const mpq_class& tau, int k) {
  const mpq_class trust_good = tau * (1 - beta);
  const mpq_class not_trust_bad = 1 - tau * beta;
  mpq_class best = k;
  if (trust_good > 0) best = std::min<mpq_class>(best, mpq_class(2 / trust_good));
  if (not_trust_bad > 0) best = std::min<mpq_class>(best, mpq_class(2 * harmonic(k) / not_trust_bad));
  return best;
}

CacheTrace gen_cyclic(int k, int rounds, bool warm) {
  if (k < 1 || rounds < 0) throw Error(ErrorCode::kInvalidParam, "cyclic needs k >= 1, rounds >= 0");
  CacheTrace trace;
  trace.k = k;
  for (int r = 0; r < rounds; ++r) {
    for (int p = 1; p <= k + 1; ++p) trace.requests.push_back(p);
  }
  if (warm) {
    for (int p = 1; p <= k; ++p) trace.initial_cache.push_back(p);
  }
  return trace;
}

CacheTrace gen_zipf(int k, int pages, int length, double exponent, std::uint64_t seed,
                    bool warm) {
  if (k < 1) throw Error(ErrorCode::kInvalidParam, "zipf needs k >= 1");
  if (pages < 1) throw Error(ErrorCode::kInvalidParam, "zipf needs pages >= 1");
  if (length < 0) throw Error(ErrorCode::kInvalidParam, "zipf needs length >= 0");
  if (!(exponent >= 0.0)) throw Error(ErrorCode::kInvalidParam, "zipf needs exponent >= 0");
  std::vector<double> cumulative(pages);
  double total = 0.0;
  for (int r = 1; r <= pages; ++r) {
    total += std::pow(static_cast<double>(r), -exponent);
    cumulative[r - 1] = total;
  }
  RandomStream rng(seed);
  CacheTrace trace;
  trace.k = k;
  trace.requests.reserve(length);
  for (int i = 0; i < length; ++i) {
    const double u = rng.next_unit() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    const auto rank = std::min<std::ptrdiff_t>(it - cumulative.begin(), pages - 1);
    trace.requests.push_back(rank + 1);
  }
  if (warm) {
    for (int p = 1; p <= std::min(k, pages); ++p) trace.initial_cache.push_back(p);
  }
  return trace;
}

CacheTrace read_trace(std::istream& in) {
  detail::LineReader reader(in);
  CacheTrace trace;
  const auto k = reader.parse_all<int>(reader.require("capacity line"), "capacity");
  if (k.size() != 1) reader.fail("first line must hold the capacity k");
  trace.k = k[0];
  trace.initial_cache = reader.parse_all<Page>(reader.require("initial cache line", true), "page");
  std::string line;
  if (reader.next(line, true)) trace.requests = reader.parse_all<Page>(line, "page");
  try {
    trace.validate();
  } catch (const Error& e) {
    reader.fail(e.what());
  }
  if (!reader.at_end()) reader.fail("trailing content after request line");
  return trace;
}

void write_trace(std::ostream& out, const CacheTrace& trace) {
  out << trace.k << '\n';
  for (std::size_t i = 0; i < trace.initial_cache.size(); ++i) {
    out << (i ? " " : "") << trace.initial_cache[i];
  }
  out << '\n';
  for (std::size_t i = 0; i < trace.requests.size(); ++i) {
    out << (i ? " " : "") << trace.requests[i];
  }
  out << '\n';
}

}  // namespace oag::caching
