#include "oag/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "line_reader.hpp"

namespace oag::matching {

void BipartiteInstance::validate() const {
  if (n_offline < 0 || n_online < 0) throw Error(ErrorCode::kInvalidParam, "negative node count");
  if (adjacency.size() != static_cast<std::size_t>(n_online)) {
    throw Error(ErrorCode::kInvalidParam, "adjacency size differs from n_online");
  }
  std::vector<std::uint8_t> seen(n_offline);
  for (int u = 0; u < n_online; ++u) {
    std::fill(seen.begin(), seen.end(), 0);
    for (Vertex v : adjacency[u]) {
      if (v < 0 || v >= n_offline) {
        throw Error(ErrorCode::kInvalidParam,
                    "neighbor " + std::to_string(v) + " of online node " + std::to_string(u) +
                        " out of range");
      }
      if (seen[v]) {
        throw Error(ErrorCode::kInvalidParam,
                    "duplicate neighbor " + std::to_string(v) + " of online node " +
                        std::to_string(u));
      }
      seen[v] = 1;
    }
  }
  if (arrival.size() != static_cast<std::size_t>(n_online)) {
    throw Error(ErrorCode::kInvalidParam, "arrival is not a permutation of the online nodes");
  }
  std::vector<std::uint8_t> arrived(n_online);
  for (Vertex u : arrival) {
    if (u < 0 || u >= n_online || arrived[u]) {
      throw Error(ErrorCode::kInvalidParam, "arrival is not a permutation of the online nodes");
    }
    arrived[u] = 1;
  }
}

std::size_t BipartiteInstance::edge_count() const {
  std::size_t e = 0;
  for (const auto& nbrs : adjacency) e += nbrs.size();
  return e;
}

bool BipartiteInstance::has_edge(Vertex u, Vertex v) const {
  const auto& nbrs = adjacency[u];
  return std::find(nbrs.begin(), nbrs.end(), v) != nbrs.end();
}

namespace {

bool augment(const BipartiteInstance& g, Vertex u, std::vector<std::uint8_t>& visited,
             OptimalMatching& m) {
  for (Vertex v : g.adjacency[u]) {
    if (visited[v]) continue;
    visited[v] = 1;
    if (m.offline_partner[v] == kNoMatch || augment(g, m.offline_partner[v], visited, m)) {
      m.offline_partner[v] = u;
      m.online_partner[u] = v;
      return true;
    }
  }
  return false;
}

}  // namespace

OptimalMatching augmenting_path_matching(const BipartiteInstance& instance,
                                         std::span<const Vertex> order) {
  OptimalMatching m;
  m.online_partner.assign(instance.n_online, kNoMatch);
  m.offline_partner.assign(instance.n_offline, kNoMatch);
  std::vector<std::uint8_t> visited(instance.n_offline);
  for (Vertex u : order) {
    std::fill(visited.begin(), visited.end(), 0);
    if (augment(instance, u, visited, m)) ++m.size;
  }
  return m;
}

OptimalMatching max_matching(const BipartiteInstance& instance) {
  std::vector<Vertex> order(instance.n_online);
  std::iota(order.begin(), order.end(), 0);
  OptimalMatching m = augmenting_path_matching(instance, order);
  std::reverse(order.begin(), order.end());
  const OptimalMatching check = augmenting_path_matching(instance, order);
  if (check.size != m.size) {
    throw std::logic_error("maximum matching certification failed");
  }
  return m;
}

std::int64_t evaluate(const BipartiteInstance& instance, std::span<const Vertex> answers) {
  if (answers.size() != instance.arrival.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "expected " + std::to_string(instance.arrival.size()) + " answers, got " +
                    std::to_string(answers.size()));
  }
  std::vector<std::uint8_t> used(instance.n_offline);
  std::int64_t size = 0;
  for (std::size_t t = 0; t < answers.size(); ++t) {
    const Vertex v = answers[t];
    if (v == kNoMatch) continue;
    const Vertex u = instance.arrival[t];
    if (v < 0 || v >= instance.n_offline || !instance.has_edge(u, v) || used[v]) {
      throw Error(ErrorCode::kIllegalAnswer, "step " + std::to_string(t + 1) + ": cannot match " +
                                                 std::to_string(u) + " to " + std::to_string(v));
    }
    used[v] = 1;
    ++size;
  }
  return size;
}

bool is_maximal(const BipartiteInstance& instance, std::span<const Vertex> answers) {
  std::vector<std::uint8_t> used(instance.n_offline);
  std::vector<std::uint8_t> online_matched(instance.n_online);
  for (std::size_t t = 0; t < answers.size(); ++t) {
    if (answers[t] == kNoMatch) continue;
    used[answers[t]] = 1;
    online_matched[instance.arrival[t]] = 1;
  }
  for (int u = 0; u < instance.n_online; ++u) {
    if (online_matched[u]) continue;
    for (Vertex v : instance.adjacency[u]) {
      if (!used[v]) return false;
    }
  }
  return true;
}

StepChoice<Vertex> ranking_base_step(const BipartiteInstance& instance,
                                     const MatchingState& state, Vertex u) {
  StepChoice<Vertex> choice;
  auto& valid = choice.valid_set;
  for (Vertex v : instance.adjacency[u]) {
    if (!state.matched_offline[v]) valid.push_back(v);
  }
  if (valid.empty()) return StepChoice<Vertex>::forced(kNoMatch);
  if (!std::is_sorted(valid.begin(), valid.end())) std::sort(valid.begin(), valid.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i < valid.size(); ++i) {
    if (state.rank[valid[i]] < state.rank[valid[best]]) best = i;
  }
  choice.sampler = Sampler::point_mass(best);
  return choice;
}

void Ranking::start(RandomSource& alg) {
  const int n = instance_->n_offline;
  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(alg.uniform_index(static_cast<std::size_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  state_.rank.assign(n, 0);
  for (int pos = 0; pos < n; ++pos) state_.rank[order[pos]] = pos;
  state_.matched_offline.assign(n, 0);
  state_.matched_online.assign(instance_->n_online, kNoMatch);
  step_ = 0;
}

StepChoice<Vertex> Ranking::offer() const {
  return ranking_base_step(*instance_, state_, instance_->arrival[step_]);
}

void Ranking::commit(Vertex v) {
  const Vertex u = instance_->arrival[step_];
  if (v != kNoMatch) {
    state_.matched_offline[v] = 1;
    state_.matched_online[u] = v;
  }
  ++step_;
}

Vertex OptimalGuide::operator()(const GuideQuery<Vertex>& q) const {
  const Vertex u = instance_->arrival[q.time - 1];
  return m_star_->online_partner[u];
}

GreedyHarmGuide::GreedyHarmGuide(const BipartiteInstance& instance,
                                 const OptimalMatching& m_star)
    : instance_(&instance), m_star_(&m_star), arrival_step_(instance.n_online, 0) {
  for (std::size_t t = 0; t < instance.arrival.size(); ++t) {
    arrival_step_[instance.arrival[t]] = static_cast<int>(t);
  }
}

Vertex GreedyHarmGuide::operator()(const GuideQuery<Vertex>& q) const {
  return choose(q.time, q.valid_set);
}

Vertex GreedyHarmGuide::choose(std::size_t time, std::span<const Vertex> candidates) const {
  const Vertex u = instance_->arrival[time - 1];
  const Vertex partner_of_u = m_star_->online_partner[u];
  const int now = static_cast<int>(time) - 1;
  Vertex best = kNoMatch;
  int best_key = -2;
  bool has_partner = false;
  for (Vertex v : candidates) {
    if (v == kNoMatch) continue;
    if (v == partner_of_u) {
      has_partner = true;
      continue;
    }
    const Vertex owner = m_star_->offline_partner[v];
    const int key =
        (owner != kNoMatch && arrival_step_[owner] > now) ? arrival_step_[owner] : -1;
    if (key > best_key) {
      best_key = key;
      best = v;
    }
  }
  if (best != kNoMatch) return best;
  if (has_partner) return partner_of_u;
  return candidates.empty() ? kNoMatch : candidates.front();
}

double bound_matching(double beta, double tau) {
  const double slack = 1.0 - tau;
  // (1 - e^{-x}) / x -> 1 as x -> 0.
  const double kernel = slack == 0.0 ? 1.0 : -std::expm1(-slack) / slack;
  return std::max(0.5, (1.0 - beta * tau) * kernel);
}

BipartiteInstance gen_upper_triangular(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidParam, "upper_triangular needs n >= 1");
  BipartiteInstance g;
  g.n_offline = g.n_online = n;
  g.adjacency.resize(n);
  for (int u = 0; u < n; ++u) {
    for (int v = u; v < n; ++v) g.adjacency[u].push_back(v);
  }
  g.arrival.resize(n);
  std::iota(g.arrival.begin(), g.arrival.end(), 0);
  return g;
}

BipartiteInstance gen_random_perfect(int n, double extra_edge_prob, std::uint64_t seed) {
  if (n < 1) throw Error(ErrorCode::kInvalidParam, "random_perfect needs n >= 1");
  if (!(extra_edge_prob >= 0.0 && extra_edge_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidParam, "random_perfect edge probability outside [0,1]");
  }
  RandomStream rng(seed);
  std::vector<Vertex> hidden(n);
  std::iota(hidden.begin(), hidden.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(hidden[i], hidden[rng.uniform_index(i + 1)]);

  BipartiteInstance g;
  g.n_offline = g.n_online = n;
  g.adjacency.resize(n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (v == hidden[u] || rng.next_unit() < extra_edge_prob) g.adjacency[u].push_back(v);
    }
  }
  g.arrival.resize(n);
  std::iota(g.arrival.begin(), g.arrival.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(g.arrival[i], g.arrival[rng.uniform_index(i + 1)]);
  return g;
}

BipartiteInstance read_instance(std::istream& in) {
  detail::LineReader reader(in);
  BipartiteInstance g;
  const auto header = reader.parse_all<int>(reader.require("header 'n_offline n_online'"),
                                            "node count");
  if (header.size() != 2 || header[0] < 0 || header[1] < 0) {
    reader.fail("header must be 'n_offline n_online'");
  }
  g.n_offline = header[0];
  g.n_online = header[1];
  g.adjacency.resize(g.n_online);
  for (int u = 0; u < g.n_online; ++u) {
    const std::string line = reader.require("adjacency line");
    const auto colon = line.find(':');
    if (colon == std::string::npos) reader.fail("expected 'u: v v ...'");
    const int label = reader.parse_one<int>(
        line.substr(line.find_first_not_of(" \t"), colon - line.find_first_not_of(" \t")),
        "online node");
    if (label != u) reader.fail("expected online node " + std::to_string(u));
    g.adjacency[u] = reader.parse_all<Vertex>(line.substr(colon + 1), "offline node");
    std::sort(g.adjacency[u].begin(), g.adjacency[u].end());
  }
  const std::string line = reader.require("arrival line");
  const std::string key = "arrival:";
  const auto start = line.find_first_not_of(" \t");
  if (line.compare(start, key.size(), key) != 0) reader.fail("expected 'arrival: ...'");
  g.arrival = reader.parse_all<Vertex>(line.substr(start + key.size()), "online node");
  try {
    g.validate();
  } catch (const Error& e) {
    reader.fail(e.what());
  }
  if (!reader.at_end()) reader.fail("trailing content after arrival line");
  return g;
}

void write_instance(std::ostream& out, const BipartiteInstance& instance) {
  out << instance.n_offline << ' ' << instance.n_online << '\n';
  for (int u = 0; u < instance.n_online; ++u) {
    out << u << ':';
    for (Vertex v : instance.adjacency[u]) out << ' ' << v;
    out << '\n';
  }
  out << "arrival:";
  for (Vertex u : instance.arrival) out << ' ' << u;
  out << '\n';
}

BipartiteInstance remove_online(const BipartiteInstance& instance, Vertex u) {
  BipartiteInstance g;
  g.n_offline = instance.n_offline;
  g.n_online = instance.n_online - 1;
  for (int w = 0; w < instance.n_online; ++w) {
    if (w != u) g.adjacency.push_back(instance.adjacency[w]);
  }
  for (Vertex w : instance.arrival) {
    if (w != u) g.arrival.push_back(w > u ? w - 1 : w);
  }
  return g;
}

BipartiteInstance remove_offline(const BipartiteInstance& instance, Vertex v) {
  BipartiteInstance g = instance;
  g.n_offline = instance.n_offline - 1;
  for (auto& nbrs : g.adjacency) {
    std::vector<Vertex> kept;
    for (Vertex w : nbrs) {
      if (w != v) kept.push_back(w > v ? w - 1 : w);
    }
    nbrs = std::move(kept);
  }
  return g;
}

}  // namespace oag::matching
