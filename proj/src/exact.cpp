#include "oag/exact.hpp"

#include <stdexcept>

namespace oag {

const mpq_class& ExactEnumerator::prefix_weight(std::size_t depth) const {
  return depth == 0 ? one_ : path_[depth - 1].cumulative;
}

mpq_class ExactEnumerator::factor(const Decision& d) const {
  if (d.uniform) return mpq_class(1, d.arity);
  return d.branch == 1 ? d.p.exact() : d.p.complement().exact();
}

bool ExactEnumerator::bernoulli(const Probability& p) {
  if (depth_ < path_.size()) {
    const Decision& d = path_[depth_++];
    if (d.uniform || !(d.p == p)) throw std::logic_error("enumerated run is not deterministic");
    return d.branch == 1;
  }
  Decision d;
  d.p = p;
  d.branch = p.is_one() ? 1 : 0;
  d.cumulative = prefix_weight(depth_) * factor(d);
  path_.push_back(std::move(d));
  ++depth_;
  return path_.back().branch == 1;
}

std::size_t ExactEnumerator::uniform_index(std::size_t n) {
  if (depth_ < path_.size()) {
    const Decision& d = path_[depth_++];
    if (!d.uniform || d.arity != n) throw std::logic_error("enumerated run is not deterministic");
    return d.branch;
  }
  Decision d;
  d.uniform = true;
  d.arity = n;
  d.cumulative = prefix_weight(depth_) / n;
  path_.push_back(std::move(d));
  ++depth_;
  return 0;
}

const mpq_class& ExactEnumerator::leaf_weight() const {
  if (depth_ != path_.size()) throw std::logic_error("leaf replay stopped short of the path");
  return prefix_weight(depth_);
}

bool ExactEnumerator::advance() {
  while (!path_.empty()) {
    Decision& d = path_.back();
    const bool has_next =
        d.uniform ? d.branch + 1 < d.arity : (d.branch == 0 && !d.p.is_zero());
    if (has_next) {
      ++d.branch;
      d.cumulative = prefix_weight(path_.size() - 1) * factor(d);
      depth_ = 0;
      return true;
    }
    path_.pop_back();
  }
  return false;
}

}  // namespace oag
