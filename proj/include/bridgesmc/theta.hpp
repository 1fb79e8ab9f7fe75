#pragma once

#include "bridgesmc/common.hpp"

namespace bridgesmc {

/// Static parameter vector.
using ThetaVector = Vec;

/// Open admissible interval for one coordinate.
struct ThetaInterval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double v) const { return v > lo && v < hi; }
};

class ThetaConstraints {
 public:
  ThetaConstraints() = default;
  explicit ThetaConstraints(std::vector<ThetaInterval> iv) : iv_(std::move(iv)) {}

  int dim() const { return static_cast<int>(iv_.size()); }

  bool admissible(const ThetaVector& t) const {
    if (static_cast<int>(t.size()) != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (!std::isfinite(t[i]) || !iv_[i].contains(t[i])) return false;
    return true;
  }

  void require_admissible(const ThetaVector& t) const {
    if (!admissible(t)) throw std::invalid_argument("theta outside the admissible set");
  }

  /// Distance from v to the nearest boundary of coordinate i (inf for a free coordinate).
  double boundary_distance(int i, double v) const {
    const auto& iv = iv_[i];
    double d = kInf;
    if (std::isfinite(iv.lo)) d = std::min(d, v - iv.lo);
    if (std::isfinite(iv.hi)) d = std::min(d, iv.hi - v);
    return d;
  }

  const ThetaInterval& at(int i) const { return iv_[i]; }

 private:
  std::vector<ThetaInterval> iv_;
};

/// Closed box strictly inside the admissible set; stochastic-approximation
/// iterates are clamped to it.
struct ProjectionBox {
  Vec lo, hi;

  bool empty() const { return lo.empty(); }

  /// Clamps t in place; returns the number of clamped coordinates.
  int project(ThetaVector& t) const {
    if (empty()) return 0;
    int clamped = 0;
    for (size_t i = 0; i < t.size(); ++i) {
      const double v = std::min(std::max(t[i], lo[i]), hi[i]);
      if (v != t[i]) ++clamped;
      t[i] = v;
    }
    return clamped;
  }
};

}  // namespace bridgesmc
