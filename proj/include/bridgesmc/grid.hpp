#pragma once

#include "bridgesmc/common.hpp"

namespace bridgesmc {

/// One observation interval discretized on a regular grid.
struct Segment {
  double s1 = 0.0;
  double s2 = 1.0;
  int n_steps = 1;

  double dt() const { return (s2 - s1) / n_steps; }
  double node(int j) const { return s1 + j * dt(); }
  bool operator==(const Segment&) const = default;
};

/// Step count of a gap at level 0. Levels scale this by 2^l, so the step count
/// doubles exactly between adjacent levels; the level coupling requires that
/// (coarse blocks are pairwise sums of fine ones). A unit gap at level l has
/// 2^l steps; irregular gaps get a uniform step no larger than 2^-l.
inline int base_steps(double gap) {
  if (!(gap > 0.0)) throw std::invalid_argument("base_steps: gap must be positive");
  return std::max(1, static_cast<int>(std::ceil(gap - 1e-9)));
}

inline int steps_for(double gap, int level) {
  if (level < 0) throw std::invalid_argument("steps_for: level must be >= 0");
  return base_steps(gap) << level;
}

inline Segment make_segment(double s1, double s2, int level) {
  if (!(s1 < s2)) throw std::invalid_argument("make_segment: need s1 < s2");
  return Segment{s1, s2, steps_for(s2 - s1, level)};
}

/// Driving Wiener increments for one segment: n_steps rows of dimension d.
struct WienerBlock {
  Segment seg;
  Vec incr;
};

/// Discretized bridge: n_steps+1 states of dimension d with both endpoints pinned.
struct LatticePath {
  Segment seg;
  Vec states;          // (n_steps+1) x d, row-major
  int fail_step = -1;  // >= 0 when the recursion left the admissible domain or overflowed

  bool ok() const { return fail_step < 0; }
  const double* state(int j, int d) const { return states.data() + static_cast<size_t>(j) * d; }
  double* state(int j, int d) { return states.data() + static_cast<size_t>(j) * d; }
};

}  // namespace bridgesmc
