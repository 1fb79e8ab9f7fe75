#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bridgesmc {

using Vec = std::vector<double>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// log N(x; mu, var)
inline double normal_logpdf(double x, double mu, double var) {
  const double d = x - mu;
  return -0.5 * (d * d / var + std::log(var) + kLogTwoPi);
}

inline double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

/// Euler recursion produced a non-finite or out-of-domain state.
class PathError : public std::runtime_error {
 public:
  PathError(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// A particle normalization lost all support.
class KernelError : public std::runtime_error {
 public:
  KernelError(const std::string& what, int time_index)
      : std::runtime_error(what), time_(time_index) {}
  int time_index() const { return time_; }

 private:
  int time_;
};

}  // namespace bridgesmc
