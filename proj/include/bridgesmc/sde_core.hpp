#pragma once

#include "bridgesmc/model.hpp"

namespace bridgesmc {

/// Per-segment evaluator: owns the auxiliary context and scratch buffers so the
/// Euler recursion and weight evaluations run without allocating per step.
class BridgeEvaluator {
 public:
  BridgeEvaluator(const DiffusionModel&, const ThetaVector&, const Segment&, const double* x_start,
                  const double* x_end);

  const BridgeContext& ctx() const { return *ctx_; }
  const Segment& segment() const { return seg_; }

  /// mu(x) + Sigma(x) grad_x log f~_{t,s2}(x_end | x)
  void guided_drift(double t, const double* x, double* out) const;

  /// (mu - mu~)^T s - 1/2 Tr{ [Sigma - Sigma~] [ -H - s s^T ] }
  double correction_integrand(double t, const double* x) const;

  /// Euler recursion pinned at both endpoints. Marks fail_step instead of
  /// throwing when a state overflows or leaves the model domain.
  void build(const WienerBlock&, LatticePath& out) const;

  /// sum_j L(t_j, X_j) dt + log f~(x_end | x_start); -inf on a marked path or a
  /// non-finite integrand.
  double log_core(const LatticePath&) const;

  /// log R^l = log_core - log fbar(x_end | x_start).
  /// Throws std::domain_error when the proposal density vanishes at the endpoints.
  double log_radon_nikodym(const LatticePath&) const;

 private:
  const DiffusionModel& model_;
  const ThetaVector& theta_;
  Segment seg_;
  const double* x_start_;
  const double* x_end_;
  std::unique_ptr<BridgeContext> ctx_;
  mutable Vec mu_, amu_, sc_, dif_, sig_, asig_, hess_;
};

/// Convenience single-call forms of the evaluator operations. For
/// endpoint-parameterized auxiliaries the segment is anchored at (s1, x), which
/// is exact when t = s1; interior evaluations should go through a
/// BridgeEvaluator constructed with the true segment start state.
Vec guided_drift(const DiffusionModel&, const ThetaVector&, double t, const Vec& x,
                 const Vec& x_end, const Segment&);
double l_integrand(const DiffusionModel&, const ThetaVector&, double t, const Vec& x,
                   const Vec& x_end, const Segment&);

/// Strict bridge construction: throws PathError (with the failing step index)
/// instead of returning a marked path.
LatticePath euler_bridge_path(const DiffusionModel&, const ThetaVector&, const Segment&,
                              const Vec& x_start, const Vec& x_end, const WienerBlock&);

double log_radon_nikodym(const DiffusionModel&, const ThetaVector&, const Segment&,
                         const LatticePath&);

}  // namespace bridgesmc
