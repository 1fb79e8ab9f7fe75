#pragma once

#include <memory>

#include "bridgesmc/grid.hpp"
#include "bridgesmc/theta.hpp"

namespace bridgesmc {

/// Observation record: an initial time t0 (optionally carrying its own
/// observation) followed by T strictly increasing interval endpoints.
struct Observations {
  double t0 = 0.0;
  Vec initial_value;                        // empty when x_0 carries no observation
  std::vector<double> times;                // t_1 .. t_T
  std::vector<std::vector<double>> values;  // y_1 .. y_T

  int intervals() const { return static_cast<int>(times.size()); }
  double time(int k) const { return k == 0 ? t0 : times[k - 1]; }
  const std::vector<double>& value(int k) const { return values[k - 1]; }
  bool initial_observed() const { return !initial_value.empty(); }
  void validate() const;
};

/// Auxiliary-process view of one segment, fixed (theta, s1, x_start, s2, x_end).
/// Supplies the guiding score, its Hessian, the auxiliary drift/covariance and
/// the auxiliary transition density over the whole segment.
class BridgeContext {
 public:
  virtual ~BridgeContext() = default;

  /// grad_x log f~_{t,s2}(x_end | x)
  virtual void score(double t, const double* x, double* out) const = 0;
  /// hess_x log f~_{t,s2}(x_end | x), d x d row-major
  virtual void hessian(double t, const double* x, double* out) const = 0;
  virtual void aux_drift(double t, const double* x, double* out) const = 0;
  virtual void aux_sigma_sq(double t, const double* x, double* out) const = 0;
  /// log f~_{s1,s2}(x_end | x_start)
  virtual double transition_logpdf() const = 0;
};

/// Pluggable model contract: dynamics, auxiliary process, proposal transition,
/// observation density and initial law, with log-densities, push-forward
/// samplers (for common-random-number couplings) and theta-gradients.
class DiffusionModel {
 public:
  virtual ~DiffusionModel() = default;

  virtual int dim() const = 0;
  virtual int theta_dim() const = 0;
  virtual const ThetaConstraints& constraints() const = 0;

  virtual void drift(const ThetaVector&, const double* x, double* out) const = 0;
  /// out = sigma(x) dw
  virtual void sigma_apply(const ThetaVector&, const double* x, const double* dw,
                           double* out) const = 0;
  /// out = sigma sigma^T, d x d row-major
  virtual void sigma_sq(const ThetaVector&, const double* x, double* out) const = 0;

  virtual std::unique_ptr<BridgeContext> bridge_context(const ThetaVector&, const Segment&,
                                                        const double* x_start,
                                                        const double* x_end) const = 0;

  /// Proposal transition fbar over [s1, s2].
  virtual double proposal_logpdf(const ThetaVector&, double s1, const double* x, double s2,
                                 const double* x_next) const = 0;
  /// Push d iid N(0,1) draws z through the proposal sampling transform.
  virtual void proposal_push(const ThetaVector&, double s1, const double* x, double s2,
                             const double* z, double* out) const = 0;

  virtual double initial_logpdf(const ThetaVector&, const double* x) const = 0;
  /// Push d iid U(0,1) draws through the initial-law sampling transform.
  virtual void initial_push(const ThetaVector&, const double* u, double* out) const = 0;
  virtual void initial_score_theta(const ThetaVector&, const double* x, double* out) const = 0;

  virtual double obs_logpdf(const ThetaVector&, const std::vector<double>& y,
                            const double* x) const = 0;

  virtual bool has_obs_score_theta() const { return false; }
  virtual void obs_score_theta(const ThetaVector&, const std::vector<double>& y, const double* x,
                               double* out) const;

  /// False for a coordinate that enters none of drift, diffusion, auxiliary or
  /// proposal transition: the score summand then takes the analytic
  /// observation/initial route for it instead of finite differences.
  virtual bool dynamics_depend_on(int coord) const {
    (void)coord;
    return true;
  }

  /// Admissible state region (positivity constraints and the like).
  virtual bool state_in_domain(const double* x) const {
    (void)x;
    return true;
  }
};

}  // namespace bridgesmc
