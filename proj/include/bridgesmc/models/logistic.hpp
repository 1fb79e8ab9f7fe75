#pragma once

#include <utility>

#include "bridgesmc/model.hpp"
#include "bridgesmc/rng.hpp"

namespace bridgesmc::models {

/// Logistic growth diffusion dX = (theta3^2/2 + theta1 - theta2 X) X dt
/// + theta3 X dW with a Gamma initial law at the first observation time and a
/// pair of negative-binomial counts per observation time. theta = (theta1,
/// theta2, theta3, theta4), all positive. The guiding process is linear with a
/// drift rate that interpolates the per-capita drift between the segment
/// endpoints; the proposal transition is the geometric Brownian motion obtained
/// by replacing the crowding term with its stationary mean.
struct LogisticConfig {
  // shape/rate convention of the Gamma initial law: the displayed
  // (theta1/(2 theta3^2), theta2/(2 theta3^2)) or the stationary law of the
  // SDE (2 theta1/theta3^2, 2 theta2/theta3^2)
  bool stationary_gamma = false;
};

/// Linear interpolation coefficients (zeta, eta) of the guiding drift rate
/// v(t) = zeta t + eta, fixed by v(s1) x_{s1} = b(x_{s1}) and
/// v(s2) x_{s2} = b(x_{s2}).
std::pair<double, double> logistic_aux_coeffs(const ThetaVector&, double s1, double x1, double s2,
                                              double x2);

struct LognormalAux {
  double logpdf;
  double dlogdx;
  double d2logdx2;
};

/// Lognormal transition density of the guiding process from (t, x) to
/// (s2, x_end), with its state gradient and Hessian.
LognormalAux lognormal_aux_logdensity(double theta3, double zeta, double eta, double t, double x,
                                      double s2, double x_end);

/// log NB(y; theta4, theta4/(x + theta4)); mean x, overdispersion 1/theta4.
double nb_log_density(double theta4, double x, double y);
double nb_log_density_dtheta4(double theta4, double x, double y);

/// Exact transition of dX = (theta3^2/2) X dt + theta3 X dW:
/// log X_{t+gap} ~ N(log x, theta3^2 gap).
double gbm_transition_logpdf(double theta3, double gap, double x, double x_next);
double gbm_transition_push(double theta3, double gap, double x, double z);

std::pair<double, double> logistic_gamma_params(const ThetaVector&, bool stationary);

class LogisticModel : public DiffusionModel {
 public:
  explicit LogisticModel(LogisticConfig cfg = {});

  int dim() const override { return 1; }
  int theta_dim() const override { return 4; }
  const ThetaConstraints& constraints() const override { return cons_; }

  void drift(const ThetaVector&, const double* x, double* out) const override;
  void sigma_apply(const ThetaVector&, const double* x, const double* dw,
                   double* out) const override;
  void sigma_sq(const ThetaVector&, const double* x, double* out) const override;

  std::unique_ptr<BridgeContext> bridge_context(const ThetaVector&, const Segment&,
                                                const double* x_start,
                                                const double* x_end) const override;

  double proposal_logpdf(const ThetaVector&, double s1, const double* x, double s2,
                         const double* x_next) const override;
  void proposal_push(const ThetaVector&, double s1, const double* x, double s2, const double* z,
                     double* out) const override;

  double initial_logpdf(const ThetaVector&, const double* x) const override;
  void initial_push(const ThetaVector&, const double* u, double* out) const override;
  void initial_score_theta(const ThetaVector&, const double* x, double* out) const override;

  double obs_logpdf(const ThetaVector&, const std::vector<double>& y,
                    const double* x) const override;
  bool has_obs_score_theta() const override { return true; }
  void obs_score_theta(const ThetaVector&, const std::vector<double>& y, const double* x,
                       double* out) const override;
  bool dynamics_depend_on(int coord) const override { return coord < 3; }

  bool state_in_domain(const double* x) const override {
    return std::isfinite(x[0]) && x[0] > 0.0;
  }

  const LogisticConfig& config() const { return cfg_; }

 private:
  LogisticConfig cfg_;
  ThetaConstraints cons_;
};

/// Synthetic observation set: Gamma initial state at times.front(), guarded
/// Euler dynamics between observation times, one NB count pair per time
/// (including the first).
Observations simulate_logistic_data(const ThetaVector&, const std::vector<double>& times, Rng&,
                                    int sim_level = 10, bool stationary_gamma = false);

}  // namespace bridgesmc::models
