#pragma once

#include <utility>

#include "bridgesmc/model.hpp"
#include "bridgesmc/rng.hpp"

namespace bridgesmc::models {

/// Mean-reverting linear-Gaussian diffusion with Gaussian observations at the
/// observation times. theta = (theta1 < 0 reversion, theta2 > 0 diffusion,
/// theta3 > 0 observation sd). The guiding process is the same diffusion with a
/// fixed reversion rate and the runtime diffusion coefficient; the proposal
/// transition is the guiding transition itself.
struct OuConfig {
  double aux_reversion = -0.1;
  bool aux_tracks_drift = false;  // guide with the runtime theta1 (degenerate: R^l = 1)
  double x0 = 1.0;                // the initial law is a point mass here
};

/// Gaussian transition moments (F, V) of a linear diffusion with reversion a <= 0
/// and diffusion coefficient theta2 over a positive gap. a = 0 takes the
/// Brownian limit V = theta2^2 * gap.
std::pair<double, double> ou_aux_transition_params(double a, double theta2, double gap);

class OuModel : public DiffusionModel {
 public:
  explicit OuModel(OuConfig cfg = {});

  int dim() const override { return 1; }
  int theta_dim() const override { return 3; }
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
  bool dynamics_depend_on(int coord) const override { return coord < 2; }

  const OuConfig& config() const { return cfg_; }

 private:
  double guide_reversion(const ThetaVector& t) const {
    return cfg_.aux_tracks_drift ? t[0] : cfg_.aux_reversion;
  }
  OuConfig cfg_;
  ThetaConstraints cons_;
};

/// Observation set on unit times 1..T drawn from the exact discrete transition
/// (not an Euler scheme).
Observations simulate_ou_data(const ThetaVector& theta_true, double x0, int T, Rng&);

/// Exact filter/smoother quantities; deliberately independent of the bridge
/// machinery so it can act as an oracle for it.
struct KalmanOut {
  double loglik = 0.0;
  Vec smooth_mean;  // E[x_k | y_{1:T}], k = 0..T
  Vec smooth_var;
  Vec filt_mean, filt_var;
};
KalmanOut kalman_smoother(const ThetaVector&, const Observations&, double x0);
double kalman_loglik(const ThetaVector&, const Observations&, double x0);

/// (log-likelihood, central-difference score with step 1e-6).
std::pair<double, Vec> kalman_score_oracle(const ThetaVector&, const Observations&, double x0);

/// Gradient ascent on the exact log-likelihood; returns the stationary point.
ThetaVector kalman_ascend(const ThetaVector& init, const Observations&, double x0,
                          double grad_tol = 1e-5, int max_iter = 20000);

}  // namespace bridgesmc::models
