#include "bridgesmc/models/ou.hpp"

namespace bridgesmc::models {

std::pair<double, double> ou_aux_transition_params(double a, double theta2, double gap) {
  if (!(theta2 > 0.0) || !(gap > 0.0))
    throw std::invalid_argument("ou_aux_transition_params: need theta2 > 0, gap > 0");
  if (a > 0.0) throw std::invalid_argument("ou_aux_transition_params: reversion must be <= 0");
  const double f = std::exp(a * gap);
  const double u = 2.0 * a * gap;
  const double ratio = u == 0.0 ? 1.0 : std::expm1(u) / u;
  return {f, theta2 * theta2 * gap * ratio};
}

namespace {

class OuBridgeCtx final : public BridgeContext {
 public:
  OuBridgeCtx(double a, double theta2, const Segment& seg, double x_start, double x_end)
      : a_(a), theta2_(theta2), seg_(seg), x_start_(x_start), x_end_(x_end) {}

  void score(double t, const double* x, double* out) const override {
    const auto [f, v] = ou_aux_transition_params(a_, theta2_, seg_.s2 - t);
    out[0] = f * (x_end_ - f * x[0]) / v;
  }
  void hessian(double t, const double* x, double* out) const override {
    (void)x;
    const auto [f, v] = ou_aux_transition_params(a_, theta2_, seg_.s2 - t);
    out[0] = -f * f / v;
  }
  void aux_drift(double t, const double* x, double* out) const override {
    (void)t;
    out[0] = a_ * x[0];
  }
  void aux_sigma_sq(double t, const double* x, double* out) const override {
    (void)t;
    (void)x;
    out[0] = theta2_ * theta2_;
  }
  double transition_logpdf() const override {
    const auto [f, v] = ou_aux_transition_params(a_, theta2_, seg_.s2 - seg_.s1);
    return normal_logpdf(x_end_, f * x_start_, v);
  }

 private:
  double a_, theta2_;
  Segment seg_;
  double x_start_, x_end_;
};

}  // namespace

OuModel::OuModel(OuConfig cfg)
    : cfg_(cfg), cons_(std::vector<ThetaInterval>{{-kInf, 0.0}, {0.0, kInf}, {0.0, kInf}}) {
  if (!(cfg_.aux_reversion < 0.0) && !cfg_.aux_tracks_drift)
    throw std::invalid_argument("OuModel: aux reversion must be negative");
}

void OuModel::drift(const ThetaVector& t, const double* x, double* out) const {
  out[0] = t[0] * x[0];
}

void OuModel::sigma_apply(const ThetaVector& t, const double*, const double* dw,
                          double* out) const {
  out[0] = t[1] * dw[0];
}

void OuModel::sigma_sq(const ThetaVector& t, const double*, double* out) const {
  out[0] = t[1] * t[1];
}

std::unique_ptr<BridgeContext> OuModel::bridge_context(const ThetaVector& t, const Segment& seg,
                                                       const double* x_start,
                                                       const double* x_end) const {
  return std::make_unique<OuBridgeCtx>(guide_reversion(t), t[1], seg, x_start[0], x_end[0]);
}

double OuModel::proposal_logpdf(const ThetaVector& t, double s1, const double* x, double s2,
                                const double* x_next) const {
  const auto [f, v] = ou_aux_transition_params(guide_reversion(t), t[1], s2 - s1);
  return normal_logpdf(x_next[0], f * x[0], v);
}

void OuModel::proposal_push(const ThetaVector& t, double s1, const double* x, double s2,
                            const double* z, double* out) const {
  const auto [f, v] = ou_aux_transition_params(guide_reversion(t), t[1], s2 - s1);
  out[0] = f * x[0] + std::sqrt(v) * z[0];
}

double OuModel::initial_logpdf(const ThetaVector&, const double*) const {
  return 0.0;  // point mass at x0
}

void OuModel::initial_push(const ThetaVector&, const double*, double* out) const {
  out[0] = cfg_.x0;
}

void OuModel::initial_score_theta(const ThetaVector&, const double*, double* out) const {
  out[0] = out[1] = out[2] = 0.0;
}

double OuModel::obs_logpdf(const ThetaVector& t, const std::vector<double>& y,
                           const double* x) const {
  return normal_logpdf(y.at(0), x[0], t[2] * t[2]);
}

void OuModel::obs_score_theta(const ThetaVector& t, const std::vector<double>& y, const double* x,
                              double* out) const {
  const double d = y.at(0) - x[0];
  out[0] = out[1] = 0.0;
  out[2] = d * d / (t[2] * t[2] * t[2]) - 1.0 / t[2];
}

Observations simulate_ou_data(const ThetaVector& theta_true, double x0, int T, Rng& rng) {
  if (theta_true.size() != 3) throw std::invalid_argument("simulate_ou_data: need 3 parameters");
  Observations obs;
  obs.t0 = 0.0;
  double x = x0;
  for (int k = 1; k <= T; ++k) {
    const auto [f, q] = ou_aux_transition_params(theta_true[0], theta_true[1], 1.0);
    x = f * x + std::sqrt(q) * rng.normal();
    obs.times.push_back(static_cast<double>(k));
    obs.values.push_back({x + theta_true[2] * rng.normal()});
  }
  return obs;
}

KalmanOut kalman_smoother(const ThetaVector& t, const Observations& obs, double x0) {
  obs.validate();
  if (!(t[0] < 0.0) || !(t[1] > 0.0) || !(t[2] > 0.0))
    throw std::invalid_argument("kalman_smoother: parameters outside the admissible set");
  const int T = obs.intervals();
  const double R = t[2] * t[2];

  Vec fm(T + 1), fv(T + 1), pm(T + 1), pv(T + 1), Fs(T + 1);
  fm[0] = x0;
  fv[0] = 0.0;
  KalmanOut out;
  for (int k = 1; k <= T; ++k) {
    const double gap = obs.time(k) - obs.time(k - 1);
    const auto [f, q] = ou_aux_transition_params(t[0], t[1], gap);
    Fs[k] = f;
    pm[k] = f * fm[k - 1];
    pv[k] = f * f * fv[k - 1] + q;
    const double s = pv[k] + R;
    const double y = obs.value(k).at(0);
    out.loglik += normal_logpdf(y, pm[k], s);
    const double gain = pv[k] / s;
    fm[k] = pm[k] + gain * (y - pm[k]);
    fv[k] = (1.0 - gain) * pv[k];
  }

  out.smooth_mean.assign(T + 1, 0.0);
  out.smooth_var.assign(T + 1, 0.0);
  out.smooth_mean[T] = fm[T];
  out.smooth_var[T] = fv[T];
  for (int k = T - 1; k >= 0; --k) {
    const double g = pv[k + 1] > 0.0 ? fv[k] * Fs[k + 1] / pv[k + 1] : 0.0;
    out.smooth_mean[k] = fm[k] + g * (out.smooth_mean[k + 1] - pm[k + 1]);
    out.smooth_var[k] = fv[k] + g * g * (out.smooth_var[k + 1] - pv[k + 1]);
  }
  out.filt_mean = std::move(fm);
  out.filt_var = std::move(fv);
  return out;
}

double kalman_loglik(const ThetaVector& t, const Observations& obs, double x0) {
  return kalman_smoother(t, obs, x0).loglik;
}

std::pair<double, Vec> kalman_score_oracle(const ThetaVector& t, const Observations& obs,
                                           double x0) {
  const double h = 1e-6;
  Vec score(3);
  for (int c = 0; c < 3; ++c) {
    ThetaVector up = t, dn = t;
    up[c] += h;
    dn[c] -= h;
    score[c] = (kalman_loglik(up, obs, x0) - kalman_loglik(dn, obs, x0)) / (2.0 * h);
  }
  return {kalman_loglik(t, obs, x0), score};
}

ThetaVector kalman_ascend(const ThetaVector& init, const Observations& obs, double x0,
                          double grad_tol, int max_iter) {
  ThetaVector t = init;
  double ll = kalman_loglik(t, obs, x0);
  double step = 0.05;
  for (int it = 0; it < max_iter; ++it) {
    const Vec s = kalman_score_oracle(t, obs, x0).second;
    double norm = 0.0;
    for (double v : s) norm = std::max(norm, std::fabs(v));
    if (norm <= grad_tol) break;
    bool moved = false;
    while (step > 1e-12) {
      ThetaVector cand = t;
      for (int c = 0; c < 3; ++c) cand[c] += step * s[c];
      // stay clear of the boundary by more than the finite-difference step
      const bool ok = cand[0] < -1e-5 && cand[1] > 1e-5 && cand[2] > 1e-5;
      if (ok) {
        const double cll = kalman_loglik(cand, obs, x0);
        if (cll > ll) {
          t = std::move(cand);
          ll = cll;
          step *= 1.3;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return t;
}

}  // namespace bridgesmc::models
