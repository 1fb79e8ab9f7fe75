#include "bridgesmc/models/logistic.hpp"

#include "bridgesmc/sde_core.hpp"
#include "bridgesmc/special.hpp"

namespace bridgesmc::models {

namespace {

double percapita_drift(const ThetaVector& t, double x) {
  return 0.5 * t[2] * t[2] + t[0] - t[1] * x;
}

}  // namespace

std::pair<double, double> logistic_aux_coeffs(const ThetaVector& t, double s1, double x1,
                                              double s2, double x2) {
  if (!(x1 > 0.0) || !(x2 > 0.0))
    throw std::domain_error("logistic_aux_coeffs: endpoint states must be positive");
  if (!(s1 < s2)) throw std::invalid_argument("logistic_aux_coeffs: need s1 < s2");
  const double a = percapita_drift(t, x1);  // b(x_{s1}) / x_{s1}
  const double b = percapita_drift(t, x2);
  const double zeta = (a - b) / (s1 - s2);
  const double eta = (a * s2 - b * s1) / (s2 - s1);
  return {zeta, eta};
}

LognormalAux lognormal_aux_logdensity(double theta3, double zeta, double eta, double t, double x,
                                      double s2, double x_end) {
  const double v = theta3 * theta3 * (s2 - t);
  if (!(v > 0.0)) throw std::domain_error("lognormal_aux_logdensity: degenerate variance (t = s2)");
  if (!(x > 0.0) || !(x_end > 0.0))
    throw std::domain_error("lognormal_aux_logdensity: states must be positive");
  const double drift_rate = eta - 0.5 * theta3 * theta3;
  const double mu =
      std::log(x) + 0.5 * zeta * s2 * s2 + drift_rate * s2 - (0.5 * zeta * t * t + drift_rate * t);
  const double dev = mu - std::log(x_end);
  LognormalAux out;
  out.logpdf = -dev * dev / (2.0 * v) - 0.5 * std::log(2.0 * M_PI * v) - std::log(x_end);
  out.dlogdx = -dev / (x * v);
  out.d2logdx2 = (dev - 1.0) / (x * x * v);
  return out;
}

double nb_log_density(double theta4, double x, double y) {
  if (!(theta4 > 0.0) || !(x > 0.0) || !(y >= 0.0))
    throw std::domain_error("nb_log_density: need theta4 > 0, x > 0, y >= 0");
  return std::lgamma(y + theta4) - std::lgamma(theta4) - std::lgamma(y + 1.0) +
         theta4 * std::log(theta4 / (x + theta4)) + y * std::log(x / (x + theta4));
}

double nb_log_density_dtheta4(double theta4, double x, double y) {
  return digamma(y + theta4) - digamma(theta4) + std::log(theta4 / (x + theta4)) + 1.0 -
         (y + theta4) / (x + theta4);
}

double gbm_transition_logpdf(double theta3, double gap, double x, double x_next) {
  if (!(x > 0.0)) throw std::domain_error("gbm_transition_logpdf: state must be positive");
  if (!(x_next > 0.0)) return kNegInf;
  return normal_logpdf(std::log(x_next), std::log(x), theta3 * theta3 * gap) - std::log(x_next);
}

double gbm_transition_push(double theta3, double gap, double x, double z) {
  if (!(x > 0.0)) throw std::domain_error("gbm_transition_push: state must be positive");
  return x * std::exp(theta3 * std::sqrt(gap) * z);
}

std::pair<double, double> logistic_gamma_params(const ThetaVector& t, bool stationary) {
  if (stationary) return {2.0 * t[0] / (t[2] * t[2]), 2.0 * t[1] / (t[2] * t[2])};
  return {t[0] / (2.0 * t[2] * t[2]), t[1] / (2.0 * t[2] * t[2])};
}

namespace {

class LogisticBridgeCtx final : public BridgeContext {
 public:
  LogisticBridgeCtx(const ThetaVector& t, const Segment& seg, double x_start, double x_end)
      : theta3_(t[2]), seg_(seg), x_start_(x_start), x_end_(x_end) {
    std::tie(zeta_, eta_) = logistic_aux_coeffs(t, seg.s1, x_start, seg.s2, x_end);
  }

  void score(double t, const double* x, double* out) const override {
    out[0] = lognormal_aux_logdensity(theta3_, zeta_, eta_, t, x[0], seg_.s2, x_end_).dlogdx;
  }
  void hessian(double t, const double* x, double* out) const override {
    out[0] = lognormal_aux_logdensity(theta3_, zeta_, eta_, t, x[0], seg_.s2, x_end_).d2logdx2;
  }
  void aux_drift(double t, const double* x, double* out) const override {
    out[0] = (zeta_ * t + eta_) * x[0];
  }
  void aux_sigma_sq(double t, const double* x, double* out) const override {
    (void)t;
    out[0] = theta3_ * theta3_ * x[0] * x[0];
  }
  double transition_logpdf() const override {
    return lognormal_aux_logdensity(theta3_, zeta_, eta_, seg_.s1, x_start_, seg_.s2, x_end_).logpdf;
  }

 private:
  double theta3_, zeta_, eta_;
  Segment seg_;
  double x_start_, x_end_;
};

}  // namespace

LogisticModel::LogisticModel(LogisticConfig cfg)
    : cfg_(cfg),
      cons_(std::vector<ThetaInterval>{{0.0, kInf}, {0.0, kInf}, {0.0, kInf}, {0.0, kInf}}) {}

void LogisticModel::drift(const ThetaVector& t, const double* x, double* out) const {
  out[0] = percapita_drift(t, x[0]) * x[0];
}

void LogisticModel::sigma_apply(const ThetaVector& t, const double* x, const double* dw,
                                double* out) const {
  out[0] = t[2] * x[0] * dw[0];
}

void LogisticModel::sigma_sq(const ThetaVector& t, const double* x, double* out) const {
  out[0] = t[2] * t[2] * x[0] * x[0];
}

std::unique_ptr<BridgeContext> LogisticModel::bridge_context(const ThetaVector& t,
                                                             const Segment& seg,
                                                             const double* x_start,
                                                             const double* x_end) const {
  return std::make_unique<LogisticBridgeCtx>(t, seg, x_start[0], x_end[0]);
}

double LogisticModel::proposal_logpdf(const ThetaVector& t, double s1, const double* x, double s2,
                                      const double* x_next) const {
  return gbm_transition_logpdf(t[2], s2 - s1, x[0], x_next[0]);
}

void LogisticModel::proposal_push(const ThetaVector& t, double s1, const double* x, double s2,
                                  const double* z, double* out) const {
  out[0] = gbm_transition_push(t[2], s2 - s1, x[0], z[0]);
}

double LogisticModel::initial_logpdf(const ThetaVector& t, const double* x) const {
  const auto [alpha, lambda] = logistic_gamma_params(t, cfg_.stationary_gamma);
  if (!(x[0] > 0.0)) return kNegInf;
  return alpha * std::log(lambda) - std::lgamma(alpha) + (alpha - 1.0) * std::log(x[0]) -
         lambda * x[0];
}

void LogisticModel::initial_push(const ThetaVector& t, const double* u, double* out) const {
  const auto [alpha, lambda] = logistic_gamma_params(t, cfg_.stationary_gamma);
  out[0] = gamma_quantile(alpha, lambda, u[0]);
}

void LogisticModel::initial_score_theta(const ThetaVector& t, const double* x, double* out) const {
  const auto [alpha, lambda] = logistic_gamma_params(t, cfg_.stationary_gamma);
  const double dl_dalpha = std::log(lambda) - digamma(alpha) + std::log(x[0]);
  const double dl_dlambda = alpha / lambda - x[0];
  const double t3 = t[2];
  double da_d1, da_d3, dl_d2, dl_d3;
  if (cfg_.stationary_gamma) {
    da_d1 = 2.0 / (t3 * t3);
    da_d3 = -4.0 * t[0] / (t3 * t3 * t3);
    dl_d2 = 2.0 / (t3 * t3);
    dl_d3 = -4.0 * t[1] / (t3 * t3 * t3);
  } else {
    da_d1 = 1.0 / (2.0 * t3 * t3);
    da_d3 = -t[0] / (t3 * t3 * t3);
    dl_d2 = 1.0 / (2.0 * t3 * t3);
    dl_d3 = -t[1] / (t3 * t3 * t3);
  }
  out[0] = dl_dalpha * da_d1;
  out[1] = dl_dlambda * dl_d2;
  out[2] = dl_dalpha * da_d3 + dl_dlambda * dl_d3;
  out[3] = 0.0;
}

double LogisticModel::obs_logpdf(const ThetaVector& t, const std::vector<double>& y,
                                 const double* x) const {
  if (!(x[0] > 0.0)) return kNegInf;
  double out = 0.0;
  for (double yv : y) out += nb_log_density(t[3], x[0], yv);
  return out;
}

void LogisticModel::obs_score_theta(const ThetaVector& t, const std::vector<double>& y,
                                    const double* x, double* out) const {
  out[0] = out[1] = out[2] = out[3] = 0.0;
  for (double yv : y) out[3] += nb_log_density_dtheta4(t[3], x[0], yv);
}

Observations simulate_logistic_data(const ThetaVector& theta, const std::vector<double>& times,
                                    Rng& rng, int sim_level, bool stationary_gamma) {
  if (times.size() < 2) throw std::invalid_argument("simulate_logistic_data: need >= 2 times");
  LogisticModel model(LogisticConfig{stationary_gamma});
  const auto [alpha, lambda] = logistic_gamma_params(theta, stationary_gamma);

  Observations obs;
  obs.t0 = times.front();
  double x = gamma_quantile(alpha, lambda, rng.uniform());

  std::mt19937_64 gen(rng.raw());
  auto nb_draw = [&](double state) {
    // Gamma-Poisson mixture with mean = state
    const double r = theta[3];
    std::gamma_distribution<double> g(r, state / r);
    std::poisson_distribution<long> pois(std::max(1e-12, g(gen)));
    return static_cast<double>(pois(gen));
  };

  obs.initial_value = {nb_draw(x), nb_draw(x)};
  Vec mu(1), noise(1), xv{x};
  for (size_t i = 1; i < times.size(); ++i) {
    const Segment seg = make_segment(times[i - 1], times[i], sim_level);
    const double h = seg.dt();
    const double sd = std::sqrt(h);
    for (int j = 0; j < seg.n_steps; ++j) {
      model.drift(theta, xv.data(), mu.data());
      bool ok = false;
      for (int attempt = 0; attempt <= 100; ++attempt) {
        const double dw = sd * rng.normal();
        model.sigma_apply(theta, xv.data(), &dw, noise.data());
        const double next = xv[0] + mu[0] * h + noise[0];
        if (std::isfinite(next) && next > 0.0) {
          xv[0] = next;
          ok = true;
          break;
        }
      }
      if (!ok)
        throw PathError("simulate_logistic_data: positivity guard exhausted", j);
    }
    obs.times.push_back(times[i]);
    obs.values.push_back({nb_draw(xv[0]), nb_draw(xv[0])});
  }
  return obs;
}

}  // namespace bridgesmc::models
