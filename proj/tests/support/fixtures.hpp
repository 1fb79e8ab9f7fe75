#pragma once

#include "bridgesmc/models/logistic.hpp"
#include "bridgesmc/models/ou.hpp"
#include "bridgesmc/special.hpp"

namespace testfix {

using namespace bridgesmc;

inline constexpr std::uint64_t kOuDataSeed = 8;
inline const ThetaVector kOuTheta{-0.3, 0.8, 0.55};
inline constexpr double kOuX0 = 1.0;

/// Shared observation set for the linear-Gaussian model (T = 10, unit times).
inline const Observations& ou_data() {
  static const Observations obs = [] {
    Rng rng(kOuDataSeed);
    return models::simulate_ou_data(kOuTheta, kOuX0, 10, rng);
  }();
  return obs;
}

inline models::OuModel ou_paper_model() {
  return models::OuModel{models::OuConfig{-0.1, false, kOuX0}};
}

inline models::OuModel ou_exact_aux_model() {
  return models::OuModel{models::OuConfig{-0.1, true, kOuX0}};
}

inline const ThetaVector kLogisticTheta{2.0, 2.0 / 522.8, 0.8, 10.0};

/// Driftless unit-variance dynamics guided by the Brownian transition itself,
/// standard-normal initial law and unit-variance Gaussian observations. Theta
/// (one coordinate) enters nothing, so every score summand vanishes.
class BrownianToyModel : public DiffusionModel {
 public:
  BrownianToyModel() : cons_(std::vector<ThetaInterval>{{-kInf, kInf}}) {}

  int dim() const override { return 1; }
  int theta_dim() const override { return 1; }
  const ThetaConstraints& constraints() const override { return cons_; }

  void drift(const ThetaVector&, const double*, double* out) const override { out[0] = 0.0; }
  void sigma_apply(const ThetaVector&, const double*, const double* dw, double* out) const override {
    out[0] = dw[0];
  }
  void sigma_sq(const ThetaVector&, const double*, double* out) const override { out[0] = 1.0; }

  class Ctx final : public BridgeContext {
   public:
    Ctx(const Segment& seg, double x_start, double x_end)
        : seg_(seg), x_start_(x_start), x_end_(x_end) {}
    void score(double t, const double* x, double* out) const override {
      out[0] = (x_end_ - x[0]) / (seg_.s2 - t);
    }
    void hessian(double t, const double*, double* out) const override {
      out[0] = -1.0 / (seg_.s2 - t);
    }
    void aux_drift(double, const double*, double* out) const override { out[0] = 0.0; }
    void aux_sigma_sq(double, const double*, double* out) const override { out[0] = 1.0; }
    double transition_logpdf() const override {
      return normal_logpdf(x_end_, x_start_, seg_.s2 - seg_.s1);
    }

   private:
    Segment seg_;
    double x_start_, x_end_;
  };

  std::unique_ptr<BridgeContext> bridge_context(const ThetaVector&, const Segment& seg,
                                                const double* x_start,
                                                const double* x_end) const override {
    return std::make_unique<Ctx>(seg, x_start[0], x_end[0]);
  }

  double proposal_logpdf(const ThetaVector&, double s1, const double* x, double s2,
                         const double* x_next) const override {
    return normal_logpdf(x_next[0], x[0], s2 - s1);
  }
  void proposal_push(const ThetaVector&, double s1, const double* x, double s2, const double* z,
                     double* out) const override {
    out[0] = x[0] + std::sqrt(s2 - s1) * z[0];
  }

  double initial_logpdf(const ThetaVector&, const double* x) const override {
    return normal_logpdf(x[0], 0.0, 1.0);
  }
  void initial_push(const ThetaVector&, const double* u, double* out) const override {
    out[0] = normal_quantile(std::min(std::max(u[0], 1e-16), 1.0 - 1e-16));
  }
  void initial_score_theta(const ThetaVector&, const double*, double* out) const override {
    out[0] = 0.0;
  }

  double obs_logpdf(const ThetaVector&, const std::vector<double>& y,
                    const double* x) const override {
    return normal_logpdf(y.at(0), x[0], obs_var_);
  }
  bool has_obs_score_theta() const override { return true; }
  void obs_score_theta(const ThetaVector&, const std::vector<double>&, const double*,
                       double* out) const override {
    out[0] = 0.0;
  }
  bool dynamics_depend_on(int) const override { return false; }

  void set_obs_var(double v) { obs_var_ = v; }

 private:
  ThetaConstraints cons_;
  double obs_var_ = 1.0;
};

/// Brownian dynamics with theta entering the observation variance only.
class ObsOnlyThetaModel : public BrownianToyModel {
 public:
  ObsOnlyThetaModel() : cons_(std::vector<ThetaInterval>{{0.0, kInf}}) {}
  const ThetaConstraints& constraints() const override { return cons_; }
  double obs_logpdf(const ThetaVector& t, const std::vector<double>& y,
                    const double* x) const override {
    return normal_logpdf(y.at(0), x[0], t[0] * t[0]);
  }
  void obs_score_theta(const ThetaVector& t, const std::vector<double>& y, const double* x,
                       double* out) const override {
    const double d = y.at(0) - x[0];
    out[0] = d * d / (t[0] * t[0] * t[0]) - 1.0 / t[0];
  }

 private:
  ThetaConstraints cons_;
};

/// Same observation law but no analytic gradient, which forces the
/// finite-difference route through the score summand.
class ObsOnlyThetaModelFd : public ObsOnlyThetaModel {
 public:
  bool has_obs_score_theta() const override { return false; }
  bool dynamics_depend_on(int) const override { return true; }
};

inline Observations toy_observations(int T, double spacing = 1.0) {
  Observations obs;
  obs.t0 = 0.0;
  Rng rng(7);
  for (int k = 1; k <= T; ++k) {
    obs.times.push_back(spacing * k);
    obs.values.push_back({0.3 * rng.normal()});
  }
  return obs;
}

}  // namespace testfix
