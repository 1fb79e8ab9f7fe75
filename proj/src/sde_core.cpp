#include "bridgesmc/sde_core.hpp"

#include <cstring>

namespace bridgesmc {

BridgeEvaluator::BridgeEvaluator(const DiffusionModel& model, const ThetaVector& theta,
                                 const Segment& seg, const double* x_start, const double* x_end)
    : model_(model), theta_(theta), seg_(seg), x_start_(x_start), x_end_(x_end) {
  const int d = model.dim();
  ctx_ = model.bridge_context(theta, seg, x_start, x_end);
  mu_.resize(d);
  amu_.resize(d);
  sc_.resize(d);
  dif_.resize(d);
  sig_.resize(static_cast<size_t>(d) * d);
  asig_.resize(static_cast<size_t>(d) * d);
  hess_.resize(static_cast<size_t>(d) * d);
}

void BridgeEvaluator::guided_drift(double t, const double* x, double* out) const {
  const int d = model_.dim();
  model_.drift(theta_, x, mu_.data());
  ctx_->score(t, x, sc_.data());
  model_.sigma_sq(theta_, x, sig_.data());
  for (int r = 0; r < d; ++r) {
    double v = 0.0;
    for (int c = 0; c < d; ++c) v += sig_[static_cast<size_t>(r) * d + c] * sc_[c];
    out[r] = mu_[r] + v;
  }
}

double BridgeEvaluator::correction_integrand(double t, const double* x) const {
  const int d = model_.dim();
  model_.drift(theta_, x, mu_.data());
  ctx_->aux_drift(t, x, amu_.data());
  ctx_->score(t, x, sc_.data());
  ctx_->hessian(t, x, hess_.data());
  model_.sigma_sq(theta_, x, sig_.data());
  ctx_->aux_sigma_sq(t, x, asig_.data());
  double out = 0.0;
  for (int r = 0; r < d; ++r) out += (mu_[r] - amu_[r]) * sc_[r];
  double tr = 0.0;
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      const double a = sig_[static_cast<size_t>(r) * d + c] - asig_[static_cast<size_t>(r) * d + c];
      const double b = -hess_[static_cast<size_t>(c) * d + r] - sc_[c] * sc_[r];
      tr += a * b;
    }
  }
  return out - 0.5 * tr;
}

void BridgeEvaluator::build(const WienerBlock& w, LatticePath& out) const {
  const int d = model_.dim();
  const int n = seg_.n_steps;
  if (w.seg != seg_) throw std::invalid_argument("build: increment block does not match segment");
  if (static_cast<int>(w.incr.size()) != n * d)
    throw std::invalid_argument("build: increment block has wrong size");
  out.seg = seg_;
  out.fail_step = -1;
  out.states.assign(static_cast<size_t>(n + 1) * d, 0.0);
  std::memcpy(out.state(0, d), x_start_, sizeof(double) * d);
  std::memcpy(out.state(n, d), x_end_, sizeof(double) * d);
  if (!all_finite({x_start_, static_cast<size_t>(d)}) || !model_.state_in_domain(x_start_)) {
    out.fail_step = 0;
    return;
  }
  const double h = seg_.dt();
  // the last increment never enters the recursion: the endpoint is pinned
  for (int j = 0; j + 1 < n; ++j) {
    const double* xj = out.state(j, d);
    double* xn = out.state(j + 1, d);
    const double t = seg_.s1 + j * h;
    guided_drift(t, xj, dif_.data());
    for (int r = 0; r < d; ++r) xn[r] = xj[r] + dif_[r] * h;
    model_.sigma_apply(theta_, xj, w.incr.data() + static_cast<size_t>(j) * d, dif_.data());
    bool bad = false;
    for (int r = 0; r < d; ++r) {
      xn[r] += dif_[r];
      if (!std::isfinite(xn[r])) bad = true;
    }
    if (bad || !model_.state_in_domain(xn)) {
      out.fail_step = j + 1;
      return;
    }
  }
}

double BridgeEvaluator::log_core(const LatticePath& path) const {
  if (!path.ok()) return kNegInf;
  const int d = model_.dim();
  const int n = seg_.n_steps;
  const double h = seg_.dt();
  // Riemann sum over grid nodes j = 0..n-1 (start point through last interior node)
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const double lj = correction_integrand(seg_.s1 + j * h, path.state(j, d));
    if (!std::isfinite(lj)) return kNegInf;
    acc += lj * h;
  }
  const double lf = ctx_->transition_logpdf();
  if (std::isnan(lf)) return kNegInf;
  return acc + lf;
}

double BridgeEvaluator::log_radon_nikodym(const LatticePath& path) const {
  const double lfbar = model_.proposal_logpdf(theta_, seg_.s1, x_start_, seg_.s2, x_end_);
  if (lfbar == kNegInf || std::isnan(lfbar))
    throw std::domain_error("log_radon_nikodym: proposal density vanishes at the endpoints");
  const double core = log_core(path);
  if (core == kNegInf) return kNegInf;
  return core - lfbar;
}

Vec guided_drift(const DiffusionModel& model, const ThetaVector& theta, double t, const Vec& x,
                 const Vec& x_end, const Segment& seg) {
  model.constraints().require_admissible(theta);
  if (!(t >= seg.s1) || !(t < seg.s2))
    throw std::domain_error("guided_drift: t outside [s1, s2)");
  if (!all_finite(x) || !all_finite(x_end))
    throw std::invalid_argument("guided_drift: non-finite state");
  BridgeEvaluator ev(model, theta, seg, x.data(), x_end.data());
  Vec out(model.dim());
  ev.guided_drift(t, x.data(), out.data());
  if (!all_finite(out))
    throw std::domain_error("guided_drift: non-finite auxiliary score at t=" + std::to_string(t) +
                            " on [" + std::to_string(seg.s1) + "," + std::to_string(seg.s2) + "]");
  return out;
}

double l_integrand(const DiffusionModel& model, const ThetaVector& theta, double t, const Vec& x,
                   const Vec& x_end, const Segment& seg) {
  model.constraints().require_admissible(theta);
  if (!(t >= seg.s1) || !(t < seg.s2)) throw std::domain_error("l_integrand: t outside [s1, s2)");
  BridgeEvaluator ev(model, theta, seg, x.data(), x_end.data());
  const double out = ev.correction_integrand(t, x.data());
  if (!std::isfinite(out))
    throw std::domain_error("l_integrand: non-finite score or hessian at t=" + std::to_string(t));
  return out;
}

LatticePath euler_bridge_path(const DiffusionModel& model, const ThetaVector& theta,
                              const Segment& seg, const Vec& x_start, const Vec& x_end,
                              const WienerBlock& w) {
  model.constraints().require_admissible(theta);
  if (!all_finite(x_start) || !all_finite(x_end))
    throw std::invalid_argument("euler_bridge_path: non-finite endpoint");
  BridgeEvaluator ev(model, theta, seg, x_start.data(), x_end.data());
  LatticePath out;
  ev.build(w, out);
  if (!out.ok())
    throw PathError("euler_bridge_path: state overflowed or left the domain at step " +
                        std::to_string(out.fail_step),
                    out.fail_step);
  return out;
}

double log_radon_nikodym(const DiffusionModel& model, const ThetaVector& theta, const Segment& seg,
                         const LatticePath& path) {
  const int d = model.dim();
  if (path.seg != seg) throw std::invalid_argument("log_radon_nikodym: path/segment mismatch");
  BridgeEvaluator ev(model, theta, seg, path.state(0, d), path.state(seg.n_steps, d));
  return ev.log_radon_nikodym(path);
}

}  // namespace bridgesmc
