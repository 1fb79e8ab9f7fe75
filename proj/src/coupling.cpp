#include "bridgesmc/coupling.hpp"

#include <cstring>

namespace bridgesmc {

double total_variation(std::span<const double> r1, std::span<const double> r2) {
  double tv = 0.0;
  for (size_t k = 0; k < r1.size(); ++k) tv += std::fabs(r1[k] - r2[k]);
  return 0.5 * tv;
}

void validate_categorical_pair(std::span<const double> r1, std::span<const double> r2) {
  if (r1.size() != r2.size() || r1.empty())
    throw std::invalid_argument("categorical pair: length mismatch");
  double s1 = 0.0, s2 = 0.0;
  for (size_t k = 0; k < r1.size(); ++k) {
    if (!(r1[k] > 0.0) || !(r2[k] > 0.0))
      throw std::invalid_argument("categorical pair: entries must be strictly positive");
    s1 += r1[k];
    s2 += r2[k];
  }
  if (std::fabs(s1 - 1.0) > 1e-12 || std::fabs(s2 - 1.0) > 1e-12)
    throw std::invalid_argument("categorical pair: pmfs must sum to 1");
}

int categorical_sample(std::span<const double> w, double total, Rng& rng) {
  const double target = rng.uniform() * total;
  double acc = 0.0;
  const int n = static_cast<int>(w.size());
  for (int k = 0; k < n; ++k) {
    acc += w[k];
    if (target <= acc) return k;
  }
  return n - 1;  // guard against roundoff overshoot
}

CoupledIndexDraw maximal_coupling_sample(std::span<const double> r1, std::span<const double> r2,
                                         Rng& rng) {
  const int n = static_cast<int>(r1.size());
  if (r2.size() != r1.size() || n == 0)
    throw std::invalid_argument("maximal_coupling_sample: length mismatch");
  double overlap = 0.0;
  for (int k = 0; k < n; ++k) overlap += std::min(r1[k], r2[k]);

  CoupledIndexDraw out;
  const double u = rng.uniform();
  if (u < overlap || overlap >= 1.0 - 1e-12) {
    // overlap branch: one draw from min(r1, r2)/overlap
    double target = rng.uniform() * overlap;
    double acc = 0.0;
    int idx = n - 1;
    for (int k = 0; k < n; ++k) {
      acc += std::min(r1[k], r2[k]);
      if (target <= acc) {
        idx = k;
        break;
      }
    }
    out.i = out.j = idx;
    out.met = true;
    return out;
  }
  // residual branch: independent draws from the normalized leftovers
  const double rest = 1.0 - overlap;
  double t1 = rng.uniform() * rest;
  double t2 = rng.uniform() * rest;
  double a1 = 0.0, a2 = 0.0;
  int i = n - 1, j = n - 1;
  bool got1 = false, got2 = false;
  for (int k = 0; k < n; ++k) {
    const double m = std::min(r1[k], r2[k]);
    a1 += r1[k] - m;
    a2 += r2[k] - m;
    if (!got1 && t1 <= a1) {
      i = k;
      got1 = true;
    }
    if (!got2 && t2 <= a2) {
      j = k;
      got2 = true;
    }
    if (got1 && got2) break;
  }
  out.i = i;
  out.j = j;
  out.met = false;
  return out;
}

WienerBlock coarsen_increments(const WienerBlock& fine, int d) {
  const int n = fine.seg.n_steps;
  if (n % 2 != 0) throw std::invalid_argument("coarsen_increments: step count must be even");
  WienerBlock out;
  out.seg = Segment{fine.seg.s1, fine.seg.s2, n / 2};
  out.incr.resize(static_cast<size_t>(n / 2) * d);
  for (int j = 0; j < n / 2; ++j)
    for (int r = 0; r < d; ++r)
      out.incr[static_cast<size_t>(j) * d + r] =
          fine.incr[static_cast<size_t>(2 * j) * d + r] +
          fine.incr[static_cast<size_t>(2 * j + 1) * d + r];
  return out;
}

WienerBlock sample_wiener_block(const Segment& seg, int d, Rng& rng) {
  WienerBlock out;
  out.seg = seg;
  out.incr.resize(static_cast<size_t>(seg.n_steps) * d);
  const double sd = std::sqrt(seg.dt());
  for (double& v : out.incr) v = sd * rng.normal();
  return out;
}

std::pair<Vec, Vec> coupled_transition_sample(const DiffusionModel& model,
                                              const ThetaVector& theta,
                                              const ThetaVector& theta_bar, double s1, const Vec& x,
                                              const Vec& x_bar, double s2, Rng& rng) {
  const int d = model.dim();
  Vec z(d);
  for (double& v : z) v = rng.normal();
  Vec out1(d), out2(d);
  model.proposal_push(theta, s1, x.data(), s2, z.data(), out1.data());
  model.proposal_push(theta_bar, s1, x_bar.data(), s2, z.data(), out2.data());
  if (!all_finite(out1) || !all_finite(out2))
    throw std::runtime_error("coupled_transition_sample: sampler produced a non-finite state");
  return {std::move(out1), std::move(out2)};
}

std::pair<Vec, Vec> coupled_initial_sample(const DiffusionModel& model, const ThetaVector& theta,
                                           const ThetaVector& theta_bar, Rng& rng) {
  const int d = model.dim();
  Vec u(d);
  for (double& v : u) v = rng.uniform();
  Vec out1(d), out2(d);
  model.initial_push(theta, u.data(), out1.data());
  model.initial_push(theta_bar, u.data(), out2.data());
  if (!all_finite(out1) || !all_finite(out2))
    throw std::runtime_error("coupled_initial_sample: sampler produced a non-finite state");
  return {std::move(out1), std::move(out2)};
}

ProposedBridge sample_block_guarded(const DiffusionModel& model, const ThetaVector& theta,
                                    const Segment& seg, const double* x_start, const double* x_end,
                                    Rng& rng, int max_retry) {
  const int d = model.dim();
  const int n = seg.n_steps;
  BridgeEvaluator ev(model, theta, seg, x_start, x_end);

  ProposedBridge out;
  out.block.seg = seg;
  out.block.incr.assign(static_cast<size_t>(n) * d, 0.0);
  out.path.seg = seg;
  out.path.fail_step = -1;
  out.path.states.assign(static_cast<size_t>(n + 1) * d, 0.0);
  std::memcpy(out.path.state(0, d), x_start, sizeof(double) * d);
  std::memcpy(out.path.state(n, d), x_end, sizeof(double) * d);

  const double h = seg.dt();
  const double sd = std::sqrt(h);
  Vec drift(d), noise(d);
  for (int j = 0; j < n; ++j) {
    double* dw = out.block.incr.data() + static_cast<size_t>(j) * d;
    if (j + 1 == n) {
      // last increment does not enter the pinned recursion; plain draw
      for (int r = 0; r < d; ++r) dw[r] = sd * rng.normal();
      break;
    }
    const double* xj = out.path.state(j, d);
    double* xn = out.path.state(j + 1, d);
    ev.guided_drift(seg.s1 + j * h, xj, drift.data());
    bool accepted = false;
    for (int attempt = 0; attempt <= max_retry; ++attempt) {
      for (int r = 0; r < d; ++r) dw[r] = sd * rng.normal();
      model.sigma_apply(theta, xj, dw, noise.data());
      bool good = true;
      for (int r = 0; r < d; ++r) {
        xn[r] = xj[r] + drift[r] * h + noise[r];
        if (!std::isfinite(xn[r])) good = false;
      }
      if (good && model.state_in_domain(xn)) {
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw PathError("sample_block_guarded: no admissible increment after " +
                          std::to_string(max_retry) + " retries at step " + std::to_string(j),
                      j);
  }
  return out;
}

ProposalDraw propose_block(const DiffusionModel& model, const ThetaVector& theta,
                           const Segment& seg, const double* x_start, const double* x_end,
                           Rng& rng) {
  try {
    ProposedBridge pb = sample_block_guarded(model, theta, seg, x_start, x_end, rng);
    return {std::move(pb.block), std::move(pb.path), true};
  } catch (const PathError&) {
    return {sample_wiener_block(seg, model.dim(), rng), LatticePath{}, false};
  }
}

}  // namespace bridgesmc
