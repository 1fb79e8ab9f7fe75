#include "bridgesmc/cpf.hpp"

namespace bridgesmc {

namespace {

// exp-shifted linear weights from log weights; throws KernelError when nothing survives
void normalize_log_weights(const Vec& lw, Vec& out, int time_index) {
  const double m = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(m))
    throw KernelError("particle weights vanished at time " + std::to_string(time_index),
                      time_index);
  out.resize(lw.size());
  double total = 0.0;
  for (size_t i = 0; i < lw.size(); ++i) {
    out[i] = std::exp(lw[i] - m);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

double initial_obs_term(const DiffusionModel& model, const ThetaVector& theta,
                        const Observations& obs, const Vec& x0) {
  return obs.initial_observed() ? model.obs_logpdf(theta, obs.initial_value, x0.data()) : 0.0;
}

}  // namespace

double forward_log_weight(const DiffusionModel& model, const ThetaVector& theta,
                          const Observations& obs, int level, int k, const Vec& x_prev,
                          const WienerBlock& w, const Vec& x_k) {
  const Segment seg = make_segment(obs.time(k - 1), obs.time(k), level);
  BridgeEvaluator ev(model, theta, seg, x_prev.data(), x_k.data());
  LatticePath path;
  ev.build(w, path);
  const double lg = model.obs_logpdf(theta, obs.value(k), x_k.data());
  const double lr = ev.log_radon_nikodym(path);
  if (std::isnan(lg) || std::isnan(lr)) return kNegInf;
  return lg + lr;
}

double backward_log_weight(const DiffusionModel& model, const ThetaVector& theta,
                           const Observations& obs, int level, int k, const Vec& x_k_i,
                           const WienerBlock& w_next, const Vec& x_next,
                           double cached_log_alpha) {
  const Segment seg = make_segment(obs.time(k), obs.time(k + 1), level);
  const double lf = model.proposal_logpdf(theta, seg.s1, x_k_i.data(), seg.s2, x_next.data());
  if (std::isnan(lf) || lf == kNegInf) return kNegInf;
  BridgeEvaluator ev(model, theta, seg, x_k_i.data(), x_next.data());
  LatticePath path;
  ev.build(w_next, path);
  const double lr = ev.log_radon_nikodym(path);
  if (std::isnan(lr)) return kNegInf;
  return cached_log_alpha + lf + lr;
}

Trajectory cpf_bs_sweep(const DiffusionModel& model, const ThetaVector& theta, int level,
                        const Trajectory& reference, const Observations& obs, int n_particles,
                        Rng& rng, BackwardVariant variant, SweepStats* stats) {
  model.constraints().require_admissible(theta);
  if (n_particles < 2) throw std::invalid_argument("cpf_bs_sweep: need at least 2 particles");
  if (reference.level != level)
    throw std::invalid_argument("cpf_bs_sweep: reference level mismatch");

  const int d = model.dim();
  const int N = n_particles;
  const int ref = N - 1;  // reference slot
  const int T = obs.intervals();
  const auto grid = level_grid(obs, level);
  if (static_cast<int>(reference.states.size()) != T + 1 ||
      static_cast<int>(reference.blocks.size()) != T)
    throw std::invalid_argument("cpf_bs_sweep: reference inconsistent with observations");

  std::vector<Vec> x0(N);
  std::vector<std::vector<Vec>> X(T + 1);          // X[k][i], k >= 1: state before resampling
  std::vector<std::vector<WienerBlock>> W(T + 1);  // W[k][i]: noise used on (t_{k-1}, t_k]
  std::vector<Vec> la(T + 1);                      // log alpha per time
  std::vector<std::vector<int>> A(T);              // A[k][i]: ancestor drawn at time k
  for (int k = 1; k <= T; ++k) {
    X[k].assign(N, Vec(d));
    W[k].resize(N);
    la[k].assign(N, kNegInf);
  }

  LatticePath scratch;
  Vec noise(d), uu(d), probs;

  // forward initialization over (t_0, t_1]
  for (int i = 0; i < N; ++i) {
    if (i == ref) {
      x0[i] = reference.states[0];
      X[1][i] = reference.states[1];
      W[1][i] = reference.blocks[0];
      BridgeEvaluator ev(model, theta, grid[0], x0[i].data(), X[1][i].data());
      ev.build(W[1][i], scratch);
      la[1][i] = ev.log_radon_nikodym(scratch);
    } else {
      x0[i].resize(d);
      for (double& v : uu) v = rng.uniform();
      model.initial_push(theta, uu.data(), x0[i].data());
      for (double& v : noise) v = rng.normal();
      model.proposal_push(theta, grid[0].s1, x0[i].data(), grid[0].s2, noise.data(),
                          X[1][i].data());
      auto prop = propose_block(model, theta, grid[0], x0[i].data(), X[1][i].data(), rng);
      W[1][i] = std::move(prop.block);
      if (prop.ok) {
        BridgeEvaluator ev(model, theta, grid[0], x0[i].data(), X[1][i].data());
        la[1][i] = ev.log_radon_nikodym(prop.path);
      } else {
        la[1][i] = kNegInf;
      }
    }
    const double lg = model.obs_logpdf(theta, obs.value(1), X[1][i].data());
    la[1][i] += std::isnan(lg) ? kNegInf : lg;
    la[1][i] += initial_obs_term(model, theta, obs, x0[i]);
    if (std::isnan(la[1][i])) la[1][i] = kNegInf;
  }

  // iterate forward: resample time-k cloud, propagate to k+1
  for (int k = 1; k < T; ++k) {
    normalize_log_weights(la[k], probs, k);
    A[k].assign(N, ref);
    for (int i = 0; i < N - 1; ++i) A[k][i] = categorical_sample(probs, 1.0, rng);

    for (int i = 0; i < N; ++i) {
      if (i == ref) {
        X[k + 1][i] = reference.states[k + 1];
        W[k + 1][i] = reference.blocks[k];
        BridgeEvaluator ev(model, theta, grid[k], reference.states[k].data(),
                           X[k + 1][i].data());
        ev.build(W[k + 1][i], scratch);
        la[k + 1][i] = ev.log_radon_nikodym(scratch);
      } else {
        const Vec& start = X[k][A[k][i]];
        for (double& v : noise) v = rng.normal();
        model.proposal_push(theta, grid[k].s1, start.data(), grid[k].s2, noise.data(),
                            X[k + 1][i].data());
        auto prop = propose_block(model, theta, grid[k], start.data(), X[k + 1][i].data(), rng);
        W[k + 1][i] = std::move(prop.block);
        if (prop.ok) {
          BridgeEvaluator ev(model, theta, grid[k], start.data(), X[k + 1][i].data());
          la[k + 1][i] = ev.log_radon_nikodym(prop.path);
        } else {
          la[k + 1][i] = kNegInf;
        }
      }
      const double lg = model.obs_logpdf(theta, obs.value(k + 1), X[k + 1][i].data());
      la[k + 1][i] += std::isnan(lg) ? kNegInf : lg;
      if (std::isnan(la[k + 1][i])) la[k + 1][i] = kNegInf;
    }
  }

  if (stats) {
    stats->reference_slot_hits = 0;
    for (int k = 1; k <= T; ++k)
      if (X[k][ref] == reference.states[k] && W[k][ref].incr == reference.blocks[k - 1].incr)
        ++stats->reference_slot_hits;
  }

  // backward selection
  std::vector<int> j(T + 1, ref);
  normalize_log_weights(la[T], probs, T);
  j[T] = categorical_sample(probs, 1.0, rng);
  Vec lb(N);
  for (int k = T - 1; k >= 1; --k) {
    if (variant == BackwardVariant::ancestral) {
      j[k] = A[k][j[k + 1]];
      continue;
    }
    for (int i = 0; i < N; ++i) {
      lb[i] = backward_log_weight(model, theta, obs, level, k, X[k][i], W[k + 1][j[k + 1]],
                                  X[k + 1][j[k + 1]], la[k][i]);
    }
    normalize_log_weights(lb, probs, k);
    j[k] = categorical_sample(probs, 1.0, rng);
  }

  Trajectory out;
  out.level = level;
  out.states.resize(T + 1);
  out.blocks.resize(T);
  out.states[0] = x0[j[1]];
  for (int k = 1; k <= T; ++k) {
    out.states[k] = X[k][j[k]];
    out.blocks[k - 1] = W[k][j[k]];
  }
  return out;
}

}  // namespace bridgesmc
