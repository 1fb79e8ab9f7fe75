#include "bridgesmc/ccpf.hpp"

namespace bridgesmc {

namespace {

void normalize_or_throw(const Vec& lw, Vec& out, int time_index) {
  const double m = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(m))
    throw KernelError("coupled particle weights vanished at time " + std::to_string(time_index),
                      time_index);
  out.resize(lw.size());
  double total = 0.0;
  for (size_t i = 0; i < lw.size(); ++i) {
    out[i] = std::exp(lw[i] - m);
    total += out[i];
  }
  for (double& v : out) v /= total;
}

CoupledIndexDraw coupled_draw(const Vec& r1, const Vec& r2, Rng& rng, CcpfDiag* diag) {
  const auto draw = maximal_coupling_sample(r1, r2, rng);
  if (diag) {
    const double tv = total_variation(r1, r2);
    ++diag->draws;
    diag->meets += draw.i == draw.j ? 1 : 0;
    diag->expected_meets += 1.0 - tv;
    diag->meet_variance += tv * (1.0 - tv);
  }
  return draw;
}

// per-chain particle storage
struct Side {
  std::vector<Vec> x0;
  std::vector<std::vector<Vec>> X;
  std::vector<std::vector<WienerBlock>> W;
  std::vector<Vec> la;
  std::vector<Segment> grid;
  int level = 0;
};

double weigh(const DiffusionModel& model, const ThetaVector& theta, const Observations& obs,
             const Segment& seg, int k, const Vec& start, const WienerBlock& w, const Vec& end,
             LatticePath& scratch) {
  BridgeEvaluator ev(model, theta, seg, start.data(), end.data());
  ev.build(w, scratch);
  double out = ev.log_radon_nikodym(scratch);
  const double lg = model.obs_logpdf(theta, obs.value(k), end.data());
  out += std::isnan(lg) ? kNegInf : lg;
  return std::isnan(out) ? kNegInf : out;
}

}  // namespace

CoupledTrajectory ccpf_bs_sweep(const DiffusionModel& model, const ThetaVector& theta_fine,
                                const ThetaVector& theta_coarse, const CoupledTrajectory& v,
                                const Observations& obs, int n_particles, Rng& rng,
                                BackwardVariant variant, CcpfDiag* diag) {
  model.constraints().require_admissible(theta_fine);
  model.constraints().require_admissible(theta_coarse);
  if (n_particles < 2) throw std::invalid_argument("ccpf_bs_sweep: need at least 2 particles");
  if (v.fine.level != v.coarse.level + 1 || v.fine.level < 1)
    throw std::invalid_argument("ccpf_bs_sweep: levels must be adjacent with fine >= 1");

  const int d = model.dim();
  const int N = n_particles;
  const int ref = N - 1;
  const int T = obs.intervals();

  Side F, C;
  F.level = v.fine.level;
  C.level = v.coarse.level;
  F.grid = level_grid(obs, F.level);
  C.grid = level_grid(obs, C.level);
  for (Side* s : {&F, &C}) {
    s->x0.assign(N, Vec(d));
    s->X.resize(T + 1);
    s->W.resize(T + 1);
    s->la.resize(T + 1);
    for (int k = 1; k <= T; ++k) {
      s->X[k].assign(N, Vec(d));
      s->W[k].resize(N);
      s->la[k].assign(N, kNegInf);
    }
  }

  LatticePath scratch;
  Vec z(d);

  auto propose_pair = [&](int k, int i, const Vec& start_f, const Vec& start_c) {
    // shared endpoint noise, fine block guarded, coarse block its coarsening
    for (double& w : z) w = rng.normal();
    model.proposal_push(theta_fine, F.grid[k].s1, start_f.data(), F.grid[k].s2, z.data(),
                        F.X[k + 1][i].data());
    model.proposal_push(theta_coarse, C.grid[k].s1, start_c.data(), C.grid[k].s2, z.data(),
                        C.X[k + 1][i].data());
    auto prop = propose_block(model, theta_fine, F.grid[k], start_f.data(),
                              F.X[k + 1][i].data(), rng);
    F.la[k + 1][i] = [&] {
      if (!prop.ok) return kNegInf;
      BridgeEvaluator ev(model, theta_fine, F.grid[k], start_f.data(), F.X[k + 1][i].data());
      double out = ev.log_radon_nikodym(prop.path);
      const double lg = model.obs_logpdf(theta_fine, obs.value(k + 1), F.X[k + 1][i].data());
      out += std::isnan(lg) ? kNegInf : lg;
      return std::isnan(out) ? kNegInf : out;
    }();
    C.W[k + 1][i] = coarsen_increments(prop.block, d);
    F.W[k + 1][i] = std::move(prop.block);
    if (diag && coarsen_increments(F.W[k + 1][i], d).incr != C.W[k + 1][i].incr)
      ++diag->linkage_violations;
    C.la[k + 1][i] = weigh(model, theta_coarse, obs, C.grid[k], k + 1, start_c, C.W[k + 1][i],
                           C.X[k + 1][i], scratch);
  };

  // forward initialization over (t_0, t_1]
  Vec uu(d);
  for (int i = 0; i < N; ++i) {
    if (i == ref) continue;
    for (double& w : uu) w = rng.uniform();
    model.initial_push(theta_fine, uu.data(), F.x0[i].data());
    model.initial_push(theta_coarse, uu.data(), C.x0[i].data());
    propose_pair(0, i, F.x0[i], C.x0[i]);
    F.la[1][i] += obs.initial_observed()
                      ? model.obs_logpdf(theta_fine, obs.initial_value, F.x0[i].data())
                      : 0.0;
    C.la[1][i] += obs.initial_observed()
                      ? model.obs_logpdf(theta_coarse, obs.initial_value, C.x0[i].data())
                      : 0.0;
  }
  // reference slots
  {
    F.x0[ref] = v.fine.states[0];
    C.x0[ref] = v.coarse.states[0];
    for (int k = 1; k <= T; ++k) {
      F.X[k][ref] = v.fine.states[k];
      F.W[k][ref] = v.fine.blocks[k - 1];
      C.X[k][ref] = v.coarse.states[k];
      C.W[k][ref] = v.coarse.blocks[k - 1];
    }
    F.la[1][ref] = weigh(model, theta_fine, obs, F.grid[0], 1, F.x0[ref], F.W[1][ref], F.X[1][ref],
                         scratch) +
                   (obs.initial_observed()
                        ? model.obs_logpdf(theta_fine, obs.initial_value, F.x0[ref].data())
                        : 0.0);
    C.la[1][ref] = weigh(model, theta_coarse, obs, C.grid[0], 1, C.x0[ref], C.W[1][ref],
                         C.X[1][ref], scratch) +
                   (obs.initial_observed()
                        ? model.obs_logpdf(theta_coarse, obs.initial_value, C.x0[ref].data())
                        : 0.0);
  }

  // iterate forward with maximally coupled resampling
  std::vector<std::vector<int>> Af(T), Ac(T);
  Vec pf, pc;
  for (int k = 1; k < T; ++k) {
    normalize_or_throw(F.la[k], pf, k);
    normalize_or_throw(C.la[k], pc, k);
    Af[k].assign(N, ref);
    Ac[k].assign(N, ref);
    for (int i = 0; i < N - 1; ++i) {
      const auto a = coupled_draw(pf, pc, rng, diag);
      Af[k][i] = a.i;
      Ac[k][i] = a.j;
    }
    for (int i = 0; i < N; ++i) {
      if (i == ref) {
        F.la[k + 1][ref] = weigh(model, theta_fine, obs, F.grid[k], k + 1, v.fine.states[k],
                                 F.W[k + 1][ref], F.X[k + 1][ref], scratch);
        C.la[k + 1][ref] = weigh(model, theta_coarse, obs, C.grid[k], k + 1, v.coarse.states[k],
                                 C.W[k + 1][ref], C.X[k + 1][ref], scratch);
      } else {
        propose_pair(k, i, F.X[k][Af[k][i]], C.X[k][Ac[k][i]]);
      }
    }
  }

  // coupled backward selection
  std::vector<int> jf(T + 1, ref), jc(T + 1, ref);
  normalize_or_throw(F.la[T], pf, T);
  normalize_or_throw(C.la[T], pc, T);
  {
    const auto drawT = coupled_draw(pf, pc, rng, diag);
    jf[T] = drawT.i;
    jc[T] = drawT.j;
  }
  Vec lbf(N), lbc(N);
  for (int k = T - 1; k >= 1; --k) {
    if (variant == BackwardVariant::ancestral) {
      jf[k] = Af[k][jf[k + 1]];
      jc[k] = Ac[k][jc[k + 1]];
      continue;
    }
    for (int i = 0; i < N; ++i) {
      lbf[i] = backward_log_weight(model, theta_fine, obs, F.level, k, F.X[k][i],
                                   F.W[k + 1][jf[k + 1]], F.X[k + 1][jf[k + 1]], F.la[k][i]);
      lbc[i] = backward_log_weight(model, theta_coarse, obs, C.level, k, C.X[k][i],
                                   C.W[k + 1][jc[k + 1]], C.X[k + 1][jc[k + 1]], C.la[k][i]);
    }
    normalize_or_throw(lbf, pf, k);
    normalize_or_throw(lbc, pc, k);
    const auto draw = coupled_draw(pf, pc, rng, diag);
    jf[k] = draw.i;
    jc[k] = draw.j;
  }

  CoupledTrajectory out;
  out.fine.level = F.level;
  out.coarse.level = C.level;
  out.fine.states.resize(T + 1);
  out.coarse.states.resize(T + 1);
  out.fine.blocks.resize(T);
  out.coarse.blocks.resize(T);
  out.fine.states[0] = F.x0[jf[1]];
  out.coarse.states[0] = C.x0[jc[1]];
  out.meet.assign(T + 1, 0);
  out.meet[0] = jf[1] == jc[1];
  for (int k = 1; k <= T; ++k) {
    out.fine.states[k] = F.X[k][jf[k]];
    out.fine.blocks[k - 1] = F.W[k][jf[k]];
    out.coarse.states[k] = C.X[k][jc[k]];
    out.coarse.blocks[k - 1] = C.W[k][jc[k]];
    out.meet[k] = jf[k] == jc[k];
  }
  return out;
}

CoupledTrajectory coupled_initial_trajectory(const DiffusionModel& model, const ThetaVector& theta,
                                             int level, const Observations& obs, Rng& rng) {
  model.constraints().require_admissible(theta);
  if (level < 1) throw std::invalid_argument("coupled_initial_trajectory: level must be >= 1");
  const int d = model.dim();
  const int T = obs.intervals();
  const auto grid_f = level_grid(obs, level);

  CoupledTrajectory out;
  out.fine.level = level;
  out.coarse.level = level - 1;
  out.fine.states.resize(T + 1);
  out.coarse.states.resize(T + 1);
  out.fine.blocks.resize(T);
  out.coarse.blocks.resize(T);

  auto init = coupled_initial_sample(model, theta, theta, rng);
  out.fine.states[0] = std::move(init.first);
  out.coarse.states[0] = std::move(init.second);

  for (int k = 1; k <= T; ++k) {
    auto next = coupled_transition_sample(model, theta, theta, grid_f[k - 1].s1,
                                          out.fine.states[k - 1], out.coarse.states[k - 1],
                                          grid_f[k - 1].s2, rng);
    out.fine.states[k] = std::move(next.first);
    out.coarse.states[k] = std::move(next.second);
    out.fine.blocks[k - 1] = propose_block(model, theta, grid_f[k - 1],
                                           out.fine.states[k - 1].data(),
                                           out.fine.states[k].data(), rng)
                                 .block;
    out.coarse.blocks[k - 1] = coarsen_increments(out.fine.blocks[k - 1], d);
  }
  return out;
}

}  // namespace bridgesmc
