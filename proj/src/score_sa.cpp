#include "bridgesmc/score_sa.hpp"

#include <functional>

namespace bridgesmc {

namespace {

// log g + log-core terms of the summand at a fixed skeleton/noise, as a function of theta
double summand_objective(const DiffusionModel& model, const ThetaVector& theta,
                         const Trajectory& z, const Observations& obs) {
  const int T = obs.intervals();
  double acc = model.initial_logpdf(theta, z.states[0].data());
  if (obs.initial_observed())
    acc += model.obs_logpdf(theta, obs.initial_value, z.states[0].data());
  LatticePath scratch;
  for (int k = 1; k <= T; ++k) {
    const Segment& seg = z.blocks[k - 1].seg;
    BridgeEvaluator ev(model, theta, seg, z.states[k - 1].data(), z.states[k].data());
    ev.build(z.blocks[k - 1], scratch);
    const double core = ev.log_core(scratch);
    const double lg = model.obs_logpdf(theta, obs.value(k), z.states[k].data());
    if (!std::isfinite(core) || !std::isfinite(lg)) return kNegInf;
    acc += core + lg;
  }
  return acc;
}

double fd_coordinate(const DiffusionModel& model, const ThetaVector& theta, const Trajectory& z,
                     const Observations& obs, int coord, double step) {
  const auto& cons = model.constraints();
  auto try_step = [&](double h) -> std::optional<double> {
    ThetaVector up = theta, dn = theta;
    up[coord] += h;
    dn[coord] -= h;
    if (!cons.admissible(up) || !cons.admissible(dn)) return std::nullopt;
    const double gu = summand_objective(model, up, z, obs);
    const double gd = summand_objective(model, dn, z, obs);
    if (!std::isfinite(gu) || !std::isfinite(gd)) return std::nullopt;
    return (gu - gd) / (2.0 * h);
  };
  if (auto v = try_step(step)) return *v;
  // shrink and retry: stay well inside the admissible interval and keep the
  // perturbation small relative to the coordinate itself (a step near the
  // coordinate's own magnitude can push the rebuilt path out of the domain);
  // keep halving while the evaluation stays out of reach
  const double room = cons.boundary_distance(coord, theta[coord]);
  double h = step / 2.0;
  if (std::isfinite(room)) h = std::min(h, 0.45 * room);
  if (theta[coord] != 0.0) h = std::min(h, 0.15 * std::fabs(theta[coord]));
  for (int attempt = 0; attempt < 8; ++attempt, h /= 2.0) {
    if (auto v = try_step(h)) return *v;
  }
  throw std::domain_error("score_summand: finite-difference step failed for coordinate " +
                          std::to_string(coord));
}

}  // namespace

Vec score_summand(const DiffusionModel& model, const ThetaVector& theta, int level,
                  const Trajectory& z, const Observations& obs, double fd_step) {
  model.constraints().require_admissible(theta);
  if (z.level != level) throw std::invalid_argument("score_summand: trajectory level mismatch");
  if (!(fd_step > 0.0)) throw std::invalid_argument("score_summand: fd_step must be positive");

  const int dth = model.theta_dim();
  const int T = obs.intervals();
  Vec out(dth, 0.0);

  // analytic route for coordinates outside the dynamics
  std::vector<int> fd_coords;
  for (int c = 0; c < dth; ++c) {
    if (!model.dynamics_depend_on(c) && model.has_obs_score_theta()) continue;
    fd_coords.push_back(c);
  }
  if (static_cast<int>(fd_coords.size()) < dth) {
    Vec g(dth), acc(dth, 0.0);
    for (int k = 1; k <= T; ++k) {
      model.obs_score_theta(theta, obs.value(k), z.states[k].data(), g.data());
      for (int c = 0; c < dth; ++c) acc[c] += g[c];
    }
    if (obs.initial_observed()) {
      model.obs_score_theta(theta, obs.initial_value, z.states[0].data(), g.data());
      for (int c = 0; c < dth; ++c) acc[c] += g[c];
    }
    model.initial_score_theta(theta, z.states[0].data(), g.data());
    for (int c = 0; c < dth; ++c) acc[c] += g[c];
    for (int c = 0; c < dth; ++c)
      if (!model.dynamics_depend_on(c)) out[c] = acc[c];
  }

  for (int c : fd_coords) out[c] = fd_coordinate(model, theta, z, obs, c, fd_step);
  return out;
}

namespace {

double level_fd_step(const SaOptions& opts, int level) {
  return opts.fd_step > 0.0 ? opts.fd_step : std::pow(2.0, -level);
}

}  // namespace

namespace {

double clip_move(double delta, const Vec& caps, int coord) {
  if (caps.empty()) return delta;
  const double cap = caps.size() == 1 ? caps[0] : caps.at(coord);
  if (cap <= 0.0) return delta;
  return std::min(std::max(delta, -cap), cap);
}

}  // namespace

SaPath sa_chain_run(const DiffusionModel& model, const ThetaVector& theta0, int level,
                    long n_iters, const SaOptions& opts, const Observations& obs, Rng& rng) {
  model.constraints().require_admissible(theta0);
  const double fd = level_fd_step(opts, level);
  const int dth = model.theta_dim();

  SaPath out;
  out.iterates.reserve(n_iters + 1);
  out.iterates.push_back(theta0);
  ThetaVector theta = theta0;
  Trajectory z = sample_prior_trajectory(model, theta, level, obs, rng);
  for (long n = 1; n <= n_iters; ++n) {
    z = cpf_bs_sweep(model, theta, level, z, obs, opts.n_particles, rng, opts.variant);
    const Vec h = score_summand(model, theta, level, z, obs, fd);
    for (int c = 0; c < dth; ++c) theta[c] += clip_move(opts.gamma.at(n, c) * h[c], opts.step_clip, c);
    out.projections += opts.box.project(theta);
    model.constraints().require_admissible(theta);
    out.iterates.push_back(theta);
  }
  return out;
}

CoupledSaPath coupled_sa_chain_run(const DiffusionModel& model, const ThetaVector& theta0,
                                   int level, long n_iters, const SaOptions& opts,
                                   const Observations& obs, Rng& rng) {
  model.constraints().require_admissible(theta0);
  const double fd_f = level_fd_step(opts, level);
  const double fd_c = level_fd_step(opts, level - 1);
  const int dth = model.theta_dim();

  CoupledSaPath out;
  out.fine.reserve(n_iters + 1);
  out.coarse.reserve(n_iters + 1);
  out.fine.push_back(theta0);
  out.coarse.push_back(theta0);
  ThetaVector tf = theta0, tc = theta0;
  CoupledTrajectory v = coupled_initial_trajectory(model, theta0, level, obs, rng);
  for (long n = 1; n <= n_iters; ++n) {
    v = ccpf_bs_sweep(model, tf, tc, v, obs, opts.n_particles, rng, opts.variant);
    const Vec hf = score_summand(model, tf, level, v.fine, obs, fd_f);
    const Vec hc = score_summand(model, tc, level - 1, v.coarse, obs, fd_c);
    for (int c = 0; c < dth; ++c) {
      tf[c] += clip_move(opts.gamma.at(n, c) * hf[c], opts.step_clip, c);
      tc[c] += clip_move(opts.gamma.at(n, c) * hc[c], opts.step_clip, c);
    }
    out.projections += opts.box.project(tf);
    out.projections += opts.box.project(tc);
    out.fine.push_back(tf);
    out.coarse.push_back(tc);
  }
  return out;
}

int LevelSchedule::sample_level(Rng& rng) const {
  return l_lo + categorical_sample(pl, 1.0, rng);
}

int LevelSchedule::sample_p(Rng& rng) const { return p_lo + categorical_sample(pp, 1.0, rng); }

void LevelSchedule::validate() const {
  if (l_hi < l_lo || p_hi < p_lo) throw std::invalid_argument("schedule: empty support");
  if (l_lo < 0 || p_lo < 0) throw std::invalid_argument("schedule: negative support");
  if (static_cast<int>(pl.size()) != l_hi - l_lo + 1 ||
      static_cast<int>(pp.size()) != p_hi - p_lo + 1)
    throw std::invalid_argument("schedule: pmf size mismatch");
  double s = 0.0;
  for (double v : pl) {
    if (!(v > 0.0)) throw std::invalid_argument("schedule: level pmf must be strictly positive");
    s += v;
  }
  if (std::fabs(s - 1.0) > 1e-12) throw std::invalid_argument("schedule: level pmf must sum to 1");
  s = 0.0;
  for (double v : pp) {
    if (!(v > 0.0))
      throw std::invalid_argument("schedule: iteration pmf must be strictly positive");
    s += v;
  }
  if (std::fabs(s - 1.0) > 1e-12)
    throw std::invalid_argument("schedule: iteration pmf must sum to 1");
  if (n0 < 1) throw std::invalid_argument("schedule: n0 must be >= 1");
  if (p_lo == 0 && !base_p_absolute)
    throw std::invalid_argument("schedule: p = 0 has no differenced form");
  if (l_lo == 0 && !base_level_single)
    throw std::invalid_argument("schedule: l = 0 has no coupled form");
  if (!(gamma.at(1, 0) > 0.0) || gamma.at(2, 0) > gamma.at(1, 0))
    throw std::invalid_argument("schedule: step sizes must be positive and non-increasing");
}

LevelSchedule build_schedule(ScheduleKind kind, const ScheduleOverrides& ov) {
  LevelSchedule s;
  const double q = ov.q.value_or(4.0);
  const double lb = ov.log_base.value_or(2.0);
  const auto lg2 = [lb](double x) {
    const double v = std::log(x) / std::log(lb);
    return v * v;
  };

  int l0 = 4, l_min = 0, l_max = 0, p_min = 0, p_max = 0;
  std::function<double(int)> pl_raw, pp_raw;
  switch (kind) {
    case ScheduleKind::paper_ou:
      l0 = ov.l0.value_or(4);
      l_min = ov.l_min.value_or(l0 + 1);
      l_max = ov.l_max.value_or(11);
      p_min = ov.p_min.value_or(1);
      p_max = ov.p_max.value_or(14);
      s.n0 = ov.n0.value_or(1);
      s.gamma = {ov.gamma0.value_or(Vec{0.2}), ov.gamma_decay.value_or(1.0),
                 ov.gamma_offset.value_or(0.0)};
      pl_raw = [=](int l) { return (q + l - l0) * lg2(q + l - l0) * std::pow(2.0, -l); };
      pp_raw = [=](int p) { return (q + p) * lg2(q + p) * std::pow(2.0, -p); };
      break;
    case ScheduleKind::paper_logistic:
      l0 = ov.l0.value_or(3);
      l_min = ov.l_min.value_or(l0 + 1);
      l_max = ov.l_max.value_or(8);
      p_min = ov.p_min.value_or(1);
      p_max = ov.p_max.value_or(11);
      s.n0 = ov.n0.value_or(1);
      s.gamma = {ov.gamma0.value_or(Vec{5e-3 * 2.0, 5e-3 * 3.0, 5e-3 * 0.6, 5e-3 * 6.0}),
                 ov.gamma_decay.value_or(1.0), ov.gamma_offset.value_or(0.0)};
      pl_raw = [=](int l) { return (q + l - l0) * lg2(q + l - l0) * std::pow(2.0, -0.5 * l); };
      pp_raw = [=](int p) { return (q + p) * lg2(q + p) * std::pow(2.0, -p); };
      break;
    case ScheduleKind::theory:
      l_min = ov.l_min.value_or(0);
      l_max = ov.l_max.value_or(10);
      p_min = ov.p_min.value_or(0);
      p_max = ov.p_max.value_or(10);
      s.n0 = ov.n0.value_or(1);
      s.gamma = {ov.gamma0.value_or(Vec{1.0}), ov.gamma_decay.value_or(1.0),
                 ov.gamma_offset.value_or(1.0)};
      pl_raw = [=](int l) { return std::pow(2.0, -0.5 * l) * (l + 1) * lg2(l + 2); };
      pp_raw = [=](int p) { return std::pow(2.0, -p) * (p + 1) * lg2(p + 2); };
      break;
  }
  if (l_max < l_min || p_max < p_min) throw std::invalid_argument("build_schedule: empty support");
  s.l_lo = l_min;
  s.l_hi = l_max;
  s.p_lo = p_min;
  s.p_hi = p_max;
  s.base_level_single = ov.base_level_single.value_or(true);
  s.base_p_absolute = ov.base_p_absolute.value_or(true);

  s.pl.resize(l_max - l_min + 1);
  double tot = 0.0;
  for (int l = l_min; l <= l_max; ++l) tot += (s.pl[l - l_min] = pl_raw(l));
  for (double& v : s.pl) v /= tot;
  s.pp.resize(p_max - p_min + 1);
  tot = 0.0;
  for (int p = p_min; p <= p_max; ++p) tot += (s.pp[p - p_min] = pp_raw(p));
  for (double& v : s.pp) v /= tot;

  s.validate();
  return s;
}

double sa_cost(const Observations& obs, int level, int n_particles, long iters, bool coupled) {
  double fine = 0.0, coarse = 0.0;
  for (int k = 1; k <= obs.intervals(); ++k) {
    const double gap = obs.time(k) - obs.time(k - 1);
    fine += steps_for(gap, level);
    if (coupled) coarse += steps_for(gap, level - 1);
  }
  return static_cast<double>(n_particles) * static_cast<double>(iters) * (fine + coarse);
}

EstimateRecord randomized_estimate(const DiffusionModel& model, const ThetaVector& theta0,
                                   const LevelSchedule& schedule, const SaOptions& opts,
                                   const Observations& obs, Rng& rng, std::uint64_t seed_label) {
  schedule.validate();
  const int l = schedule.sample_level(rng);
  const int p = schedule.sample_p(rng);
  const long np = schedule.iter_count(p);
  const bool single = l == 0 || (l == schedule.l_lo && schedule.base_level_single);
  const bool absolute = p == 0 || (p == schedule.p_lo && schedule.base_p_absolute);
  const double denom = schedule.pl_at(l) * schedule.pp_at(p);

  SaOptions run_opts = opts;
  run_opts.gamma = schedule.gamma;

  const int dth = model.theta_dim();
  Vec num(dth, 0.0);
  if (single) {
    const SaPath run = sa_chain_run(model, theta0, l, np, run_opts, obs, rng);
    num = run.iterates[np];
    if (!absolute) {
      const long nprev = schedule.iter_count(p - 1);
      for (int c = 0; c < dth; ++c) num[c] -= run.iterates[nprev][c];
    }
  } else {
    const CoupledSaPath run = coupled_sa_chain_run(model, theta0, l, np, run_opts, obs, rng);
    for (int c = 0; c < dth; ++c) num[c] = run.fine[np][c] - run.coarse[np][c];
    if (!absolute) {
      const long nprev = schedule.iter_count(p - 1);
      for (int c = 0; c < dth; ++c) num[c] -= run.fine[nprev][c] - run.coarse[nprev][c];
    }
  }

  EstimateRecord rec;
  rec.theta_hat.resize(dth);
  for (int c = 0; c < dth; ++c) rec.theta_hat[c] = num[c] / denom;
  rec.l = l;
  rec.p = p;
  rec.iters = np;
  rec.cost = sa_cost(obs, l, run_opts.n_particles, np, !single);
  rec.seed = seed_label;
  return rec;
}

PoolSummary pool_estimates(const std::vector<EstimateRecord>& records, int m_group) {
  if (records.empty()) throw std::invalid_argument("pool_estimates: no records");
  if (m_group < 1 || static_cast<int>(records.size()) < m_group)
    throw std::invalid_argument("pool_estimates: need at least m_group records");
  const int dth = static_cast<int>(records.front().theta_hat.size());
  PoolSummary out;
  out.m_group = m_group;
  out.groups = static_cast<long>(records.size()) / m_group;
  out.mean.assign(dth, 0.0);
  out.sd.assign(dth, 0.0);
  out.se.assign(dth, 0.0);

  const double n = static_cast<double>(records.size());
  for (const auto& r : records) {
    out.total_cost += r.cost;
    for (int c = 0; c < dth; ++c) out.mean[c] += r.theta_hat[c] / n;
  }
  if (records.size() > 1) {
    for (const auto& r : records)
      for (int c = 0; c < dth; ++c) {
        const double d = r.theta_hat[c] - out.mean[c];
        out.sd[c] += d * d;
      }
    for (int c = 0; c < dth; ++c) {
      out.sd[c] = std::sqrt(out.sd[c] / (n - 1.0));
      out.se[c] = out.sd[c] / std::sqrt(n);
    }
  }
  out.group_means.assign(out.groups, Vec(dth, 0.0));
  for (long g = 0; g < out.groups; ++g)
    for (int m = 0; m < m_group; ++m)
      for (int c = 0; c < dth; ++c)
        out.group_means[g][c] += records[g * m_group + m].theta_hat[c] / m_group;
  return out;
}

}  // namespace bridgesmc
