#include <doctest.h>

#include "bridgesmc/score_sa.hpp"
#include "support/fixtures.hpp"
#include "support/stats.hpp"

using namespace bridgesmc;
using namespace testfix;

namespace {

SaOptions quiet_opts(int n_particles, const Vec& gamma0 = {0.2}) {
  SaOptions o;
  o.n_particles = n_particles;
  o.gamma = {gamma0, 1.0, 0.0};
  o.box.lo = {-10.0, 0.02, 0.02};
  o.box.hi = {-1e-3, 10.0, 10.0};
  return o;
}

}  // namespace

TEST_CASE("score summand of a theta-free model is exactly zero") {
  const BrownianToyModel model;
  const auto obs = toy_observations(3);
  Rng rng(61);
  const Trajectory z = sample_prior_trajectory(model, {0.0}, 3, obs, rng);
  const Vec h = score_summand(model, {0.0}, 3, z, obs, std::pow(2.0, -3));
  CHECK(h[0] == 0.0);
}

TEST_CASE("observation-only parameters take the analytic route") {
  const ObsOnlyThetaModel model;
  const auto obs = toy_observations(4);
  const ThetaVector theta{0.7};
  Rng rng(62);
  const Trajectory z = sample_prior_trajectory(model, theta, 4, obs, rng);
  const Vec h = score_summand(model, theta, 4, z, obs, std::pow(2.0, -4));
  double expected = 0.0;
  Vec g(1);
  for (int k = 1; k <= 4; ++k) {
    model.obs_score_theta(theta, obs.value(k), z.states[k].data(), g.data());
    expected += g[0];
  }
  CHECK(h[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::fabs(h[0] - expected) <= 1e-8);
}

TEST_CASE("finite differences converge to the analytic observation gradient") {
  const ObsOnlyThetaModelFd fd_model;  // same law, no analytic gradient: forces FD
  const ObsOnlyThetaModel an_model;
  const auto obs = toy_observations(4);
  const ThetaVector theta{0.7};
  Rng rng(63);
  const Trajectory z = sample_prior_trajectory(fd_model, theta, 4, obs, rng);
  const Vec exact = score_summand(an_model, theta, 4, z, obs, 0.1);
  Vec errs;
  for (double h : {0.2, 0.05, 0.0125}) {
    Trajectory zz = z;
    const Vec approx = score_summand(fd_model, theta, 4, zz, obs, h);
    errs.push_back(std::fabs(approx[0] - exact[0]));
  }
  CHECK(errs[1] < errs[0]);
  CHECK(errs[2] < errs[1]);
}

TEST_CASE("the single-level score summand is unbiased against the exact score") {
  // short chain sanity check; the acceptance suite runs the full-oracle version
  const auto model = ou_paper_model();
  const ThetaVector theta = kOuTheta;
  const auto& obs = ou_data();
  const auto [ll, kalman] = models::kalman_score_oracle(theta, obs, kOuX0);
  (void)ll;
  const int level = 6, N = 30, sweeps = 1200, burn = 200;
  Rng rng(64);
  Trajectory z = sample_prior_trajectory(model, theta, level, obs, rng);
  Vec acc(3, 0.0);
  long used = 0;
  for (int n = 0; n < sweeps; ++n) {
    z = cpf_bs_sweep(model, theta, level, z, obs, N, rng);
    if (n < burn) continue;
    const Vec h = score_summand(model, theta, level, z, obs, std::pow(2.0, -level));
    for (int c = 0; c < 3; ++c) acc[c] += h[c];
    ++used;
  }
  for (int c = 0; c < 3; ++c) {
    acc[c] /= used;
    CHECK(std::fabs(acc[c] - kalman[c]) / std::max(1.0, std::fabs(kalman[c])) < 0.35);
  }
}

TEST_CASE("a zero step size freezes the recursion") {
  const auto model = ou_paper_model();
  const ThetaVector theta0{-0.5, 1.0, 0.7};
  const auto& obs = ou_data();
  Rng rng(65);
  SaOptions o = quiet_opts(8, {0.0});
  const SaPath run = sa_chain_run(model, theta0, 3, 20, o, obs, rng);
  for (const auto& it : run.iterates) CHECK(it == theta0);

  Rng rng2(65);
  const CoupledSaPath crun = coupled_sa_chain_run(model, theta0, 3, 20, o, obs, rng2);
  for (long n = 0; n <= 20; ++n) {
    CHECK(crun.fine[n] == theta0);
    CHECK(crun.coarse[n] == theta0);
  }
}

TEST_CASE("recursion iterates settle at a zero of the level score") {
  // at this horizon the level optimizer sits along a flat (theta2, theta3)
  // valley away from the exact ascent point; the iterates must drift toward
  // the oracle point and the terminal point must zero the level-l score (the
  // remaining gap is the discretization bias the level randomization removes)
  const auto model = ou_paper_model();
  const auto& obs = ou_data();
  const ThetaVector star = models::kalman_ascend(kOuTheta, obs, kOuX0);
  const ThetaVector theta0{-0.6, 1.2, 0.8};
  const int level = 6;
  double err_early = 0.0, err_late = 0.0;
  ThetaVector terminal(3, 0.0);
  const int seeds = 2;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(70 + s);
    const SaPath run = sa_chain_run(model, theta0, level, 2000, quiet_opts(25), obs, rng);
    for (int c = 0; c < 3; ++c) {
      err_early += std::fabs(run.iterates[100][c] - star[c]) / seeds;
      err_late += std::fabs(run.iterates[2000][c] - star[c]) / seeds;
    }
    if (s == 0) terminal = run.iterates[2000];
  }
  CHECK(err_late < err_early);
  CHECK(err_late / 3.0 < 0.25);

  Rng rng(79);
  Trajectory z = sample_prior_trajectory(model, terminal, level, obs, rng);
  Vec acc(3, 0.0);
  long used = 0;
  for (int n = 0; n < 900; ++n) {
    z = cpf_bs_sweep(model, terminal, level, z, obs, 25, rng);
    if (n < 150) continue;
    const Vec h = score_summand(model, terminal, level, z, obs, std::pow(2.0, -level));
    for (int c = 0; c < 3; ++c) acc[c] += h[c];
    ++used;
  }
  const Vec at_theta0 = models::kalman_score_oracle(theta0, obs, kOuX0).second;
  double term_norm = 0.0, start_norm = 0.0;
  for (int c = 0; c < 3; ++c) {
    term_norm += std::fabs(acc[c] / used);
    start_norm += std::fabs(at_theta0[c]);
  }
  CHECK(term_norm < 0.3 * start_norm);
}

TEST_CASE("coupled recursions stay close and tighten with the level") {
  const auto model = ou_paper_model();
  const auto& obs = ou_data();
  const ThetaVector theta0{-0.4, 0.9, 0.6};
  Vec med;
  for (int level : {3, 5}) {
    Vec gaps;
    for (int s = 0; s < 4; ++s) {
      Rng rng(80 + s);
      const CoupledSaPath run = coupled_sa_chain_run(model, theta0, level, 120, quiet_opts(12),
                                                     obs, rng);
      double g = 0.0;
      for (int c = 0; c < 3; ++c) g += std::fabs(run.fine[120][c] - run.coarse[120][c]);
      gaps.push_back(g);
    }
    med.push_back(teststats::median(gaps));
  }
  CHECK(med[1] < med[0]);
}

TEST_CASE("theta-free models collapse every telescoping branch to zero") {
  const BrownianToyModel model;
  const auto obs = toy_observations(3);
  LevelSchedule sched = build_schedule(
      ScheduleKind::theory, ScheduleOverrides{.l_max = 3, .p_max = 3, .gamma0 = Vec{0.3}});
  SaOptions o;
  o.n_particles = 6;
  o.box = {};
  Rng rng(66);
  int nonbase = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto rec = randomized_estimate(model, {0.0}, sched, o, obs, rng, rep);
    if (rec.l == 0 && rec.p == 0) {
      CHECK(rec.theta_hat[0] == 0.0);  // theta0 = 0 and H = 0
    } else {
      ++nonbase;
      CHECK(rec.theta_hat[0] == 0.0);
    }
  }
  CHECK(nonbase > 0);
}

TEST_CASE("a single-support schedule reduces to the plain recursion") {
  const auto model = ou_paper_model();
  const auto& obs = ou_data();
  LevelSchedule sched = build_schedule(
      ScheduleKind::theory,
      ScheduleOverrides{.l_min = 3, .l_max = 3, .p_min = 0, .p_max = 0, .n0 = 8,
                        .gamma0 = Vec{0.2}});
  SaOptions o = quiet_opts(8);
  const ThetaVector theta0{-0.5, 1.0, 0.7};

  Rng r1(67);
  const auto rec = randomized_estimate(model, theta0, sched, o, obs, r1, 0);
  CHECK(rec.l == 3);
  CHECK(rec.p == 0);
  CHECK(rec.iters == 8);

  Rng r2(67);
  CHECK(sched.sample_level(r2) == 3);
  CHECK(sched.sample_p(r2) == 0);
  SaOptions o2 = o;
  o2.gamma = sched.gamma;
  const SaPath direct = sa_chain_run(model, theta0, 3, 8, o2, obs, r2);
  CHECK(rec.theta_hat == direct.iterates[8]);  // P_L = P_P = 1
}

TEST_CASE("the estimator is assembled exactly from the recorded iterates") {
  const auto model = ou_paper_model();
  const auto& obs = ou_data();
  // forced coupled draw at l = 4, p = 2
  LevelSchedule sched = build_schedule(
      ScheduleKind::theory,
      ScheduleOverrides{.l_min = 3, .l_max = 5, .p_min = 0, .p_max = 4, .n0 = 2,
                        .gamma0 = Vec{0.2}});
  SaOptions o = quiet_opts(6);
  const ThetaVector theta0{-0.5, 1.0, 0.7};

  for (std::uint64_t seed = 100; seed < 112; ++seed) {
    Rng r1(seed);
    const auto rec = randomized_estimate(model, theta0, sched, o, obs, r1, seed);

    Rng r2(seed);
    const int l = sched.sample_level(r2);
    const int p = sched.sample_p(r2);
    REQUIRE(l == rec.l);
    REQUIRE(p == rec.p);
    SaOptions o2 = o;
    o2.gamma = sched.gamma;
    const double denom = sched.pl_at(l) * sched.pp_at(p);
    Vec hand(3, 0.0);
    if (l == sched.l_lo) {
      const SaPath run = sa_chain_run(model, theta0, l, sched.iter_count(p), o2, obs, r2);
      for (int c = 0; c < 3; ++c) {
        hand[c] = run.iterates[sched.iter_count(p)][c];
        if (p > 0) hand[c] -= run.iterates[sched.iter_count(p - 1)][c];
      }
    } else {
      const CoupledSaPath run =
          coupled_sa_chain_run(model, theta0, l, sched.iter_count(p), o2, obs, r2);
      for (int c = 0; c < 3; ++c) {
        hand[c] = run.fine[sched.iter_count(p)][c] - run.coarse[sched.iter_count(p)][c];
        if (p > 0)
          hand[c] -= run.fine[sched.iter_count(p - 1)][c] - run.coarse[sched.iter_count(p - 1)][c];
      }
    }
    for (int c = 0; c < 3; ++c) CHECK(rec.theta_hat[c] == hand[c] / denom);
  }
}

TEST_CASE("cost accounting follows the pinned formula") {
  const auto model = ou_paper_model();
  const auto& obs = ou_data();
  LevelSchedule sched = build_schedule(
      ScheduleKind::theory,
      ScheduleOverrides{.l_min = 2, .l_max = 4, .p_min = 0, .p_max = 2, .n0 = 4,
                        .gamma0 = Vec{0.2}});
  SaOptions o = quiet_opts(7);
  Rng rng(68);
  for (int rep = 0; rep < 10; ++rep) {
    const auto rec = randomized_estimate(model, {-0.5, 1.0, 0.7}, sched, o, obs, rng, rep);
    double steps = 0.0;
    for (int k = 1; k <= obs.intervals(); ++k) {
      steps += steps_for(obs.time(k) - obs.time(k - 1), rec.l);
      if (rec.l != sched.l_lo)
        steps += steps_for(obs.time(k) - obs.time(k - 1), rec.l - 1);
    }
    CHECK(rec.cost == 7.0 * rec.iters * steps);
  }
}

TEST_CASE("pooling handles degenerate and grouped inputs") {
  std::vector<EstimateRecord> recs(12);
  for (auto& r : recs) {
    r.theta_hat = {2.5, -1.0};
    r.cost = 10.0;
  }
  const PoolSummary p = pool_estimates(recs, 4);
  CHECK(p.groups == 3);
  CHECK(p.mean[0] == doctest::Approx(2.5));
  CHECK(p.sd[0] == doctest::Approx(0.0));
  CHECK(p.total_cost == doctest::Approx(120.0));
  for (const auto& g : p.group_means) CHECK(g[1] == doctest::Approx(-1.0));

  const PoolSummary q = pool_estimates(recs, 1);
  CHECK(q.groups == 12);
  CHECK(q.group_means[7][0] == doctest::Approx(2.5));
  CHECK_THROWS_AS(pool_estimates({}, 1), std::invalid_argument);
}

TEST_CASE("pooled intervals cover a known mean at the nominal rate") {
  Rng rng(69);
  int covered = 0;
  const int reps = 1000, m = 40;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<EstimateRecord> recs(m);
    for (auto& r : recs) r.theta_hat = {1.0 + rng.normal()};
    const PoolSummary p = pool_estimates(recs, 1);
    if (std::fabs(p.mean[0] - 1.0) <= 1.96 * p.se[0]) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  CHECK(rate > 0.92);
  CHECK(rate < 0.98);
}

TEST_CASE("schedules reproduce the documented supports and ratios") {
  const LevelSchedule ou = build_schedule(ScheduleKind::paper_ou);
  CHECK(ou.l_lo == 5);
  CHECK(ou.l_hi == 11);
  CHECK(ou.p_lo == 1);
  CHECK(ou.p_hi == 14);
  CHECK(ou.n0 == 1);
  // ratio against the direct formula, base-2 logs, q = 4, l0 = 4
  const auto lg2sq = [](double x) {
    const double v = std::log2(x);
    return v * v;
  };
  const double expect = (5.0 * lg2sq(5.0) / 32.0) / (6.0 * lg2sq(6.0) / 64.0);
  CHECK(ou.pl_at(5) / ou.pl_at(6) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(ou.gamma.at(4, 0) == doctest::Approx(0.2 / 4.0));

  const LevelSchedule lg = build_schedule(ScheduleKind::paper_logistic);
  CHECK(lg.l_lo == 4);
  CHECK(lg.l_hi == 8);
  CHECK(lg.p_hi == 11);
  CHECK(lg.gamma.at(1, 2) == doctest::Approx(5e-3 * 0.6));
  const double lg_expect = (5.0 * lg2sq(5.0) / std::pow(2.0, 2.0)) /
                           (6.0 * lg2sq(6.0) / std::pow(2.0, 2.5));
  CHECK(lg.pl_at(4) / lg.pl_at(5) == doctest::Approx(lg_expect).epsilon(1e-12));

  const LevelSchedule th = build_schedule(ScheduleKind::theory);
  CHECK(th.l_lo == 0);
  CHECK(th.p_lo == 0);
  CHECK(th.gamma.at(1, 0) == doctest::Approx(0.5));  // (n+1)^{-1} at n = 1
  const double th_expect = (1.0 * lg2sq(2.0)) / (0.5 * 2.0 * lg2sq(3.0));
  CHECK(th.pp_at(0) / th.pp_at(1) == doctest::Approx(th_expect).epsilon(1e-12));

  double sum = 0.0;
  for (double v : ou.pl) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  for (int p = ou.p_lo; p < ou.p_hi; ++p) CHECK(ou.iter_count(p + 1) > ou.iter_count(p));
}
