#pragma once

#include <cstdint>
#include <optional>

#include "bridgesmc/ccpf.hpp"

namespace bridgesmc {

/// Score summand of one trajectory:
///   sum_k grad_theta log{ g(y_k|x_k) R^l(C^l(x_{k-1}, w_k, x_k)) fbar(x_k|x_{k-1}) }
///     + grad_theta log nu(x_0)
/// The proposal factors cancel against the weight denominator, so the braced
/// term reduces to log g + sum_j L dt + log f~. The path dependence on theta is
/// resolved by central differences of step fd_step (per coordinate), holding
/// the skeleton and the noise fixed; coordinates that enter no dynamics take
/// the analytic observation/initial route when the model provides it. A
/// perturbation that exits the admissible set shrinks the step once before
/// failing.
Vec score_summand(const DiffusionModel&, const ThetaVector&, int level, const Trajectory&,
                  const Observations&, double fd_step);

/// gamma_n = gamma0 * (n + offset)^(-decay), per coordinate.
struct StepSizeRule {
  Vec gamma0{0.2};
  double decay = 1.0;
  double offset = 0.0;

  double at(long n, int coord) const {
    const double g0 = gamma0.size() == 1 ? gamma0[0] : gamma0.at(coord);
    return g0 * std::pow(static_cast<double>(n) + offset, -decay);
  }
};

struct SaOptions {
  int n_particles = 50;
  BackwardVariant variant = BackwardVariant::backward;
  StepSizeRule gamma;
  ProjectionBox box;
  double fd_step = 0.0;    // 0: use the level step 2^-l
  Vec step_clip{0.5};      // per-coordinate cap on one move (broadcast); 0 disables
};

struct SaPath {
  std::vector<ThetaVector> iterates;  // theta_0 .. theta_n
  long projections = 0;
};

/// Single-level Markovian stochastic approximation: refresh the trajectory with
/// one smoothing sweep at the current iterate, then take a score step.
SaPath sa_chain_run(const DiffusionModel&, const ThetaVector& theta0, int level, long n_iters,
                    const SaOptions&, const Observations&, Rng&);

struct CoupledSaPath {
  std::vector<ThetaVector> fine, coarse;
  long projections = 0;
};

/// Two recursions at adjacent levels driven by the coupled kernel, both started
/// at theta0.
CoupledSaPath coupled_sa_chain_run(const DiffusionModel&, const ThetaVector& theta0, int level,
                                   long n_iters, const SaOptions&, const Observations&, Rng&);

enum class ScheduleKind { paper_ou, paper_logistic, theory };

/// Randomization of the estimator: truncated pmfs over the discretization level
/// and the iteration index, the iteration counts N_p = n0 2^p and the step-size
/// rule. With base_level_single, drawing the lowest level runs the plain
/// single-level recursion there; with base_p_absolute, drawing the lowest p
/// returns the non-differenced iterate. A truncated schedule then telescopes
/// exactly to E[theta at (l_hi, N_{p_hi})].
struct LevelSchedule {
  int l_lo = 0, l_hi = 0;
  Vec pl;  // pmf over l_lo..l_hi
  int p_lo = 0, p_hi = 0;
  Vec pp;  // pmf over p_lo..p_hi
  long n0 = 1;
  StepSizeRule gamma;
  bool base_level_single = true;
  bool base_p_absolute = true;

  long iter_count(int p) const { return n0 << p; }
  double pl_at(int l) const { return pl.at(l - l_lo); }
  double pp_at(int p) const { return pp.at(p - p_lo); }
  int sample_level(Rng&) const;
  int sample_p(Rng&) const;
  void validate() const;
};

struct ScheduleOverrides {
  std::optional<int> l0, l_min, l_max, p_min, p_max;
  std::optional<long> n0;
  std::optional<double> q, log_base;
  std::optional<Vec> gamma0;
  std::optional<double> gamma_decay, gamma_offset;
  std::optional<bool> base_level_single, base_p_absolute;
};

LevelSchedule build_schedule(ScheduleKind, const ScheduleOverrides& = {});

/// One randomized estimator draw with its provenance.
struct EstimateRecord {
  Vec theta_hat;  // reweighted combination; differences may exit the admissible set
  int l = 0, p = 0;
  long iters = 0;
  double cost = 0.0;  // particles x Euler substeps x iterations, both chains
  std::uint64_t seed = 0;
};

/// Total Euler-substep cost proxy of one recursion: iters x N x sum of per-
/// interval step counts at the level, plus the same one level down when coupled.
double sa_cost(const Observations&, int level, int n_particles, long iters, bool coupled);

/// Draws (l, p) from the schedule, runs the single or coupled recursion to N_p
/// and returns the reweighted telescoping combination.
EstimateRecord randomized_estimate(const DiffusionModel&, const ThetaVector& theta0,
                                   const LevelSchedule&, const SaOptions&, const Observations&,
                                   Rng&, std::uint64_t seed_label = 0);

struct PoolSummary {
  int m_group = 1;
  long groups = 0;
  Vec mean, sd, se;              // per coordinate over all records
  std::vector<Vec> group_means;  // disjoint consecutive groups of m_group records
  double total_cost = 0.0;
};

PoolSummary pool_estimates(const std::vector<EstimateRecord>&, int m_group);

}  // namespace bridgesmc
