#pragma once

#include "bridgesmc/trajectory.hpp"

namespace bridgesmc {

/// Index selection rule of the smoothing pass: full backward reweighting or
/// tracing of stored ancestor links.
enum class BackwardVariant { backward, ancestral };

/// log g_theta(y_k | x_k) + log R^l over the bridged segment, k in 1..T.
double forward_log_weight(const DiffusionModel&, const ThetaVector&, const Observations&,
                          int level, int k, const Vec& x_prev, const WienerBlock&, const Vec& x_k);

/// Backward reweighting of particle i at time k against the selected successor:
/// cached log alpha + log fbar(x_next | x_k_i) + log R^l of the segment
/// rebridged from x_k_i with the successor's noise block.
double backward_log_weight(const DiffusionModel&, const ThetaVector&, const Observations&,
                           int level, int k, const Vec& x_k_i, const WienerBlock& w_next,
                           const Vec& x_next, double cached_log_alpha);

struct SweepStats {
  int reference_slot_hits = 0;  // forward steps where the last slot carried the reference
};

/// One draw from the smoothing kernel: an N-particle conditional filter with
/// the reference trajectory pinned in the last slot, followed by backward
/// sampling (or ancestral tracing). Deterministic given the stream.
Trajectory cpf_bs_sweep(const DiffusionModel&, const ThetaVector&, int level,
                        const Trajectory& reference, const Observations&, int n_particles, Rng&,
                        BackwardVariant variant = BackwardVariant::backward,
                        SweepStats* stats = nullptr);

}  // namespace bridgesmc
