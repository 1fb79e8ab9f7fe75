#pragma once

#include "bridgesmc/cpf.hpp"

namespace bridgesmc {

/// Online record of the coupled categorical draws of a sweep (or several).
struct CcpfDiag {
  long draws = 0;
  long meets = 0;
  double expected_meets = 0.0;  // sum of (1 - TV) over the realized weight pairs
  double meet_variance = 0.0;   // sum of TV(1 - TV)
  long linkage_violations = 0;  // proposed coarse blocks that were not exact coarsenings
};

/// One draw from the coupled smoothing kernel: two conditional filters at
/// adjacent levels (fine at v.fine.level, coarse one level below, possibly with
/// different parameters) sharing initial/transition/noise randomness, with all
/// index draws maximally coupled. Each side is marginally one single-level
/// sweep from its own reference.
CoupledTrajectory ccpf_bs_sweep(const DiffusionModel&, const ThetaVector& theta_fine,
                                const ThetaVector& theta_coarse, const CoupledTrajectory&,
                                const Observations&, int n_particles, Rng&,
                                BackwardVariant variant = BackwardVariant::backward,
                                CcpfDiag* diag = nullptr);

/// Product-coupled initialization: one parameter, shared initial and transition
/// draws, coarse noise the exact coarsening of the fine noise. Fine and coarse
/// skeletons coincide at the shared times.
CoupledTrajectory coupled_initial_trajectory(const DiffusionModel&, const ThetaVector&, int level,
                                             const Observations&, Rng&);

}  // namespace bridgesmc
