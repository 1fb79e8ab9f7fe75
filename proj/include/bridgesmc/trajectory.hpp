#pragma once

#include <cstdint>

#include "bridgesmc/coupling.hpp"

namespace bridgesmc {

/// Smoother state: skeleton states x_{0:T} plus the per-interval driving noise,
/// all at one discretization level.
struct Trajectory {
  int level = 0;
  std::vector<Vec> states;          // T+1 states of dimension d
  std::vector<WienerBlock> blocks;  // block k covers (t_{k-1}, t_k]
};

std::vector<Segment> level_grid(const Observations&, int level);

void validate_trajectory(const Trajectory&, const Observations&, int dim);

/// Unconditional draw of (x_{0:T}, w_{1:T}) from the initial law, the proposal
/// transitions and the Wiener law (blocks guarded against the model domain).
Trajectory sample_prior_trajectory(const DiffusionModel&, const ThetaVector&, int level,
                                   const Observations&, Rng&);

/// A pair of smoother states at adjacent levels evolved by the coupled kernel.
struct CoupledTrajectory {
  Trajectory fine;                 // level l
  Trajectory coarse;               // level l-1
  std::vector<std::uint8_t> meet;  // per-time backward index equality of the last sweep
};

}  // namespace bridgesmc
