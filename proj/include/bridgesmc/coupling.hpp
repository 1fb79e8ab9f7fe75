#pragma once

#include <utility>

#include "bridgesmc/model.hpp"
#include "bridgesmc/rng.hpp"
#include "bridgesmc/sde_core.hpp"

namespace bridgesmc {

struct CoupledIndexDraw {
  int i = 0;
  int j = 0;
  bool met = false;  // overlap branch taken, which forces i == j
};

/// Sum of |r1 - r2| / 2 for two pmfs of equal length.
double total_variation(std::span<const double> r1, std::span<const double> r2);

/// Draw (i, j) from the maximal coupling of two pmfs on {0..N-1}: i ~ r1,
/// j ~ r2 marginally and P(i = j) = 1 - TV(r1, r2). Overlaps within 1e-12 of
/// total are treated as identical pmfs (the residuals are undefined there).
CoupledIndexDraw maximal_coupling_sample(std::span<const double> r1, std::span<const double> r2,
                                         Rng&);

/// Throws unless both vectors are strictly positive pmfs summing to 1 within 1e-12.
void validate_categorical_pair(std::span<const double> r1, std::span<const double> r2);

/// Inverse-CDF draw from an unnormalized non-negative weight vector with the
/// given total. Deterministic given the stream.
int categorical_sample(std::span<const double> w, double total, Rng&);

/// Pairwise sums of consecutive increments: the block one level below.
/// Requires an even step count; displacement is preserved exactly.
WienerBlock coarsen_increments(const WienerBlock& fine, int d);

WienerBlock sample_wiener_block(const Segment&, int d, Rng&);

/// Common-random-number coupling of the proposal transition: one shared
/// standard-normal vector pushed through both sampling transforms. Marginals
/// are exact; equal parameters and equal states give bitwise-equal outputs.
std::pair<Vec, Vec> coupled_transition_sample(const DiffusionModel&, const ThetaVector& theta,
                                              const ThetaVector& theta_bar, double s1, const Vec& x,
                                              const Vec& x_bar, double s2, Rng&);

/// Same construction for the initial law with shared uniforms.
std::pair<Vec, Vec> coupled_initial_sample(const DiffusionModel&, const ThetaVector& theta,
                                           const ThetaVector& theta_bar, Rng&);

/// Freshly proposed driving noise for a pinned bridge. An increment that sends
/// the Euler state out of the model domain is redrawn, at most max_retry times,
/// so proposals stay evaluable; models without state constraints never retry.
/// Returns the block together with the path it induces.
struct ProposedBridge {
  WienerBlock block;
  LatticePath path;
};
ProposedBridge sample_block_guarded(const DiffusionModel&, const ThetaVector&, const Segment&,
                                    const double* x_start, const double* x_end, Rng&,
                                    int max_retry = 100);

/// Kernel-side variant: degrades to a plain unguarded draw with ok = false when
/// the guard is exhausted, so the particle carries zero weight instead of
/// aborting the sweep.
struct ProposalDraw {
  WienerBlock block;
  LatticePath path;
  bool ok = true;
};
ProposalDraw propose_block(const DiffusionModel&, const ThetaVector&, const Segment&,
                           const double* x_start, const double* x_end, Rng&);

}  // namespace bridgesmc
