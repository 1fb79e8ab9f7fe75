#include "bridgesmc/trajectory.hpp"

namespace bridgesmc {

std::vector<Segment> level_grid(const Observations& obs, int level) {
  obs.validate();
  std::vector<Segment> out;
  out.reserve(obs.intervals());
  for (int k = 1; k <= obs.intervals(); ++k)
    out.push_back(make_segment(obs.time(k - 1), obs.time(k), level));
  return out;
}

void validate_trajectory(const Trajectory& z, const Observations& obs, int dim) {
  const int T = obs.intervals();
  if (static_cast<int>(z.states.size()) != T + 1)
    throw std::invalid_argument("trajectory: wrong state count");
  if (static_cast<int>(z.blocks.size()) != T)
    throw std::invalid_argument("trajectory: wrong block count");
  const auto grid = level_grid(obs, z.level);
  for (int k = 0; k <= T; ++k) {
    if (static_cast<int>(z.states[k].size()) != dim || !all_finite(z.states[k]))
      throw std::invalid_argument("trajectory: bad state at time " + std::to_string(k));
  }
  for (int k = 0; k < T; ++k) {
    if (z.blocks[k].seg != grid[k])
      throw std::invalid_argument("trajectory: block " + std::to_string(k) +
                                  " does not match the level grid");
    if (static_cast<int>(z.blocks[k].incr.size()) != grid[k].n_steps * dim ||
        !all_finite(z.blocks[k].incr))
      throw std::invalid_argument("trajectory: bad increments at block " + std::to_string(k));
  }
}

Trajectory sample_prior_trajectory(const DiffusionModel& model, const ThetaVector& theta,
                                   int level, const Observations& obs, Rng& rng) {
  model.constraints().require_admissible(theta);
  const int d = model.dim();
  const int T = obs.intervals();
  const auto grid = level_grid(obs, level);

  Trajectory z;
  z.level = level;
  z.states.resize(T + 1);
  z.blocks.resize(T);

  Vec u(d), noise(d);
  for (double& v : u) v = rng.uniform();
  z.states[0].resize(d);
  model.initial_push(theta, u.data(), z.states[0].data());

  for (int k = 1; k <= T; ++k) {
    for (double& v : noise) v = rng.normal();
    z.states[k].resize(d);
    model.proposal_push(theta, grid[k - 1].s1, z.states[k - 1].data(), grid[k - 1].s2,
                        noise.data(), z.states[k].data());
    z.blocks[k - 1] = propose_block(model, theta, grid[k - 1], z.states[k - 1].data(),
                                    z.states[k].data(), rng)
                          .block;
  }
  return z;
}

}  // namespace bridgesmc
