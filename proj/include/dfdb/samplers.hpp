#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dfdb/posterior.hpp"
#include "dfdb/transforms.hpp"

namespace dfdb {

/// Unnormalised log-density over unconstrained z. nullopt means density zero.
struct Target {
  std::function<std::optional<double>(const Vector&)> log_density;
  std::function<std::optional<Vector>(const Vector&)> gradient;
  ParamTransform transform;
};

Target make_target(const GeneralisedPosterior& posterior);

struct RwmhConfig {
  double sigma = 0.1;
  std::size_t n_samples = 500;  ///< retained draws
  std::size_t burn_in = 5000;
  std::size_t thin = 10;
  std::uint64_t seed = 0;
};

struct MalaConfig {
  double step_size = 0.1;
  std::size_t n_samples = 100;
  std::size_t burn_in = 5000;
  std::size_t thin = 50;
  std::uint64_t seed = 0;
  /// Robbins-Monro adaptation of log(step) towards `target_accept` during
  /// burn-in; the step is frozen afterwards.
  bool adapt = true;
  double target_accept = 0.57;
};

struct Chain {
  std::string sampler;
  std::uint64_t seed = 0;
  Matrix draws;          ///< n_samples x p, constrained space
  Vector log_densities;  ///< unconstrained log-density at each retained draw
  std::size_t iterations = 0;  ///< post burn-in proposals
  std::size_t accepted = 0;    ///< among those
  std::size_t failed_evaluations = 0;
  double step = 0.0;  ///< sigma or final MALA step
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::vector<std::string> warnings;

  double acceptance_rate() const {
    return iterations == 0 ? 0.0
                           : static_cast<double>(accepted) / static_cast<double>(iterations);
  }
  std::size_t size() const { return static_cast<std::size_t>(draws.rows()); }
};

Chain rwmh_sample(const Target& target, const Vector& init_z, const RwmhConfig& config);
Chain mala_sample(const Target& target, const Vector& init_z, const MalaConfig& config);

/// Per-coordinate potential scale reduction factor across equal-length chains.
/// Coordinates with zero within-chain variance get +inf.
Vector gelman_rubin(const std::vector<Chain>& chains);
Vector gelman_rubin(const std::vector<Matrix>& draws);

/// Draws of all chains stacked in chain order.
Matrix pooled_draws(const std::vector<Chain>& chains);

/// CSV with header chain_id,iter,log_density,theta_0,...; numbers in %.17g.
void write_chains_csv(std::ostream& out, const std::vector<Chain>& chains);

}  // namespace dfdb
