#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dfdb/dataset.hpp"
#include "dfdb/models.hpp"
#include "dfdb/rng.hpp"

namespace dfdb {

struct SimConfig {
  std::size_t n_draws = 1000;
  /// Single-site steps per draw; 0 means 100 * d.
  std::size_t iters_per_draw = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// One single-site Metropolis step: pick a site uniformly and flip it with
/// probability min(1, p(flipped)/p(x)).
void ising_mh_step(const IsingModel& model, double theta, Point& x, Rng& rng);

/// Each draw is the final state of its own chain, started from independent
/// fair bits with stream derive_seed(seed, draw index).
Dataset ising_simulate(const IsingModel& model, double theta, const SimConfig& config);

/**
 * Normalised table of an unnormalised count distribution
 * w(x) = exp(x log_rate - nu log x!) on {0, 1, ...}.
 *
 * Terms are accumulated upward from 0 until a term falls below 1e-14 of the
 * running sum past the mode. Throws std::domain_error for a divergent series
 * (nu = 0 and rate >= 1, or nu < 0) and std::runtime_error past `max_support`.
 */
class CountTable {
 public:
  static constexpr std::size_t kMaxSupport = 1000000;
  static constexpr double kRelTolerance = 1e-14;

  CountTable(double log_rate, double nu, std::size_t max_support = kMaxSupport);

  /// Inverse-CDF draw.
  Position sample(Rng& rng) const;
  std::size_t support() const { return cdf_.size(); }
  double probability(Position x) const;

 private:
  std::vector<double> cdf_;
};

/// n i.i.d. CMP draws by inverse CDF; deterministic in seed.
Dataset cmp_sample(const Vector& theta, std::size_t n, std::uint64_t seed);

/// Systematic-scan Gibbs from the zero state: `sweeps` sweeps of burn-in,
/// then one recorded state every `sweeps` sweeps.
Dataset pgm_gibbs_sample(const CountGraphicalModel& model, const Vector& theta,
                         std::size_t n, std::size_t sweeps, std::uint64_t seed);

/// Simulates n points at theta from the given stream seed.
using Simulator =
    std::function<Dataset(const Vector& theta, std::size_t n, std::uint64_t seed)>;

/// Per-coordinate value frequencies of predictive draws, averaged over the
/// posterior draws; cells never observed have mean 0.
struct PredictiveSummary {
  Position max_value = 0;
  Matrix mean;  ///< d x (max_value + 1)
  Matrix sd;    ///< same shape; sd across posterior draws
  std::size_t draws_per_theta = 0;
  std::size_t n_theta = 0;
};

/// For each row theta_t of `thetas`, simulates draws_per_theta points with
/// seed derive_seed(seed, t) and records value frequencies per coordinate.
PredictiveSummary posterior_predictive(const Matrix& thetas, const Simulator& simulate,
                                       std::size_t draws_per_theta, std::uint64_t seed,
                                       std::size_t threads = 1);

}  // namespace dfdb
