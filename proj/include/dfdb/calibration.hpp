#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdb/dataset.hpp"
#include "dfdb/losses.hpp"
#include "dfdb/posterior.hpp"
#include "dfdb/transforms.hpp"

namespace dfdb {

/// Resample of the same size, uniformly with replacement; stream derive_seed(seed, b).
Dataset bootstrap_resample(const Dataset& data, std::size_t b, std::uint64_t seed);

struct MinimiseConfig {
  std::size_t max_iters = 500;
  double grad_tol = 1e-6;
};

struct MinimiseResult {
  Vector theta;  ///< constrained
  Vector z;
  double value = 0.0;
  double grad_norm = 0.0;  ///< |grad_z|
  std::size_t iterations = 0;
  bool converged = false;
};

/**
 * Gradient descent on z -> D(theta(z)) with Barzilai-Borwein trial steps,
 * capped at a unit move in z, and Armijo backtracking. Stops once
 * |grad_z| <= grad_tol, after max_iters, or when no step decreases the loss
 * beyond rounding.
 */
MinimiseResult minimise_loss(const LossFunction& loss, const ParamTransform& transform,
                             const Vector& init_z, const MinimiseConfig& config);

class CalibrationError : public std::runtime_error {
 public:
  enum class Code { DegenerateGradients, TheoremConditionViolated };
  CalibrationError(Code code, double numerator, double denominator);
  Code code() const { return code_; }
  double numerator() const { return numerator_; }
  double denominator() const { return denominator_; }

 private:
  Code code_;
  double numerator_;
  double denominator_;
};

std::string to_string(CalibrationError::Code code);

struct BetaStar {
  double beta_star = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
};

/// Per-minimiser terms entering beta*: grad D, grad log pi and tr hess D,
/// all in constrained theta.
struct ScoreTerms {
  Vector grad_loss;
  Vector grad_log_prior;
  double hessian_trace = 0.0;
};

ScoreTerms score_terms(const LossFunction& loss, const Prior& prior, const Vector& theta);

/// sum_b [grad D . grad log pi + tr hess D] / sum_b |grad D|^2. Throws
/// CalibrationError when the denominator is 0 or the numerator is <= 0.
BetaStar beta_star(const std::vector<ScoreTerms>& terms);
BetaStar beta_star(const LossFunction& loss, const Prior& prior,
                   const std::vector<Vector>& minimisers);

/// Fisher-divergence objective in beta at the minimisers:
/// sum_b |grad log pi - beta grad D|^2 + 2 (lap log pi - beta tr hess D).
double score_objective(const std::vector<ScoreTerms>& terms,
                       const std::vector<double>& prior_laplacians, double beta);

struct BootstrapConfig {
  std::size_t B = 100;
  MinimiseConfig optimiser;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct CalibrationResult {
  double beta_star = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  std::size_t B = 0;
  Matrix minimisers;  ///< B x p, constrained
  std::vector<double> grad_norms;
  std::vector<bool> converged;
  std::size_t non_converged() const;
};

using LossFactory = std::function<std::unique_ptr<LossFunction>(const Dataset&)>;

/// Minimises the loss on B bootstrap resamples (in parallel, per-b streams)
/// and evaluates beta* with the full-data loss at those minimisers.
CalibrationResult calibrate(const LossFactory& make_loss, const Dataset& data,
                            const Prior& prior, const ParamTransform& transform,
                            const Vector& init_z, const BootstrapConfig& config);

}  // namespace dfdb
