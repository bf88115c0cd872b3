#include "dfdb/calibration.hpp"

#include <algorithm>
#include <cmath>

#include <limits>
#include <optional>

#include "dfdb/parallel.hpp"
#include "dfdb/rng.hpp"

namespace dfdb {

Dataset bootstrap_resample(const Dataset& data, std::size_t b, std::uint64_t seed) {
  Rng rng(derive_seed(seed, b));
  const std::size_t n = data.size();
  std::vector<Point> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) points.push_back(data[rng.below(n)]);
  return Dataset(data.domain(), std::move(points));
}

namespace {

struct Eval {
  double value;
  Vector grad_z;
};

std::optional<Eval> evaluate(const LossFunction& loss, const ParamTransform& transform,
                             const Vector& z) {
  try {
    const Vector theta = transform.to_constrained(z);
    const double v = loss.value(theta);
    if (!std::isfinite(v)) return std::nullopt;
    Vector g = transform.jacobian_diag(z).cwiseProduct(loss.gradient(theta));
    if (!g.allFinite()) return std::nullopt;
    return Eval{v, std::move(g)};
  } catch (const std::domain_error&) {
    return std::nullopt;
  }
}

}  // namespace

MinimiseResult minimise_loss(const LossFunction& loss, const ParamTransform& transform,
                             const Vector& init_z, const MinimiseConfig& config) {
  if (!(config.grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be positive");
  auto cur = evaluate(loss, transform, init_z);
  if (!cur) throw std::invalid_argument("loss is not finite at the starting point");

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  // Longest move in z per iteration. Empirical score-type losses can be
  // unbounded below far from the data-supported region, and unrestricted BB
  // steps occasionally jump there.
  constexpr double kMaxMove = 1.0;

  Vector z = init_z;
  double step = 1.0 / std::max(1.0, cur->grad_z.norm());
  MinimiseResult res;
  std::size_t it = 0;
  for (; it < config.max_iters; ++it) {
    const double gnorm = cur->grad_z.norm();
    if (gnorm <= config.grad_tol) break;
    const double reference = cur->value;
    // Slack for rounding in loss values of large magnitude.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() *
                         (std::abs(cur->value) + 1.0);
    double t = std::min(step, kMaxMove / gnorm);
    std::optional<Eval> next;
    Vector z_new;
    for (int h = 0; h < kMaxHalvings; ++h, t *= 0.5) {
      z_new = z - t * cur->grad_z;
      next = evaluate(loss, transform, z_new);
      if (next && next->value <= reference - kArmijo * t * gnorm * gnorm + slack) break;
      next.reset();
    }
    if (!next) break;
    const Vector s = z_new - z;
    const Vector y = next->grad_z - cur->grad_z;
    const double sy = s.dot(y);
    step = sy > 0.0 ? s.squaredNorm() / sy : t * 2.0;
    if (!std::isfinite(step) || step <= 0.0) step = t;
    z = z_new;
    cur = std::move(next);
  }
  res.z = z;
  res.theta = transform.to_constrained(z);
  res.value = cur->value;
  res.grad_norm = cur->grad_z.norm();
  res.iterations = it;
  res.converged = res.grad_norm <= config.grad_tol;
  return res;
}

CalibrationError::CalibrationError(Code code, double numerator, double denominator)
    : std::runtime_error(to_string(code) + " (numerator " + std::to_string(numerator) +
                         ", denominator " + std::to_string(denominator) + ")"),
      code_(code),
      numerator_(numerator),
      denominator_(denominator) {}

std::string to_string(CalibrationError::Code code) {
  switch (code) {
    case CalibrationError::Code::DegenerateGradients:
      return "DEGENERATE_GRADIENTS";
    case CalibrationError::Code::TheoremConditionViolated:
      return "THEOREM_CONDITION_VIOLATED";
  }
  return "UNKNOWN";
}

ScoreTerms score_terms(const LossFunction& loss, const Prior& prior, const Vector& theta) {
  return {loss.gradient(theta), prior.grad_log_density(theta), loss.hessian_trace(theta)};
}

BetaStar beta_star(const std::vector<ScoreTerms>& terms) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& t : terms) {
    num += t.grad_loss.dot(t.grad_log_prior) + t.hessian_trace;
    den += t.grad_loss.squaredNorm();
  }
  if (!(den > 0.0)) {
    throw CalibrationError(CalibrationError::Code::DegenerateGradients, num, den);
  }
  if (!(num > 0.0)) {
    throw CalibrationError(CalibrationError::Code::TheoremConditionViolated, num, den);
  }
  return {num / den, num, den};
}

BetaStar beta_star(const LossFunction& loss, const Prior& prior,
                   const std::vector<Vector>& minimisers) {
  std::vector<ScoreTerms> terms;
  terms.reserve(minimisers.size());
  for (const auto& m : minimisers) terms.push_back(score_terms(loss, prior, m));
  return beta_star(terms);
}

double score_objective(const std::vector<ScoreTerms>& terms,
                       const std::vector<double>& prior_laplacians, double beta) {
  double s = 0.0;
  for (std::size_t b = 0; b < terms.size(); ++b) {
    const auto& t = terms[b];
    s += (t.grad_log_prior - beta * t.grad_loss).squaredNorm() +
         2.0 * (prior_laplacians[b] - beta * t.hessian_trace);
  }
  return s;
}

std::size_t CalibrationResult::non_converged() const {
  std::size_t c = 0;
  for (bool ok : converged) c += ok ? 0 : 1;
  return c;
}

CalibrationResult calibrate(const LossFactory& make_loss, const Dataset& data,
                            const Prior& prior, const ParamTransform& transform,
                            const Vector& init_z, const BootstrapConfig& config) {
  if (config.B == 0) throw std::invalid_argument("B must be at least 1");
  std::vector<MinimiseResult> results(config.B);
  parallel_for(config.B, config.threads, [&](std::size_t b) {
    const Dataset resampled = bootstrap_resample(data, b, config.seed);
    const auto loss = make_loss(resampled);
    results[b] = minimise_loss(*loss, transform, init_z, config.optimiser);
  });

  const auto full = make_loss(data);
  std::vector<ScoreTerms> terms(config.B);
  parallel_for(config.B, config.threads, [&](std::size_t b) {
    terms[b] = score_terms(*full, prior, results[b].theta);
  });

  CalibrationResult out;
  out.B = config.B;
  out.minimisers.resize(static_cast<Eigen::Index>(config.B), init_z.size());
  for (std::size_t b = 0; b < config.B; ++b) {
    out.minimisers.row(static_cast<Eigen::Index>(b)) = results[b].theta.transpose();
    out.grad_norms.push_back(results[b].grad_norm);
    out.converged.push_back(results[b].converged);
  }
  const BetaStar bs = beta_star(terms);
  out.beta_star = bs.beta_star;
  out.numerator = bs.numerator;
  out.denominator = bs.denominator;
  return out;
}

}  // namespace dfdb
