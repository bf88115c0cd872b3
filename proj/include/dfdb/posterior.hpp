#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dfdb/losses.hpp"
#include "dfdb/transforms.hpp"

namespace dfdb {

/// Independent univariate priors, one per coordinate of theta. Densities are
/// unnormalised; outside the support the log-density is -inf.
class Prior {
 public:
  struct Component {
    enum class Kind { Flat, ChiSquared, Normal, HalfNormal };
    Kind kind = Kind::Flat;
    double a = 0.0;  // dof (ChiSquared), mean (Normal)
    double b = 1.0;  // sd (Normal), scale (HalfNormal)
  };

  static Component flat() { return {Component::Kind::Flat, 0.0, 1.0}; }
  static Component chi_squared(double dof) { return {Component::Kind::ChiSquared, dof, 1.0}; }
  static Component normal(double mean, double sd) { return {Component::Kind::Normal, mean, sd}; }
  static Component half_normal(double scale) { return {Component::Kind::HalfNormal, 0.0, scale}; }

  Prior() = default;
  explicit Prior(std::vector<Component> components);
  static Prior iid(std::size_t p, Component c) {
    return Prior(std::vector<Component>(p, c));
  }

  std::size_t dim() const { return components_.size(); }
  const std::vector<Component>& components() const { return components_; }

  double log_density(const Vector& theta) const;
  Vector grad_log_density(const Vector& theta) const;
  /// Sum of the diagonal second derivatives of log_density.
  double laplacian_log_density(const Vector& theta) const;
  /// Mean of each component (0 for Flat).
  Vector mean() const;

 private:
  std::vector<Component> components_;
};

std::string to_string(Prior::Component::Kind kind);

/**
 * log pi(theta) - beta D_n(theta), and its pull-back to unconstrained z:
 * log pi(theta(z)) + log|d theta/d z| - beta D_n(theta(z)).
 *
 * Evaluations return nullopt when the density is not finite, including when
 * the loss throws std::domain_error; samplers reject such states.
 */
class GeneralisedPosterior {
 public:
  GeneralisedPosterior(Prior prior, std::shared_ptr<const LossFunction> loss,
                       double beta, ParamTransform transform);

  const Prior& prior() const { return prior_; }
  const LossFunction& loss() const { return *loss_; }
  double beta() const { return beta_; }
  const ParamTransform& transform() const { return transform_; }

  std::optional<double> log_density_constrained(const Vector& theta) const;
  std::optional<double> log_density_unconstrained(const Vector& z) const;
  std::optional<Vector> grad_unconstrained(const Vector& z) const;

 private:
  Prior prior_;
  std::shared_ptr<const LossFunction> loss_;
  double beta_;
  ParamTransform transform_;
};

}  // namespace dfdb
