#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dfdb/domain.hpp"

namespace dfdb {

/**
 * Exponential-family structure p(x) ∝ exp(eta(theta)·T(x) + b(x)).
 *
 * Losses use it for analytic derivatives: every ratio p(x^{j-})/p(x) is
 * exp(eta·dT + db) with dT, db from `delta_minus`.
 */
class ExpFamilyStructure {
 public:
  virtual ~ExpFamilyStructure() = default;

  virtual std::size_t natural_dim() const = 0;
  virtual Vector eta(const Vector& theta) const = 0;
  /// k x p Jacobian of eta.
  virtual Matrix grad_eta(const Vector& theta) const = 0;
  /// k Hessians, each p x p.
  virtual std::vector<Matrix> hess_eta(const Vector& theta) const = 0;
  /// Traces of the k Hessians of eta.
  virtual Vector hess_eta_trace(const Vector& theta) const;
  virtual bool eta_is_identity() const { return false; }

  virtual Vector suff_stat(PointView x) const = 0;
  virtual double base_measure(PointView x) const = 0;

  /// Writes T(x^{j-}) - T(x) and b(x^{j-}) - b(x). Returns false (and leaves
  /// the outputs untouched) when x^{j-} is an extended point.
  virtual bool delta_minus(PointView x, std::size_t j, Vector& dT,
                           double& db) const = 0;
};

/// Unnormalised model on a countable ordered product domain.
class DiscreteModel {
 public:
  virtual ~DiscreteModel() = default;

  virtual std::string name() const = 0;
  virtual const ProductDomain& domain() const = 0;
  virtual std::size_t dim_theta() const = 0;

  virtual double log_tilde_p(const Vector& theta, PointView x) const = 0;

  /// p(x^{j-}) / p(x); 0 when x^{j-} has a star coordinate.
  virtual double ratio_minus(const Vector& theta, PointView x,
                             std::size_t j) const;
  /// ratio_minus(theta, x^{j+}, j) = p(x) / p(x^{j+}).
  virtual double ratio_minus_succ(const Vector& theta, PointView x,
                                  std::size_t j) const;

  virtual const ExpFamilyStructure* exp_family() const { return nullptr; }

  /// Throws std::domain_error when theta is outside the parameter space.
  virtual void check_theta(const Vector& theta) const;

  std::size_t dim_x() const { return domain().dim(); }
};

/// Conway-Maxwell-Poisson: p(x) ∝ theta1^x (x!)^{-theta2} on {0,1,2,...}.
class CmpModel final : public DiscreteModel, public ExpFamilyStructure {
 public:
  CmpModel();

  std::string name() const override { return "cmp"; }
  const ProductDomain& domain() const override { return domain_; }
  std::size_t dim_theta() const override { return 2; }
  double log_tilde_p(const Vector& theta, PointView x) const override;
  double ratio_minus(const Vector& theta, PointView x,
                     std::size_t j) const override;
  double ratio_minus_succ(const Vector& theta, PointView x,
                          std::size_t j) const override;
  const ExpFamilyStructure* exp_family() const override { return this; }
  void check_theta(const Vector& theta) const override;

  std::size_t natural_dim() const override { return 2; }
  Vector eta(const Vector& theta) const override;
  Matrix grad_eta(const Vector& theta) const override;
  std::vector<Matrix> hess_eta(const Vector& theta) const override;
  Vector suff_stat(PointView x) const override;
  double base_measure(PointView) const override { return 0.0; }
  bool delta_minus(PointView x, std::size_t j, Vector& dT,
                   double& db) const override;

 private:
  ProductDomain domain_;
};

/// x^{theta2} / theta1, and 0 at x = 0.
double cmp_ratio_minus(const Vector& theta, Position x);

/**
 * Ising model on {0,1}^d: p(x) ∝ exp((1/theta) sum_i sum_{j in N_i} x_i x_j).
 *
 * The double sum visits every edge twice. Binary coordinates are cyclic, so
 * both x^{j-} and x^{j+} flip bit j.
 */
class IsingModel final : public DiscreteModel, public ExpFamilyStructure {
 public:
  explicit IsingModel(std::vector<std::vector<std::size_t>> neighbours);
  /// m x m grid with 4-neighbourhoods and free boundary.
  static IsingModel grid(std::size_t m);

  std::string name() const override { return "ising"; }
  const ProductDomain& domain() const override { return domain_; }
  std::size_t dim_theta() const override { return 1; }
  double log_tilde_p(const Vector& theta, PointView x) const override;
  double ratio_minus(const Vector& theta, PointView x,
                     std::size_t j) const override;
  double ratio_minus_succ(const Vector& theta, PointView x,
                          std::size_t j) const override;
  const ExpFamilyStructure* exp_family() const override { return this; }
  void check_theta(const Vector& theta) const override;

  const std::vector<std::size_t>& neighbours(std::size_t i) const {
    return neighbours_.at(i);
  }
  /// Change of sum_i sum_{j in N_i} x_i x_j when bit j is flipped.
  double flip_energy_delta(PointView x, std::size_t j) const;

  std::size_t natural_dim() const override { return 1; }
  Vector eta(const Vector& theta) const override;
  Matrix grad_eta(const Vector& theta) const override;
  std::vector<Matrix> hess_eta(const Vector& theta) const override;
  Vector suff_stat(PointView x) const override;
  double base_measure(PointView) const override { return 0.0; }
  bool delta_minus(PointView x, std::size_t j, Vector& dT,
                   double& db) const override;

 private:
  std::vector<std::vector<std::size_t>> neighbours_;
  ProductDomain domain_;
};

/// P(x_i = 1 | rest), from the model's own log_tilde_p difference.
double pseudo_conditional(const IsingModel& model, const Vector& theta,
                          PointView x, std::size_t i);

/**
 * Poisson graphical model and its Conway-Maxwell-Poisson generalisation:
 *
 *   log p(x) = sum_i theta_i x_i - sum_{(i,j) in E} theta_ij x_i x_j
 *              - sum_i c_i log(x_i!) + const,
 *
 * with c_i = 1 (Poisson) or c_i = theta_{0,i} (dispersion). Parameters are
 * packed as [theta_1..theta_d, theta_e for e in edges, theta_{0,1..d}].
 */
class CountGraphicalModel : public DiscreteModel, public ExpFamilyStructure {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  CountGraphicalModel(std::size_t d, std::vector<Edge> edges, bool dispersion);
  /// All pairs i < j.
  static std::vector<Edge> complete_graph(std::size_t d);

  std::string name() const override { return dispersion_ ? "cmp-pgm" : "pgm"; }
  const ProductDomain& domain() const override { return domain_; }
  std::size_t dim_theta() const override { return dim_; }
  double log_tilde_p(const Vector& theta, PointView x) const override;
  double ratio_minus(const Vector& theta, PointView x,
                     std::size_t j) const override;
  double ratio_minus_succ(const Vector& theta, PointView x,
                          std::size_t j) const override;
  const ExpFamilyStructure* exp_family() const override { return this; }

  std::size_t d() const { return d_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_dispersion() const { return dispersion_; }
  std::size_t edge_offset() const { return d_; }
  std::size_t dispersion_offset() const { return d_ + edges_.size(); }
  /// Log-weight of x_j = v given the other coordinates, up to a constant:
  /// v * (theta_j - sum_k theta_jk x_k) - c_j log(v!).
  double conditional_log_weight(const Vector& theta, PointView x,
                                std::size_t j, Position v) const;
  /// (log rate, dispersion) of the conditional of x_j as a CMP.
  std::pair<double, double> conditional_cmp(const Vector& theta, PointView x,
                                            std::size_t j) const;

  std::size_t natural_dim() const override { return dim_; }
  Vector eta(const Vector& theta) const override { return theta; }
  Matrix grad_eta(const Vector& theta) const override;
  std::vector<Matrix> hess_eta(const Vector& theta) const override;
  Vector hess_eta_trace(const Vector&) const override;
  bool eta_is_identity() const override { return true; }
  Vector suff_stat(PointView x) const override;
  double base_measure(PointView x) const override;
  bool delta_minus(PointView x, std::size_t j, Vector& dT,
                   double& db) const override;

 private:
  double dispersion(const Vector& theta, std::size_t j) const;
  /// theta_j - sum_{k ~ j} theta_jk x_k
  double local_field(const Vector& theta, PointView x, std::size_t j) const;

  std::size_t d_;
  std::vector<Edge> edges_;
  bool dispersion_;
  std::size_t dim_;
  /// For each node, (neighbour, edge index) pairs.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency_;
  ProductDomain domain_;
};

class PoissonGraphicalModel final : public CountGraphicalModel {
 public:
  PoissonGraphicalModel(std::size_t d, std::vector<Edge> edges)
      : CountGraphicalModel(d, std::move(edges), false) {}
};

class CmpGraphicalModel final : public CountGraphicalModel {
 public:
  CmpGraphicalModel(std::size_t d, std::vector<Edge> edges)
      : CountGraphicalModel(d, std::move(edges), true) {}
};

/// log(x!) through lgamma.
double log_factorial(Position x);

}  // namespace dfdb
