#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dfdb/dataset.hpp"
#include "dfdb/kernels.hpp"
#include "dfdb/models.hpp"

namespace dfdb {

/// Relative step used by the finite-difference gradient fallback.
inline constexpr double kGradientStep = 1e-5;
/// Relative step for second differences; larger so that cancellation in
/// f(x+h) - 2f(x) + f(x-h) stays below the truncation error.
inline constexpr double kHessianStep = 1e-4;

using ScalarFunction = std::function<double(const Vector&)>;

/// Central differences with h_k = rel_step * (1 + |theta_k|).
Vector fd_gradient(const ScalarFunction& f, const Vector& theta,
                   double rel_step = kGradientStep);
/// sum_k of central second differences.
double fd_hessian_trace(const ScalarFunction& f, const Vector& theta,
                        double rel_step = kHessianStep);

/**
 * Total loss D_n(theta) entering exp(-beta D_n(theta)).
 *
 * Every loss here is n times a per-datum quantity. `gradient` and
 * `hessian_trace` default to finite differences of `value`.
 */
class LossFunction {
 public:
  virtual ~LossFunction() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t sample_size() const = 0;

  virtual double value(const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& theta) const;
  virtual double hessian_trace(const Vector& theta) const;
};

// ------------------------------------------------------------------ DFD

/// Per-datum empirical DFD: mean over data of sum_j r_j(x)^2 - 2 r_j(x^{j+}).
double dfd_empirical(const DiscreteModel& model, const Vector& theta,
                     const Dataset& data);
/// Same sum under arbitrary nonnegative weights, divided by their total.
double dfd_weighted(const DiscreteModel& model, const Vector& theta,
                    const std::vector<Point>& points,
                    const std::vector<double>& weights);

/// Ratio exponents (dT, db) of an exponential-family model, deduplicated
/// with summed weights. Every r = exp(eta·dT + db) in a class is equal.
class RatioClasses {
 public:
  void add(const Vector& dT, double db, double weight);
  std::size_t size() const { return weight_.size(); }
  const Vector& dT(std::size_t c) const { return dT_[c]; }
  double db(std::size_t c) const { return db_[c]; }
  double weight(std::size_t c) const { return weight_[c]; }
  /// Index of the class, inserting it with zero weight if new.
  std::size_t index(const Vector& dT, double db);

 private:
  std::map<std::vector<double>, std::size_t> lookup_;
  std::vector<Vector> dT_;
  std::vector<double> db_;
  std::vector<double> weight_;
};

/**
 * D_n = n * DFD(p_theta || p_n). Analytic derivatives whenever the model
 * exposes an exponential-family structure.
 *
 * Direct evaluation visits all U distinct points and d axes. Compressed
 * evaluation (exponential family only) groups the backward ratios r_j(x) and
 * forward ratios r_j(x^{j+}) into classes of equal exponent once per dataset;
 * Auto picks it when the classes are fewer than half the U d terms.
 */
class DfdLoss final : public LossFunction {
 public:
  enum class Strategy { Auto, Direct, Compressed };

  DfdLoss(std::shared_ptr<const DiscreteModel> model, const Dataset& data,
          Aggregation aggregation = Aggregation::Auto, Strategy strategy = Strategy::Auto);

  std::string name() const override { return "dfd"; }
  std::size_t dim() const override { return model_->dim_theta(); }
  std::size_t sample_size() const override { return n_; }

  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  double hessian_trace(const Vector& theta) const override;

  bool has_analytic_derivatives() const { return model_->exp_family() != nullptr; }
  std::size_t evaluation_points() const { return data_.points.size(); }
  Strategy strategy() const { return strategy_; }

 private:
  struct Derivatives {
    Vector gradient;
    double hessian_trace = 0.0;
  };
  Derivatives analytic(const Vector& theta, bool want_trace) const;

  std::shared_ptr<const DiscreteModel> model_;
  CountedPoints data_;
  std::size_t n_;
  Strategy strategy_ = Strategy::Direct;
  RatioClasses backward_;  // r_j(x), entering squared
  RatioClasses forward_;   // r_j(x^{j+}), entering linearly
};

// ------------------------------------------------------------------ KSD

/// Stein kernel u_p(x, y) for the operator S_p[h](x) = sum_i h_i(x^{i+}) - r_i(x) h_i(x).
double stein_kernel(const DiscreteModel& model, const DiscreteKernel& kernel,
                    const Vector& theta, PointView x, PointView y);

/**
 * D_n = n * KSD^2 with the V-statistic KSD^2 = n^{-2} sum_{a,b} u_p(x_a, x_b).
 *
 * Two evaluation strategies give the same value:
 *  - Direct: O(U^2 d) per evaluation for U distinct points.
 *  - Compressed: for exponential-family models, the ratios r_i(x) only take
 *    as many values as there are distinct (dT, db) pairs, so all kernel sums
 *    are precomputed once per dataset and each evaluation costs O(C^2) for C
 *    such classes. Falls back to Direct if C exceeds `max_classes`.
 */
class KsdLoss final : public LossFunction {
 public:
  enum class Strategy { Auto, Direct, Compressed };

  KsdLoss(std::shared_ptr<const DiscreteModel> model, DiscreteKernel kernel,
          const Dataset& data, Aggregation aggregation = Aggregation::Auto,
          Strategy strategy = Strategy::Auto, std::size_t max_classes = 512);

  std::string name() const override { return "ksd"; }
  std::size_t dim() const override { return model_->dim_theta(); }
  std::size_t sample_size() const override { return n_; }
  double value(const Vector& theta) const override;

  Strategy strategy() const { return strategy_; }
  double value_direct(const Vector& theta) const;

 private:
  void build_geometry();
  bool try_compress(std::size_t max_classes);
  double value_compressed(const Vector& theta) const;

  std::shared_ptr<const DiscreteModel> model_;
  DiscreteKernel kernel_;
  CountedPoints data_;
  std::size_t n_;
  Strategy strategy_;

  // theta-independent geometry, U x d row-major where 2-D
  std::vector<Position> succ_;         // position of x_a^{i+} on axis i
  std::vector<double> weight_;         // m(x_a)
  std::vector<double> weight_succ_;    // m(x_a^{i+})
  std::vector<double> exp_table_;      // exp(-h/d), h = 0..d

  // compressed representation
  std::vector<int> class_of_;          // U x d, -1 for extended x^{i-}
  std::vector<Vector> class_dT_;
  std::vector<double> class_db_;
  double const_term_ = 0.0;
  Vector linear_term_;
  Matrix quadratic_term_;
};

// -------------------------------------------------------- pseudo-likelihood

/// D_n = -sum_data sum_i log p(x_i | x_{-i}) for binary-coordinate models.
/// Each term is log(1 + r_i(x)); for exponential-family models the terms are
/// grouped by exponent class and differentiated analytically.
class PseudoLikelihoodLoss final : public LossFunction {
 public:
  PseudoLikelihoodLoss(std::shared_ptr<const DiscreteModel> model,
                       const Dataset& data,
                       Aggregation aggregation = Aggregation::Auto);

  std::string name() const override { return "pseudo"; }
  std::size_t dim() const override { return model_->dim_theta(); }
  std::size_t sample_size() const override { return n_; }
  double value(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  double hessian_trace(const Vector& theta) const override;

 private:
  std::shared_ptr<const DiscreteModel> model_;
  CountedPoints data_;
  std::size_t n_;
  bool compressed_ = false;
  RatioClasses classes_;
};

// --------------------------------------------- truncated CMP likelihood

/// Standard-Bayes comparator for the CMP model: the negative log-likelihood
/// with Z_theta approximated by sum_{y=0}^{terms-1} p~(y).
class TruncatedCmpNll final : public LossFunction {
 public:
  static constexpr int kDefaultTerms = 100;

  explicit TruncatedCmpNll(const Dataset& data, int terms = kDefaultTerms);

  std::string name() const override { return "standard-bayes-cmp"; }
  std::size_t dim() const override { return 2; }
  std::size_t sample_size() const override { return n_; }
  double value(const Vector& theta) const override;
  double log_normaliser(const Vector& theta) const;

 private:
  CmpModel model_;
  CountedPoints data_;
  std::size_t n_;
  int terms_;
};

}  // namespace dfdb
