#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dfdb {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Position of an element within the ordering of its coordinate set.
using Position = std::int64_t;

/// Sentinel for the extended state below the minimum of a min-bounded set.
inline constexpr Position kStar = std::numeric_limits<Position>::min();

/// A point of a product domain, stored as positions (one per coordinate).
/// A point is "extended" when at least one coordinate equals kStar.
using Point = std::vector<Position>;
using PointView = std::span<const Position>;

/**
 * One coordinate set S_i of the product domain.
 *
 * Only three orderings are representable: finite cyclic (both ends exist,
 * decrement of the minimum wraps to the maximum), half-infinite with a
 * minimum, and bi-infinite. A set with only a maximum is reversed into the
 * half-infinite form on construction, so `HalfInfiniteMin` covers it.
 */
class CoordinateDomain {
 public:
  enum class Kind { FiniteCyclic, HalfInfiniteMin, BiInfinite };

  static CoordinateDomain finite_cyclic(Position size);
  static CoordinateDomain half_infinite_min();
  /// Max-only ordering, normalised by order reversal.
  static CoordinateDomain half_infinite_max();
  static CoordinateDomain bi_infinite();

  Kind kind() const { return kind_; }
  /// Number of elements for FiniteCyclic; 0 for the infinite kinds.
  Position size() const { return size_; }
  bool contains(Position pos) const;

  Position succ(Position pos) const;
  /// May return kStar for HalfInfiniteMin at position 0.
  Position pred(Position pos) const;

  bool operator==(const CoordinateDomain&) const = default;

 private:
  CoordinateDomain(Kind kind, Position size) : kind_(kind), size_(size) {}
  Kind kind_;
  Position size_;
};

class ProductDomain {
 public:
  explicit ProductDomain(std::vector<CoordinateDomain> coords);
  /// d copies of the same coordinate set.
  static ProductDomain uniform(std::size_t d, const CoordinateDomain& c);

  std::size_t dim() const { return coords_.size(); }
  const CoordinateDomain& coord(std::size_t i) const { return coords_.at(i); }
  const std::vector<CoordinateDomain>& coords() const { return coords_; }

  /// True when every coordinate is a valid (non-star) position.
  bool contains(PointView x) const;
  /// True when all coordinates are FiniteCyclic.
  bool is_finite() const;
  /// Number of points of a finite domain.
  std::size_t cardinality() const;

  /// x^{axis+}; a star coordinate increments to position 0.
  Point succ(PointView x, std::size_t axis) const;
  /// x^{axis-}; may contain kStar on `axis`.
  Point pred(PointView x, std::size_t axis) const;

  bool operator==(const ProductDomain&) const = default;

 private:
  void check_axis(std::size_t axis) const;
  std::vector<CoordinateDomain> coords_;
};

bool is_extended(PointView x);

/// Real-valued function on a domain; callers guarantee non-extended input.
using ScalarField = std::function<double(PointView)>;
/// Vector field h: X -> R^d.
using VectorField = std::function<Vector(PointView)>;

/// Evaluates h with the convention h(x) = 0 when x has a star coordinate.
double eval_extended(const ScalarField& h, PointView x);
Vector eval_extended(const VectorField& h, PointView x, std::size_t d);

/// [h(x^{i+}) - h(x)]_i
Vector forward_difference(const ProductDomain& dom, const ScalarField& h,
                          PointView x);
/// [h(x) - h(x^{i-})]_i with h(star) = 0
Vector backward_difference(const ProductDomain& dom, const ScalarField& h,
                           PointView x);
/// sum_i h_i(x^{i+}) - h_i(x)
double forward_divergence(const ProductDomain& dom, const VectorField& h,
                          PointView x);
/// sum_i h_i(x) - h_i(x^{i-}) with h(star) = 0
double backward_divergence(const ProductDomain& dom, const VectorField& h,
                           PointView x);

/// Visits every point of a finite domain in lexicographic order.
void for_each_point(const ProductDomain& dom,
                    const std::function<void(PointView)>& visit);

std::string to_string(PointView x);

}  // namespace dfdb
