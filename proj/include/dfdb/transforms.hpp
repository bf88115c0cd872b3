#pragma once

#include <string>
#include <vector>

#include "dfdb/domain.hpp"

namespace dfdb {

/// Coordinate-wise bijection between constrained theta and unconstrained z.
class ParamTransform {
 public:
  enum class Kind {
    Identity,  ///< theta = z
    Log,       ///< theta = exp(z), theta > 0
    Square,    ///< theta = z^2, theta >= 0; readback takes |z|
  };

  ParamTransform() = default;
  explicit ParamTransform(std::vector<Kind> kinds) : kinds_(std::move(kinds)) {}
  static ParamTransform uniform(std::size_t p, Kind kind) {
    return ParamTransform(std::vector<Kind>(p, kind));
  }

  std::size_t dim() const { return kinds_.size(); }
  const std::vector<Kind>& kinds() const { return kinds_; }

  Vector to_unconstrained(const Vector& theta) const;
  Vector to_constrained(const Vector& z) const;
  /// d theta_i / d z_i (the Jacobian is diagonal).
  Vector jacobian_diag(const Vector& z) const;
  /// log |det d theta / d z|
  double log_jacobian(const Vector& z) const;
  Vector grad_log_jacobian(const Vector& z) const;

 private:
  void check_dim(const Vector& v) const;
  std::vector<Kind> kinds_;
};

std::string to_string(ParamTransform::Kind kind);

}  // namespace dfdb
