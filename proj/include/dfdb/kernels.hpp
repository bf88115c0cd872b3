#pragma once

#include <optional>

#include "dfdb/domain.hpp"

namespace dfdb {

/**
 * Exponential kernel on coordinate agreement,
 *
 *   k(x, y) = m(x) m(y) exp(-(1/d) sum_i 1[x_i ~ y_i]),
 *
 * where ~ is "differs from" (Mismatch, the Hamming form) or "equals"
 * (Match). Only the Mismatch form is positive definite on binary
 * coordinates, so it is the default. The optional weight is
 * m(x) = sigmoid(threshold - |sum_i (2 x_i - 1)|), which damps points whose
 * ±1-coded total is extreme.
 */
class DiscreteKernel {
 public:
  enum class Form { Mismatch, Match };

  DiscreteKernel() = default;
  explicit DiscreteKernel(Form form) : form_(form) {}
  static DiscreteKernel weighted(double threshold, Form form = Form::Mismatch) {
    DiscreteKernel k(form);
    k.threshold_ = threshold;
    return k;
  }

  Form form() const { return form_; }
  bool is_weighted() const { return threshold_.has_value(); }
  std::optional<double> threshold() const { return threshold_; }

  double evaluate(PointView x, PointView y) const;
  double weight(PointView x) const;
  /// m as a function of the ±1-coded total sum_i (2 x_i - 1).
  double weight_from_spin_sum(double spin_sum) const;

  /// Whether coordinate values a and b contribute to the exponent.
  bool counts(Position a, Position b) const {
    return form_ == Form::Mismatch ? a != b : a == b;
  }

 private:
  Form form_ = Form::Mismatch;
  std::optional<double> threshold_;
};

}  // namespace dfdb
