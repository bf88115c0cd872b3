#include "dfdb/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace dfdb {

double DiscreteKernel::weight_from_spin_sum(double spin_sum) const {
  if (!threshold_) return 1.0;
  return 1.0 / (1.0 + std::exp(-(*threshold_ - std::abs(spin_sum))));
}

double DiscreteKernel::weight(PointView x) const {
  if (!threshold_) return 1.0;
  double s = 0.0;
  for (Position v : x) s += 2.0 * static_cast<double>(v) - 1.0;
  return weight_from_spin_sum(s);
}

double DiscreteKernel::evaluate(PointView x, PointView y) const {
  if (x.size() != y.size()) throw std::invalid_argument("kernel arguments differ in dimension");
  std::size_t c = 0;
  for (std::size_t i = 0; i < x.size(); ++i) c += counts(x[i], y[i]) ? 1 : 0;
  const double base =
      std::exp(-static_cast<double>(c) / static_cast<double>(x.size()));
  return threshold_ ? weight(x) * base * weight(y) : base;
}

}  // namespace dfdb
