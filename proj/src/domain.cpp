#include "dfdb/domain.hpp"

#include <sstream>
#include <stdexcept>

namespace dfdb {

CoordinateDomain CoordinateDomain::finite_cyclic(Position size) {
  if (size < 2) {
    throw std::invalid_argument("finite coordinate set needs at least 2 elements");
  }
  return {Kind::FiniteCyclic, size};
}

CoordinateDomain CoordinateDomain::half_infinite_min() {
  return {Kind::HalfInfiniteMin, 0};
}

CoordinateDomain CoordinateDomain::half_infinite_max() {
  // Reversing the order turns the maximum into a minimum.
  return half_infinite_min();
}

CoordinateDomain CoordinateDomain::bi_infinite() { return {Kind::BiInfinite, 0}; }

bool CoordinateDomain::contains(Position pos) const {
  if (pos == kStar) return false;
  switch (kind_) {
    case Kind::FiniteCyclic:
      return pos >= 0 && pos < size_;
    case Kind::HalfInfiniteMin:
      return pos >= 0;
    case Kind::BiInfinite:
      return true;
  }
  return false;
}

Position CoordinateDomain::succ(Position pos) const {
  if (pos == kStar) return 0;
  if (kind_ == Kind::FiniteCyclic && pos == size_ - 1) return 0;
  return pos + 1;
}

Position CoordinateDomain::pred(Position pos) const {
  switch (kind_) {
    case Kind::FiniteCyclic:
      return pos == 0 ? size_ - 1 : pos - 1;
    case Kind::HalfInfiniteMin:
      return pos == 0 ? kStar : pos - 1;
    case Kind::BiInfinite:
      return pos - 1;
  }
  return pos - 1;
}

ProductDomain::ProductDomain(std::vector<CoordinateDomain> coords)
    : coords_(std::move(coords)) {
  if (coords_.empty()) {
    throw std::invalid_argument("product domain needs at least one coordinate");
  }
}

ProductDomain ProductDomain::uniform(std::size_t d, const CoordinateDomain& c) {
  return ProductDomain(std::vector<CoordinateDomain>(d, c));
}

bool ProductDomain::contains(PointView x) const {
  if (x.size() != coords_.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!coords_[i].contains(x[i])) return false;
  }
  return true;
}

bool ProductDomain::is_finite() const {
  for (const auto& c : coords_) {
    if (c.kind() != CoordinateDomain::Kind::FiniteCyclic) return false;
  }
  return true;
}

std::size_t ProductDomain::cardinality() const {
  if (!is_finite()) throw std::logic_error("cardinality of an infinite domain");
  std::size_t n = 1;
  for (const auto& c : coords_) n *= static_cast<std::size_t>(c.size());
  return n;
}

void ProductDomain::check_axis(std::size_t axis) const {
  if (axis >= coords_.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) +
                            " out of range for dimension " +
                            std::to_string(coords_.size()));
  }
}

Point ProductDomain::succ(PointView x, std::size_t axis) const {
  check_axis(axis);
  Point y(x.begin(), x.end());
  y[axis] = coords_[axis].succ(y[axis]);
  return y;
}

Point ProductDomain::pred(PointView x, std::size_t axis) const {
  check_axis(axis);
  Point y(x.begin(), x.end());
  // pred of star is never needed by the operators; keep it a fixed point.
  if (y[axis] != kStar) y[axis] = coords_[axis].pred(y[axis]);
  return y;
}

bool is_extended(PointView x) {
  for (Position p : x) {
    if (p == kStar) return true;
  }
  return false;
}

double eval_extended(const ScalarField& h, PointView x) {
  return is_extended(x) ? 0.0 : h(x);
}

Vector eval_extended(const VectorField& h, PointView x, std::size_t d) {
  return is_extended(x) ? Vector::Zero(static_cast<Eigen::Index>(d)) : h(x);
}

Vector forward_difference(const ProductDomain& dom, const ScalarField& h,
                          PointView x) {
  const std::size_t d = dom.dim();
  Vector out(static_cast<Eigen::Index>(d));
  const double hx = eval_extended(h, x);
  for (std::size_t i = 0; i < d; ++i) {
    out[static_cast<Eigen::Index>(i)] = eval_extended(h, dom.succ(x, i)) - hx;
  }
  return out;
}

Vector backward_difference(const ProductDomain& dom, const ScalarField& h,
                           PointView x) {
  const std::size_t d = dom.dim();
  Vector out(static_cast<Eigen::Index>(d));
  const double hx = eval_extended(h, x);
  for (std::size_t i = 0; i < d; ++i) {
    out[static_cast<Eigen::Index>(i)] = hx - eval_extended(h, dom.pred(x, i));
  }
  return out;
}

double forward_divergence(const ProductDomain& dom, const VectorField& h,
                          PointView x) {
  const std::size_t d = dom.dim();
  const Vector hx = eval_extended(h, x, d);
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    sum += eval_extended(h, dom.succ(x, i), d)[ii] - hx[ii];
  }
  return sum;
}

double backward_divergence(const ProductDomain& dom, const VectorField& h,
                           PointView x) {
  const std::size_t d = dom.dim();
  const Vector hx = eval_extended(h, x, d);
  double sum = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    sum += hx[ii] - eval_extended(h, dom.pred(x, i), d)[ii];
  }
  return sum;
}

void for_each_point(const ProductDomain& dom,
                    const std::function<void(PointView)>& visit) {
  if (!dom.is_finite()) throw std::logic_error("cannot enumerate an infinite domain");
  const std::size_t d = dom.dim();
  Point x(d, 0);
  while (true) {
    visit(x);
    std::size_t i = d;
    while (i > 0) {
      --i;
      if (++x[i] < dom.coord(i).size()) break;
      x[i] = 0;
      if (i == 0) return;
    }
  }
}

std::string to_string(PointView x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) os << ',';
    if (x[i] == kStar) {
      os << '*';
    } else {
      os << x[i];
    }
  }
  os << ')';
  return os.str();
}

}  // namespace dfdb
