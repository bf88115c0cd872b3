#include "dfdb/transforms.hpp"

#include <cmath>
#include <stdexcept>

namespace dfdb {

void ParamTransform::check_dim(const Vector& v) const {
  if (static_cast<std::size_t>(v.size()) != kinds_.size()) {
    throw std::invalid_argument("parameter vector has size " + std::to_string(v.size()) +
                                ", transform expects " + std::to_string(kinds_.size()));
  }
}

Vector ParamTransform::to_unconstrained(const Vector& theta) const {
  check_dim(theta);
  Vector z(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    switch (kinds_[static_cast<std::size_t>(i)]) {
      case Kind::Identity:
        z[i] = theta[i];
        break;
      case Kind::Log:
        if (!(theta[i] > 0.0)) throw std::domain_error("log transform needs theta > 0");
        z[i] = std::log(theta[i]);
        break;
      case Kind::Square:
        if (theta[i] < 0.0) throw std::domain_error("square transform needs theta >= 0");
        z[i] = std::sqrt(theta[i]);
        break;
    }
  }
  return z;
}

Vector ParamTransform::to_constrained(const Vector& z) const {
  check_dim(z);
  Vector theta(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    switch (kinds_[static_cast<std::size_t>(i)]) {
      case Kind::Identity:
        theta[i] = z[i];
        break;
      case Kind::Log:
        theta[i] = std::exp(z[i]);
        break;
      case Kind::Square: {
        const double a = std::abs(z[i]);
        theta[i] = a * a;
        break;
      }
    }
  }
  return theta;
}

Vector ParamTransform::jacobian_diag(const Vector& z) const {
  check_dim(z);
  Vector j(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    switch (kinds_[static_cast<std::size_t>(i)]) {
      case Kind::Identity:
        j[i] = 1.0;
        break;
      case Kind::Log:
        j[i] = std::exp(z[i]);
        break;
      case Kind::Square:
        j[i] = 2.0 * z[i];
        break;
    }
  }
  return j;
}

double ParamTransform::log_jacobian(const Vector& z) const {
  check_dim(z);
  double s = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    switch (kinds_[static_cast<std::size_t>(i)]) {
      case Kind::Identity:
        break;
      case Kind::Log:
        s += z[i];
        break;
      case Kind::Square:
        s += std::log(2.0 * std::abs(z[i]));
        break;
    }
  }
  return s;
}

Vector ParamTransform::grad_log_jacobian(const Vector& z) const {
  check_dim(z);
  Vector g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    switch (kinds_[static_cast<std::size_t>(i)]) {
      case Kind::Identity:
        g[i] = 0.0;
        break;
      case Kind::Log:
        g[i] = 1.0;
        break;
      case Kind::Square:
        g[i] = 1.0 / z[i];
        break;
    }
  }
  return g;
}

std::string to_string(ParamTransform::Kind kind) {
  switch (kind) {
    case ParamTransform::Kind::Identity:
      return "identity";
    case ParamTransform::Kind::Log:
      return "log";
    case ParamTransform::Kind::Square:
      return "square";
  }
  return "unknown";
}

}  // namespace dfdb
