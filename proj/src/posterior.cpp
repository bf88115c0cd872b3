#include "dfdb/posterior.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dfdb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool finite(const Vector& v) { return v.allFinite(); }

}  // namespace

Prior::Prior(std::vector<Component> components) : components_(std::move(components)) {
  for (const auto& c : components_) {
    switch (c.kind) {
      case Component::Kind::ChiSquared:
        if (!(c.a > 0.0)) throw std::invalid_argument("chi-squared prior needs dof > 0");
        break;
      case Component::Kind::Normal:
      case Component::Kind::HalfNormal:
        if (!(c.b > 0.0)) throw std::invalid_argument("prior scale must be positive");
        break;
      case Component::Kind::Flat:
        break;
    }
  }
}

double Prior::log_density(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != components_.size()) {
    throw std::invalid_argument("prior dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const double t = theta[static_cast<Eigen::Index>(i)];
    switch (c.kind) {
      case Component::Kind::Flat:
        break;
      case Component::Kind::ChiSquared:
        if (!(t > 0.0)) return kNegInf;
        s += (0.5 * c.a - 1.0) * std::log(t) - 0.5 * t;
        break;
      case Component::Kind::Normal: {
        const double u = (t - c.a) / c.b;
        s += -0.5 * u * u;
        break;
      }
      case Component::Kind::HalfNormal: {
        if (t < 0.0) return kNegInf;
        const double u = t / c.b;
        s += -0.5 * u * u;
        break;
      }
    }
  }
  return s;
}

Vector Prior::grad_log_density(const Vector& theta) const {
  Vector g = Vector::Zero(theta.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const auto k = static_cast<Eigen::Index>(i);
    switch (c.kind) {
      case Component::Kind::Flat:
        break;
      case Component::Kind::ChiSquared:
        g[k] = (0.5 * c.a - 1.0) / theta[k] - 0.5;
        break;
      case Component::Kind::Normal:
        g[k] = -(theta[k] - c.a) / (c.b * c.b);
        break;
      case Component::Kind::HalfNormal:
        g[k] = -theta[k] / (c.b * c.b);
        break;
    }
  }
  return g;
}

double Prior::laplacian_log_density(const Vector& theta) const {
  double s = 0.0;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const double t = theta[static_cast<Eigen::Index>(i)];
    switch (c.kind) {
      case Component::Kind::Flat:
        break;
      case Component::Kind::ChiSquared:
        s += -(0.5 * c.a - 1.0) / (t * t);
        break;
      case Component::Kind::Normal:
      case Component::Kind::HalfNormal:
        s += -1.0 / (c.b * c.b);
        break;
    }
  }
  return s;
}

Vector Prior::mean() const {
  Vector m(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    double v = 0.0;
    switch (c.kind) {
      case Component::Kind::Flat:
        v = 0.0;
        break;
      case Component::Kind::ChiSquared:
      case Component::Kind::Normal:
        v = c.a;
        break;
      case Component::Kind::HalfNormal:
        v = c.b * std::sqrt(2.0 / std::numbers::pi);
        break;
    }
    m[static_cast<Eigen::Index>(i)] = v;
  }
  return m;
}

std::string to_string(Prior::Component::Kind kind) {
  switch (kind) {
    case Prior::Component::Kind::Flat:
      return "flat";
    case Prior::Component::Kind::ChiSquared:
      return "chi-squared";
    case Prior::Component::Kind::Normal:
      return "normal";
    case Prior::Component::Kind::HalfNormal:
      return "half-normal";
  }
  return "unknown";
}

GeneralisedPosterior::GeneralisedPosterior(Prior prior,
                                           std::shared_ptr<const LossFunction> loss,
                                           double beta, ParamTransform transform)
    : prior_(std::move(prior)),
      loss_(std::move(loss)),
      beta_(beta),
      transform_(std::move(transform)) {
  if (!loss_) throw std::invalid_argument("posterior needs a loss");
  if (!(beta_ >= 0.0) || !std::isfinite(beta_)) {
    throw std::invalid_argument("beta must be finite and nonnegative");
  }
  if (prior_.dim() != loss_->dim() || transform_.dim() != loss_->dim()) {
    throw std::invalid_argument("prior, loss and transform dimensions differ");
  }
}

std::optional<double> GeneralisedPosterior::log_density_constrained(
    const Vector& theta) const {
  const double lp = prior_.log_density(theta);
  if (!std::isfinite(lp)) return std::nullopt;
  double value = lp;
  if (beta_ != 0.0) {
    try {
      value -= beta_ * loss_->value(theta);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<double> GeneralisedPosterior::log_density_unconstrained(
    const Vector& z) const {
  if (!finite(z)) return std::nullopt;
  const auto base = log_density_constrained(transform_.to_constrained(z));
  if (!base) return std::nullopt;
  const double value = *base + transform_.log_jacobian(z);
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<Vector> GeneralisedPosterior::grad_unconstrained(const Vector& z) const {
  if (!finite(z)) return std::nullopt;
  const Vector theta = transform_.to_constrained(z);
  Vector g = prior_.grad_log_density(theta);
  if (beta_ != 0.0) {
    try {
      g -= beta_ * loss_->gradient(theta);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  }
  // to_constrained takes |z| for Square, so d theta/d z = 2z keeps the sign.
  Vector out = transform_.jacobian_diag(z).cwiseProduct(g) + transform_.grad_log_jacobian(z);
  if (!finite(out)) return std::nullopt;
  return out;
}

}  // namespace dfdb
