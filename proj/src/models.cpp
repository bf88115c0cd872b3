#include "dfdb/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dfdb {

namespace {

Position single(PointView x) { return x[0]; }

void require_positive(const Vector& theta, const char* what) {
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!(theta[i] > 0.0) || !std::isfinite(theta[i])) {
      throw std::domain_error(std::string(what) +
                              " parameters must be positive and finite");
    }
  }
}

}  // namespace

double log_factorial(Position x) { return std::lgamma(static_cast<double>(x) + 1.0); }

Vector ExpFamilyStructure::hess_eta_trace(const Vector& theta) const {
  const auto hs = hess_eta(theta);
  Vector out(static_cast<Eigen::Index>(hs.size()));
  for (std::size_t k = 0; k < hs.size(); ++k) {
    out[static_cast<Eigen::Index>(k)] = hs[k].trace();
  }
  return out;
}

double DiscreteModel::ratio_minus(const Vector& theta, PointView x,
                                  std::size_t j) const {
  const Point y = domain().pred(x, j);
  if (is_extended(y)) return 0.0;
  return std::exp(log_tilde_p(theta, y) - log_tilde_p(theta, x));
}

double DiscreteModel::ratio_minus_succ(const Vector& theta, PointView x,
                                       std::size_t j) const {
  const Point y = domain().succ(x, j);
  return std::exp(log_tilde_p(theta, x) - log_tilde_p(theta, y));
}

void DiscreteModel::check_theta(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_theta()) {
    throw std::invalid_argument(name() + ": expected " +
                                std::to_string(dim_theta()) + " parameters, got " +
                                std::to_string(theta.size()));
  }
}

// ---------------------------------------------------------------- CMP

CmpModel::CmpModel()
    : domain_(ProductDomain::uniform(1, CoordinateDomain::half_infinite_min())) {}

void CmpModel::check_theta(const Vector& theta) const {
  DiscreteModel::check_theta(theta);
  require_positive(theta, "CMP");
}

double CmpModel::log_tilde_p(const Vector& theta, PointView x) const {
  const Position v = single(x);
  return static_cast<double>(v) * std::log(theta[0]) - theta[1] * log_factorial(v);
}

double cmp_ratio_minus(const Vector& theta, Position x) {
  if (!(theta[0] > 0.0) || !(theta[1] > 0.0)) {
    throw std::domain_error("CMP ratio needs theta1, theta2 > 0");
  }
  if (x == 0) return 0.0;
  return std::pow(static_cast<double>(x), theta[1]) / theta[0];
}

double CmpModel::ratio_minus(const Vector& theta, PointView x, std::size_t) const {
  return cmp_ratio_minus(theta, single(x));
}

double CmpModel::ratio_minus_succ(const Vector& theta, PointView x,
                                  std::size_t) const {
  return cmp_ratio_minus(theta, single(x) + 1);
}

Vector CmpModel::eta(const Vector& theta) const {
  return Vector{{std::log(theta[0]), theta[1]}};
}

Matrix CmpModel::grad_eta(const Vector& theta) const {
  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 1.0 / theta[0];
  g(1, 1) = 1.0;
  return g;
}

std::vector<Matrix> CmpModel::hess_eta(const Vector& theta) const {
  std::vector<Matrix> h(2, Matrix::Zero(2, 2));
  h[0](0, 0) = -1.0 / (theta[0] * theta[0]);
  return h;
}

Vector CmpModel::suff_stat(PointView x) const {
  const Position v = single(x);
  return Vector{{static_cast<double>(v), -log_factorial(v)}};
}

bool CmpModel::delta_minus(PointView x, std::size_t, Vector& dT, double& db) const {
  const Position v = single(x);
  if (v == 0) return false;
  dT.resize(2);
  dT[0] = -1.0;
  dT[1] = std::log(static_cast<double>(v));
  db = 0.0;
  return true;
}

// ---------------------------------------------------------------- Ising

IsingModel::IsingModel(std::vector<std::vector<std::size_t>> neighbours)
    : neighbours_(std::move(neighbours)),
      domain_(ProductDomain::uniform(neighbours_.size(),
                                     CoordinateDomain::finite_cyclic(2))) {
  const std::size_t d = neighbours_.size();
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j : neighbours_[i]) {
      if (j >= d || j == i) {
        throw std::invalid_argument("invalid neighbour index in Ising graph");
      }
      const auto& back = neighbours_[j];
      if (std::find(back.begin(), back.end(), i) == back.end()) {
        throw std::invalid_argument("Ising neighbour relation must be symmetric");
      }
    }
  }
}

IsingModel IsingModel::grid(std::size_t m) {
  if (m == 0) throw std::invalid_argument("grid side must be positive");
  std::vector<std::vector<std::size_t>> nb(m * m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t i = r * m + c;
      if (r > 0) nb[i].push_back(i - m);
      if (r + 1 < m) nb[i].push_back(i + m);
      if (c > 0) nb[i].push_back(i - 1);
      if (c + 1 < m) nb[i].push_back(i + 1);
    }
  }
  return IsingModel(std::move(nb));
}

void IsingModel::check_theta(const Vector& theta) const {
  DiscreteModel::check_theta(theta);
  require_positive(theta, "Ising");
}

Vector IsingModel::suff_stat(PointView x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < neighbours_.size(); ++i) {
    if (x[i] == 0) continue;
    for (std::size_t j : neighbours_[i]) s += static_cast<double>(x[j]);
  }
  return Vector::Constant(1, s);
}

double IsingModel::log_tilde_p(const Vector& theta, PointView x) const {
  return suff_stat(x)[0] / theta[0];
}

double IsingModel::flip_energy_delta(PointView x, std::size_t j) const {
  // x_j appears in its own row and in each neighbour's row.
  double field = 0.0;
  for (std::size_t k : neighbours_[j]) field += static_cast<double>(x[k]);
  const double change = x[j] == 0 ? 1.0 : -1.0;
  return 2.0 * change * field;
}

double IsingModel::ratio_minus(const Vector& theta, PointView x, std::size_t j) const {
  return std::exp(flip_energy_delta(x, j) / theta[0]);
}

double IsingModel::ratio_minus_succ(const Vector& theta, PointView x,
                                    std::size_t j) const {
  return std::exp(-flip_energy_delta(x, j) / theta[0]);
}

Vector IsingModel::eta(const Vector& theta) const {
  return Vector::Constant(1, 1.0 / theta[0]);
}

Matrix IsingModel::grad_eta(const Vector& theta) const {
  return Matrix::Constant(1, 1, -1.0 / (theta[0] * theta[0]));
}

std::vector<Matrix> IsingModel::hess_eta(const Vector& theta) const {
  return {Matrix::Constant(1, 1, 2.0 / (theta[0] * theta[0] * theta[0]))};
}

bool IsingModel::delta_minus(PointView x, std::size_t j, Vector& dT,
                             double& db) const {
  dT.resize(1);
  dT[0] = flip_energy_delta(x, j);
  db = 0.0;
  return true;
}

double pseudo_conditional(const IsingModel& model, const Vector& theta,
                          PointView x, std::size_t i) {
  Point one(x.begin(), x.end());
  Point zero(x.begin(), x.end());
  one[i] = 1;
  zero[i] = 0;
  const double delta = model.log_tilde_p(theta, one) - model.log_tilde_p(theta, zero);
  return 1.0 / (1.0 + std::exp(-delta));
}

// ---------------------------------------------------------------- PGM

CountGraphicalModel::CountGraphicalModel(std::size_t d, std::vector<Edge> edges,
                                         bool dispersion)
    : d_(d),
      edges_(std::move(edges)),
      dispersion_(dispersion),
      dim_(d + edges_.size() + (dispersion ? d : 0)),
      adjacency_(d),
      domain_(ProductDomain::uniform(d == 0 ? 1 : d,
                                     CoordinateDomain::half_infinite_min())) {
  if (d == 0) throw std::invalid_argument("graphical model needs d >= 1");
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [i, j] = edges_[e];
    if (i >= d || j >= d || i >= j) {
      throw std::invalid_argument("edges must satisfy i < j < d");
    }
    adjacency_[i].emplace_back(j, e);
    adjacency_[j].emplace_back(i, e);
  }
}

std::vector<CountGraphicalModel::Edge> CountGraphicalModel::complete_graph(std::size_t d) {
  std::vector<Edge> out;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) out.emplace_back(i, j);
  }
  return out;
}

double CountGraphicalModel::dispersion(const Vector& theta, std::size_t j) const {
  return dispersion_ ? theta[static_cast<Eigen::Index>(dispersion_offset() + j)] : 1.0;
}

double CountGraphicalModel::local_field(const Vector& theta, PointView x,
                                        std::size_t j) const {
  double f = theta[static_cast<Eigen::Index>(j)];
  for (const auto& [k, e] : adjacency_[j]) {
    f -= theta[static_cast<Eigen::Index>(d_ + e)] * static_cast<double>(x[k]);
  }
  return f;
}

double CountGraphicalModel::log_tilde_p(const Vector& theta, PointView x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < d_; ++i) {
    s += theta[static_cast<Eigen::Index>(i)] * static_cast<double>(x[i]) -
         dispersion(theta, i) * log_factorial(x[i]);
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [i, j] = edges_[e];
    s -= theta[static_cast<Eigen::Index>(d_ + e)] * static_cast<double>(x[i]) *
         static_cast<double>(x[j]);
  }
  return s;
}

double CountGraphicalModel::ratio_minus(const Vector& theta, PointView x,
                                        std::size_t j) const {
  if (x[j] == 0) return 0.0;
  return std::exp(-local_field(theta, x, j) +
                  dispersion(theta, j) * std::log(static_cast<double>(x[j])));
}

double CountGraphicalModel::ratio_minus_succ(const Vector& theta, PointView x,
                                             std::size_t j) const {
  return std::exp(-local_field(theta, x, j) +
                  dispersion(theta, j) * std::log(static_cast<double>(x[j] + 1)));
}

double CountGraphicalModel::conditional_log_weight(const Vector& theta, PointView x,
                                                   std::size_t j, Position v) const {
  return static_cast<double>(v) * local_field(theta, x, j) -
         dispersion(theta, j) * log_factorial(v);
}

std::pair<double, double> CountGraphicalModel::conditional_cmp(const Vector& theta,
                                                               PointView x,
                                                               std::size_t j) const {
  return {local_field(theta, x, j), dispersion(theta, j)};
}

Matrix CountGraphicalModel::grad_eta(const Vector&) const {
  return Matrix::Identity(static_cast<Eigen::Index>(dim_),
                          static_cast<Eigen::Index>(dim_));
}

std::vector<Matrix> CountGraphicalModel::hess_eta(const Vector&) const {
  const auto p = static_cast<Eigen::Index>(dim_);
  return std::vector<Matrix>(dim_, Matrix::Zero(p, p));
}

Vector CountGraphicalModel::hess_eta_trace(const Vector&) const {
  return Vector::Zero(static_cast<Eigen::Index>(dim_));
}

Vector CountGraphicalModel::suff_stat(PointView x) const {
  Vector t = Vector::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < d_; ++i) t[static_cast<Eigen::Index>(i)] = static_cast<double>(x[i]);
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const auto [i, j] = edges_[e];
    t[static_cast<Eigen::Index>(d_ + e)] =
        -static_cast<double>(x[i]) * static_cast<double>(x[j]);
  }
  if (dispersion_) {
    for (std::size_t i = 0; i < d_; ++i) {
      t[static_cast<Eigen::Index>(dispersion_offset() + i)] = -log_factorial(x[i]);
    }
  }
  return t;
}

double CountGraphicalModel::base_measure(PointView x) const {
  if (dispersion_) return 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < d_; ++i) b -= log_factorial(x[i]);
  return b;
}

bool CountGraphicalModel::delta_minus(PointView x, std::size_t j, Vector& dT,
                                      double& db) const {
  if (x[j] == 0) return false;
  dT.setZero(static_cast<Eigen::Index>(dim_));
  dT[static_cast<Eigen::Index>(j)] = -1.0;
  for (const auto& [k, e] : adjacency_[j]) {
    dT[static_cast<Eigen::Index>(d_ + e)] = static_cast<double>(x[k]);
  }
  const double log_x = std::log(static_cast<double>(x[j]));
  if (dispersion_) {
    dT[static_cast<Eigen::Index>(dispersion_offset() + j)] = log_x;
    db = 0.0;
  } else {
    db = log_x;
  }
  return true;
}

}  // namespace dfdb
