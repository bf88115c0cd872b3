#include "dfdb/losses.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace dfdb {

Vector fd_gradient(const ScalarFunction& f, const Vector& theta, double rel_step) {
  Vector g(theta.size());
  Vector t = theta;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = rel_step * (1.0 + std::abs(theta[k]));
    t[k] = theta[k] + h;
    const double up = f(t);
    t[k] = theta[k] - h;
    const double down = f(t);
    t[k] = theta[k];
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

double fd_hessian_trace(const ScalarFunction& f, const Vector& theta, double rel_step) {
  const double centre = f(theta);
  Vector t = theta;
  double trace = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double h = rel_step * (1.0 + std::abs(theta[k]));
    t[k] = theta[k] + h;
    const double up = f(t);
    t[k] = theta[k] - h;
    const double down = f(t);
    t[k] = theta[k];
    trace += (up - 2.0 * centre + down) / (h * h);
  }
  return trace;
}

Vector LossFunction::gradient(const Vector& theta) const {
  return fd_gradient([this](const Vector& t) { return value(t); }, theta);
}

double LossFunction::hessian_trace(const Vector& theta) const {
  return fd_hessian_trace([this](const Vector& t) { return value(t); }, theta);
}

// ------------------------------------------------------------------ DFD

double dfd_weighted(const DiscreteModel& model, const Vector& theta,
                    const std::vector<Point>& points,
                    const std::vector<double>& weights) {
  if (points.size() != weights.size() || points.empty()) {
    throw std::invalid_argument("dfd: points and weights must be nonempty and aligned");
  }
  const std::size_t d = model.dim_x();
  double acc = 0.0;
  double total = 0.0;
  for (std::size_t u = 0; u < points.size(); ++u) {
    const Point& x = points[u];
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = model.ratio_minus(theta, x, j);
      s += r * r - 2.0 * model.ratio_minus_succ(theta, x, j);
    }
    acc += weights[u] * s;
    total += weights[u];
  }
  return acc / total;
}

double dfd_empirical(const DiscreteModel& model, const Vector& theta,
                     const Dataset& data) {
  const auto counted = weighted_points(data, Aggregation::Auto);
  return dfd_weighted(model, theta, counted.points, counted.counts);
}

std::size_t RatioClasses::index(const Vector& dT, double db) {
  std::vector<double> key(dT.data(), dT.data() + dT.size());
  key.push_back(db);
  const auto [it, inserted] = lookup_.emplace(std::move(key), weight_.size());
  if (inserted) {
    dT_.push_back(dT);
    db_.push_back(db);
    weight_.push_back(0.0);
  }
  return it->second;
}

void RatioClasses::add(const Vector& dT, double db, double weight) {
  weight_[index(dT, db)] += weight;
}

DfdLoss::DfdLoss(std::shared_ptr<const DiscreteModel> model, const Dataset& data,
                 Aggregation aggregation, Strategy strategy)
    : model_(std::move(model)), data_(weighted_points(data, aggregation)), n_(data.size()) {
  if (!(model_->domain() == data.domain())) {
    throw std::invalid_argument("dfd: dataset domain does not match the model");
  }
  const ExpFamilyStructure* ef = model_->exp_family();
  if (strategy == Strategy::Compressed && ef == nullptr) {
    throw std::invalid_argument("dfd: compressed evaluation needs an exponential-family model");
  }
  if (strategy == Strategy::Direct || ef == nullptr) return;

  const std::size_t d = model_->dim_x();
  Vector dT;
  double db = 0.0;
  Point y;
  for (std::size_t u = 0; u < data_.points.size(); ++u) {
    const Point& x = data_.points[u];
    for (std::size_t j = 0; j < d; ++j) {
      if (ef->delta_minus(x, j, dT, db)) backward_.add(dT, db, data_.counts[u]);
      y = x;
      y[j] = model_->domain().coord(j).succ(y[j]);
      if (ef->delta_minus(y, j, dT, db)) forward_.add(dT, db, data_.counts[u]);
    }
  }
  const std::size_t terms = 2 * data_.points.size() * d;
  if (strategy == Strategy::Compressed || 2 * (backward_.size() + forward_.size()) < terms) {
    strategy_ = Strategy::Compressed;
  } else {
    backward_ = RatioClasses();
    forward_ = RatioClasses();
  }
}

double DfdLoss::value(const Vector& theta) const {
  if (strategy_ == Strategy::Compressed) {
    const Vector eta = model_->exp_family()->eta(theta);
    double acc = 0.0;
    for (std::size_t c = 0; c < backward_.size(); ++c) {
      acc += backward_.weight(c) * std::exp(2.0 * (eta.dot(backward_.dT(c)) + backward_.db(c)));
    }
    for (std::size_t c = 0; c < forward_.size(); ++c) {
      acc -= 2.0 * forward_.weight(c) * std::exp(eta.dot(forward_.dT(c)) + forward_.db(c));
    }
    return acc;
  }
  const std::size_t d = model_->dim_x();
  double acc = 0.0;
  for (std::size_t u = 0; u < data_.points.size(); ++u) {
    const Point& x = data_.points[u];
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double r = model_->ratio_minus(theta, x, j);
      s += r * r - 2.0 * model_->ratio_minus_succ(theta, x, j);
    }
    acc += data_.counts[u] * s;
  }
  return acc;
}

DfdLoss::Derivatives DfdLoss::analytic(const Vector& theta, bool want_trace) const {
  const ExpFamilyStructure& ef = *model_->exp_family();
  const std::size_t d = model_->dim_x();
  const auto p = static_cast<Eigen::Index>(model_->dim_theta());
  const bool identity = ef.eta_is_identity();

  const Vector eta = ef.eta(theta);
  const Matrix grad_eta = identity ? Matrix() : ef.grad_eta(theta);
  const Vector hess_trace = want_trace ? ef.hess_eta_trace(theta) : Vector();

  Derivatives out{Vector::Zero(p), 0.0};
  Vector gs(p);

  // Each ratio is exp(s(theta)) with s = eta(theta)·dT + db, so
  // grad e^{k s} = k e^{k s} grad s and
  // tr hess e^{k s} = e^{k s} (k^2 |grad s|^2 + k sum_m dT_m tr hess eta_m).
  auto accumulate = [&](const Vector& dT, double db, double w, double scale,
                        double k) {
    const double r = std::exp(k * (eta.dot(dT) + db));
    if (identity) {
      gs = dT;
    } else {
      gs.noalias() = grad_eta.transpose() * dT;
    }
    out.gradient.noalias() += (w * scale * k * r) * gs;
    if (want_trace) {
      out.hessian_trace += w * scale * r * (k * k * gs.squaredNorm() + k * hess_trace.dot(dT));
    }
  };

  if (strategy_ == Strategy::Compressed) {
    for (std::size_t c = 0; c < backward_.size(); ++c) {
      accumulate(backward_.dT(c), backward_.db(c), backward_.weight(c), 1.0, 2.0);
    }
    for (std::size_t c = 0; c < forward_.size(); ++c) {
      accumulate(forward_.dT(c), forward_.db(c), forward_.weight(c), -2.0, 1.0);
    }
    return out;
  }

  Vector dT;
  double db = 0.0;
  Point y;
  for (std::size_t u = 0; u < data_.points.size(); ++u) {
    const Point& x = data_.points[u];
    const double w = data_.counts[u];
    for (std::size_t j = 0; j < d; ++j) {
      // r_j(x)^2 = exp(2 s)
      if (ef.delta_minus(x, j, dT, db)) accumulate(dT, db, w, 1.0, 2.0);
      // -2 r_j(x^{j+}), with the increments taken at x^{j+}
      y = x;
      y[j] = model_->domain().coord(j).succ(y[j]);
      if (ef.delta_minus(y, j, dT, db)) accumulate(dT, db, w, -2.0, 1.0);
    }
  }
  return out;
}

Vector DfdLoss::gradient(const Vector& theta) const {
  if (!has_analytic_derivatives()) return LossFunction::gradient(theta);
  return analytic(theta, false).gradient;
}

double DfdLoss::hessian_trace(const Vector& theta) const {
  if (!has_analytic_derivatives()) return LossFunction::hessian_trace(theta);
  return analytic(theta, true).hessian_trace;
}

// ------------------------------------------------------------------ KSD

double stein_kernel(const DiscreteModel& model, const DiscreteKernel& kernel,
                    const Vector& theta, PointView x, PointView y) {
  const ProductDomain& dom = model.domain();
  const Point xs(x.begin(), x.end());
  const Point ys(y.begin(), y.end());
  const double kxy = kernel.evaluate(xs, ys);
  double sum = 0.0;
  for (std::size_t i = 0; i < dom.dim(); ++i) {
    const Point xp = dom.succ(xs, i);
    const Point yp = dom.succ(ys, i);
    const double rx = model.ratio_minus(theta, xs, i);
    const double ry = model.ratio_minus(theta, ys, i);
    sum += kernel.evaluate(xp, yp) - ry * kernel.evaluate(xp, ys) -
           rx * kernel.evaluate(xs, yp) + rx * ry * kxy;
  }
  return sum;
}

namespace {

/// Visits every unordered pair a <= b of the point set and every axis i with
/// the four kernel values k(a+,b+), k(a+,b), k(a,b+), k(a,b), where a+ is the
/// i-th successor. `pair_weight` already includes the factor 2 for a != b.
template <typename Visit>
void for_each_kernel_quad(const CountedPoints& pts, const DiscreteKernel& kernel,
                          std::size_t d, const std::vector<Position>& succ,
                          const std::vector<double>& weight,
                          const std::vector<double>& weight_succ,
                          const std::vector<double>& exp_table, Visit&& visit) {
  const std::size_t n = pts.points.size();
  for (std::size_t a = 0; a < n; ++a) {
    const Point& xa = pts.points[a];
    const Position* sa = succ.data() + a * d;
    const double* msa = weight_succ.data() + a * d;
    for (std::size_t b = a; b < n; ++b) {
      const Point& xb = pts.points[b];
      const Position* sb = succ.data() + b * d;
      const double* msb = weight_succ.data() + b * d;
      const double pair_weight =
          pts.counts[a] * pts.counts[b] * (a == b ? 1.0 : 2.0);
      std::size_t h = 0;
      for (std::size_t j = 0; j < d; ++j) h += kernel.counts(xa[j], xb[j]) ? 1 : 0;
      const double k00 = weight[a] * weight[b] * exp_table[h];
      for (std::size_t i = 0; i < d; ++i) {
        const std::size_t base = h - (kernel.counts(xa[i], xb[i]) ? 1 : 0);
        const double kpp =
            msa[i] * msb[i] * exp_table[base + (kernel.counts(sa[i], sb[i]) ? 1 : 0)];
        const double kpb =
            msa[i] * weight[b] * exp_table[base + (kernel.counts(sa[i], xb[i]) ? 1 : 0)];
        const double kbp =
            weight[a] * msb[i] * exp_table[base + (kernel.counts(xa[i], sb[i]) ? 1 : 0)];
        visit(a, b, i, pair_weight, kpp, kpb, kbp, k00);
      }
    }
  }
}

}  // namespace

KsdLoss::KsdLoss(std::shared_ptr<const DiscreteModel> model, DiscreteKernel kernel,
                 const Dataset& data, Aggregation aggregation, Strategy strategy,
                 std::size_t max_classes)
    : model_(std::move(model)),
      kernel_(kernel),
      data_(weighted_points(data, aggregation)),
      n_(data.size()),
      strategy_(Strategy::Direct) {
  if (!(model_->domain() == data.domain())) {
    throw std::invalid_argument("ksd: dataset domain does not match the model");
  }
  build_geometry();
  if (strategy == Strategy::Compressed && model_->exp_family() == nullptr) {
    throw std::invalid_argument("ksd: compressed evaluation needs an exponential-family model");
  }
  if (strategy != Strategy::Direct && model_->exp_family() != nullptr) {
    if (try_compress(max_classes)) {
      strategy_ = Strategy::Compressed;
    } else if (strategy == Strategy::Compressed) {
      throw std::invalid_argument("ksd: too many ratio classes for compressed evaluation");
    }
  }
}

void KsdLoss::build_geometry() {
  const std::size_t d = model_->dim_x();
  const std::size_t u = data_.points.size();
  succ_.resize(u * d);
  weight_.resize(u);
  weight_succ_.resize(u * d);
  for (std::size_t a = 0; a < u; ++a) {
    const Point& x = data_.points[a];
    double spin_sum = 0.0;
    for (Position v : x) spin_sum += 2.0 * static_cast<double>(v) - 1.0;
    weight_[a] = kernel_.weight_from_spin_sum(spin_sum);
    for (std::size_t i = 0; i < d; ++i) {
      const Position s = model_->domain().coord(i).succ(x[i]);
      succ_[a * d + i] = s;
      weight_succ_[a * d + i] =
          kernel_.weight_from_spin_sum(spin_sum + 2.0 * static_cast<double>(s - x[i]));
    }
  }
  exp_table_.resize(d + 1);
  for (std::size_t h = 0; h <= d; ++h) {
    exp_table_[h] = std::exp(-static_cast<double>(h) / static_cast<double>(d));
  }
}

bool KsdLoss::try_compress(std::size_t max_classes) {
  const ExpFamilyStructure& ef = *model_->exp_family();
  const std::size_t d = model_->dim_x();
  const std::size_t u = data_.points.size();
  std::map<std::vector<double>, int> index;
  class_of_.assign(u * d, -1);
  class_dT_.clear();
  class_db_.clear();
  Vector dT;
  double db = 0.0;
  for (std::size_t a = 0; a < u; ++a) {
    for (std::size_t i = 0; i < d; ++i) {
      if (!ef.delta_minus(data_.points[a], i, dT, db)) continue;
      std::vector<double> key(dT.data(), dT.data() + dT.size());
      key.push_back(db);
      auto [it, inserted] = index.emplace(std::move(key), static_cast<int>(class_dT_.size()));
      if (inserted) {
        if (class_dT_.size() >= max_classes) return false;
        class_dT_.push_back(dT);
        class_db_.push_back(db);
      }
      class_of_[a * d + i] = it->second;
    }
  }
  const auto c = static_cast<Eigen::Index>(class_dT_.size());
  const_term_ = 0.0;
  linear_term_ = Vector::Zero(c);
  quadratic_term_ = Matrix::Zero(c, c);
  for_each_kernel_quad(
      data_, kernel_, d, succ_, weight_, weight_succ_, exp_table_,
      [&](std::size_t a, std::size_t b, std::size_t i, double w, double kpp,
          double kpb, double kbp, double k00) {
        const int ca = class_of_[a * d + i];
        const int cb = class_of_[b * d + i];
        const_term_ += w * kpp;
        if (cb >= 0) linear_term_[cb] += w * kpb;
        if (ca >= 0) linear_term_[ca] += w * kbp;
        if (ca >= 0 && cb >= 0) quadratic_term_(ca, cb) += w * k00;
      });
  return true;
}

double KsdLoss::value_compressed(const Vector& theta) const {
  const Vector eta = model_->exp_family()->eta(theta);
  Vector rho(static_cast<Eigen::Index>(class_dT_.size()));
  for (std::size_t c = 0; c < class_dT_.size(); ++c) {
    rho[static_cast<Eigen::Index>(c)] = std::exp(eta.dot(class_dT_[c]) + class_db_[c]);
  }
  const double v = const_term_ - rho.dot(linear_term_) + rho.dot(quadratic_term_ * rho);
  return v / static_cast<double>(n_);
}

double KsdLoss::value_direct(const Vector& theta) const {
  const std::size_t d = model_->dim_x();
  const std::size_t u = data_.points.size();
  std::vector<double> r(u * d);
  for (std::size_t a = 0; a < u; ++a) {
    for (std::size_t i = 0; i < d; ++i) {
      r[a * d + i] = model_->ratio_minus(theta, data_.points[a], i);
    }
  }
  double acc = 0.0;
  for_each_kernel_quad(
      data_, kernel_, d, succ_, weight_, weight_succ_, exp_table_,
      [&](std::size_t a, std::size_t b, std::size_t i, double w, double kpp,
          double kpb, double kbp, double k00) {
        const double ra = r[a * d + i];
        const double rb = r[b * d + i];
        acc += w * (kpp - rb * kpb - ra * kbp + ra * rb * k00);
      });
  return acc / static_cast<double>(n_);
}

double KsdLoss::value(const Vector& theta) const {
  return strategy_ == Strategy::Compressed ? value_compressed(theta) : value_direct(theta);
}

// -------------------------------------------------------- pseudo-likelihood

PseudoLikelihoodLoss::PseudoLikelihoodLoss(std::shared_ptr<const DiscreteModel> model,
                                           const Dataset& data, Aggregation aggregation)
    : model_(std::move(model)), data_(weighted_points(data, aggregation)), n_(data.size()) {
  for (const auto& c : model_->domain().coords()) {
    if (c.kind() != CoordinateDomain::Kind::FiniteCyclic || c.size() != 2) {
      throw std::invalid_argument("pseudo-likelihood loss needs binary coordinates");
    }
  }
  const ExpFamilyStructure* ef = model_->exp_family();
  if (ef == nullptr) return;
  Vector dT;
  double db = 0.0;
  for (std::size_t u = 0; u < data_.points.size(); ++u) {
    for (std::size_t i = 0; i < model_->dim_x(); ++i) {
      if (ef->delta_minus(data_.points[u], i, dT, db)) classes_.add(dT, db, data_.counts[u]);
    }
  }
  compressed_ = true;
}

double PseudoLikelihoodLoss::value(const Vector& theta) const {
  // With binary coordinates, p(x_i | rest) = 1 / (1 + r_i(x)) where r_i is the
  // ratio for flipping bit i.
  if (compressed_) {
    const Vector eta = model_->exp_family()->eta(theta);
    double acc = 0.0;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const double s = eta.dot(classes_.dT(c)) + classes_.db(c);
      // log(1 + e^s) without overflow
      acc += classes_.weight(c) * (s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)));
    }
    return acc;
  }
  const std::size_t d = model_->dim_x();
  double acc = 0.0;
  for (std::size_t u = 0; u < data_.points.size(); ++u) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      s += std::log1p(model_->ratio_minus(theta, data_.points[u], i));
    }
    acc += data_.counts[u] * s;
  }
  return acc;
}

Vector PseudoLikelihoodLoss::gradient(const Vector& theta) const {
  if (!compressed_) return LossFunction::gradient(theta);
  const ExpFamilyStructure& ef = *model_->exp_family();
  const Vector eta = ef.eta(theta);
  const Matrix g = ef.grad_eta(theta);
  Vector out = Vector::Zero(theta.size());
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const double s = eta.dot(classes_.dT(c)) + classes_.db(c);
    const double sigma = 1.0 / (1.0 + std::exp(-s));
    out.noalias() += (classes_.weight(c) * sigma) * (g.transpose() * classes_.dT(c));
  }
  return out;
}

double PseudoLikelihoodLoss::hessian_trace(const Vector& theta) const {
  if (!compressed_) return LossFunction::hessian_trace(theta);
  const ExpFamilyStructure& ef = *model_->exp_family();
  const Vector eta = ef.eta(theta);
  const Matrix g = ef.grad_eta(theta);
  const Vector h = ef.hess_eta_trace(theta);
  double out = 0.0;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    const Vector& dT = classes_.dT(c);
    const double s = eta.dot(dT) + classes_.db(c);
    const double sigma = 1.0 / (1.0 + std::exp(-s));
    out += classes_.weight(c) *
           (sigma * (1.0 - sigma) * (g.transpose() * dT).squaredNorm() + sigma * h.dot(dT));
  }
  return out;
}

// --------------------------------------------- truncated CMP likelihood

TruncatedCmpNll::TruncatedCmpNll(const Dataset& data, int terms)
    : data_(weighted_points(data, Aggregation::Always)), n_(data.size()), terms_(terms) {
  if (!(data.domain() == model_.domain())) {
    throw std::invalid_argument("truncated CMP likelihood needs one-dimensional count data");
  }
  if (terms_ < 1) throw std::invalid_argument("truncation needs at least one term");
}

double TruncatedCmpNll::log_normaliser(const Vector& theta) const {
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> logs(static_cast<std::size_t>(terms_));
  for (int y = 0; y < terms_; ++y) {
    const Position pos = y;
    logs[static_cast<std::size_t>(y)] = model_.log_tilde_p(theta, PointView(&pos, 1));
    m = std::max(m, logs[static_cast<std::size_t>(y)]);
  }
  double s = 0.0;
  for (double l : logs) s += std::exp(l - m);
  return m + std::log(s);
}

double TruncatedCmpNll::value(const Vector& theta) const {
  if (!(theta[0] > 0.0) || !(theta[1] > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  const double log_z = log_normaliser(theta);
  double acc = 0.0;
  for (std::size_t u = 0; u < data_.points.size(); ++u) {
    acc += data_.counts[u] * (log_z - model_.log_tilde_p(theta, data_.points[u]));
  }
  return acc;
}

}  // namespace dfdb
