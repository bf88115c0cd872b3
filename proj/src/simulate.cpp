#include "dfdb/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "dfdb/parallel.hpp"

namespace dfdb {

void ising_mh_step(const IsingModel& model, double theta, Point& x, Rng& rng) {
  const std::size_t j = rng.below(model.dim_x());
  const Vector t = Vector::Constant(1, theta);
  // For binary coordinates x^{j-} is the flipped state.
  const double ratio = model.ratio_minus(t, x, j);
  if (rng.uniform() < ratio) x[j] = 1 - x[j];
}

Dataset ising_simulate(const IsingModel& model, double theta, const SimConfig& config) {
  if (!(theta > 0.0)) throw std::domain_error("Ising temperature must be positive");
  if (config.n_draws == 0) throw std::invalid_argument("n_draws must be positive");
  const std::size_t d = model.dim_x();
  const std::size_t iters = config.iters_per_draw == 0 ? 100 * d : config.iters_per_draw;
  std::vector<Point> points(config.n_draws);
  parallel_for(config.n_draws, config.threads, [&](std::size_t i) {
    Rng rng(derive_seed(config.seed, i));
    Point x(d);
    for (auto& v : x) v = static_cast<Position>(rng() >> 63);
    for (std::size_t s = 0; s < iters; ++s) ising_mh_step(model, theta, x, rng);
    points[i] = std::move(x);
  });
  return Dataset(model.domain(), std::move(points));
}

CountTable::CountTable(double log_rate, double nu, std::size_t max_support) {
  if (!std::isfinite(log_rate) || !std::isfinite(nu) || nu < 0.0 ||
      (nu == 0.0 && log_rate >= 0.0)) {
    throw std::domain_error("count distribution is not summable");
  }
  // Terms increase while log_rate > nu log(x+1); the mode is the first x where
  // that fails.
  const double mode = nu > 0.0 ? std::exp(log_rate / nu) - 1.0 : 0.0;
  std::vector<double> logs;
  double log_sum = -std::numeric_limits<double>::infinity();
  for (Position x = 0;; ++x) {
    if (static_cast<std::size_t>(x) >= max_support) {
      throw std::runtime_error("count distribution needs more than " +
                               std::to_string(max_support) + " support points");
    }
    const double l = static_cast<double>(x) * log_rate - nu * log_factorial(x);
    logs.push_back(l);
    const double hi = std::max(log_sum, l);
    log_sum = hi + std::log(std::exp(log_sum - hi) + std::exp(l - hi));
    if (static_cast<double>(x) > mode && l - log_sum < std::log(kRelTolerance)) break;
  }
  cdf_.resize(logs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    acc += std::exp(logs[i] - log_sum);
    cdf_[i] = acc;
  }
  for (auto& c : cdf_) c /= acc;
}

Position CountTable::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) return static_cast<Position>(cdf_.size() - 1);
  return static_cast<Position>(it - cdf_.begin());
}

double CountTable::probability(Position x) const {
  if (x < 0 || static_cast<std::size_t>(x) >= cdf_.size()) return 0.0;
  const auto i = static_cast<std::size_t>(x);
  return i == 0 ? cdf_[0] : cdf_[i] - cdf_[i - 1];
}

Dataset cmp_sample(const Vector& theta, std::size_t n, std::uint64_t seed) {
  if (theta.size() != 2 || !(theta[0] > 0.0) || !(theta[1] >= 0.0)) {
    throw std::domain_error("CMP sampling needs theta1 > 0 and theta2 >= 0");
  }
  if (n == 0) throw std::invalid_argument("n must be positive");
  const CountTable table(std::log(theta[0]), theta[1]);
  Rng rng(seed);
  std::vector<Point> points(n);
  for (auto& p : points) p = Point{table.sample(rng)};
  return Dataset(CmpModel().domain(), std::move(points));
}

Dataset pgm_gibbs_sample(const CountGraphicalModel& model, const Vector& theta,
                         std::size_t n, std::size_t sweeps, std::uint64_t seed) {
  model.check_theta(theta);
  if (n == 0 || sweeps == 0) throw std::invalid_argument("n and sweeps must be positive");
  for (std::size_t e = 0; e < model.edges().size(); ++e) {
    if (theta[static_cast<Eigen::Index>(model.edge_offset() + e)] < 0.0) {
      throw std::domain_error("Gibbs sampling needs nonnegative interactions");
    }
  }
  const std::size_t d = model.d();
  Rng rng(seed);
  Point x(d, 0);
  auto sweep = [&] {
    for (std::size_t j = 0; j < d; ++j) {
      const auto [log_rate, nu] = model.conditional_cmp(theta, x, j);
      try {
        const CountTable table(log_rate, nu);
        x[j] = table.sample(rng);
      } catch (const std::exception& e) {
        throw std::runtime_error("Gibbs conditional of coordinate " + std::to_string(j) +
                                 ": " + e.what());
      }
    }
  };
  for (std::size_t s = 0; s < sweeps; ++s) sweep();
  std::vector<Point> points(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t s = 0; s < sweeps; ++s) sweep();
    points[i] = x;
  }
  return Dataset(model.domain(), std::move(points));
}

PredictiveSummary posterior_predictive(const Matrix& thetas, const Simulator& simulate,
                                       std::size_t draws_per_theta, std::uint64_t seed,
                                       std::size_t threads) {
  if (thetas.rows() == 0) throw std::invalid_argument("no posterior draws");
  if (draws_per_theta == 0) throw std::invalid_argument("draws_per_theta must be positive");
  const auto t_count = static_cast<std::size_t>(thetas.rows());
  std::vector<std::vector<std::map<Position, double>>> freq(t_count);
  std::vector<Position> max_seen(t_count, 0);
  std::vector<std::size_t> dims(t_count, 0);
  parallel_for(t_count, threads, [&](std::size_t t) {
    const Vector theta = thetas.row(static_cast<Eigen::Index>(t)).transpose();
    const Dataset data = simulate(theta, draws_per_theta, derive_seed(seed, t));
    dims[t] = data.dim();
    freq[t].resize(data.dim());
    for (const auto& p : data.points()) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        freq[t][j][p[j]] += 1.0;
        max_seen[t] = std::max(max_seen[t], p[j]);
      }
    }
  });
  PredictiveSummary out;
  out.draws_per_theta = draws_per_theta;
  out.n_theta = t_count;
  out.max_value = *std::max_element(max_seen.begin(), max_seen.end());
  const std::size_t d = dims.front();
  const auto cols = static_cast<Eigen::Index>(out.max_value + 1);
  out.mean = Matrix::Zero(static_cast<Eigen::Index>(d), cols);
  out.sd = Matrix::Zero(static_cast<Eigen::Index>(d), cols);
  const double scale = 1.0 / static_cast<double>(draws_per_theta);
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t j = 0; j < d; ++j) {
      for (const auto& [v, c] : freq[t][j]) {
        out.mean(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) += c * scale;
      }
    }
  }
  out.mean /= static_cast<double>(t_count);
  if (t_count > 1) {
    for (std::size_t t = 0; t < t_count; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        for (Eigen::Index v = 0; v < cols; ++v) {
          const auto it = freq[t][j].find(static_cast<Position>(v));
          const double f = it == freq[t][j].end() ? 0.0 : it->second * scale;
          const double diff = f - out.mean(static_cast<Eigen::Index>(j), v);
          out.sd(static_cast<Eigen::Index>(j), v) += diff * diff;
        }
      }
    }
    out.sd = (out.sd / static_cast<double>(t_count - 1)).cwiseSqrt();
  }
  return out;
}

}  // namespace dfdb
