#include "dfdb/samplers.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dfdb/rng.hpp"

namespace dfdb {

Target make_target(const GeneralisedPosterior& posterior) {
  Target t;
  t.log_density = [&posterior](const Vector& z) {
    return posterior.log_density_unconstrained(z);
  };
  t.gradient = [&posterior](const Vector& z) { return posterior.grad_unconstrained(z); };
  t.transform = posterior.transform();
  return t;
}

namespace {

Vector standard_normal(Rng& rng, Eigen::Index p) {
  Vector v(p);
  for (Eigen::Index i = 0; i < p; ++i) v[i] = rng.normal();
  return v;
}

void check_schedule(std::size_t n_samples, std::size_t thin) {
  if (n_samples == 0) throw std::invalid_argument("n_samples must be positive");
  if (thin == 0) throw std::invalid_argument("thin must be at least 1");
}

void finish(Chain& chain) {
  if (chain.iterations > 0 && chain.accepted == 0) {
    chain.warnings.push_back("no proposal was accepted after burn-in");
  }
  if (chain.failed_evaluations > 0) {
    chain.warnings.push_back(std::to_string(chain.failed_evaluations) +
                             " proposals had a non-finite density or gradient");
  }
}

}  // namespace

Chain rwmh_sample(const Target& target, const Vector& init_z, const RwmhConfig& config) {
  check_schedule(config.n_samples, config.thin);
  if (!(config.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  auto current = target.log_density(init_z);
  if (!current) throw std::invalid_argument("initial state has zero density");

  const auto p = init_z.size();
  Rng rng(config.seed);
  Chain chain;
  chain.sampler = "rwmh";
  chain.seed = config.seed;
  chain.step = config.sigma;
  chain.burn_in = config.burn_in;
  chain.thin = config.thin;
  chain.draws.resize(static_cast<Eigen::Index>(config.n_samples), p);
  chain.log_densities.resize(static_cast<Eigen::Index>(config.n_samples));

  Vector z = init_z;
  double ld = *current;
  const std::size_t total = config.burn_in + config.n_samples * config.thin;
  std::size_t kept = 0;
  for (std::size_t it = 0; it < total; ++it) {
    const Vector proposal = z + config.sigma * standard_normal(rng, p);
    const auto ld_new = target.log_density(proposal);
    const double u = rng.uniform();
    const bool post = it >= config.burn_in;
    bool accept = false;
    if (!ld_new) {
      ++chain.failed_evaluations;
    } else {
      accept = std::log(u) < *ld_new - ld;
    }
    if (accept) {
      z = proposal;
      ld = *ld_new;
    }
    if (post) {
      ++chain.iterations;
      if (accept) ++chain.accepted;
      if ((it - config.burn_in + 1) % config.thin == 0) {
        chain.draws.row(static_cast<Eigen::Index>(kept)) =
            target.transform.to_constrained(z).transpose();
        chain.log_densities[static_cast<Eigen::Index>(kept)] = ld;
        ++kept;
      }
    }
  }
  finish(chain);
  return chain;
}

Chain mala_sample(const Target& target, const Vector& init_z, const MalaConfig& config) {
  check_schedule(config.n_samples, config.thin);
  if (!(config.step_size > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!target.gradient) throw std::invalid_argument("MALA needs a gradient");
  auto ld0 = target.log_density(init_z);
  auto g0 = target.gradient(init_z);
  if (!ld0 || !g0) throw std::invalid_argument("initial state has zero density");

  const auto p = init_z.size();
  Rng rng(config.seed);
  Chain chain;
  chain.sampler = "mala";
  chain.seed = config.seed;
  chain.burn_in = config.burn_in;
  chain.thin = config.thin;
  chain.draws.resize(static_cast<Eigen::Index>(config.n_samples), p);
  chain.log_densities.resize(static_cast<Eigen::Index>(config.n_samples));

  Vector z = init_z;
  double ld = *ld0;
  Vector grad = *g0;
  double log_eps = std::log(config.step_size);
  const std::size_t total = config.burn_in + config.n_samples * config.thin;
  std::size_t kept = 0;

  for (std::size_t it = 0; it < total; ++it) {
    const double eps = std::exp(log_eps);
    const double half = 0.5 * eps * eps;
    const Vector mean_fwd = z + half * grad;
    const Vector proposal = mean_fwd + eps * standard_normal(rng, p);
    const double u = rng.uniform();
    const bool post = it >= config.burn_in;

    double accept_prob = 0.0;
    std::optional<double> ld_new;
    std::optional<Vector> g_new;
    ld_new = target.log_density(proposal);
    if (ld_new) g_new = target.gradient(proposal);
    if (!ld_new || !g_new) {
      ++chain.failed_evaluations;
    } else {
      const Vector mean_bwd = proposal + half * *g_new;
      const double log_q_fwd = -(proposal - mean_fwd).squaredNorm() / (2.0 * eps * eps);
      const double log_q_bwd = -(z - mean_bwd).squaredNorm() / (2.0 * eps * eps);
      const double log_alpha = *ld_new - ld + log_q_bwd - log_q_fwd;
      accept_prob = std::isfinite(log_alpha) ? std::min(1.0, std::exp(log_alpha)) : 0.0;
      if (std::log(u) < log_alpha) {
        z = proposal;
        ld = *ld_new;
        grad = *g_new;
        if (post) ++chain.accepted;
      }
    }

    if (!post) {
      if (config.adapt) {
        const double rate = 1.0 / std::pow(static_cast<double>(it) + 10.0, 0.6);
        log_eps += rate * (accept_prob - config.target_accept);
      }
      continue;
    }
    ++chain.iterations;
    if ((it - config.burn_in + 1) % config.thin == 0) {
      chain.draws.row(static_cast<Eigen::Index>(kept)) =
          target.transform.to_constrained(z).transpose();
      chain.log_densities[static_cast<Eigen::Index>(kept)] = ld;
      ++kept;
    }
  }
  chain.step = std::exp(log_eps);
  finish(chain);
  return chain;
}

Vector gelman_rubin(const std::vector<Matrix>& draws) {
  if (draws.size() < 2) throw std::invalid_argument("Gelman-Rubin needs at least two chains");
  const Eigen::Index len = draws.front().rows();
  const Eigen::Index p = draws.front().cols();
  if (len < 2) throw std::invalid_argument("chains are too short");
  for (const auto& d : draws) {
    if (d.rows() != len || d.cols() != p) {
      throw std::invalid_argument("chains must have equal length and dimension");
    }
  }
  const auto m = static_cast<double>(draws.size());
  const auto l = static_cast<double>(len);
  Vector out(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    std::vector<double> means;
    double w = 0.0;
    for (const auto& d : draws) {
      const double mean = d.col(k).mean();
      means.push_back(mean);
      w += (d.col(k).array() - mean).square().sum() / (l - 1.0);
    }
    w /= m;
    double grand = 0.0;
    for (double v : means) grand += v;
    grand /= m;
    double b = 0.0;
    for (double v : means) b += (v - grand) * (v - grand);
    b *= l / (m - 1.0);
    if (!(w > 0.0)) {
      out[k] = std::numeric_limits<double>::infinity();
      continue;
    }
    out[k] = std::sqrt(((l - 1.0) / l * w + b / l) / w);
  }
  return out;
}

Vector gelman_rubin(const std::vector<Chain>& chains) {
  std::vector<Matrix> draws;
  draws.reserve(chains.size());
  for (const auto& c : chains) draws.push_back(c.draws);
  return gelman_rubin(draws);
}

Matrix pooled_draws(const std::vector<Chain>& chains) {
  Eigen::Index rows = 0;
  for (const auto& c : chains) rows += c.draws.rows();
  const Eigen::Index p = chains.empty() ? 0 : chains.front().draws.cols();
  Matrix out(rows, p);
  Eigen::Index r = 0;
  for (const auto& c : chains) {
    out.middleRows(r, c.draws.rows()) = c.draws;
    r += c.draws.rows();
  }
  return out;
}

void write_chains_csv(std::ostream& out, const std::vector<Chain>& chains) {
  const Eigen::Index p = chains.empty() ? 0 : chains.front().draws.cols();
  out << "chain_id,iter,log_density";
  for (Eigen::Index k = 0; k < p; ++k) out << ",theta_" << k;
  out << '\n';
  char buf[64];
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto& ch = chains[c];
    for (Eigen::Index i = 0; i < ch.draws.rows(); ++i) {
      out << c << ',' << i;
      std::snprintf(buf, sizeof buf, ",%.17g", ch.log_densities[i]);
      out << buf;
      for (Eigen::Index k = 0; k < p; ++k) {
        std::snprintf(buf, sizeof buf, ",%.17g", ch.draws(i, k));
        out << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace dfdb
