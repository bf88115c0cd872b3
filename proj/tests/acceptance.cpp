// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fail. Expected values come from the brute-force oracles in
// oracles/, never from the library routines under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dfdb/experiments.hpp"
#include "dfdb/losses.hpp"
#include "oracles/enumeration.hpp"

using namespace dfdb;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail, double seconds) {
  std::printf("%s %s  %s  (%.1f s)\n", id.c_str(), ok ? "PASS" : "FAIL", detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class... T>
std::string cat(const T&... parts) {
  std::ostringstream os;
  (os << ... << parts);
  return os.str();
}

/// Runs `body`, which returns {ok, detail}, and reports it with timing.
void criterion(const std::string& id, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  std::pair<bool, std::string> r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(id, r.first, r.second, s);
}

std::size_t threads() { return std::max(1u, std::thread::hardware_concurrency()); }

Vector one() { return Vector::Ones(1); }

std::vector<Point> to_points(const std::vector<oracle::State>& s) {
  return std::vector<Point>(s.begin(), s.end());
}

const std::vector<oracle::Coord> kFinite{{true, 3}, {true, 2}};
const std::vector<oracle::Coord> kTruncated{{false, 40}, {true, 2}};

// ---------------------------------------------------------------- A1, A2, A6

std::pair<bool, std::string> divergence_forms() {
  std::mt19937_64 gen(2024);
  double worst_oracle = 0.0, worst_library = 0.0;
  int pairs = 0;
  for (const auto& coords : {kFinite, kTruncated}) {
    const auto states = oracle::enumerate(coords);
    const double d = static_cast<double>(coords.size());
    for (int rep = 0; rep < 12; ++rep, ++pairs) {
      const oracle::TableMass p(coords, 4, 0.3, gen);
      const oracle::TableMass q(coords, 4, 0.35, gen);
      const double def = oracle::dfd_definition(p, q, states);
      const double qc = oracle::dfd_q_constant(q, states);
      worst_oracle = std::max(worst_oracle, std::abs(def - (oracle::dfd_p_part(p, q, states) + qc)));
      const double lib =
          dfd_weighted(oracle::TableModel(p), one(), to_points(states), oracle::normalise(q, states));
      worst_library = std::max(worst_library, std::abs(def - (lib + d + qc)));
    }
  }
  const double worst = std::max(worst_oracle, worst_library);
  return {worst <= 1e-10, cat(pairs, " pairs, max |definition - (computable + E_q|grad q/q|^2)| = ",
                              fmt("%.2e", worst), " (library form ", fmt("%.2e", worst_library), ")")};
}

std::pair<bool, std::string> divergence_property() {
  std::mt19937_64 gen(77);
  double worst_self = 0.0, min_cross = INFINITY;
  int pairs = 0;
  for (const auto& coords : {kFinite, kTruncated}) {
    const auto states = oracle::enumerate(coords);
    const double d = static_cast<double>(coords.size());
    for (int rep = 0; rep < 12; ++rep, ++pairs) {
      const oracle::TableMass p(coords, 4, 0.3, gen);
      const oracle::TableMass q(coords, 4, 0.35, gen);
      const auto pn = oracle::normalise(p, states);
      // Self-divergence through the computable form, which does not vanish
      // term by term.
      const double self = dfd_weighted(oracle::TableModel(p), one(), to_points(states), pn) + d +
                          oracle::dfd_q_constant(p, states);
      worst_self = std::max(worst_self, std::abs(self));
      worst_self = std::max(worst_self, std::abs(oracle::dfd_definition(p, p, states)));
      min_cross = std::min(min_cross, oracle::dfd_definition(p, q, states));
    }
  }
  return {worst_self <= 1e-12 && min_cross > 0.0,
          cat(pairs, " pairs, max |DFD(p||p)| = ", fmt("%.2e", worst_self),
              ", min DFD(p||q) = ", fmt("%.3g", min_cross))};
}

std::pair<bool, std::string> domination() {
  std::mt19937_64 gen(43);
  const std::vector<std::vector<oracle::Coord>> shapes{kFinite, {{true, 4}, {true, 3}}};
  double worst_gap = -INFINITY, worst_lib = 0.0;
  int pairs = 0;
  for (const auto& coords : shapes) {
    const auto states = oracle::enumerate(coords);
    const auto pts = to_points(states);
    for (int rep = 0; rep < 10; ++rep, ++pairs) {
      const oracle::TableMass p(coords, 4, 0.5, gen);
      const oracle::TableMass q(coords, 4, 0.5, gen);
      const double ksd2 = oracle::ksd_squared(p, q, states);
      const double dfd = oracle::dfd_definition(p, q, states);
      // Library Stein kernel under the same q-weighted double sum.
      const oracle::TableModel model(p);
      const auto qn = oracle::normalise(q, states);
      double lib = 0.0;
      for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = 0; b < pts.size(); ++b)
          lib += qn[a] * qn[b] * stein_kernel(model, DiscreteKernel{}, one(), pts[a], pts[b]);
      worst_lib = std::max(worst_lib, std::abs(lib - ksd2));
      worst_gap = std::max(worst_gap, std::sqrt(std::max(0.0, std::max(ksd2, lib))) - std::sqrt(dfd));
    }
  }
  return {worst_gap <= 1e-10 && worst_lib <= 1e-10,
          cat(pairs, " pairs, max sqrt(KSD^2) - sqrt(DFD) = ", fmt("%.3g", worst_gap),
              ", library vs brute-force KSD^2 ", fmt("%.2e", worst_lib))};
}

// ------------------------------------------------------------------------ A3

std::pair<bool, std::string> lemmas() {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::int64_t> size(2, 5), dim(1, 3), small(0, 3), any(-40, 40);
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_real_distribution<double> val(-1.0, 1.0);

  int bad_involution = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t d = static_cast<std::size_t>(dim(gen));
    std::vector<CoordinateDomain> cs;
    Point x(d);
    for (std::size_t i = 0; i < d; ++i) {
      switch (kind(gen)) {
        case 0: {
          const auto k = size(gen);
          cs.push_back(CoordinateDomain::finite_cyclic(k));
          x[i] = small(gen) % k;
          break;
        }
        case 1:
          cs.push_back(CoordinateDomain::half_infinite_min());
          x[i] = small(gen);  // position 0 exercises the star
          break;
        default:
          cs.push_back(CoordinateDomain::bi_infinite());
          x[i] = any(gen);
      }
    }
    const ProductDomain dom(cs);
    for (std::size_t i = 0; i < d; ++i) {
      if (dom.succ(dom.pred(x, i), i) != x || dom.pred(dom.succ(x, i), i) != x) ++bad_involution;
    }
  }

  double worst = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const std::size_t d = static_cast<std::size_t>(dim(gen));
    std::vector<CoordinateDomain> cs;
    std::vector<std::int64_t> sizes;
    for (std::size_t i = 0; i < d; ++i) {
      sizes.push_back(size(gen));
      cs.push_back(CoordinateDomain::finite_cyclic(sizes.back()));
    }
    const ProductDomain dom(cs);
    std::size_t cells = 1;
    for (auto s : sizes) cells *= static_cast<std::size_t>(s);
    std::vector<double> f(cells), g(cells);
    for (auto& v : f) v = val(gen);
    for (auto& v : g) v = val(gen);
    const auto index = [&](PointView p) {
      if (is_extended(p)) return cells;  // star: g = 0
      std::size_t idx = 0;
      for (std::size_t i = 0; i < d; ++i) idx = idx * static_cast<std::size_t>(sizes[i]) + p[i];
      return idx;
    };
    const auto at = [&](const std::vector<double>& h, PointView p) {
      const auto k = index(p);
      return k == cells ? 0.0 : h[k];
    };
    const std::size_t axis = static_cast<std::size_t>(gen() % d);
    double lhs = 0.0, rhs = 0.0;
    for_each_point(dom, [&](PointView x) {
      lhs += at(f, x) * at(g, dom.pred(x, axis));
      rhs += at(f, dom.succ(x, axis)) * at(g, x);
    });
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return {bad_involution == 0 && worst <= 1e-12,
          cat("involution failures ", bad_involution, "/", 10000,
              ", summation by parts max error ", fmt("%.2e", worst), " over 10000 cases")};
}

// ------------------------------------------------------------------------ A4

/// Richardson-extrapolated central differences, written here so the check
/// does not rely on the library's own finite-difference helpers.
Vector richardson_gradient(const LossFunction& loss, const Vector& t) {
  Vector g(t.size());
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const auto central = [&](double h) {
      Vector a = t, b = t;
      a[k] += h;
      b[k] -= h;
      return (loss.value(a) - loss.value(b)) / (2 * h);
    };
    const double h = 1e-3 * std::max(1.0, std::abs(t[k]));
    g[k] = (4 * central(h / 2) - central(h)) / 3;
  }
  return g;
}

double richardson_trace(const LossFunction& loss, const Vector& t) {
  const double f0 = loss.value(t);
  double tr = 0.0;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const auto second = [&](double h) {
      Vector a = t, b = t;
      a[k] += h;
      b[k] -= h;
      return (loss.value(a) - 2 * f0 + loss.value(b)) / (h * h);
    };
    const double h = 1e-2 * std::max(1.0, std::abs(t[k]));
    tr += (4 * second(h / 2) - second(h)) / 3;
  }
  return tr;
}

Dataset random_counts(std::size_t d, std::size_t n, double mean, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::poisson_distribution<int> pois(mean);
  std::vector<Point> pts(n, Point(d));
  for (auto& x : pts)
    for (auto& v : x) v = pois(gen);
  return Dataset(ProductDomain::uniform(d, CoordinateDomain::half_infinite_min()), pts);
}

std::pair<bool, std::string> derivatives() {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto lerp = [&](double a, double b) { return a + (b - a) * u(gen); };

  struct Case {
    std::string name;
    std::shared_ptr<const DiscreteModel> model;
    Dataset data;
    std::function<Vector()> draw;
  };
  std::vector<Point> spins(200, Point(9));
  for (auto& x : spins)
    for (auto& v : x) v = static_cast<Position>(gen() % 2);
  const auto ising = std::make_shared<IsingModel>(IsingModel::grid(3));
  const auto pgm = std::make_shared<PoissonGraphicalModel>(3, CountGraphicalModel::complete_graph(3));
  const auto cpgm = std::make_shared<CmpGraphicalModel>(3, CountGraphicalModel::complete_graph(3));
  std::vector<Case> cases{
      {"CMP", std::make_shared<CmpModel>(), random_counts(1, 200, 3.0, 1),
       [&] {
         Vector t(2);
         t << lerp(0.6, 6.0), lerp(0.3, 2.5);
         return t;
       }},
      {"Ising", ising, Dataset(ising->domain(), spins),
       [&] {
         Vector t(1);
         t << lerp(0.5, 6.0);
         return t;
       }},
      {"PGM", pgm, random_counts(3, 200, 1.5, 2),
       [&] {
         Vector t(6);
         t << lerp(-0.7, 1.5), lerp(-0.7, 1.5), lerp(-0.7, 1.5), lerp(0, 0.1), lerp(0, 0.1),
             lerp(0, 0.1);
         return t;
       }},
      {"CMP-PGM", cpgm, random_counts(3, 200, 1.5, 3),
       [&] {
         Vector t(9);
         t << lerp(-0.7, 1.5), lerp(-0.7, 1.5), lerp(-0.7, 1.5), lerp(0, 0.1), lerp(0, 0.1),
             lerp(0, 0.1), lerp(0.5, 1.5), lerp(0.5, 1.5), lerp(0.5, 1.5);
         return t;
       }},
  };

  bool ok = true;
  std::ostringstream detail;
  for (auto& c : cases) {
    DfdLoss loss(c.model, c.data);
    if (!loss.has_analytic_derivatives()) return {false, c.name + " has no analytic derivatives"};
    double worst_g = 0.0, worst_t = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const Vector t = c.draw();
      const Vector ga = loss.gradient(t);
      const Vector gf = richardson_gradient(loss, t);
      worst_g = std::max(worst_g, (ga - gf).norm() / gf.norm());
      const double ta = loss.hessian_trace(t);
      const double tf = richardson_trace(loss, t);
      worst_t = std::max(worst_t, std::abs(ta - tf) / std::abs(tf));
    }
    ok = ok && worst_g <= 1e-5 && worst_t <= 1e-4;
    detail << c.name << " grad " << fmt("%.1e", worst_g) << " trace " << fmt("%.1e", worst_t)
           << "; ";
  }
  return {ok, detail.str() + "20 random theta each"};
}

// ------------------------------------------------------------------------ A5

/// D(theta) = (scale / 2) |theta - c|^2
class Quadratic final : public LossFunction {
 public:
  Quadratic(Vector c, double scale) : c_(std::move(c)), scale_(scale) {}
  std::string name() const override { return "quadratic"; }
  std::size_t dim() const override { return static_cast<std::size_t>(c_.size()); }
  std::size_t sample_size() const override { return 1; }
  double value(const Vector& t) const override { return 0.5 * scale_ * (t - c_).squaredNorm(); }
  Vector gradient(const Vector& t) const override { return scale_ * (t - c_); }
  double hessian_trace(const Vector&) const override {
    return scale_ * static_cast<double>(c_.size());
  }

 private:
  Vector c_;
  double scale_;
};

std::pair<bool, std::string> beta_star_checks() {
  std::mt19937_64 gen(101);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0.5, 5.0), lg(-2.0, 2.0), lap(-3.0, 0.0);
  const double lo = std::log(1e-3), hi = std::log(1e3);
  const std::size_t N = 10000;
  int within = 0, problems = 0;
  while (problems < 10) {
    // Random prior and loss terms; redrawn until the closed form is in range.
    const double s = std::pow(10.0, lg(gen));
    std::vector<ScoreTerms> terms(6);
    std::vector<double> laps;
    double num = 0.0, den = 0.0;
    for (auto& t : terms) {
      t.grad_loss = Vector(3);
      t.grad_log_prior = Vector(3);
      for (int k = 0; k < 3; ++k) {
        t.grad_loss[k] = s * n(gen);
        t.grad_log_prior[k] = n(gen);
      }
      t.hessian_trace = s * s * u(gen);
      laps.push_back(lap(gen));
      num += t.grad_loss.dot(t.grad_log_prior) + t.hessian_trace;
      den += t.grad_loss.squaredNorm();
    }
    if (!(num > 0.0 && num / den > 2e-3 && num / den < 5e2)) continue;
    ++problems;
    const double bs = beta_star(terms).beta_star;
    const auto objective = [&](double beta) {
      double v = 0.0;
      for (std::size_t b = 0; b < terms.size(); ++b) {
        v += (terms[b].grad_log_prior - beta * terms[b].grad_loss).squaredNorm() +
             2.0 * (laps[b] - beta * terms[b].hessian_trace);
      }
      return v;
    };
    std::size_t best = 0;
    double best_v = INFINITY;
    std::vector<double> grid(N);
    for (std::size_t k = 0; k < N; ++k) {
      grid[k] = std::exp(lo + (hi - lo) * static_cast<double>(k) / (N - 1));
      const double v = objective(grid[k]);
      if (v < best_v) {
        best_v = v;
        best = k;
      }
    }
    if (bs >= grid[best - 1] && bs <= grid[best + 1]) ++within;
  }
  const auto flat = Prior::iid(1, Prior::flat());
  const Quadratic q(Vector::Zero(1), 1.0);
  const double one_point = beta_star(q, flat, {Vector::Constant(1, 1.0)}).beta_star;
  const double two_point =
      beta_star(q, flat, {Vector::Constant(1, 1.0), Vector::Constant(1, 2.0)}).beta_star;
  const bool exact = one_point == 1.0 && std::abs(two_point - 0.4) <= 1e-15;
  return {within == 10 && exact, cat(within, "/10 within one grid cell; analytic examples ",
                                     one_point, " and ", two_point)};
}

// --------------------------------------------------------- experiment checks

Json cmp_config(const Vector& theta, std::size_t n, std::uint64_t seed, Json beta = "auto") {
  return resolve_config("cmp", Json{{"seed", seed},
                                    {"threads", threads()},
                                    {"beta", beta},
                                    {"data", {{"theta", {theta[0], theta[1]}}, {"n", n}}},
                                    {"losses", {{{"type", "dfd"}}}}});
}

std::pair<bool, std::string> cmp_recovery() {
  bool ok = true;
  std::ostringstream detail;
  for (double nu : {0.75, 1.25}) {
    Vector truth(2);
    truth << 4.0, nu;
    int covered = 0, close = 0, beta_ok = 0;
    double bmin = INFINITY, bmax = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto rep = run_cmp(cmp_config(truth, 2000, seed));
      const auto& r = rep.runs.at("dfd");
      const auto& s = r.summary;
      bool in = true;
      for (int k = 0; k < 2; ++k) in = in && s.lower[k] <= truth[k] && truth[k] <= s.upper[k];
      covered += in;
      close += std::abs(s.mean[0] - 4.0) <= 0.5 && std::abs(s.mean[1] - nu) <= 0.25;
      beta_ok += r.beta > 0.05 && r.beta < 50.0;
      bmin = std::min(bmin, r.beta);
      bmax = std::max(bmax, r.beta);
    }
    ok = ok && covered >= 8 && close >= 8 && beta_ok == 10;
    detail << "nu=" << nu << ": covered " << covered << "/10, mean close " << close
           << "/10, beta* in [" << fmt("%.3g", bmin) << ", " << fmt("%.3g", bmax) << "]; ";
  }
  return {ok, detail.str()};
}

std::pair<bool, std::string> ising_desk() {
  int mean_ok = 0, conservative = 0;
  double lo = INFINITY, hi = -INFINITY;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Json c = resolve_config(
        "ising", Json{{"seed", seed},
                      {"threads", threads()},
                      {"losses", {{{"type", "dfd"}}, {{"type", "ksd"}}}}});
    const auto rep = run_ising(c);
    const auto& dfd = rep.runs.at("dfd").summary;
    const auto& ksd = rep.runs.at("ksd").summary;
    mean_ok += dfd.mean[0] >= 3.5 && dfd.mean[0] <= 6.5;
    conservative += ksd.sd[0] >= dfd.sd[0];
    lo = std::min(lo, dfd.mean[0]);
    hi = std::max(hi, dfd.mean[0]);
  }
  return {mean_ok >= 8 && conservative >= 7,
          cat("DFD mean in [3.5, 6.5] ", mean_ok, "/10 (range ", fmt("%.3g", lo), "..",
              fmt("%.3g", hi), "), KSD sd >= DFD sd ", conservative, "/10")};
}

std::pair<bool, std::string> cost_scaling() {
  const auto rep = run_cost_benchmark(resolve_config("cost", Json{{"threads", 1}}));
  const double dfd = rep.extra.at("slope").at("dfd").get<double>();
  const double ksd = rep.extra.at("slope").at("ksd").get<double>();
  return {std::abs(dfd - 1.0) <= 0.25 && std::abs(ksd - 2.0) <= 0.35,
          cat("slope DFD ", fmt("%.3f", dfd), ", KSD ", fmt("%.3f", ksd),
              " over n = 1000..16000, d = ", rep.extra.at("d").get<int>())};
}

double skewness(const Eigen::VectorXd& v) {
  const double m = v.mean();
  const double m2 = (v.array() - m).square().mean();
  const double m3 = (v.array() - m).cube().mean();
  return m3 / std::pow(m2, 1.5);
}

std::pair<bool, std::string> bvm_proxy() {
  Vector truth(2);
  truth << 4.0, 1.0;
  // Fixed beta: a calibrated beta* is itself re-estimated at each n and its
  // sampling noise at n = 500 would enter the ratio.
  const auto small = run_cmp(cmp_config(truth, 500, 1, 1.0)).runs.at("dfd");
  const auto large = run_cmp(cmp_config(truth, 2000, 1, 1.0)).runs.at("dfd");
  const Matrix draws = pooled_draws(large.chains);
  bool ok = true;
  std::ostringstream detail;
  for (int k = 0; k < 2; ++k) {
    const double ratio = small.summary.sd[k] / large.summary.sd[k];
    const double sk = skewness(draws.col(k));
    ok = ok && std::abs(ratio - 2.0) <= 0.6 && std::abs(sk) <= 0.5;
    detail << "theta_" << k << ": sd ratio " << fmt("%.3f", ratio) << ", skew "
           << fmt("%.3f", sk) << "; ";
  }
  return {ok, detail.str()};
}

std::pair<bool, std::string> robustness() {
  int less = 0;
  std::ostringstream shifts;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto rep =
        run_robustness(resolve_config("robustness", Json{{"seed", seed}, {"threads", threads()}}));
    const Json& s = rep.extra.at("shifts");
    const double dfd = s.at("dfd").at(1).at("shift").get<double>();
    const double ksd = s.at("ksd-weighted").at(1).at("shift").get<double>();
    less += ksd < dfd;
    shifts << fmt("%.2f", ksd) << "/" << fmt("%.2f", dfd) << (seed < 10 ? " " : "");
  }
  return {less >= 7, cat("weighted KSD shift < DFD shift in ", less,
                         "/10 seeds (ksd/dfd: ", shifts.str(), ")")};
}

// ----------------------------------------------------------------------- A12

std::vector<std::pair<std::string, std::string>> read_tree(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    // Wall-clock measurements are not reproducible.
    if (name == "timing.json" || name == "cost.json") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files.emplace_back(fs::relative(e.path(), root).string(), s.str());
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::pair<bool, std::string> determinism() {
  const fs::path base = fs::temp_directory_path() / "dfdb_acceptance_a12";
  fs::remove_all(base);
  const std::vector<std::pair<std::string, Json>> runs{
      {"cmp", Json{{"data", {{"n", 400}}},
                   {"bootstrap", {{"B", 10}}},
                   {"sampler", {{"n_samples", 100}, {"burn_in", 200}, {"thin", 2}, {"chains", 3}}}}},
      {"ising", Json{{"model", {{"m", 3}}},
                     {"data", {{"n", 100}}},
                     {"bootstrap", {{"B", 6}}},
                     {"sampler", {{"n_samples", 40}, {"burn_in", 50}, {"thin", 2}, {"chains", 2}}}}},
      {"robustness",
       Json{{"model", {{"m", 3}}},
            {"data", {{"n", 200}}},
            {"bootstrap", {{"B", 6}}},
            {"sampler", {{"n_samples", 40}, {"burn_in", 50}, {"thin", 2}, {"chains", 2}}}}},
      {"pgm", Json{{"model", {{"d", 2}}},
                   {"data", {{"n", 200}, {"sweeps", 3}}},
                   {"bootstrap", {{"B", 5}, {"max_iters", 300}}},
                   {"sampler", {{"n_samples", 20}, {"burn_in", 50}, {"thin", 2}, {"chains", 2}}},
                   {"predictive", {{"draws_per_theta", 40}, {"sweeps", 2}}}}},
      {"cost", Json{{"cost", {{"n", {100, 200}}, {"min_seconds", 0.002}, {"repeats", 1}}}}},
  };
  int identical = 0, thread_free = 0;
  std::size_t files = 0;
  std::string first_diff;
  const auto csv_only = [](std::vector<std::pair<std::string, std::string>> tree) {
    std::erase_if(tree, [](const auto& f) { return !f.first.ends_with(".csv"); });
    return tree;
  };
  for (const auto& [name, user] : runs) {
    const fs::path dir = base / name;
    const auto run = [&](std::size_t t) {
      fs::remove_all(dir);
      Json u = user;
      u["seed"] = 7;
      u["threads"] = t;
      u["output"] = dir.string();
      run_experiment(name, resolve_config(name, u));
      return read_tree(dir);
    };
    const auto first = run(1);
    const auto second = run(1);
    // JSON sidecars record the thread count, so only the CSVs are compared
    // across thread counts.
    const auto threaded = run(threads() > 1 ? threads() : 2);
    if (first == second && !first.empty()) {
      ++identical;
      files += first.size();
    } else if (first_diff.empty()) {
      first_diff = name;
    }
    if (csv_only(first) == csv_only(threaded)) ++thread_free;
  }
  fs::remove_all(base);
  const int total = static_cast<int>(runs.size());
  return {identical == total && thread_free == total,
          cat(identical, "/", total, " experiments byte-identical on rerun (", files,
              " files, timing.json/cost.json excluded); CSVs identical with ",
              threads() > 1 ? threads() : 2, " threads in ", thread_free, "/", total,
              first_diff.empty() ? "" : "; first mismatch: " + first_diff)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by id, e.g. "acceptance A1 A12".
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<std::string, std::function<std::pair<bool, std::string>()>>> all{
      {"A1", divergence_forms}, {"A2", divergence_property}, {"A3", lemmas},
      {"A4", derivatives},      {"A5", beta_star_checks},    {"A6", domination},
      {"A7", cmp_recovery},     {"A8", ising_desk},          {"A9", cost_scaling},
      {"A10", bvm_proxy},       {"A11", robustness},         {"A12", determinism},
  };
  for (const auto& [id, body] : all) {
    if (only.empty() || std::find(only.begin(), only.end(), id) != only.end()) criterion(id, body);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
