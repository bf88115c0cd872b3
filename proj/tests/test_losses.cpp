#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>

#include "dfdb/losses.hpp"
#include "oracles/enumeration.hpp"

using namespace dfdb;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

double rel(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

std::vector<Point> to_points(const std::vector<oracle::State>& s) {
  return std::vector<Point>(s.begin(), s.end());
}

Dataset cmp_data(std::initializer_list<Position> xs) {
  std::vector<Point> pts;
  for (auto x : xs) pts.push_back(Point{x});
  return Dataset(ProductDomain::uniform(1, CoordinateDomain::half_infinite_min()), pts);
}

Dataset random_binary(std::size_t d, std::size_t n, std::uint64_t seed, double p1 = 0.5) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution bit(p1);
  std::vector<Point> pts(n, Point(d));
  for (auto& x : pts)
    for (auto& v : x) v = bit(gen);
  return Dataset(ProductDomain::uniform(d, CoordinateDomain::finite_cyclic(2)), pts);
}

Dataset random_counts(std::size_t d, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::poisson_distribution<int> pois(1.5);
  std::vector<Point> pts(n, Point(d));
  for (auto& x : pts)
    for (auto& v : x) v = pois(gen);
  return Dataset(ProductDomain::uniform(d, CoordinateDomain::half_infinite_min()), pts);
}

/// Log-mass equal to log of the empirical frequency on the enumerated states.
class EmpiricalModel final : public DiscreteModel {
 public:
  EmpiricalModel(ProductDomain dom, std::map<Point, double> freq)
      : dom_(std::move(dom)), freq_(std::move(freq)) {}
  std::string name() const override { return "empirical"; }
  const ProductDomain& domain() const override { return dom_; }
  std::size_t dim_theta() const override { return 1; }
  double log_tilde_p(const Vector&, PointView x) const override {
    return std::log(freq_.at(Point(x.begin(), x.end())));
  }

 private:
  ProductDomain dom_;
  std::map<Point, double> freq_;
};

}  // namespace

TEST_CASE("empirical DFD of a uniform model on two states") {
  std::mt19937_64 gen(1);
  const oracle::TableMass mass({{true, 2}}, 2, 0.5, gen);
  const auto model = std::make_shared<oracle::TableModel>(mass);
  const Dataset data(model->domain(), {Point{0}, Point{1}, Point{1}});
  // theta = 0 flattens the table.
  CHECK(dfd_empirical(*model, vec({0.0}), data) == doctest::Approx(-1.0));
}

TEST_CASE("empirical DFD of CMP on two points") {
  CmpModel m;
  CHECK(dfd_empirical(m, vec({4, 1}), cmp_data({2, 3})) == doctest::Approx(-1.34375).epsilon(1e-14));
  // Same number from ratios of the oracle's unnormalised mass.
  double v = 0.0;
  for (int x : {2, 3}) {
    const double rb = std::exp(oracle::cmp_log_mass(4, 1, x - 1) - oracle::cmp_log_mass(4, 1, x));
    const double rf = std::exp(oracle::cmp_log_mass(4, 1, x) - oracle::cmp_log_mass(4, 1, x + 1));
    v += (rb * rb - 2.0 * rf) / 2.0;
  }
  CHECK(v == doctest::Approx(-1.34375).epsilon(1e-14));
  DfdLoss loss(std::make_shared<CmpModel>(), cmp_data({2, 3}));
  CHECK(loss.value(vec({4, 1})) == doctest::Approx(2 * -1.34375).epsilon(1e-14));
}

TEST_CASE("empirical DFD differs from the divergence by a q-only constant") {
  std::mt19937_64 gen(17);
  const std::vector<oracle::Coord> finite{{true, 3}, {true, 2}};
  const std::vector<oracle::Coord> counts{{false, 40}, {true, 2}};
  for (const auto& coords : {finite, counts}) {
    const auto states = oracle::enumerate(coords);
    for (int rep = 0; rep < 5; ++rep) {
      const oracle::TableMass p(coords, 4, 0.3, gen);
      const oracle::TableMass q(coords, 4, 0.35, gen);
      const double def = oracle::dfd_definition(p, q, states);
      const double pp = oracle::dfd_p_part(p, q, states);
      const double qc = oracle::dfd_q_constant(q, states);
      CHECK(std::abs(def - (pp + qc)) <= 1e-10);
      oracle::TableModel model(p);
      const auto qn = oracle::normalise(q, states);
      const double lib = dfd_weighted(model, vec({1.0}), to_points(states), qn);
      // The p-part carries sum_j 1 = d that the computable form drops.
      CHECK(std::abs(lib - (pp - static_cast<double>(coords.size()))) <= 1e-10);
    }
  }
}

TEST_CASE("DFD strategies agree with the per-datum formula") {
  const auto ising = std::make_shared<IsingModel>(IsingModel::grid(3));
  const auto data = random_binary(9, 300, 4, 0.3);
  for (double t : {0.7, 2.0, 5.0}) {
    const double expected = 300.0 * dfd_empirical(*ising, vec({t}), data);
    for (auto agg : {Aggregation::Always, Aggregation::Never}) {
      for (auto st : {DfdLoss::Strategy::Direct, DfdLoss::Strategy::Compressed}) {
        DfdLoss loss(ising, data, agg, st);
        CHECK(rel(loss.value(vec({t})), expected) < 1e-12);
      }
    }
  }
  const auto pgm = std::make_shared<CmpGraphicalModel>(3, CountGraphicalModel::complete_graph(3));
  const auto counts = random_counts(3, 200, 8);
  const Vector theta = vec({0.3, 0.2, 0.4, 0.05, 0.1, 0.02, 1.2, 0.9, 1.1});
  DfdLoss direct(pgm, counts, Aggregation::Never, DfdLoss::Strategy::Direct);
  DfdLoss comp(pgm, counts, Aggregation::Auto, DfdLoss::Strategy::Compressed);
  CHECK(rel(direct.value(theta), comp.value(theta)) < 1e-12);
  CHECK(rel(direct.gradient(theta), comp.gradient(theta)) < 1e-12);
  CHECK(rel(direct.hessian_trace(theta), comp.hessian_trace(theta)) < 1e-10);
}

TEST_CASE("DFD derivatives match finite differences") {
  SUBCASE("CMP on two points") {
    DfdLoss loss(std::make_shared<CmpModel>(), cmp_data({2, 3}));
    const Vector t = vec({4, 1});
    const auto f = [&](const Vector& th) { return 2.0 * dfd_empirical(CmpModel(), th, cmp_data({2, 3})); };
    CHECK(rel(loss.gradient(t), fd_gradient(f, t)) < 1e-5);
    CHECK(rel(loss.hessian_trace(t), fd_hessian_trace(f, t)) < 1e-4);
  }
  SUBCASE("random models and parameters") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(0.3, 2.5);
    const auto cmp = std::make_shared<CmpModel>();
    const auto pgm = std::make_shared<PoissonGraphicalModel>(3, CountGraphicalModel::complete_graph(3));
    const auto counts = random_counts(3, 100, 2);
    std::vector<Position> raw{0, 1, 1, 2, 3, 3, 4, 5, 7, 9};
    std::vector<Point> pts;
    for (auto x : raw) pts.push_back(Point{x});
    const Dataset cdata(cmp->domain(), pts);
    for (int rep = 0; rep < 5; ++rep) {
      DfdLoss lc(cmp, cdata);
      const Vector tc = vec({u(gen) * 2, u(gen)});
      const auto fc = [&](const Vector& th) { return lc.value(th); };
      CHECK(rel(lc.gradient(tc), fd_gradient(fc, tc)) < 1e-5);
      CHECK(rel(lc.hessian_trace(tc), fd_hessian_trace(fc, tc)) < 1e-4);

      DfdLoss lp(pgm, counts);
      Vector tp(6);
      tp << u(gen) - 1, u(gen) - 1, u(gen) - 1, 0.1 * u(gen), 0.1 * u(gen), 0.1 * u(gen);
      const auto fp = [&](const Vector& th) { return lp.value(th); };
      CHECK(rel(lp.gradient(tp), fd_gradient(fp, tp)) < 1e-5);
      CHECK(rel(lp.hessian_trace(tp), fd_hessian_trace(fp, tp)) < 1e-4);
    }
  }
}

TEST_CASE("models without exponential-family structure fall back to finite differences") {
  std::mt19937_64 gen(3);
  const oracle::TableMass mass({{true, 3}, {true, 2}}, 3, 0.5, gen);
  const auto model = std::make_shared<oracle::TableModel>(mass);
  const Dataset data(model->domain(), {Point{0, 1}, Point{2, 0}, Point{1, 1}});
  DfdLoss loss(model, data);
  CHECK_FALSE(loss.has_analytic_derivatives());
  const Vector t = vec({0.8});
  const auto f = [&](const Vector& th) { return loss.value(th); };
  CHECK((loss.gradient(t) - fd_gradient(f, t)).norm() == 0.0);
}

TEST_CASE("gradient vanishes at an interior minimiser") {
  // One-parameter table family: the loss is smooth in theta and a golden
  // section search locates its minimum.
  const auto cmp = std::make_shared<CmpModel>();
  std::vector<Point> pts;
  for (Position x : {1, 2, 2, 3, 3, 3, 4, 4, 5, 6}) pts.push_back(Point{x});
  DfdLoss loss(cmp, Dataset(cmp->domain(), pts));
  double a = 0.5, b = 10.0;
  const double g = (std::sqrt(5.0) - 1) / 2;
  const auto f = [&](double t1) { return loss.value(vec({t1, 1.0})); };
  for (int it = 0; it < 200; ++it) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) < f(d)) b = d; else a = c;
  }
  CHECK(std::abs(loss.gradient(vec({(a + b) / 2, 1.0}))[0]) < 1e-6);
}

TEST_CASE("Stein kernel") {
  std::mt19937_64 gen(31);
  const std::vector<oracle::Coord> coords{{true, 3}, {true, 2}};
  const auto states = oracle::enumerate(coords);
  const oracle::TableMass mass(coords, 3, 0.5, gen);
  oracle::TableModel model(mass);
  const DiscreteKernel k;
  const Vector one = vec({1.0});
  SUBCASE("matches the oracle and is symmetric") {
    for (const auto& x : states)
      for (const auto& y : states) {
        const double u = stein_kernel(model, k, one, x, y);
        CHECK(std::abs(u - oracle::stein(mass, x, y)) < 1e-12);
        CHECK(std::abs(u - stein_kernel(model, k, one, y, x)) < 1e-12);
      }
  }
  SUBCASE("has zero mean under the model") {
    const auto p = oracle::normalise(mass, states);
    for (const auto& y : states) {
      double m = 0.0;
      for (std::size_t s = 0; s < states.size(); ++s) m += p[s] * stein_kernel(model, k, one, states[s], y);
      CHECK(std::abs(m) < 1e-12);
    }
  }
  SUBCASE("kernel values") {
    CHECK(k.evaluate(Point{0, 1}, Point{0, 1}) == 1.0);
    CHECK(k.evaluate(Point{0, 1}, Point{2, 0}) == doctest::Approx(std::exp(-1.0)));
    CHECK(DiscreteKernel(DiscreteKernel::Form::Match).evaluate(Point{0, 1}, Point{0, 1}) ==
          doctest::Approx(std::exp(-1.0)));
    const auto w = DiscreteKernel::weighted(2.0);
    CHECK(w.weight(Point{1, 1, 1, 1}) == doctest::Approx(1.0 / (1.0 + std::exp(2.0))));
    CHECK(w.weight(Point{1, 0, 1, 0}) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
    CHECK(w.evaluate(Point{1, 1}, Point{0, 1}) ==
          doctest::Approx(w.weight(Point{1, 1}) * w.weight(Point{0, 1}) * std::exp(-0.5)));
  }
}

TEST_CASE("KSD V-statistic") {
  std::mt19937_64 gen(41);
  const std::vector<oracle::Coord> coords{{true, 3}, {true, 2}};
  const oracle::TableMass mass(coords, 3, 0.5, gen);
  const auto model = std::make_shared<oracle::TableModel>(mass);
  const Vector one = vec({1.0});
  SUBCASE("single datum is the diagonal") {
    const Dataset data(model->domain(), {Point{2, 1}});
    KsdLoss loss(model, DiscreteKernel{}, data);
    const double diag = stein_kernel(*model, DiscreteKernel{}, one, Point{2, 1}, Point{2, 1});
    CHECK(loss.value(one) == doctest::Approx(diag).epsilon(1e-13));
    CHECK(diag >= 0.0);
  }
  SUBCASE("matches a brute-force double sum") {
    std::uniform_int_distribution<int> a(0, 2), b(0, 1);
    std::vector<Point> pts;
    for (int i = 0; i < 25; ++i) pts.push_back(Point{a(gen), b(gen)});
    KsdLoss loss(model, DiscreteKernel{}, Dataset(model->domain(), pts));
    double v = 0.0;
    for (const auto& x : pts)
      for (const auto& y : pts) v += oracle::stein(mass, x, y);
    CHECK(rel(loss.value(one), v / 25.0) < 1e-12);
  }
  SUBCASE("vanishes when the model is the empirical distribution") {
    std::vector<Point> pts{{0, 0}, {0, 0}, {0, 1}, {1, 0}, {1, 1}, {1, 1}, {1, 1}, {2, 0}, {2, 1}, {2, 1}};
    std::map<Point, double> freq;
    for (const auto& x : pts) freq[x] += 0.1;
    const auto emp = std::make_shared<EmpiricalModel>(model->domain(), freq);
    KsdLoss loss(emp, DiscreteKernel{}, Dataset(model->domain(), pts));
    CHECK(std::abs(loss.value(one)) < 1e-12);
  }
}

TEST_CASE("KSD strategies agree") {
  const auto ising = std::make_shared<IsingModel>(IsingModel::grid(3));
  const auto data = random_binary(9, 120, 6, 0.4);
  for (const auto& kernel : {DiscreteKernel{}, DiscreteKernel::weighted(4.0)}) {
    KsdLoss direct(ising, kernel, data, Aggregation::Never, KsdLoss::Strategy::Direct);
    KsdLoss comp(ising, kernel, data, Aggregation::Auto, KsdLoss::Strategy::Compressed);
    CHECK(comp.strategy() == KsdLoss::Strategy::Compressed);
    for (double t : {0.5, 3.0}) {
      CHECK(rel(direct.value(vec({t})), comp.value(vec({t}))) < 1e-10);
      CHECK(direct.value(vec({t})) >= 0.0);
    }
  }
  // Too many classes falls back to direct evaluation.
  KsdLoss capped(ising, DiscreteKernel{}, data, Aggregation::Auto, KsdLoss::Strategy::Auto, 1);
  CHECK(capped.strategy() == KsdLoss::Strategy::Direct);
}

TEST_CASE("KSD is dominated by the square root of the DFD") {
  std::mt19937_64 gen(43);
  const std::vector<oracle::Coord> coords{{true, 3}, {true, 2}};
  const auto states = oracle::enumerate(coords);
  for (int rep = 0; rep < 10; ++rep) {
    const oracle::TableMass p(coords, 3, 0.5, gen);
    const oracle::TableMass q(coords, 3, 0.5, gen);
    const double ksd2 = oracle::ksd_squared(p, q, states);
    const double dfd = oracle::dfd_definition(p, q, states);
    CHECK(std::sqrt(std::max(0.0, ksd2)) <= std::sqrt(dfd) + 1e-10);
  }
}

TEST_CASE("pseudo-likelihood") {
  const auto m = std::make_shared<IsingModel>(IsingModel::grid(2));
  SUBCASE("high temperature limit") {
    const auto data = random_binary(4, 7, 2);
    PseudoLikelihoodLoss loss(m, data);
    CHECK(loss.value(vec({1e12})) == doctest::Approx(7 * 4 * std::log(2.0)).epsilon(1e-9));
  }
  SUBCASE("single datum by enumeration") {
    const Point x{1, 0, 1, 1};
    PseudoLikelihoodLoss loss(m, Dataset(m->domain(), {x}));
    double v = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      Point one = x, zero = x;
      one[i] = 1;
      zero[i] = 0;
      const double e1 = oracle::grid_energy(2, one) / 5.0;
      const double e0 = oracle::grid_energy(2, zero) / 5.0;
      const double p1 = std::exp(e1) / (std::exp(e0) + std::exp(e1));
      v -= std::log(x[i] == 1 ? p1 : 1.0 - p1);
    }
    CHECK(loss.value(vec({5.0})) == doctest::Approx(v).epsilon(1e-12));
  }
  SUBCASE("order of the data does not matter") {
    auto pts = random_binary(4, 30, 9).points();
    PseudoLikelihoodLoss a(m, Dataset(m->domain(), pts), Aggregation::Never);
    std::reverse(pts.begin(), pts.end());
    PseudoLikelihoodLoss b(m, Dataset(m->domain(), pts), Aggregation::Never);
    CHECK(rel(a.value(vec({1.3})), b.value(vec({1.3}))) < 1e-13);
  }
  SUBCASE("derivatives") {
    const auto big = std::make_shared<IsingModel>(IsingModel::grid(3));
    PseudoLikelihoodLoss loss(big, random_binary(9, 80, 5, 0.3));
    for (double t : {0.6, 1.5, 4.0}) {
      const auto f = [&](const Vector& th) { return loss.value(th); };
      CHECK(rel(loss.gradient(vec({t})), fd_gradient(f, vec({t}))) < 1e-5);
      CHECK(rel(loss.hessian_trace(vec({t})), fd_hessian_trace(f, vec({t}))) < 1e-4);
      CHECK(loss.value(vec({t})) >= 0.0);
    }
  }
}

TEST_CASE("truncated CMP likelihood") {
  const auto data = cmp_data({0, 2, 3, 3, 7});
  TruncatedCmpNll nll(data);
  const Vector t = vec({3.0, 1.0});
  // With unit dispersion the truncated normaliser is essentially e^theta1.
  double expected = 0.0;
  for (Position x : {0, 2, 3, 3, 7}) expected -= -3.0 + x * std::log(3.0) - std::lgamma(x + 1.0);
  CHECK(nll.value(t) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(nll.log_normaliser(t) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(std::isinf(nll.value(vec({-1.0, 1.0}))));
  const auto f = [&](const Vector& th) { return nll.value(th); };
  CHECK(rel(nll.gradient(vec({2.0, 0.7})), fd_gradient(f, vec({2.0, 0.7}))) < 1e-12);
}
