#include "dfdb/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dfdb/losses.hpp"
#include "dfdb/parallel.hpp"
#include "dfdb/rng.hpp"

namespace dfdb {

namespace fs = std::filesystem;

// ------------------------------------------------------------- configuration

namespace {

Json rwmh_sampler(std::size_t n_samples, std::size_t burn_in, std::size_t thin) {
  return Json{{"type", "rwmh"},   {"step", 0.1},         {"n_samples", n_samples},
              {"burn_in", burn_in}, {"thin", thin},      {"chains", 10},
              {"init_jitter", 0.1}};
}

Json default_bootstrap() {
  return Json{{"B", 100}, {"max_iters", 500}, {"grad_tol", 1e-6}};
}

Json base_config(const std::string& name) {
  return Json{{"experiment", name}, {"seed", 1}, {"threads", 1}, {"output", ""}};
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  require(j.is_object() && j.contains(key), where + ": missing \"" + key + "\"");
  return j.at(key);
}

std::size_t positive_int(const Json& j, const char* key, const std::string& where,
                         bool allow_zero = false) {
  const Json& v = field(j, key, where);
  require(v.is_number_integer() && v.get<std::int64_t>() >= (allow_zero ? 0 : 1),
          where + ": \"" + key + "\" must be a " +
              (allow_zero ? "nonnegative" : "positive") + " integer");
  return v.get<std::size_t>();
}

double positive_number(const Json& j, const char* key, const std::string& where) {
  const Json& v = field(j, key, where);
  require(v.is_number() && v.get<double>() > 0.0,
          where + ": \"" + key + "\" must be a positive number");
  return v.get<double>();
}

void validate_model(const Json& m) {
  const std::string type = field(m, "type", "model").get<std::string>();
  if (type == "cmp") return;
  if (type == "ising") {
    positive_int(m, "m", "model");
    return;
  }
  if (type == "pgm" || type == "cmp-pgm") {
    positive_int(m, "d", "model");
    if (m.contains("edges")) {
      const Json& e = m.at("edges");
      require(e == "complete" || e.is_array(), "model: edges must be \"complete\" or a list");
    }
    return;
  }
  throw ConfigError("model: unknown type \"" + type + "\"");
}

void validate_loss(const Json& l) {
  const std::string type = field(l, "type", "loss").get<std::string>();
  require(type == "dfd" || type == "ksd" || type == "pseudo" || type == "standard-bayes-cmp",
          "loss: unknown type \"" + type + "\"");
  if (l.contains("weight_threshold")) {
    const Json& t = l.at("weight_threshold");
    require(t.is_null() || t == "auto" || t.is_number(),
            "loss: weight_threshold must be null, \"auto\" or a number");
  }
  if (l.contains("kernel")) {
    require(l.at("kernel") == "mismatch" || l.at("kernel") == "match",
            "loss: kernel must be \"mismatch\" or \"match\"");
  }
}

void validate(const Json& c) {
  require(c.is_object(), "config must be a JSON object");
  const std::string exp = field(c, "experiment", "config").get<std::string>();
  require(exp == "cmp" || exp == "ising" || exp == "pgm" || exp == "robustness" ||
              exp == "cost",
          "config: unknown experiment \"" + exp + "\"");
  const Json& seed = field(c, "seed", "config");
  require(seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<std::int64_t>() >= 0),
          "config: seed must be a nonnegative integer");
  positive_int(c, "threads", "config");
  require(field(c, "output", "config").is_string(), "config: output must be a string");
  validate_model(field(c, "model", "config"));

  const Json& data = field(c, "data", "config");
  const std::string source = field(data, "source", "data").get<std::string>();
  if (source == "file") {
    require(field(data, "path", "data").is_string(), "data: path must be a string");
  } else {
    require(source == "simulate", "data: source must be \"simulate\" or \"file\"");
    if (exp != "cost") positive_int(data, "n", "data");
  }

  const Json& losses = field(c, "losses", "config");
  require(losses.is_array() && !losses.empty(), "config: losses must be a nonempty list");
  for (const auto& l : losses) validate_loss(l);

  if (exp == "cost") {
    const Json& cost = field(c, "cost", "config");
    const Json& ns = field(cost, "n", "cost");
    require(ns.is_array() && ns.size() >= 2, "cost: n must list at least two sizes");
    for (const auto& v : ns) {
      require(v.is_number_integer() && v.get<std::int64_t>() > 0, "cost: sizes must be positive");
    }
    positive_number(cost, "min_seconds", "cost");
    positive_int(cost, "repeats", "cost");
    return;
  }

  const Json& beta = field(c, "beta", "config");
  require(beta == "auto" || (beta.is_number() && beta.get<double>() >= 0.0),
          "config: beta must be \"auto\" or a nonnegative number");
  const Json& s = field(c, "sampler", "config");
  const std::string st = field(s, "type", "sampler").get<std::string>();
  require(st == "rwmh" || st == "mala", "sampler: type must be \"rwmh\" or \"mala\"");
  positive_number(s, "step", "sampler");
  positive_int(s, "n_samples", "sampler");
  positive_int(s, "burn_in", "sampler", true);
  positive_int(s, "thin", "sampler");
  positive_int(s, "chains", "sampler");
  require(field(s, "init_jitter", "sampler").is_number() &&
              s.at("init_jitter").get<double>() >= 0.0,
          "sampler: init_jitter must be nonnegative");
  const Json& b = field(c, "bootstrap", "config");
  positive_int(b, "B", "bootstrap");
  positive_int(b, "max_iters", "bootstrap");
  positive_number(b, "grad_tol", "bootstrap");

  if (exp == "robustness") {
    const Json& r = field(c, "contamination", "config");
    const Json& eps = field(r, "epsilons", "contamination");
    require(eps.is_array() && !eps.empty(), "contamination: epsilons must be a nonempty list");
    for (const auto& e : eps) {
      require(e.is_number() && e.get<double>() >= 0.0 && e.get<double>() <= 1.0,
              "contamination: epsilons must lie in [0, 1]");
    }
  }
  if (exp == "pgm") {
    const Json& fit = field(c, "fit", "config");
    require(fit.is_array() && !fit.empty(), "config: fit must list model types");
    for (const auto& f : fit) {
      require(f == "pgm" || f == "cmp-pgm", "config: fit entries must be pgm or cmp-pgm");
    }
    positive_int(field(c, "predictive", "config"), "draws_per_theta", "predictive");
    positive_int(c.at("predictive"), "sweeps", "predictive");
  }
}

std::uint64_t master_seed(const Json& c) { return c.at("seed").get<std::uint64_t>(); }
std::size_t threads_of(const Json& c) { return c.at("threads").get<std::size_t>(); }

}  // namespace

Json default_config(const std::string& experiment) {
  Json c = base_config(experiment);
  if (experiment == "cmp") {
    c["model"] = {{"type", "cmp"}};
    c["data"] = {{"source", "simulate"}, {"theta", {4.0, 0.75}}, {"n", 2000}};
    c["losses"] = Json::array({{{"type", "dfd"}}, {{"type", "ksd"}},
                               {{"type", "standard-bayes-cmp"}}});
    c["beta"] = "auto";
    c["sampler"] = rwmh_sampler(500, 5000, 10);
    c["bootstrap"] = default_bootstrap();
  } else if (experiment == "ising" || experiment == "robustness") {
    c["model"] = {{"type", "ising"}, {"m", 6}};
    c["data"] = {{"source", "simulate"}, {"theta", {5.0}}, {"n", 500}, {"iters_per_draw", 0}};
    c["beta"] = "auto";
    c["sampler"] = rwmh_sampler(100, 2000, 20);
    c["bootstrap"] = default_bootstrap();
    if (experiment == "ising") {
      c["losses"] = Json::array({{{"type", "dfd"}}, {{"type", "ksd"}}, {{"type", "pseudo"}}});
    } else {
      c["losses"] = Json::array(
          {{{"type", "dfd"}}, {{"type", "ksd"}, {"weight_threshold", "auto"}}});
      c["contamination"] = {{"epsilons", {0.0, 0.1}}};
    }
  } else if (experiment == "pgm") {
    c["model"] = {{"type", "pgm"}, {"d", 5}, {"edges", "complete"}};
    c["fit"] = {"pgm", "cmp-pgm"};
    c["data"] = {{"source", "simulate"}, {"generator", "cmp-pgm"}, {"node", 1.5},
                 {"edge", 0.05},         {"dispersion", 1.5},      {"n", 878},
                 {"sweeps", 10}};
    c["losses"] = Json::array({{{"type", "dfd"}}});
    c["beta"] = "auto";
    c["sampler"] = {{"type", "mala"},   {"step", 0.02}, {"n_samples", 100}, {"burn_in", 5000},
                    {"thin", 50},       {"chains", 10}, {"init_jitter", 0.05}};
    c["bootstrap"] = default_bootstrap();
    // Dispersion fits need several hundred BB iterations to reach grad_tol.
    c["bootstrap"]["max_iters"] = 2000;
    c["predictive"] = {{"draws_per_theta", 878}, {"sweeps", 10}};
  } else if (experiment == "cost") {
    c["model"] = {{"type", "ising"}, {"m", 3}};
    c["data"] = {{"source", "simulate"}, {"theta", {5.0}}, {"iters_per_draw", 0}};
    c["losses"] = Json::array({{{"type", "dfd"}}, {{"type", "ksd"}}});
    c["cost"] = {{"n", {1000, 2000, 4000, 8000, 16000}}, {"min_seconds", 0.2}, {"repeats", 3}};
  } else {
    throw ConfigError("unknown experiment \"" + experiment + "\"");
  }
  return c;
}

Json resolve_config(const std::string& experiment, const Json& user) {
  Json c = default_config(experiment);
  if (!user.is_null()) {
    require(user.is_object(), "config must be a JSON object");
    if (user.contains("experiment")) {
      require(user.at("experiment") == experiment,
              "config names experiment " + user.at("experiment").dump() + ", not \"" +
                  experiment + "\"");
    }
    c.merge_patch(user);
  }
  try {
    validate(c);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config has the wrong type somewhere: ") + e.what());
  }
  return c;
}

std::string config_hash(const Json& config) {
  Json c = config;
  c.erase("output");
  c.erase("threads");
  const std::string s = c.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ------------------------------------------------------------ problem setup

namespace {

std::vector<CountGraphicalModel::Edge> edges_of(const Json& m, std::size_t d) {
  if (!m.contains("edges") || m.at("edges") == "complete") {
    return CountGraphicalModel::complete_graph(d);
  }
  std::vector<CountGraphicalModel::Edge> edges;
  for (const auto& e : m.at("edges")) {
    require(e.is_array() && e.size() == 2, "model: each edge must be a pair");
    const auto i = e[0].get<std::size_t>();
    const auto j = e[1].get<std::size_t>();
    require(i < j && j < d, "model: edges must be pairs i < j < d");
    edges.emplace_back(i, j);
  }
  return edges;
}

}  // namespace

std::shared_ptr<const DiscreteModel> make_model(const Json& m) {
  validate_model(m);
  const std::string type = m.at("type").get<std::string>();
  if (type == "cmp") return std::make_shared<CmpModel>();
  if (type == "ising") {
    return std::make_shared<IsingModel>(IsingModel::grid(m.at("m").get<std::size_t>()));
  }
  const auto d = m.at("d").get<std::size_t>();
  if (type == "pgm") return std::make_shared<PoissonGraphicalModel>(d, edges_of(m, d));
  return std::make_shared<CmpGraphicalModel>(d, edges_of(m, d));
}

Problem make_problem(std::shared_ptr<const DiscreteModel> model, Dataset data) {
  if (!(data.domain() == model->domain())) {
    data = Dataset(model->domain(), data.points());
  }
  Problem pr;
  pr.data = std::make_shared<const Dataset>(std::move(data));
  const std::size_t p = model->dim_theta();
  if (const auto* g = dynamic_cast<const CountGraphicalModel*>(model.get())) {
    const std::size_t d = g->d();
    const double edge_scale =
        d > 1 ? 1.0 / (static_cast<double>(d * (d - 1)) / 2.0) : 1.0;
    std::vector<Prior::Component> comps;
    std::vector<ParamTransform::Kind> kinds;
    Vector theta0 = Vector::Zero(static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < d; ++i) {
      comps.push_back(Prior::normal(0.0, 1.0));
      kinds.push_back(ParamTransform::Kind::Identity);
    }
    for (std::size_t e = 0; e < g->edges().size(); ++e) {
      comps.push_back(Prior::half_normal(edge_scale));
      kinds.push_back(ParamTransform::Kind::Square);
      // z = 0 is a stationary point of every function of z^2.
      theta0[static_cast<Eigen::Index>(g->edge_offset() + e)] = 0.01;
    }
    if (g->has_dispersion()) {
      for (std::size_t i = 0; i < d; ++i) {
        comps.push_back(Prior::half_normal(1.0 / std::sqrt(2.0)));
        kinds.push_back(ParamTransform::Kind::Square);
        theta0[static_cast<Eigen::Index>(g->dispersion_offset() + i)] = 1.0;
      }
    }
    pr.prior = Prior(std::move(comps));
    pr.transform = ParamTransform(std::move(kinds));
    pr.init_z = pr.transform.to_unconstrained(theta0);
  } else {
    pr.prior = Prior::iid(p, Prior::chi_squared(3.0));
    pr.transform = ParamTransform::uniform(p, ParamTransform::Kind::Log);
    pr.init_z = pr.transform.to_unconstrained(pr.prior.mean());
  }
  pr.model = std::move(model);
  return pr;
}

namespace {

Vector theta_from(const Json& j, std::size_t p, const std::string& where) {
  require(j.is_array() && j.size() == p,
          where + ": theta must have " + std::to_string(p) + " entries");
  Vector v(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Vector pgm_generator_theta(const Json& data, const CountGraphicalModel& gen) {
  if (data.contains("theta")) return theta_from(data.at("theta"), gen.dim_theta(), "data");
  Vector t(static_cast<Eigen::Index>(gen.dim_theta()));
  for (std::size_t i = 0; i < gen.d(); ++i) {
    t[static_cast<Eigen::Index>(i)] = data.value("node", 1.5);
  }
  for (std::size_t e = 0; e < gen.edges().size(); ++e) {
    t[static_cast<Eigen::Index>(gen.edge_offset() + e)] = data.value("edge", 0.05);
  }
  if (gen.has_dispersion()) {
    for (std::size_t i = 0; i < gen.d(); ++i) {
      t[static_cast<Eigen::Index>(gen.dispersion_offset() + i)] = data.value("dispersion", 1.0);
    }
  }
  return t;
}

Dataset simulate_for(const Json& config, const DiscreteModel& model, std::size_t n,
                     std::uint64_t seed) {
  const Json& data = config.at("data");
  if (const auto* ising = dynamic_cast<const IsingModel*>(&model)) {
    const Vector t = theta_from(data.at("theta"), 1, "data");
    SimConfig sc;
    sc.n_draws = n;
    sc.iters_per_draw = data.value("iters_per_draw", std::size_t{0});
    sc.seed = seed;
    sc.threads = threads_of(config);
    return ising_simulate(*ising, t[0], sc);
  }
  if (dynamic_cast<const CmpModel*>(&model) != nullptr) {
    return cmp_sample(theta_from(data.at("theta"), 2, "data"), n, seed);
  }
  const auto* g = dynamic_cast<const CountGraphicalModel*>(&model);
  require(g != nullptr, "no simulator for model " + model.name());
  const std::string gen_type = data.value("generator", model.name());
  const CountGraphicalModel gen(g->d(), g->edges(), gen_type == "cmp-pgm");
  return pgm_gibbs_sample(gen, pgm_generator_theta(data, gen), n,
                          data.value("sweeps", std::size_t{10}), seed);
}

}  // namespace

Dataset make_data(const Json& config, const DiscreteModel& model) {
  const Json& data = config.at("data");
  if (data.at("source") == "file") {
    const Dataset raw = ingest_counts(fs::path(data.at("path").get<std::string>()));
    require(raw.dim() == model.dim_x(), "data file has " + std::to_string(raw.dim()) +
                                            " columns, model expects " +
                                            std::to_string(model.dim_x()));
    try {
      return Dataset(model.domain(), raw.points());
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string("data file does not fit the model domain: ") + e.what());
    }
  }
  return simulate_for(config, model, data.at("n").get<std::size_t>(),
                      derive_seed(master_seed(config), kDataStream));
}

std::string loss_label(const Json& l) {
  std::string type = l.at("type").get<std::string>();
  if (type == "ksd" && l.contains("weight_threshold") && !l.at("weight_threshold").is_null()) {
    type += "-weighted";
  }
  return type;
}

LossFactory make_loss_factory(const Json& l, std::shared_ptr<const DiscreteModel> model) {
  validate_loss(l);
  const std::string type = l.at("type").get<std::string>();
  if (type == "dfd") {
    return [model](const Dataset& d) { return std::make_unique<DfdLoss>(model, d); };
  }
  if (type == "ksd") {
    const auto form = l.value("kernel", std::string("mismatch")) == "match"
                          ? DiscreteKernel::Form::Match
                          : DiscreteKernel::Form::Mismatch;
    DiscreteKernel kernel(form);
    if (l.contains("weight_threshold") && !l.at("weight_threshold").is_null()) {
      const Json& t = l.at("weight_threshold");
      const double tau =
          t == "auto" ? 0.9 * static_cast<double>(model->dim_x()) : t.get<double>();
      kernel = DiscreteKernel::weighted(tau, form);
    }
    return [model, kernel](const Dataset& d) {
      return std::make_unique<KsdLoss>(model, kernel, d);
    };
  }
  if (type == "pseudo") {
    return [model](const Dataset& d) {
      return std::make_unique<PseudoLikelihoodLoss>(model, d);
    };
  }
  require(dynamic_cast<const CmpModel*>(model.get()) != nullptr,
          "standard-bayes-cmp needs the cmp model");
  const int terms = l.value("terms", TruncatedCmpNll::kDefaultTerms);
  return [terms](const Dataset& d) { return std::make_unique<TruncatedCmpNll>(d, terms); };
}

// ---------------------------------------------------------------- inference

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

PosteriorSummary summarise(const std::vector<Chain>& chains) {
  PosteriorSummary s;
  const Matrix all = pooled_draws(chains);
  const Eigen::Index p = all.cols();
  s.mean = all.colwise().mean().transpose();
  s.sd.resize(p);
  s.lower.resize(p);
  s.upper.resize(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const double var = all.rows() > 1 ? (all.col(k).array() - s.mean[k]).square().sum() /
                                            static_cast<double>(all.rows() - 1)
                                      : 0.0;
    s.sd[k] = std::sqrt(var);
    std::vector<double> col(all.col(k).data(), all.col(k).data() + all.rows());
    s.lower[k] = quantile(col, 0.025);
    s.upper[k] = quantile(std::move(col), 0.975);
  }
  s.rhat = chains.size() >= 2 && chains.front().size() >= 2
               ? gelman_rubin(chains)
               : Vector::Constant(p, std::numeric_limits<double>::quiet_NaN());
  for (const auto& c : chains) s.acceptance.push_back(c.acceptance_rate());
  return s;
}

namespace {

double seconds_per_eval(const LossFunction& loss, const Vector& theta, double min_seconds) {
  using clock = std::chrono::steady_clock;
  volatile double sink = loss.value(theta);
  std::size_t count = 0;
  const auto start = clock::now();
  double elapsed = 0.0;
  do {
    sink = sink + loss.value(theta);
    ++count;
    elapsed = std::chrono::duration<double>(clock::now() - start).count();
  } while (elapsed < min_seconds);
  return elapsed / static_cast<double>(count);
}

}  // namespace

InferenceResult run_inference(const Problem& pr, const Json& loss_spec, const Json& config) {
  const std::uint64_t seed = master_seed(config);
  const std::size_t threads = threads_of(config);
  const LossFactory factory = make_loss_factory(loss_spec, pr.model);
  std::shared_ptr<const LossFunction> loss = factory(*pr.data);

  InferenceResult res;
  res.loss = loss_label(loss_spec);
  res.n = pr.data->size();
  res.d = pr.data->dim();

  Vector start = pr.init_z;
  const bool fixed_unit = loss_spec.at("type") == "standard-bayes-cmp";
  const Json& beta = config.at("beta");
  if (fixed_unit) {
    res.beta = 1.0;
  } else if (beta == "auto") {
    const Json& b = config.at("bootstrap");
    BootstrapConfig bc;
    bc.B = b.at("B").get<std::size_t>();
    bc.optimiser.max_iters = b.at("max_iters").get<std::size_t>();
    bc.optimiser.grad_tol = b.at("grad_tol").get<double>();
    bc.seed = derive_seed(seed, kBootstrapStream);
    bc.threads = threads;
    res.calibration = calibrate(factory, *pr.data, pr.prior, pr.transform, pr.init_z, bc);
    res.beta = res.calibration->beta_star;
    start = pr.transform.to_unconstrained(
        res.calibration->minimisers.colwise().mean().transpose());
  } else {
    res.beta = beta.get<double>();
  }

  const GeneralisedPosterior posterior(pr.prior, loss, res.beta, pr.transform);
  const Target target = make_target(posterior);
  const Json& s = config.at("sampler");
  const std::size_t n_chains = s.at("chains").get<std::size_t>();
  const double jitter = s.at("init_jitter").get<double>();
  const std::uint64_t chain_base = derive_seed(seed, kChainStream);
  res.chains.resize(n_chains);
  parallel_for(n_chains, threads, [&](std::size_t c) {
    const std::uint64_t cs = derive_seed(chain_base, c);
    Rng init_rng(derive_seed(cs, 0));
    Vector z0 = start;
    for (int attempt = 0; attempt < 100; ++attempt) {
      z0 = start;
      for (Eigen::Index k = 0; k < z0.size(); ++k) z0[k] += jitter * init_rng.normal();
      if (target.log_density(z0)) break;
    }
    if (s.at("type") == "rwmh") {
      RwmhConfig rc;
      rc.sigma = s.at("step").get<double>();
      rc.n_samples = s.at("n_samples").get<std::size_t>();
      rc.burn_in = s.at("burn_in").get<std::size_t>();
      rc.thin = s.at("thin").get<std::size_t>();
      rc.seed = cs;
      res.chains[c] = rwmh_sample(target, z0, rc);
    } else {
      MalaConfig mc;
      mc.step_size = s.at("step").get<double>();
      mc.n_samples = s.at("n_samples").get<std::size_t>();
      mc.burn_in = s.at("burn_in").get<std::size_t>();
      mc.thin = s.at("thin").get<std::size_t>();
      mc.seed = cs;
      res.chains[c] = mala_sample(target, z0, mc);
    }
  });
  res.summary = summarise(res.chains);
  res.seconds_per_loss_eval =
      seconds_per_eval(*loss, pr.transform.to_constrained(start), 0.02);
  return res;
}

namespace {

Json provenance(const Json& config) {
  return Json{{"seed", master_seed(config)}, {"config_hash", config_hash(config)}};
}

Json finite_or_null(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) {
      a.push_back(v[i]);
    } else {
      a.push_back(nullptr);
    }
  }
  return a;
}

}  // namespace

void write_inference(const fs::path& dir, const InferenceResult& r, const Json& config) {
  std::ostringstream csv;
  write_chains_csv(csv, r.chains);
  write_text(dir / "chains.csv", csv.str());

  Json side = provenance(config);
  side["config"] = config;
  side["loss"] = r.loss;
  side["beta"] = r.beta;
  Json acc = Json::array();
  Json steps = Json::array();
  Json warnings = Json::array();
  for (const auto& c : r.chains) {
    acc.push_back(c.acceptance_rate());
    steps.push_back(c.step);
    for (const auto& w : c.warnings) warnings.push_back(w);
  }
  side["sampler"] = r.chains.empty() ? "" : r.chains.front().sampler;
  side["acceptance_rate"] = acc;
  side["step"] = steps;
  side["rhat"] = finite_or_null(r.summary.rhat);
  side["warnings"] = warnings;
  write_json(dir / "chains.json", side);

  Json sum = provenance(config);
  sum["loss"] = r.loss;
  sum["beta"] = r.beta;
  sum["n"] = r.n;
  sum["d"] = r.d;
  sum["mean"] = to_json(r.summary.mean);
  sum["sd"] = to_json(r.summary.sd);
  sum["lower"] = to_json(r.summary.lower);
  sum["upper"] = to_json(r.summary.upper);
  sum["rhat"] = finite_or_null(r.summary.rhat);
  sum["acceptance_rate"] = acc;
  if (r.calibration) {
    sum["beta_star"] = r.calibration->beta_star;
    sum["non_converged_minimisers"] = r.calibration->non_converged();
  }
  write_json(dir / "summary.json", sum);

  if (r.calibration) {
    Json cal = to_json(*r.calibration);
    cal.update(provenance(config));
    write_json(dir / "calibration.json", cal);
  }

  Json timing = provenance(config);
  timing["loss"] = r.loss;
  timing["n"] = r.n;
  timing["d"] = r.d;
  timing["seconds_per_loss_eval"] = r.seconds_per_loss_eval;
  write_json(dir / "timing.json", timing);
}

// -------------------------------------------------------------- experiments

namespace {

bool writes_output(const Json& config) {
  return config.at("output").is_string() && !config.at("output").get<std::string>().empty();
}

fs::path out_dir(const Json& config) { return fs::path(config.at("output").get<std::string>()); }

void write_data(const fs::path& dir, const Dataset& data, const Json& config,
                const std::string& name) {
  std::ostringstream csv;
  write_dataset_csv(csv, data);
  write_text(dir / (name + ".csv"), csv.str());
  Json side = provenance(config);
  side["n"] = data.size();
  side["d"] = data.dim();
  side["source"] = config.at("data").at("source");
  write_json(dir / (name + ".json"), side);
}

void write_config(const Json& config) {
  if (!writes_output(config)) return;
  Json j = provenance(config);
  j["config"] = config;
  write_json(out_dir(config) / "config.json", j);
}

ExperimentReport run_all_losses(const Json& config) {
  ExperimentReport rep;
  rep.config = config;
  const auto model = make_model(config.at("model"));
  const Problem pr = make_problem(model, make_data(config, *model));
  if (writes_output(config)) write_data(out_dir(config), *pr.data, config, "data");
  write_config(config);
  for (const auto& l : config.at("losses")) {
    InferenceResult r = run_inference(pr, l, config);
    if (writes_output(config)) write_inference(out_dir(config) / r.loss, r, config);
    const std::string key = r.loss;
    rep.runs.emplace(key, std::move(r));
  }
  return rep;
}

Matrix observed_frequencies(const Dataset& data, Position max_value) {
  Matrix f = Matrix::Zero(static_cast<Eigen::Index>(data.dim()),
                          static_cast<Eigen::Index>(max_value + 1));
  for (const auto& p : data.points()) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (p[j] <= max_value) f(static_cast<Eigen::Index>(j), p[j]) += 1.0;
    }
  }
  return f / static_cast<double>(data.size());
}

}  // namespace

ExperimentReport run_cmp(const Json& config) {
  require(config.at("model").at("type") == "cmp", "cmp experiment needs the cmp model");
  return run_all_losses(config);
}

ExperimentReport run_ising(const Json& config) {
  require(config.at("model").at("type") == "ising", "ising experiment needs the ising model");
  return run_all_losses(config);
}

ExperimentReport run_pgm(const Json& config) {
  ExperimentReport rep;
  rep.config = config;
  write_config(config);
  const Json& base = config.at("model");
  // Data are generated (or read) once, on the first fitted model's domain.
  Json first = base;
  first["type"] = config.at("fit").at(0);
  const auto first_model = make_model(first);
  const Dataset data = make_data(config, *first_model);
  if (writes_output(config)) write_data(out_dir(config), data, config, "data");

  const Json& pred = config.at("predictive");
  const auto draws_per_theta = pred.at("draws_per_theta").get<std::size_t>();
  const auto sweeps = pred.at("sweeps").get<std::size_t>();
  Json predictive = Json::object();
  for (const auto& fit : config.at("fit")) {
    Json spec = base;
    spec["type"] = fit;
    const auto model = make_model(spec);
    const auto* g = dynamic_cast<const CountGraphicalModel*>(model.get());
    const Problem pr = make_problem(model, data);
    for (const auto& l : config.at("losses")) {
      InferenceResult r = run_inference(pr, l, config);
      const std::string key = fit.get<std::string>() + "/" + r.loss;
      const Matrix thetas = pooled_draws(r.chains);
      const Simulator sim = [g, sweeps](const Vector& theta, std::size_t n,
                                        std::uint64_t s) {
        return pgm_gibbs_sample(*g, theta, n, sweeps, s);
      };
      const PredictiveSummary ps =
          posterior_predictive(thetas, sim, draws_per_theta,
                               derive_seed(master_seed(config), kPredictiveStream),
                               threads_of(config));
      Json pj = provenance(config);
      pj["model"] = fit;
      pj["loss"] = r.loss;
      pj["draws_per_theta"] = ps.draws_per_theta;
      pj["n_theta"] = ps.n_theta;
      pj["max_value"] = ps.max_value;
      pj["mean"] = to_json(ps.mean);
      pj["sd"] = to_json(ps.sd);
      pj["observed"] = to_json(observed_frequencies(data, ps.max_value));
      if (writes_output(config)) {
        write_inference(out_dir(config) / fit.get<std::string>() / r.loss, r, config);
        write_json(out_dir(config) / fit.get<std::string>() / r.loss / "predictive.json", pj);
      }
      predictive[key] = pj;
      rep.runs.emplace(key, std::move(r));
    }
  }
  rep.extra["predictive"] = predictive;
  return rep;
}

ExperimentReport run_robustness(const Json& config) {
  require(config.at("model").at("type") == "ising",
          "robustness experiment needs the ising model");
  ExperimentReport rep;
  rep.config = config;
  write_config(config);
  const auto model = make_model(config.at("model"));
  const Dataset clean = make_data(config, *model);
  const std::size_t n = clean.size();
  const std::size_t d = clean.dim();

  // One random order of the data; the first round(eps n) entries of it are
  // replaced by the all-ones point, so contamination sets are nested.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(master_seed(config), kContaminationStream));
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  Json shifts = Json::object();
  std::map<std::string, Vector> baseline;
  for (const auto& e : config.at("contamination").at("epsilons")) {
    const double eps = e.get<double>();
    const auto k = static_cast<std::size_t>(std::llround(eps * static_cast<double>(n)));
    std::vector<Point> pts = clean.points();
    for (std::size_t i = 0; i < k; ++i) pts[order[i]] = Point(d, 1);
    const Problem pr = make_problem(model, Dataset(clean.domain(), std::move(pts)));
    char tag[32];
    std::snprintf(tag, sizeof tag, "eps_%g", eps);
    if (writes_output(config)) write_data(out_dir(config) / tag, *pr.data, config, "data");
    for (const auto& l : config.at("losses")) {
      InferenceResult r = run_inference(pr, l, config);
      if (writes_output(config)) write_inference(out_dir(config) / tag / r.loss, r, config);
      if (!baseline.contains(r.loss)) baseline[r.loss] = r.summary.mean;
      Json entry;
      entry["epsilon"] = eps;
      entry["contaminated"] = k;
      entry["mean"] = to_json(r.summary.mean);
      entry["shift"] = (r.summary.mean - baseline[r.loss]).norm();
      shifts[r.loss].push_back(entry);
      rep.runs.emplace(std::string(tag) + "/" + r.loss, std::move(r));
    }
  }
  rep.extra = provenance(config);
  rep.extra["shifts"] = shifts;
  if (writes_output(config)) write_json(out_dir(config) / "robustness.json", rep.extra);
  return rep;
}

double log_log_slope(const std::vector<double>& n, const std::vector<double>& seconds) {
  if (n.size() != seconds.size() || n.size() < 2) {
    throw std::invalid_argument("slope needs at least two aligned points");
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    mx += std::log(n[i]);
    my += std::log(seconds[i]);
  }
  mx /= static_cast<double>(n.size());
  my /= static_cast<double>(n.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double dx = std::log(n[i]) - mx;
    sxy += dx * (std::log(seconds[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ExperimentReport run_cost_benchmark(const Json& config) {
  require(config.at("model").at("type") == "ising", "cost benchmark uses the ising model");
  ExperimentReport rep;
  rep.config = config;
  write_config(config);
  const auto model = make_model(config.at("model"));
  const Json& cost = config.at("cost");
  const double min_seconds = cost.at("min_seconds").get<double>();
  const auto repeats = cost.at("repeats").get<std::size_t>();
  const Vector theta = theta_from(config.at("data").at("theta"), 1, "data");

  std::vector<double> ns;
  for (const auto& v : cost.at("n")) ns.push_back(v.get<double>());
  const auto largest = static_cast<std::size_t>(*std::max_element(ns.begin(), ns.end()));
  // Nested subsets of one simulated sample, so sizes differ only in n.
  const Dataset pool = simulate_for(config, *model, largest,
                                    derive_seed(master_seed(config), kDataStream));

  Json seconds = Json::object();
  Json slopes = Json::object();
  Json timings = Json::array();
  for (const auto& l : config.at("losses")) {
    const std::string type = l.at("type").get<std::string>();
    require(type == "dfd" || type == "ksd", "cost benchmark times dfd and ksd only");
    const std::string label = loss_label(l);
    std::vector<double> secs;
    for (double nv : ns) {
      const auto n = static_cast<std::size_t>(nv);
      const Dataset data(pool.domain(),
                         std::vector<Point>(pool.points().begin(),
                                            pool.points().begin() + static_cast<long>(n)));
      std::unique_ptr<LossFunction> loss;
      if (type == "dfd") {
        loss = std::make_unique<DfdLoss>(model, data, Aggregation::Never,
                                         DfdLoss::Strategy::Direct);
      } else {
        loss = std::make_unique<KsdLoss>(model, DiscreteKernel(), data, Aggregation::Never,
                                         KsdLoss::Strategy::Direct);
      }
      std::vector<double> reps;
      for (std::size_t r = 0; r < repeats; ++r) {
        reps.push_back(seconds_per_eval(*loss, theta, min_seconds));
      }
      std::sort(reps.begin(), reps.end());
      const double t = reps[reps.size() / 2];
      secs.push_back(t);
      timings.push_back(Json{{"loss", label},
                             {"n", n},
                             {"d", data.dim()},
                             {"seconds_per_loss_eval", t}});
    }
    seconds[label] = secs;
    slopes[label] = log_log_slope(ns, secs);
  }
  rep.extra = provenance(config);
  rep.extra["d"] = model->dim_x();
  rep.extra["n"] = ns;
  rep.extra["seconds_per_loss_eval"] = seconds;
  rep.extra["slope"] = slopes;
  if (writes_output(config)) {
    write_json(out_dir(config) / "cost.json", rep.extra);
    write_json(out_dir(config) / "timing.json", timings);
  }
  return rep;
}

ExperimentReport run_experiment(const std::string& name, const Json& config) {
  if (name == "cmp") return run_cmp(config);
  if (name == "ising") return run_ising(config);
  if (name == "pgm") return run_pgm(config);
  if (name == "robustness") return run_robustness(config);
  if (name == "cost") return run_cost_benchmark(config);
  throw ConfigError("unknown experiment \"" + name + "\"");
}

}  // namespace dfdb
