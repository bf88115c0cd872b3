#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dfdb/experiments.hpp"

namespace fs = std::filesystem;
using dfdb::Json;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> beta;
  std::optional<std::size_t> threads;
};

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dfdb::ConfigError("cannot open config " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw dfdb::ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

Json apply(Json user, const Overrides& o) {
  if (user.is_null()) user = Json::object();
  if (o.seed) user["seed"] = *o.seed;
  if (o.out) user["output"] = *o.out;
  if (o.threads) user["threads"] = *o.threads;
  if (o.beta) {
    if (*o.beta == "auto") {
      user["beta"] = "auto";
    } else {
      try {
        std::size_t used = 0;
        const double b = std::stod(*o.beta, &used);
        if (used != o.beta->size()) throw std::invalid_argument("trailing characters");
        user["beta"] = b;
      } catch (const std::exception&) {
        throw dfdb::ConfigError("--beta must be a number or \"auto\"");
      }
    }
  }
  return user;
}

/// Config from --config, with the experiment named inside it.
Json load(const Overrides& o) {
  if (o.config_path.empty()) throw dfdb::ConfigError("--config is required");
  Json user = apply(read_json_file(o.config_path), o);
  if (!user.contains("experiment") || !user.at("experiment").is_string()) {
    throw dfdb::ConfigError("config must name its experiment");
  }
  return dfdb::resolve_config(user.at("experiment").get<std::string>(), user);
}

fs::path require_out(const Json& c) {
  const std::string out = c.at("output").get<std::string>();
  if (out.empty()) throw dfdb::ConfigError("an output directory is required (--out)");
  return out;
}

Json model_spec(const Json& c) {
  Json m = c.at("model");
  if (c.contains("fit")) m["type"] = c.at("fit").at(0);
  return m;
}

int cmd_simulate(const Overrides& o) {
  const Json c = load(o);
  const fs::path out = require_out(c);
  const auto model = dfdb::make_model(model_spec(c));
  const dfdb::Dataset data = dfdb::make_data(c, *model);
  std::ostringstream s;
  dfdb::write_dataset_csv(s, data);
  dfdb::write_text(out / "data.csv", s.str());
  dfdb::write_json(out / "data.json", Json{{"seed", c.at("seed")},
                                           {"config_hash", dfdb::config_hash(c)},
                                           {"n", data.size()},
                                           {"d", data.dim()}});
  std::cout << "wrote " << data.size() << " observations to " << (out / "data.csv") << '\n';
  return 0;
}

int cmd_calibrate(const Overrides& o) {
  Json c = load(o);
  const auto model = dfdb::make_model(model_spec(c));
  const dfdb::Problem pr = dfdb::make_problem(model, dfdb::make_data(c, *model));
  const Json& b = c.at("bootstrap");
  dfdb::BootstrapConfig bc;
  bc.B = b.at("B").get<std::size_t>();
  bc.optimiser.max_iters = b.at("max_iters").get<std::size_t>();
  bc.optimiser.grad_tol = b.at("grad_tol").get<double>();
  bc.seed = dfdb::derive_seed(c.at("seed").get<std::uint64_t>(), dfdb::kBootstrapStream);
  bc.threads = c.at("threads").get<std::size_t>();
  const std::string out = c.at("output").get<std::string>();
  for (const auto& l : c.at("losses")) {
    if (l.at("type") == "standard-bayes-cmp") continue;
    const auto result = dfdb::calibrate(dfdb::make_loss_factory(l, model), *pr.data,
                                        pr.prior, pr.transform, pr.init_z, bc);
    const std::string label = dfdb::loss_label(l);
    std::cout << label << ": beta* = " << result.beta_star << " ("
              << result.non_converged() << " of " << result.B
              << " minimisers did not converge)\n";
    if (!out.empty()) {
      Json j = dfdb::to_json(result);
      j["seed"] = c.at("seed");
      j["config_hash"] = dfdb::config_hash(c);
      dfdb::write_json(fs::path(out) / label / "calibration.json", j);
    }
  }
  return 0;
}

int cmd_sample(const Overrides& o) {
  const Json c = load(o);
  const auto model = dfdb::make_model(model_spec(c));
  const dfdb::Problem pr = dfdb::make_problem(model, dfdb::make_data(c, *model));
  const std::string out = c.at("output").get<std::string>();
  for (const auto& l : c.at("losses")) {
    const auto r = dfdb::run_inference(pr, l, c);
    std::cout << r.loss << ": beta = " << r.beta << ", posterior mean";
    for (Eigen::Index k = 0; k < r.summary.mean.size(); ++k) std::cout << ' ' << r.summary.mean[k];
    std::cout << '\n';
    if (!out.empty()) dfdb::write_inference(fs::path(out) / r.loss, r, c);
  }
  return 0;
}

int cmd_experiment(const std::string& name, const Overrides& o) {
  Json user = o.config_path.empty() ? Json::object() : read_json_file(o.config_path);
  const Json c = dfdb::resolve_config(name, apply(std::move(user), o));
  const auto rep = dfdb::run_experiment(name, c);
  for (const auto& [key, r] : rep.runs) {
    std::cout << key << ": beta = " << r.beta << ", mean";
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(r.summary.mean.size(), 6); ++k) {
      std::cout << ' ' << r.summary.mean[k];
    }
    if (r.summary.mean.size() > 6) std::cout << " ...";
    std::cout << '\n';
  }
  if (!rep.extra.is_null() && rep.extra.contains("slope")) {
    std::cout << "slopes: " << rep.extra.at("slope").dump() << '\n';
  }
  if (!rep.extra.is_null() && rep.extra.contains("shifts")) {
    std::cout << "shifts: " << rep.extra.at("shifts").dump() << '\n';
  }
  return 0;
}

int cmd_ingest_check(const std::string& path) {
  const dfdb::Dataset data = dfdb::ingest_counts(fs::path(path));
  std::cout << "n = " << data.size() << ", d = " << data.dim() << '\n';
  return 0;
}

void add_common(CLI::App* cmd, Overrides& o, bool with_beta) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  if (with_beta) cmd->add_option("--beta", o.beta, "loss weight or \"auto\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalised Bayesian inference for discrete models"};
  app.require_subcommand(1);
  Overrides o;

  auto* simulate = app.add_subcommand("simulate", "simulate the configured dataset");
  add_common(simulate, o, false);
  auto* calibrate = app.add_subcommand("calibrate", "bootstrap calibration of beta");
  add_common(calibrate, o, false);
  auto* sample = app.add_subcommand("sample", "sample the generalised posterior");
  add_common(sample, o, true);
  auto* experiment = app.add_subcommand("experiment", "run an experiment");
  std::string name;
  experiment->add_option("name", name, "cmp, ising, pgm, robustness or cost")
      ->required()
      ->check(CLI::IsMember({"cmp", "ising", "pgm", "robustness", "cost"}));
  add_common(experiment, o, true);
  auto* ingest = app.add_subcommand("ingest-check", "parse a count data file");
  std::string path;
  ingest->add_option("path", path, "CSV file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*calibrate) return cmd_calibrate(o);
    if (*sample) return cmd_sample(o);
    if (*experiment) return cmd_experiment(name, o);
    if (*ingest) return cmd_ingest_check(path);
  } catch (const dfdb::CalibrationError& e) {
    std::cerr << "calibration failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
