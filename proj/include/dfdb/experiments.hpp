#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dfdb/calibration.hpp"
#include "dfdb/io.hpp"
#include "dfdb/models.hpp"
#include "dfdb/posterior.hpp"
#include "dfdb/samplers.hpp"
#include "dfdb/simulate.hpp"

namespace dfdb {

/// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full default configuration of cmp, ising, pgm, robustness or cost.
Json default_config(const std::string& experiment);
/// Defaults of `experiment` patched with `user` (RFC 7396 merge), validated.
Json resolve_config(const std::string& experiment, const Json& user);
/// FNV-1a of the config with "output" and "threads" removed, as 16 hex digits.
std::string config_hash(const Json& config);

/// Stream identifiers below the master seed.
enum Stream : std::uint64_t {
  kDataStream = 1,
  kContaminationStream = 2,
  kBootstrapStream = 3,
  kChainStream = 4,
  kPredictiveStream = 5,
};

/// Model, data, prior, transform and starting point of one inference problem.
struct Problem {
  std::shared_ptr<const DiscreteModel> model;
  std::shared_ptr<const Dataset> data;
  Prior prior;
  ParamTransform transform;
  Vector init_z;
};

std::shared_ptr<const DiscreteModel> make_model(const Json& model_spec);
/// Default prior, transform and start for the model.
Problem make_problem(std::shared_ptr<const DiscreteModel> model, Dataset data);
/// Simulated or ingested data for the configured model.
Dataset make_data(const Json& config, const DiscreteModel& model);
LossFactory make_loss_factory(const Json& loss_spec,
                              std::shared_ptr<const DiscreteModel> model);
/// Display name of a loss spec, e.g. "dfd" or "ksd-weighted".
std::string loss_label(const Json& loss_spec);

struct PosteriorSummary {
  Vector mean;
  Vector sd;
  Vector lower;  ///< 2.5% empirical quantile
  Vector upper;  ///< 97.5% empirical quantile
  Vector rhat;
  std::vector<double> acceptance;
};

PosteriorSummary summarise(const std::vector<Chain>& chains);
/// Type-7 empirical quantile.
double quantile(std::vector<double> values, double q);

struct InferenceResult {
  std::string loss;
  double beta = 0.0;
  std::optional<CalibrationResult> calibration;
  std::vector<Chain> chains;
  PosteriorSummary summary;
  std::size_t n = 0;
  std::size_t d = 0;
  double seconds_per_loss_eval = 0.0;
};

/// Calibration (when beta is "auto"), then `chains` parallel chains.
InferenceResult run_inference(const Problem& problem, const Json& loss_spec,
                              const Json& config);

/// chains.csv, chains.json, summary.json, timing.json and calibration.json.
void write_inference(const std::filesystem::path& dir, const InferenceResult& result,
                     const Json& config);

struct ExperimentReport {
  Json config;
  std::map<std::string, InferenceResult> runs;
  Json extra;  ///< experiment-specific results (robustness shifts, cost fits)
};

/// Runs an experiment; writes outputs under config["output"] when it is a
/// nonempty string.
ExperimentReport run_experiment(const std::string& name, const Json& config);
ExperimentReport run_cmp(const Json& config);
ExperimentReport run_ising(const Json& config);
ExperimentReport run_pgm(const Json& config);
ExperimentReport run_robustness(const Json& config);
ExperimentReport run_cost_benchmark(const Json& config);

/// Least-squares slope of log(seconds) against log(n).
double log_log_slope(const std::vector<double>& n, const std::vector<double>& seconds);

}  // namespace dfdb
