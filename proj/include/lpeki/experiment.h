#ifndef LPEKI_EXPERIMENT_H_
#define LPEKI_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lpeki/io.h"
#include "lpeki/metrics.h"
#include "lpeki/solver.h"

namespace lpeki {

/// Declarative campaign description. Every field is populated after
/// parse_config; to_json/from_json round-trip it losslessly.
struct ExperimentConfig {
  std::string experiment;  // scalar | cs-large | cs-small | darcy | fig1
  double p = 1.0;
  double lambda = 0.5;
  int ensemble_size = 50;
  int max_iters = 50;
  int trials = 100;
  std::uint64_t master_seed = 1;
  /// Seed of the problem instance (cs, darcy).
  std::uint64_t problem_seed = 1;
  /// Draw a fresh problem instance per trial from (problem_seed, trial).
  bool vary_problem = false;
  std::optional<BatchConfig> batch;
  double init_mean = 0.0;
  double init_var = 0.1;
  bool perturb_obs = true;
  double stop_tol = 0.0;
  int mesh_n = 60;
  EstimateMode estimate_mode = EstimateMode::kTransformOfMean;
  std::string output_dir = "out";
  int jobs = 1;
  /// cs only: also run the ISTA l1 baseline.
  bool baseline = false;
  /// Replay a dumped problem instance instead of generating one.
  std::string problem_file;
};

json to_json(const ExperimentConfig& config);
/// Strict: unknown keys and out-of-range values raise ConfigError.
ExperimentConfig config_from_json(const json& j);

/// Default preset for an experiment name, as a JSON document.
json preset(const std::string& experiment);

/// Default regularization coefficient of an experiment at exponent p.
double preset_lambda(const std::string& experiment, double p);

/// defaults(experiment) <- file <- overrides; the experiment name may come
/// from either layer. Missing lambda is filled from preset_lambda.
ExperimentConfig parse_config(const std::optional<std::filesystem::path>& file,
                              const json& overrides = json::object());

/// Global minimizer of (lambda/2)|u|^p + 1/2 (y - u)^2 (grid then golden section).
double scalar_minimizer(double p, double lambda = 0.5, double y = 1.0);

struct BaselineResult {
  double lambda = 0.0;
  double mean_l1 = 0.0;
  double mean_misfit = 0.0;
  Eigen::VectorXd estimate;  // of the first trial's problem
};

struct CampaignResult {
  std::vector<RunTrace> traces;
  /// Reference solution of every trial (u_true, or the scalar minimizer).
  std::vector<Eigen::VectorXd> truths;
  TrialSummary summary;
  std::optional<BaselineResult> baseline;
  /// Trials that failed, with their message; their partial traces are kept.
  std::vector<std::pair<int, std::string>> failures;
};

/// Runs every trial in memory. Trial i draws its ensemble from
/// derive_seed(master_seed, i), so results do not depend on `jobs`.
CampaignResult run_campaign(const ExperimentConfig& config);

/// Writes config.json, summary.json, curves.csv, estimate.csv and
/// traces/trial_NNNN.{csv,json} under `dir`.
void write_campaign(const CampaignResult& result, const ExperimentConfig& config,
                    const std::filesystem::path& dir);

/// run_campaign + write_campaign; returns a process exit status.
int run_experiment(const ExperimentConfig& config);

/// v, xi(v), gl(v) on [-3, 3] with `samples` points.
std::string fig1_csv(double p = 1.0, int samples = 601);

/// lambda from `grid` minimizing the ISTA l1 error on a held-out instance.
double select_ista_lambda(const std::vector<double>& grid, std::uint64_t held_out_seed,
                          int iters = 2000);

}  // namespace lpeki

#endif  // LPEKI_EXPERIMENT_H_
