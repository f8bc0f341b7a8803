// Command-line front end: seeded lpEKI campaigns, figure data, problem files.
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "lpeki/darcy.h"
#include "lpeki/errors.h"
#include "lpeki/experiment.h"
#include "lpeki/io.h"

namespace {

std::string default_output_dir() {
  const char* env = std::getenv("EKI_OUTPUT_DIR");
  return env && *env ? env : "out";
}

template <typename T>
void add_override(lpeki::json& overrides, const char* key, const std::optional<T>& value) {
  if (value) overrides[key] = *value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lp-regularized ensemble Kalman inversion experiments"};
  app.require_subcommand(1);

  // eki run
  auto* run = app.add_subcommand("run", "Run a seeded multi-trial campaign");
  std::optional<std::string> experiment, config_file, estimate_mode, problem_file, out;
  std::optional<double> p, lambda, init_mean, init_var;
  std::optional<int> trials, jobs, ensemble_size, max_iters, mesh_n;
  std::optional<std::uint64_t> seed, problem_seed;
  std::optional<bool> vary_problem, baseline;
  run->add_option("--experiment", experiment, "scalar | cs-large | cs-small | darcy | fig1");
  run->add_option("--config", config_file, "JSON configuration file")->check(CLI::ExistingFile);
  run->add_option("--p", p, "Exponent of the lp penalty, 0 < p <= 2");
  run->add_option("--lambda", lambda, "Regularization coefficient");
  run->add_option("--trials", trials, "Number of independent trials");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--jobs", jobs, "Trials run concurrently");
  run->add_option("--out", out, "Output directory (default $EKI_OUTPUT_DIR or ./out)");
  run->add_option("--ensemble-size", ensemble_size);
  run->add_option("--max-iters", max_iters);
  run->add_option("--problem-seed", problem_seed);
  run->add_option("--vary-problem", vary_problem);
  run->add_option("--mesh-n", mesh_n);
  run->add_option("--init-mean", init_mean);
  run->add_option("--init-var", init_var);
  run->add_option("--estimate-mode", estimate_mode, "transform_of_mean | mean_of_transforms");
  run->add_option("--problem-file", problem_file, "Replay a dumped problem instance");
  run->add_option("--baseline", baseline, "Also run the ISTA l1 baseline (cs only)");

  // eki fig1
  auto* fig1 = app.add_subcommand("fig1", "Dump the xi / gl transform comparison as CSV");
  std::string fig1_out = default_output_dir();
  double fig1_p = 1.0;
  fig1->add_option("--out", fig1_out, "Output directory");
  fig1->add_option("--p", fig1_p, "Exponent used for xi");

  // eki problem dump|load
  auto* problem = app.add_subcommand("problem", "Serialize problem instances");
  problem->require_subcommand(1);
  auto* dump = problem->add_subcommand("dump", "Generate an instance and write it as JSON");
  std::string dump_file, dump_kind = "cs";
  std::uint64_t dump_seed = 1;
  int dump_mesh = 60;
  dump->add_option("file", dump_file, "Output JSON file")->required();
  dump->add_option("--experiment", dump_kind, "cs | darcy")
      ->check(CLI::IsMember({"cs", "cs-large", "cs-small", "darcy"}));
  dump->add_option("--seed", dump_seed, "Problem seed");
  dump->add_option("--mesh-n", dump_mesh, "Darcy mesh resolution");
  auto* load = problem->add_subcommand("load", "Read an instance and print a summary");
  std::string load_file;
  load->add_option("file", load_file, "Problem JSON file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      lpeki::json overrides = lpeki::json::object();
      add_override(overrides, "experiment", experiment);
      add_override(overrides, "p", p);
      add_override(overrides, "lambda", lambda);
      add_override(overrides, "trials", trials);
      add_override(overrides, "master_seed", seed);
      add_override(overrides, "jobs", jobs);
      add_override(overrides, "ensemble_size", ensemble_size);
      add_override(overrides, "max_iters", max_iters);
      add_override(overrides, "problem_seed", problem_seed);
      add_override(overrides, "vary_problem", vary_problem);
      add_override(overrides, "mesh_n", mesh_n);
      add_override(overrides, "init_mean", init_mean);
      add_override(overrides, "init_var", init_var);
      add_override(overrides, "estimate_mode", estimate_mode);
      add_override(overrides, "problem_file", problem_file);
      add_override(overrides, "baseline", baseline);
      add_override(overrides, "output_dir", out);
      std::optional<std::filesystem::path> file;
      if (config_file) file = *config_file;
      lpeki::ExperimentConfig config = lpeki::parse_config(file, overrides);
      if (!out && !(file && lpeki::load_json(*file).contains("output_dir"))) {
        config.output_dir = default_output_dir();
      }
      return lpeki::run_experiment(config);
    }
    if (fig1->parsed()) {
      lpeki::ExperimentConfig config = lpeki::parse_config(
          std::nullopt, {{"experiment", "fig1"}, {"p", fig1_p}, {"output_dir", fig1_out}});
      return lpeki::run_experiment(config);
    }
    if (dump->parsed()) {
      if (dump_kind == "darcy") {
        lpeki::DarcyOptions options;
        options.mesh_n = dump_mesh;
        lpeki::save_json(dump_file, lpeki::problem_to_json(lpeki::darcy_generate(dump_seed, options)));
      } else {
        lpeki::save_json(dump_file, lpeki::problem_to_json(lpeki::cs_generate(dump_seed)));
      }
      std::cout << "wrote " << dump_file << '\n';
      return 0;
    }
    if (load->parsed()) {
      const lpeki::json doc = lpeki::load_json(load_file);
      const std::string kind = doc.value("kind", std::string{});
      Eigen::VectorXd u, y;
      std::shared_ptr<const lpeki::ForwardModel> model;
      if (kind == "darcy") {
        const lpeki::DarcyProblem d = lpeki::darcy_problem_from_json(doc);
        u = d.u_true;
        y = d.y;
        model = d.model();
      } else {
        const lpeki::CsProblem c = lpeki::cs_problem_from_json(doc);
        u = c.u_true;
        y = c.y;
        model = c.model();
      }
      const long nnz = static_cast<long>((u.array() != 0.0).count());
      std::cout << "kind=" << kind << " seed=" << doc.at("seed").get<std::uint64_t>()
                << " state_dim=" << model->state_dim() << " obs_dim=" << model->obs_dim()
                << " nonzeros=" << nnz
                << " noise_norm=" << (y - model->evaluate(u)).norm() << '\n';
      return 0;
    }
  } catch (const lpeki::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
