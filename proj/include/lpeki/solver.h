#ifndef LPEKI_SOLVER_H_
#define LPEKI_SOLVER_H_

#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lpeki/ensemble.h"
#include "lpeki/errors.h"
#include "lpeki/forward_model.h"
#include "lpeki/random.h"
#include "lpeki/transforms.h"

namespace lpeki {

/// Tikhonov-augmented inverse problem in transformed coordinates:
///   z = (y, 0),  F(v) = (G(Xi(v)), v),  Sigma = diag(Gamma, I / lambda).
///
/// The problem can be restricted to a subset of the model's state indices
/// (the "active set"); inactive components of u are held at exactly zero and
/// the identity block of F only covers active components.
class AugmentedProblem {
 public:
  AugmentedProblem(std::shared_ptr<const ForwardModel> model, Vec y, PExponent p, double lambda);

  const ForwardModel& model() const { return *model_; }
  std::shared_ptr<const ForwardModel> model_ptr() const { return model_; }
  const Vec& y() const { return y_; }
  const PExponent& p() const { return p_; }
  double lambda() const { return lambda_; }

  /// Indices into the model's state vector, ascending.
  const std::vector<Eigen::Index>& active() const { return active_; }
  Eigen::Index active_dim() const { return static_cast<Eigen::Index>(active_.size()); }
  Eigen::Index full_dim() const { return model_->state_dim(); }
  Eigen::Index aug_dim() const { return obs_.dim(); }

  const Vec& z() const { return obs_.y(); }
  const Mat& sigma() const { return obs_.noise_cov(); }
  const ObservationSpec& augmented_obs() const { return obs_; }

  /// Scatters active-space u into a full state vector (zeros elsewhere).
  Vec embed(const Vec& u_active) const;
  /// Full-space u for an active-space v, i.e. embed(Xi(v)).
  Vec to_state(const Vec& v_active) const;
  /// F(v) = (G(Xi(v)), v).
  Vec forward(const Vec& v_active) const;
  /// 1/2 ||z - F(v)||^2_Sigma, evaluated through the Cholesky factor of Sigma.
  double augmented_objective(const Vec& v_active) const;

  /// Keeps the listed positions (indices into active()) and drops the rest.
  AugmentedProblem restrict(const std::vector<Eigen::Index>& keep_positions) const;

 private:
  AugmentedProblem(std::shared_ptr<const ForwardModel> model, Vec y, PExponent p, double lambda,
                   std::vector<Eigen::Index> active);
  static ObservationSpec make_obs(const ForwardModel& model, const Vec& y, double lambda,
                                  Eigen::Index n_active);

  std::shared_ptr<const ForwardModel> model_;
  Vec y_;
  PExponent p_;
  double lambda_;
  std::vector<Eigen::Index> active_;
  ObservationSpec obs_;
};

AugmentedProblem build_augmented(std::shared_ptr<const ForwardModel> model, Vec y, double p,
                                 double lambda);

enum class EstimateMode { kTransformOfMean, kMeanOfTransforms };

std::string to_string(EstimateMode mode);
EstimateMode estimate_mode_from_string(const std::string& name);

struct SolverConfig {
  int ensemble_size = 50;
  int max_iters = 50;
  /// v-space initial mean: empty means zero, one entry is broadcast, otherwise
  /// a full state-dimension vector (restricted to the active set when used).
  Vec init_mean;
  double init_var = 0.1;
  bool perturb_obs = true;
  /// Relative change of the v-space mean below which a run stops; <= 0 disables.
  double stop_tol = 1e-8;
  EstimateMode estimate_mode = EstimateMode::kTransformOfMean;
  /// Threads used for forward evaluations within one step.
  int eval_threads = 1;

  void validate() const;
};

/// K draws from N(init_mean, init_var I) over the problem's active components.
Ensemble init_ensemble(const SolverConfig& config, const AugmentedProblem& aug, Rng& rng);
/// Same over `dim` components (init_mean must be empty, scalar or dim-sized).
Ensemble init_ensemble(const SolverConfig& config, Eigen::Index dim, Rng& rng);

struct StepDiagnostics {
  Vec mean_before;       // v-space mean entering the step
  Vec mean_after;
  double spread = 0.0;   // sqrt of the trace of the state covariance entering the step
};

struct StepResult {
  Ensemble ensemble;
  StepDiagnostics diagnostics;
};

/// One predict/analyse cycle: F on every member, sample statistics,
/// perturbed augmented observations (K draws of aug_dim normals, member by
/// member) and the Kalman update.
StepResult lp_eki_step(const AugmentedProblem& aug, const Ensemble& ensemble, Rng& rng,
                       bool perturb_obs = true, int eval_threads = 1);

/// Active-space u estimate: Xi(mean v) or mean of Xi(v_k).
Vec extract_estimate(const Ensemble& ensemble, const PExponent& p, EstimateMode mode);

struct IterationRecord {
  int iter = 0;
  Vec estimate;  // full state dimension
  double l1_error = 0.0;  // NaN without a reference truth
  double data_misfit = 0.0;
  Eigen::Index n_active = 0;
  double spread = 0.0;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  /// Active state indices at the end of the run.
  std::vector<Eigen::Index> support;

  const IterationRecord& final() const { return records.back(); }
};

/// A run stopped by an error; partial() holds every record made before it
/// and cause() the original exception (OverflowError, DegenerateProblem, ...).
class RunAborted : public Error {
 public:
  RunAborted(const std::string& what, RunTrace partial, std::exception_ptr cause)
      : Error(what), partial_(std::move(partial)), cause_(std::move(cause)) {}
  const RunTrace& partial() const { return partial_; }
  std::exception_ptr cause() const { return cause_; }

 private:
  RunTrace partial_;
  std::exception_ptr cause_;
};

RunTrace run_lp_eki(const AugmentedProblem& aug, const SolverConfig& config,
                    const std::optional<Vec>& truth, Rng& rng);

enum class ThresholdSchedule {
  kBatchBoundary,  // once at the end of every batch except the last
  kEveryIteration  // after every iteration past threshold_start
};
enum class ReinitPolicy { kRedraw, kCarryOver };

std::string to_string(ThresholdSchedule schedule);
std::string to_string(ReinitPolicy policy);
ThresholdSchedule threshold_schedule_from_string(const std::string& name);
ReinitPolicy reinit_policy_from_string(const std::string& name);

struct BatchConfig {
  int n_batches = 1;
  int iters_per_batch = 10;
  /// u-space magnitude below which components are removed; 0 removes nothing.
  double threshold = 0.0;
  ThresholdSchedule schedule = ThresholdSchedule::kBatchBoundary;
  /// With kEveryIteration, thresholding starts after this many iterations.
  int threshold_start = 0;
  ReinitPolicy reinit = ReinitPolicy::kRedraw;

  int total_iters() const { return n_batches * iters_per_batch; }
  void validate() const;
};

/// Multiple-batch driver: runs the solver on a shrinking active set.
/// config.max_iters is ignored in favour of the batch budget.
RunTrace run_multibatch(const AugmentedProblem& aug, const SolverConfig& config,
                        const BatchConfig& batch, const std::optional<Vec>& truth, Rng& rng);

}  // namespace lpeki

#endif  // LPEKI_SOLVER_H_
