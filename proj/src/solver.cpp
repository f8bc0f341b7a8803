#include "lpeki/solver.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "lpeki/metrics.h"
#include "lpeki/parallel.h"

namespace lpeki {

namespace {

std::vector<Eigen::Index> all_indices(Eigen::Index n) {
  std::vector<Eigen::Index> out(static_cast<std::size_t>(n));
  std::iota(out.begin(), out.end(), Eigen::Index{0});
  return out;
}

Vec resolve_init_mean(const SolverConfig& config, const std::vector<Eigen::Index>& active,
                      Eigen::Index full_dim) {
  const auto n = static_cast<Eigen::Index>(active.size());
  const Vec& mean = config.init_mean;
  if (mean.size() == 0) return Vec::Zero(n);
  if (mean.size() == 1) return Vec::Constant(n, mean(0));
  if (mean.size() != full_dim) {
    throw InvalidInput("init_mean must be empty, scalar or of the state dimension");
  }
  Vec out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = mean(active[static_cast<std::size_t>(i)]);
  return out;
}

Ensemble draw_ensemble(const Vec& mean, double var, int size, Rng& rng) {
  if (size < 1) throw InvalidInput("init_ensemble: ensemble_size must be positive");
  if (var < 0.0) throw InvalidInput("init_ensemble: negative init_var");
  const double sd = std::sqrt(var);
  Mat members(mean.size(), size);
  for (int k = 0; k < size; ++k) {
    for (Eigen::Index i = 0; i < mean.size(); ++i) members(i, k) = mean(i) + sd * rng.normal();
  }
  return Ensemble(std::move(members));
}

double relative_change(const Vec& before, const Vec& after) {
  const double scale = before.norm();
  const double diff = (after - before).norm();
  if (scale == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / scale;
}

// Shared bookkeeping of run_lp_eki and run_multibatch.
class TraceRecorder {
 public:
  TraceRecorder(const SolverConfig& config, const std::optional<Vec>& truth)
      : config_(config), truth_(truth) {}

  void record(const AugmentedProblem& aug, const Ensemble& ensemble, int iter, double spread) {
    IterationRecord rec;
    rec.iter = iter;
    rec.estimate = aug.embed(extract_estimate(ensemble, aug.p(), config_.estimate_mode));
    rec.l1_error = truth_ ? l1_error(rec.estimate, *truth_) : std::numeric_limits<double>::quiet_NaN();
    rec.data_misfit = data_misfit(rec.estimate, aug.model(), aug.y());
    rec.n_active = aug.active_dim();
    rec.spread = spread;
    trace_.records.push_back(std::move(rec));
  }

  [[noreturn]] void abort(int iter, const std::exception_ptr& cause) {
    std::ostringstream msg;
    msg << "run aborted at iteration " << iter;
    try {
      std::rethrow_exception(cause);
    } catch (const std::exception& e) {
      msg << ": " << e.what();
    }
    throw RunAborted(msg.str(), trace_, cause);
  }

  RunTrace finish(const AugmentedProblem& aug) {
    trace_.support = aug.active();
    return std::move(trace_);
  }

 private:
  const SolverConfig& config_;
  const std::optional<Vec>& truth_;
  RunTrace trace_;
};

double ensemble_spread(const Ensemble& ensemble) {
  const Mat dev = ensemble.members().colwise() - sample_mean(ensemble);
  return std::sqrt(dev.squaredNorm() / static_cast<double>(ensemble.size()));
}

}  // namespace

AugmentedProblem::AugmentedProblem(std::shared_ptr<const ForwardModel> model, Vec y, PExponent p,
                                   double lambda)
    : AugmentedProblem(model, std::move(y), p, lambda,
                       all_indices(model ? model->state_dim() : 0)) {}

AugmentedProblem::AugmentedProblem(std::shared_ptr<const ForwardModel> model, Vec y, PExponent p,
                                   double lambda, std::vector<Eigen::Index> active)
    : model_(std::move(model)),
      y_(std::move(y)),
      p_(p),
      lambda_(lambda),
      active_(std::move(active)),
      obs_((model_ ? make_obs(*model_, y_, lambda_, static_cast<Eigen::Index>(active_.size()))
                   : throw InvalidInput("AugmentedProblem: null forward model"))) {}

ObservationSpec AugmentedProblem::make_obs(const ForwardModel& model, const Vec& y, double lambda,
                                           Eigen::Index n_active) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InvalidInput("AugmentedProblem: lambda must be positive and finite");
  }
  const Eigen::Index m = model.obs_dim();
  if (y.size() != m) {
    throw InvalidInput("AugmentedProblem: y has dimension " + std::to_string(y.size()) +
                       ", model expects " + std::to_string(m));
  }
  Vec z = Vec::Zero(m + n_active);
  z.head(m) = y;
  Mat sigma = Mat::Zero(m + n_active, m + n_active);
  sigma.topLeftCorner(m, m) = model.noise_cov();
  sigma.bottomRightCorner(n_active, n_active).diagonal().setConstant(1.0 / lambda);
  return ObservationSpec(std::move(z), std::move(sigma));
}

Vec AugmentedProblem::embed(const Vec& u_active) const {
  if (u_active.size() != active_dim()) {
    throw InvalidInput("embed: expected " + std::to_string(active_dim()) + " components");
  }
  Vec full = Vec::Zero(full_dim());
  for (std::size_t i = 0; i < active_.size(); ++i) {
    full(active_[i]) = u_active(static_cast<Eigen::Index>(i));
  }
  return full;
}

Vec AugmentedProblem::to_state(const Vec& v_active) const { return embed(xi_vec(v_active, p_)); }

Vec AugmentedProblem::forward(const Vec& v_active) const {
  const Eigen::Index m = model_->obs_dim();
  Vec out(m + active_dim());
  out.head(m) = model_->evaluate(to_state(v_active));
  out.tail(active_dim()) = v_active;
  return out;
}

double AugmentedProblem::augmented_objective(const Vec& v_active) const {
  const Vec residual = z() - forward(v_active);
  const Vec whitened = obs_.noise_factor().triangularView<Eigen::Lower>().solve(residual);
  return 0.5 * whitened.squaredNorm();
}

AugmentedProblem AugmentedProblem::restrict(const std::vector<Eigen::Index>& keep_positions) const {
  std::vector<Eigen::Index> next;
  next.reserve(keep_positions.size());
  for (Eigen::Index pos : keep_positions) {
    if (pos < 0 || pos >= active_dim()) throw InvalidInput("restrict: position out of range");
    if (!next.empty() && active_[static_cast<std::size_t>(pos)] <= next.back()) {
      throw InvalidInput("restrict: positions must be strictly increasing");
    }
    next.push_back(active_[static_cast<std::size_t>(pos)]);
  }
  return AugmentedProblem(model_, y_, p_, lambda_, std::move(next));
}

AugmentedProblem build_augmented(std::shared_ptr<const ForwardModel> model, Vec y, double p,
                                 double lambda) {
  return AugmentedProblem(std::move(model), std::move(y), PExponent(p), lambda);
}

std::string to_string(EstimateMode mode) {
  return mode == EstimateMode::kTransformOfMean ? "transform_of_mean" : "mean_of_transforms";
}

EstimateMode estimate_mode_from_string(const std::string& name) {
  if (name == "transform_of_mean") return EstimateMode::kTransformOfMean;
  if (name == "mean_of_transforms") return EstimateMode::kMeanOfTransforms;
  throw InvalidInput("unknown estimate mode '" + name + "'");
}

void SolverConfig::validate() const {
  if (ensemble_size < 2) throw InvalidInput("SolverConfig: ensemble_size must be at least 2");
  if (max_iters < 0) throw InvalidInput("SolverConfig: max_iters must be non-negative");
  if (!(init_var > 0.0)) throw InvalidInput("SolverConfig: init_var must be positive");
  if (eval_threads < 1) throw InvalidInput("SolverConfig: eval_threads must be positive");
  if (!init_mean.allFinite()) throw InvalidInput("SolverConfig: init_mean must be finite");
}

Ensemble init_ensemble(const SolverConfig& config, const AugmentedProblem& aug, Rng& rng) {
  return draw_ensemble(resolve_init_mean(config, aug.active(), aug.full_dim()), config.init_var,
                       config.ensemble_size, rng);
}

Ensemble init_ensemble(const SolverConfig& config, Eigen::Index dim, Rng& rng) {
  return draw_ensemble(resolve_init_mean(config, all_indices(dim), dim), config.init_var,
                       config.ensemble_size, rng);
}

StepResult lp_eki_step(const AugmentedProblem& aug, const Ensemble& ensemble, Rng& rng,
                       bool perturb_obs, int eval_threads) {
  if (ensemble.dim() != aug.active_dim()) {
    throw InvalidInput("lp_eki_step: ensemble dimension " + std::to_string(ensemble.dim()) +
                       " does not match the active dimension " +
                       std::to_string(aug.active_dim()));
  }
  const Eigen::Index size = ensemble.size();
  Mat preds(aug.aug_dim(), size);
  parallel_for(static_cast<long>(size), eval_threads, [&](long k) {
    preds.col(k) = aug.forward(ensemble.member(k));
  });
  const Ensemble pred_ensemble(std::move(preds));
  const SampleStats stats = sample_covariances(ensemble, pred_ensemble);

  Mat perturbed(aug.aug_dim(), size);
  for (Eigen::Index k = 0; k < size; ++k) {
    perturbed.col(k) = perturb_obs ? perturb_observation(aug.augmented_obs(), rng) : aug.z();
  }

  StepResult result{kalman_update(ensemble, pred_ensemble, stats, perturbed, aug.sigma()), {}};
  result.diagnostics.mean_before = stats.mean_state;
  result.diagnostics.mean_after = sample_mean(result.ensemble);
  result.diagnostics.spread = ensemble_spread(ensemble);
  return result;
}

Vec extract_estimate(const Ensemble& ensemble, const PExponent& p, EstimateMode mode) {
  if (mode == EstimateMode::kTransformOfMean) return xi_vec(sample_mean(ensemble), p);
  if (ensemble.empty()) throw InvalidInput("extract_estimate: empty ensemble");
  Vec sum = Vec::Zero(ensemble.dim());
  for (Eigen::Index k = 0; k < ensemble.size(); ++k) sum += xi_vec(ensemble.member(k), p);
  return sum / static_cast<double>(ensemble.size());
}

RunTrace run_lp_eki(const AugmentedProblem& aug, const SolverConfig& config,
                    const std::optional<Vec>& truth, Rng& rng) {
  config.validate();
  TraceRecorder recorder(config, truth);
  Ensemble ensemble = init_ensemble(config, aug, rng);
  try {
    recorder.record(aug, ensemble, 0, ensemble_spread(ensemble));
  } catch (const Error&) {
    recorder.abort(0, std::current_exception());
  }

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    StepDiagnostics diag;
    try {
      StepResult step = lp_eki_step(aug, ensemble, rng, config.perturb_obs, config.eval_threads);
      ensemble = std::move(step.ensemble);
      diag = std::move(step.diagnostics);
      recorder.record(aug, ensemble, iter, ensemble_spread(ensemble));
    } catch (const Error&) {
      recorder.abort(iter, std::current_exception());
    }
    if (config.stop_tol > 0.0 &&
        relative_change(diag.mean_before, diag.mean_after) < config.stop_tol) {
      break;
    }
  }
  return recorder.finish(aug);
}

std::string to_string(ThresholdSchedule schedule) {
  return schedule == ThresholdSchedule::kBatchBoundary ? "batch_boundary" : "every_iteration";
}

std::string to_string(ReinitPolicy policy) {
  return policy == ReinitPolicy::kRedraw ? "redraw" : "carry_over";
}

ThresholdSchedule threshold_schedule_from_string(const std::string& name) {
  if (name == "batch_boundary") return ThresholdSchedule::kBatchBoundary;
  if (name == "every_iteration") return ThresholdSchedule::kEveryIteration;
  throw InvalidInput("unknown threshold schedule '" + name + "'");
}

ReinitPolicy reinit_policy_from_string(const std::string& name) {
  if (name == "redraw") return ReinitPolicy::kRedraw;
  if (name == "carry_over") return ReinitPolicy::kCarryOver;
  throw InvalidInput("unknown reinit policy '" + name + "'");
}

void BatchConfig::validate() const {
  if (n_batches < 1) throw InvalidInput("BatchConfig: n_batches must be at least 1");
  if (iters_per_batch < 0) throw InvalidInput("BatchConfig: iters_per_batch must be non-negative");
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) {
    throw InvalidInput("BatchConfig: threshold must be finite and non-negative");
  }
  if (threshold_start < 0) throw InvalidInput("BatchConfig: threshold_start must be non-negative");
}

RunTrace run_multibatch(const AugmentedProblem& aug, const SolverConfig& config,
                        const BatchConfig& batch, const std::optional<Vec>& truth, Rng& rng) {
  config.validate();
  batch.validate();
  TraceRecorder recorder(config, truth);
  AugmentedProblem current = aug;
  Ensemble ensemble = init_ensemble(config, current, rng);
  int iter = 0;
  try {
    recorder.record(current, ensemble, 0, ensemble_spread(ensemble));
  } catch (const Error&) {
    recorder.abort(0, std::current_exception());
  }

  // Freezes components of the u-space estimate below the threshold at zero by
  // dropping them from the problem and the ensemble.
  auto apply_threshold = [&]() {
    const Vec estimate = extract_estimate(ensemble, current.p(), config.estimate_mode);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < estimate.size(); ++i) {
      if (!(std::fabs(estimate(i)) < batch.threshold)) keep.push_back(i);
    }
    if (keep.empty()) {
      throw DegenerateProblem("run_multibatch: every component fell below the threshold " +
                              std::to_string(batch.threshold));
    }
    if (static_cast<Eigen::Index>(keep.size()) == current.active_dim()) return;
    current = current.restrict(keep);
    Mat rows(static_cast<Eigen::Index>(keep.size()), ensemble.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
      rows.row(static_cast<Eigen::Index>(r)) = ensemble.members().row(keep[r]);
    }
    ensemble = Ensemble(std::move(rows));
  };

  for (int b = 0; b < batch.n_batches; ++b) {
    const bool last_batch = b + 1 == batch.n_batches;
    if (b > 0 && batch.reinit == ReinitPolicy::kRedraw) {
      ensemble = init_ensemble(config, current, rng);
    }
    for (int it = 1; it <= batch.iters_per_batch; ++it) {
      ++iter;
      StepDiagnostics diag;
      try {
        StepResult step = lp_eki_step(current, ensemble, rng, config.perturb_obs,
                                      config.eval_threads);
        ensemble = std::move(step.ensemble);
        diag = std::move(step.diagnostics);
        if (batch.threshold > 0.0) {
          const bool every = batch.schedule == ThresholdSchedule::kEveryIteration &&
                             iter > batch.threshold_start;
          const bool boundary = batch.schedule == ThresholdSchedule::kBatchBoundary &&
                                it == batch.iters_per_batch && !last_batch;
          if (every || boundary) apply_threshold();
        }
        recorder.record(current, ensemble, iter, ensemble_spread(ensemble));
      } catch (const Error&) {
        recorder.abort(iter, std::current_exception());
      }
      if (config.stop_tol > 0.0 && diag.mean_before.size() == diag.mean_after.size() &&
          relative_change(diag.mean_before, diag.mean_after) < config.stop_tol) {
        break;
      }
    }
  }
  return recorder.finish(current);
}

}  // namespace lpeki
