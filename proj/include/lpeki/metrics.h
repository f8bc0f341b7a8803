#ifndef LPEKI_METRICS_H_
#define LPEKI_METRICS_H_

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lpeki/forward_model.h"
#include "lpeki/solver.h"

namespace lpeki {

/// sum_i |est_i - truth_i|.
double l1_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

/// Unweighted ||y - G(u)||_2.
double data_misfit(const Eigen::VectorXd& u, const ForwardModel& model, const Eigen::VectorXd& y);

/// Cross-trial statistics. Standard deviations use the population (1/T)
/// normalization.
struct TrialSummary {
  int trials = 0;
  std::vector<double> final_l1;
  std::vector<double> final_misfit;
  double mean_l1 = 0.0;
  double std_l1 = 0.0;
  double mean_misfit = 0.0;
  double std_misfit = 0.0;
  double mean_support = 0.0;

  Eigen::VectorXd mean_estimate;
  Eigen::VectorXd per_component_std;

  // Per-iteration means over trials.
  std::vector<double> mean_l1_curve;
  std::vector<double> mean_misfit_curve;
  std::vector<double> mean_active_curve;
};

/// Aggregates traces of equal length. `truth`, when given, recomputes the
/// l1 errors of the final estimates against it; otherwise the traces' own
/// l1_error fields are used.
TrialSummary aggregate_trials(const std::vector<RunTrace>& traces,
                              const std::optional<Eigen::VectorXd>& truth = std::nullopt);

/// Largest singular value of A by power iteration on A^T A.
double spectral_norm(const Eigen::MatrixXd& matrix, int iters = 200);

/// Iterative shrinkage-thresholding for lambda ||x||_1 + 1/2 ||A x - y||^2,
/// started from zero with step 1 / (1.01 ||A||_2^2). If `objective` is given
/// it receives the objective value before the first and after every step.
Eigen::VectorXd ista_l1(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& y, double lambda,
                        int iters, std::vector<double>* objective = nullptr);

}  // namespace lpeki

#endif  // LPEKI_METRICS_H_
