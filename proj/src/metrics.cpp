#include "lpeki/metrics.h"

#include <cmath>

#include "lpeki/errors.h"

namespace lpeki {

namespace {

void mean_std(const std::vector<double>& values, double& mean, double& std_dev) {
  const double n = static_cast<double>(values.size());
  mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  std_dev = std::sqrt(ss / n);
}

double soft_threshold(double x, double gamma) {
  if (std::fabs(x) <= gamma) return 0.0;
  return x > 0.0 ? x - gamma : x + gamma;
}

double lasso_objective(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, double lambda,
                       const Eigen::VectorXd& x) {
  return lambda * x.lpNorm<1>() + 0.5 * (a * x - y).squaredNorm();
}

}  // namespace

double l1_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  if (estimate.size() != truth.size()) {
    throw InvalidInput("l1_error: dimension mismatch (" + std::to_string(estimate.size()) +
                       " vs " + std::to_string(truth.size()) + ")");
  }
  return (estimate - truth).lpNorm<1>();
}

double data_misfit(const Eigen::VectorXd& u, const ForwardModel& model, const Eigen::VectorXd& y) {
  if (y.size() != model.obs_dim()) throw InvalidInput("data_misfit: observation dimension mismatch");
  return (y - model.evaluate(u)).norm();
}

TrialSummary aggregate_trials(const std::vector<RunTrace>& traces,
                              const std::optional<Eigen::VectorXd>& truth) {
  if (traces.empty()) throw InvalidInput("aggregate_trials: no traces");
  const std::size_t length = traces.front().records.size();
  if (length == 0) throw InvalidInput("aggregate_trials: empty trace");
  for (const RunTrace& t : traces) {
    if (t.records.size() != length) {
      throw InvalidInput("aggregate_trials: traces have different lengths");
    }
  }

  TrialSummary summary;
  summary.trials = static_cast<int>(traces.size());
  const double inv_t = 1.0 / static_cast<double>(traces.size());
  const Eigen::Index dim = traces.front().final().estimate.size();

  summary.mean_estimate = Eigen::VectorXd::Zero(dim);
  for (const RunTrace& t : traces) {
    const IterationRecord& last = t.final();
    summary.final_l1.push_back(truth ? l1_error(last.estimate, *truth) : last.l1_error);
    summary.final_misfit.push_back(last.data_misfit);
    summary.mean_estimate += last.estimate;
    summary.mean_support += static_cast<double>(t.support.size());
  }
  summary.mean_estimate *= inv_t;
  summary.mean_support *= inv_t;

  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  for (const RunTrace& t : traces) {
    sq += (t.final().estimate - summary.mean_estimate).cwiseAbs2();
  }
  summary.per_component_std = (sq * inv_t).cwiseSqrt();

  mean_std(summary.final_l1, summary.mean_l1, summary.std_l1);
  mean_std(summary.final_misfit, summary.mean_misfit, summary.std_misfit);

  summary.mean_l1_curve.assign(length, 0.0);
  summary.mean_misfit_curve.assign(length, 0.0);
  summary.mean_active_curve.assign(length, 0.0);
  for (const RunTrace& t : traces) {
    for (std::size_t i = 0; i < length; ++i) {
      summary.mean_l1_curve[i] += inv_t * t.records[i].l1_error;
      summary.mean_misfit_curve[i] += inv_t * t.records[i].data_misfit;
      summary.mean_active_curve[i] += inv_t * static_cast<double>(t.records[i].n_active);
    }
  }
  return summary;
}

double spectral_norm(const Eigen::MatrixXd& matrix, int iters) {
  if (matrix.size() == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(matrix.cols()).normalized();
  double sigma_sq = 0.0;
  for (int i = 0; i < iters; ++i) {
    const Eigen::VectorXd w = matrix.transpose() * (matrix * v);
    sigma_sq = w.norm();
    if (sigma_sq == 0.0) return 0.0;
    v = w / sigma_sq;
  }
  return std::sqrt(sigma_sq);
}

Eigen::VectorXd ista_l1(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& y, double lambda,
                        int iters, std::vector<double>* objective) {
  if (y.size() != matrix.rows()) throw InvalidInput("ista_l1: dimension mismatch");
  if (lambda < 0.0) throw InvalidInput("ista_l1: lambda must be non-negative");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(matrix.cols());
  const double norm = spectral_norm(matrix);
  if (objective) objective->push_back(lasso_objective(matrix, y, lambda, x));
  if (norm == 0.0) return x;
  const double step = 1.0 / (1.01 * norm * norm);
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd trial = x - step * (matrix.transpose() * (matrix * x - y));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = soft_threshold(trial(i), step * lambda);
    if (objective) objective->push_back(lasso_objective(matrix, y, lambda, x));
  }
  return x;
}

}  // namespace lpeki
