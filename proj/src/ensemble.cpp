#include "lpeki/ensemble.h"

#include <sstream>

#include "lpeki/errors.h"

namespace lpeki {

ObservationSpec::ObservationSpec(Vec y, Mat noise_cov)
    : y_(std::move(y)), noise_cov_(std::move(noise_cov)) {
  const Eigen::Index m = y_.size();
  if (noise_cov_.rows() != m || noise_cov_.cols() != m) {
    throw InvalidInput("ObservationSpec: noise covariance must be " + std::to_string(m) +
                       "x" + std::to_string(m));
  }
  const double scale = std::max(1.0, noise_cov_.cwiseAbs().maxCoeff());
  if (m > 0 && (noise_cov_ - noise_cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidInput("ObservationSpec: noise covariance is not symmetric");
  }
  if (m == 0 || noise_cov_.isZero(0.0)) {
    factor_ = Mat::Zero(m, m);
    return;
  }
  Eigen::LLT<Mat> llt(noise_cov_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("ObservationSpec: noise covariance is not positive definite");
  }
  factor_ = llt.matrixL();
}

Vec sample_mean(const Ensemble& ensemble) {
  if (ensemble.empty()) throw InvalidInput("sample_mean: empty ensemble");
  return ensemble.members().rowwise().sum() / static_cast<double>(ensemble.size());
}

SampleStats sample_covariances(const Ensemble& states, const Ensemble& preds) {
  if (states.size() != preds.size()) {
    throw InvalidInput("sample_covariances: ensembles have different member counts (" +
                       std::to_string(states.size()) + " vs " +
                       std::to_string(preds.size()) + ")");
  }
  if (states.size() < 2) {
    throw InvalidInput("sample_covariances: need at least two members");
  }
  const double inv_k = 1.0 / static_cast<double>(states.size());

  SampleStats stats;
  stats.mean_state = sample_mean(states);
  stats.mean_pred = sample_mean(preds);
  const Mat state_dev = states.members().colwise() - stats.mean_state;
  const Mat pred_dev = preds.members().colwise() - stats.mean_pred;

  stats.cross_cov = inv_k * (state_dev * pred_dev.transpose());
  const Eigen::Index q = preds.dim();
  Mat lower = Mat::Zero(q, q);
  lower.selfadjointView<Eigen::Lower>().rankUpdate(pred_dev, inv_k);
  stats.pred_cov = lower.selfadjointView<Eigen::Lower>();
  return stats;
}

Vec perturb_observation(const ObservationSpec& obs, Rng& rng) {
  const Vec xi = rng.normal_vector(obs.dim());
  return obs.y() + obs.noise_factor().triangularView<Eigen::Lower>() * xi;
}

Ensemble kalman_update(const Ensemble& states, const Ensemble& preds,
                       const Mat& perturbed_obs, const Mat& noise_cov) {
  return kalman_update(states, preds, sample_covariances(states, preds), perturbed_obs,
                       noise_cov);
}

Ensemble kalman_update(const Ensemble& states, const Ensemble& preds,
                       const SampleStats& stats, const Mat& perturbed_obs,
                       const Mat& noise_cov) {
  const Eigen::Index q = preds.dim();
  if (perturbed_obs.rows() != q || perturbed_obs.cols() != states.size() ||
      preds.size() != states.size()) {
    throw InvalidInput("kalman_update: perturbed observations must be q x K");
  }
  if (noise_cov.rows() != q || noise_cov.cols() != q) {
    throw InvalidInput("kalman_update: noise covariance must be q x q");
  }
  if (stats.cross_cov.rows() != states.dim() || stats.cross_cov.cols() != q) {
    throw InvalidInput("kalman_update: statistics do not match ensemble shapes");
  }

  Mat system = stats.pred_cov + noise_cov;
  Eigen::LLT<Mat> llt(system);
  if (llt.info() != Eigen::Success) {
    // C^{gg} is only PSD; one jitter retry before giving up.
    const double jitter = 1e-12 * system.trace() / static_cast<double>(q);
    system.diagonal().array() += jitter;
    llt.compute(system);
    if (llt.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "kalman_update: innovation covariance is not positive definite (trace="
          << system.trace() << ", min diag=" << system.diagonal().minCoeff()
          << ", max diag=" << system.diagonal().maxCoeff() << ", jitter=" << jitter << ")";
      throw NumericalError(msg.str());
    }
  }
  const Mat innovation = perturbed_obs - preds.members();
  const Mat weights = llt.solve(innovation);
  return Ensemble(states.members() + stats.cross_cov * weights);
}

}  // namespace lpeki
