#ifndef LPEKI_ENSEMBLE_H_
#define LPEKI_ENSEMBLE_H_

#include <Eigen/Dense>

#include "lpeki/random.h"

namespace lpeki {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// K state vectors of dimension d, stored column-major as a d x K matrix.
/// Immutable once built.
class Ensemble {
 public:
  Ensemble() = default;
  explicit Ensemble(Mat members) : members_(std::move(members)) {}

  Eigen::Index dim() const { return members_.rows(); }
  Eigen::Index size() const { return members_.cols(); }
  bool empty() const { return members_.cols() == 0; }

  const Mat& members() const { return members_; }
  auto member(Eigen::Index k) const { return members_.col(k); }

 private:
  Mat members_;
};

/// Observation vector y with its noise covariance. The covariance is checked
/// for symmetry and factored once at construction; an all-zero covariance is
/// accepted and means noise-free observations.
class ObservationSpec {
 public:
  ObservationSpec(Vec y, Mat noise_cov);

  const Vec& y() const { return y_; }
  const Mat& noise_cov() const { return noise_cov_; }
  /// Lower-triangular L with L L^T = noise_cov.
  const Mat& noise_factor() const { return factor_; }
  Eigen::Index dim() const { return y_.size(); }

 private:
  Vec y_;
  Mat noise_cov_;
  Mat factor_;
};

struct SampleStats {
  Vec mean_state;
  Vec mean_pred;
  Mat cross_cov;  // d x q
  Mat pred_cov;   // q x q, exactly symmetric
};

Vec sample_mean(const Ensemble& ensemble);

/// Cross- and prediction covariances with 1/K normalization.
SampleStats sample_covariances(const Ensemble& states, const Ensemble& preds);

/// y + L xi with xi drawn from rng (obs.dim() standard normals, in order).
Vec perturb_observation(const ObservationSpec& obs, Rng& rng);

/// Stochastic analysis update
///   u_k' = u_k + C^{ug} (C^{gg} + noise_cov)^{-1} (obs_k - g_k)
/// for every member k. `perturbed_obs` holds one q-vector per column.
Ensemble kalman_update(const Ensemble& states, const Ensemble& preds,
                       const Mat& perturbed_obs, const Mat& noise_cov);

/// Same update with precomputed statistics.
Ensemble kalman_update(const Ensemble& states, const Ensemble& preds,
                       const SampleStats& stats, const Mat& perturbed_obs,
                       const Mat& noise_cov);

}  // namespace lpeki

#endif  // LPEKI_ENSEMBLE_H_
