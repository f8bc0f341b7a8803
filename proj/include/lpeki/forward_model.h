#ifndef LPEKI_FORWARD_MODEL_H_
#define LPEKI_FORWARD_MODEL_H_

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Dense>

namespace lpeki {

/// Deterministic map u in R^N -> G(u) in R^m with a known observation noise
/// covariance. Implementations are immutable after construction and
/// evaluate() must be safe to call concurrently.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index obs_dim() const = 0;
  virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const = 0;
  virtual const Eigen::MatrixXd& noise_cov() const = 0;
};

/// G(u) = A u.
class LinearModel final : public ForwardModel {
 public:
  LinearModel(Eigen::MatrixXd matrix, Eigen::MatrixXd noise_cov);

  Eigen::Index state_dim() const override { return matrix_.cols(); }
  Eigen::Index obs_dim() const override { return matrix_.rows(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& u) const override;
  const Eigen::MatrixXd& noise_cov() const override { return noise_cov_; }

  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::MatrixXd noise_cov_;
};

/// One-dimensional toy problem: G(u) = u, unit noise, y = 1, lambda = 1/2.
/// Minimizes 1/4 |u|^p + 1/2 (1 - u)^2.
struct ScalarProblem {
  std::shared_ptr<const LinearModel> model;
  Eigen::VectorXd y;
  double lambda = 0.5;
};

ScalarProblem scalar_model();

/// lp-penalized scalar objective (lambda/2)|u|^p + 1/2 (y - u)^2.
double scalar_objective(double u, double p, double lambda = 0.5, double y = 1.0);

struct CsOptions {
  Eigen::Index obs_dim = 20;
  Eigen::Index state_dim = 200;
  Eigen::Index n_nonzero = 4;
  double noise_var = 0.01;
};

/// Compressive-sensing instance: Gaussian measurement matrix, sparse truth.
struct CsProblem {
  std::uint64_t seed = 0;
  CsOptions options;
  Eigen::MatrixXd matrix;  // A, obs_dim x state_dim, i.i.d. N(0, 1)
  Eigen::VectorXd u_true;
  Eigen::VectorXd y;

  std::shared_ptr<const LinearModel> model() const;
};

/// Draws A (row by row), the support (uniform without replacement), the
/// nonzero magnitudes (N(0, 1)) and the observation noise, in that order.
CsProblem cs_generate(std::uint64_t seed, const CsOptions& options = {});

}  // namespace lpeki

#endif  // LPEKI_FORWARD_MODEL_H_
