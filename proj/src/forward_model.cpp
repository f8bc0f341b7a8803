#include "lpeki/forward_model.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "lpeki/errors.h"
#include "lpeki/random.h"

namespace lpeki {

LinearModel::LinearModel(Eigen::MatrixXd matrix, Eigen::MatrixXd noise_cov)
    : matrix_(std::move(matrix)), noise_cov_(std::move(noise_cov)) {
  if (noise_cov_.rows() != matrix_.rows() || noise_cov_.cols() != matrix_.rows()) {
    throw InvalidInput("LinearModel: noise covariance must be m x m");
  }
}

Eigen::VectorXd LinearModel::evaluate(const Eigen::VectorXd& u) const {
  if (u.size() != matrix_.cols()) {
    throw InvalidInput("LinearModel: expected state of dimension " +
                       std::to_string(matrix_.cols()) + ", got " + std::to_string(u.size()));
  }
  return matrix_ * u;
}

ScalarProblem scalar_model() {
  ScalarProblem problem;
  problem.model = std::make_shared<LinearModel>(Eigen::MatrixXd::Identity(1, 1),
                                                Eigen::MatrixXd::Identity(1, 1));
  problem.y = Eigen::VectorXd::Ones(1);
  problem.lambda = 0.5;
  return problem;
}

double scalar_objective(double u, double p, double lambda, double y) {
  return 0.5 * lambda * std::pow(std::fabs(u), p) + 0.5 * (y - u) * (y - u);
}

std::shared_ptr<const LinearModel> CsProblem::model() const {
  return std::make_shared<LinearModel>(
      matrix, options.noise_var * Eigen::MatrixXd::Identity(options.obs_dim, options.obs_dim));
}

CsProblem cs_generate(std::uint64_t seed, const CsOptions& options) {
  if (options.n_nonzero < 0 || options.n_nonzero > options.state_dim) {
    throw InvalidInput("cs_generate: n_nonzero must lie in [0, state_dim]");
  }
  if (options.noise_var < 0.0) throw InvalidInput("cs_generate: negative noise variance");

  Rng rng(seed);
  CsProblem problem;
  problem.seed = seed;
  problem.options = options;

  problem.matrix.resize(options.obs_dim, options.state_dim);
  for (Eigen::Index i = 0; i < options.obs_dim; ++i) {
    for (Eigen::Index j = 0; j < options.state_dim; ++j) problem.matrix(i, j) = rng.normal();
  }

  // Partial Fisher-Yates for the support.
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(options.state_dim));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  problem.u_true = Eigen::VectorXd::Zero(options.state_dim);
  for (Eigen::Index s = 0; s < options.n_nonzero; ++s) {
    const std::size_t pick = s + rng.index(pool.size() - static_cast<std::size_t>(s));
    std::swap(pool[static_cast<std::size_t>(s)], pool[pick]);
  }
  for (Eigen::Index s = 0; s < options.n_nonzero; ++s) {
    double magnitude = rng.normal();
    // An exact zero would break the sparsity count.
    while (magnitude == 0.0) magnitude = rng.normal();
    problem.u_true(pool[static_cast<std::size_t>(s)]) = magnitude;
  }

  const double noise_sd = std::sqrt(options.noise_var);
  problem.y = problem.matrix * problem.u_true;
  for (Eigen::Index i = 0; i < options.obs_dim; ++i) problem.y(i) += noise_sd * rng.normal();
  return problem;
}

}  // namespace lpeki
