#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lpeki/errors.h"
#include "lpeki/forward_model.h"
#include "lpeki/random.h"

using namespace lpeki;

namespace {

// Dense grid then local refinement; independent of the library's minimizer.
double grid_argmin(double p, double lo, double hi) {
  double best = lo, fbest = scalar_objective(lo, p);
  for (int i = 0; i <= 200000; ++i) {
    double u = lo + (hi - lo) * i / 200000.0;
    double f = scalar_objective(u, p);
    if (f < fbest) {
      fbest = f;
      best = u;
    }
  }
  double h = (hi - lo) / 200000.0;
  for (int r = 0; r < 40; ++r, h *= 0.5) {
    for (double c : {best - h, best + h}) {
      if (scalar_objective(c, p) < fbest) {
        fbest = scalar_objective(c, p);
        best = c;
      }
    }
  }
  return best;
}

}  // namespace

TEST(ScalarModel, IdentityWithCanonicalData) {
  ScalarProblem s = scalar_model();
  EXPECT_EQ(s.model->state_dim(), 1);
  EXPECT_EQ(s.model->obs_dim(), 1);
  EXPECT_DOUBLE_EQ(s.model->evaluate(Eigen::VectorXd::Constant(1, 0.75))(0), 0.75);
  EXPECT_DOUBLE_EQ(s.y(0), 1.0);
  EXPECT_DOUBLE_EQ(s.lambda, 0.5);
  EXPECT_DOUBLE_EQ(s.model->noise_cov()(0, 0), 1.0);
}

TEST(ScalarModel, ObjectiveAtThreeQuarters) {
  EXPECT_NEAR(scalar_objective(0.75, 1.0), 0.21875, 1e-15);
  EXPECT_NEAR(grid_argmin(1.0, -2.0, 2.0), 0.75, 1e-8);
}

TEST(ScalarModel, PHalfGlobalMinimizer) {
  double u = grid_argmin(0.5, -2.0, 2.0);
  EXPECT_NEAR(u, 0.8656, 5e-5);
  // 0 is a local minimizer with a larger value.
  EXPECT_GT(scalar_objective(0.0, 0.5), scalar_objective(u, 0.5));
  EXPECT_LT(scalar_objective(0.0, 0.5), scalar_objective(1e-3, 0.5));
}

TEST(LinearModel, DimensionChecks) {
  EXPECT_THROW(LinearModel(Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Identity(2, 2)),
               InvalidInput);
  LinearModel m(Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Identity(3, 3));
  EXPECT_THROW(m.evaluate(Eigen::VectorXd::Zero(3)), InvalidInput);
}

TEST(CsGenerate, ShapesAndSparsity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CsProblem p = cs_generate(seed);
    EXPECT_EQ(p.matrix.rows(), 20);
    EXPECT_EQ(p.matrix.cols(), 200);
    EXPECT_EQ(p.y.size(), 20);
    int nnz = 0;
    for (double x : p.u_true) nnz += x != 0.0;
    EXPECT_EQ(nnz, 4);
  }
}

TEST(CsGenerate, ReproducibleFromSeed) {
  CsProblem a = cs_generate(17), b = cs_generate(17), c = cs_generate(18);
  EXPECT_EQ(a.matrix, b.matrix);
  EXPECT_EQ(a.u_true, b.u_true);
  EXPECT_EQ(a.y, b.y);
  EXPECT_NE(a.matrix, c.matrix);
}

TEST(CsGenerate, NoiseFreeZeroSignal) {
  CsOptions o;
  o.n_nonzero = 0;
  o.noise_var = 0.0;
  CsProblem p = cs_generate(3, o);
  EXPECT_EQ(p.y, Eigen::VectorXd::Zero(20));
}

TEST(CsGenerate, NoiseEnergyMonteCarlo) {
  double acc = 0.0;
  const int n = 2000;
  for (int s = 0; s < n; ++s) {
    CsProblem p = cs_generate(derive_seed(99, s));
    acc += (p.y - p.matrix * p.u_true).squaredNorm();
  }
  EXPECT_NEAR(acc / n, 0.2, 0.02);
}

TEST(CsGenerate, SupportIsUniform) {
  // Each index should be picked with probability 4/200.
  std::vector<int> hits(200, 0);
  const int n = 5000;
  for (int s = 0; s < n; ++s) {
    CsProblem p = cs_generate(derive_seed(5, s));
    for (int i = 0; i < 200; ++i) hits[i] += p.u_true(i) != 0.0;
  }
  const double expected = n * 4.0 / 200.0;
  for (int h : hits) EXPECT_NEAR(h, expected, 5.0 * std::sqrt(expected));
}

TEST(CsModel, Linearity) {
  CsProblem p = cs_generate(4);
  auto model = p.model();
  Rng rng(1);
  Eigen::VectorXd u = rng.normal_vector(200), w = rng.normal_vector(200);
  const double a = 0.3, b = -1.7;
  Eigen::VectorXd lhs = model->evaluate(a * u + b * w);
  Eigen::VectorXd rhs = a * model->evaluate(u) + b * model->evaluate(w);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  EXPECT_EQ(model->noise_cov(), 0.01 * Eigen::MatrixXd::Identity(20, 20));
}
