#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>

#include "lpeki/errors.h"
#include "lpeki/forward_model.h"
#include "lpeki/metrics.h"
#include "lpeki/random.h"

using namespace lpeki;

namespace {

RunTrace make_trace(const std::vector<Eigen::VectorXd>& estimates, const Eigen::VectorXd& truth,
                    double misfit_scale) {
  RunTrace t;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    IterationRecord r;
    r.iter = static_cast<int>(i);
    r.estimate = estimates[i];
    r.l1_error = (estimates[i] - truth).lpNorm<1>();
    r.data_misfit = misfit_scale * (1.0 + static_cast<double>(i));
    r.n_active = static_cast<Eigen::Index>(estimates[i].size() - i);
    t.records.push_back(r);
  }
  for (Eigen::Index i = 0; i < truth.size(); ++i) t.support.push_back(i);
  return t;
}

double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

}  // namespace

TEST(L1Error, Basics) {
  Eigen::Vector3d a(1, -2, 3), b(1, 0, 0);
  EXPECT_DOUBLE_EQ(l1_error(a, b), 5.0);
  EXPECT_EQ(l1_error(a, a), 0.0);
  EXPECT_THROW(l1_error(a, Eigen::VectorXd::Zero(2)), InvalidInput);
}

TEST(DataMisfit, Basics) {
  ScalarProblem s = scalar_model();
  EXPECT_DOUBLE_EQ(data_misfit(Eigen::VectorXd::Zero(1), *s.model, s.y), 1.0);
  EXPECT_EQ(data_misfit(Eigen::VectorXd::Ones(1), *s.model, s.y), 0.0);
  CsProblem cs = cs_generate(2);
  Rng rng(1);
  Eigen::VectorXd u = rng.normal_vector(200);
  EXPECT_GT(data_misfit(u, *cs.model(), cs.y), 0.0);
}

TEST(AggregateTrials, TwoPointStats) {
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(1);
  RunTrace a = make_trace({Eigen::VectorXd::Constant(1, 0.0)}, truth, 1.0);
  RunTrace b = make_trace({Eigen::VectorXd::Constant(1, 2.0)}, truth, 1.0);
  TrialSummary s = aggregate_trials({a, b}, truth);
  EXPECT_DOUBLE_EQ(s.mean_l1, 1.0);
  EXPECT_DOUBLE_EQ(s.std_l1, 1.0);
  EXPECT_DOUBLE_EQ(s.mean_estimate(0), 1.0);
  EXPECT_DOUBLE_EQ(s.per_component_std(0), 1.0);
}

TEST(AggregateTrials, IdenticalTracesHaveZeroSpread) {
  Rng rng(2);
  Eigen::VectorXd truth = rng.normal_vector(4);
  RunTrace t = make_trace({rng.normal_vector(4), rng.normal_vector(4)}, truth, 0.3);
  TrialSummary s = aggregate_trials({t, t, t}, truth);
  // The mean of three equal doubles can be off by one ulp.
  EXPECT_LT(s.std_l1, 1e-15);
  EXPECT_LT(s.std_misfit, 1e-15);
  EXPECT_LT(s.per_component_std.maxCoeff(), 1e-15);
}

TEST(AggregateTrials, MatchesBruteForce) {
  Rng rng(3);
  const int T = 7, iters = 5, d = 6;
  Eigen::VectorXd truth = rng.normal_vector(d);
  std::vector<RunTrace> traces;
  for (int t = 0; t < T; ++t) {
    std::vector<Eigen::VectorXd> est;
    for (int i = 0; i < iters; ++i) est.push_back(rng.normal_vector(d));
    traces.push_back(make_trace(est, truth, 0.5 + rng.uniform()));
  }
  TrialSummary s = aggregate_trials(traces, truth);
  EXPECT_EQ(s.trials, T);

  double m = 0.0, mm = 0.0;
  for (const RunTrace& t : traces) m += t.final().l1_error;
  m /= T;
  for (const RunTrace& t : traces) mm += (t.final().l1_error - m) * (t.final().l1_error - m);
  EXPECT_NEAR(s.mean_l1, m, 1e-12);
  EXPECT_NEAR(s.std_l1, std::sqrt(mm / T), 1e-12);

  for (int j = 0; j < d; ++j) {
    double cm = 0.0, cv = 0.0;
    for (const RunTrace& t : traces) cm += t.final().estimate(j);
    cm /= T;
    for (const RunTrace& t : traces) cv += std::pow(t.final().estimate(j) - cm, 2);
    EXPECT_NEAR(s.mean_estimate(j), cm, 1e-12);
    EXPECT_NEAR(s.per_component_std(j), std::sqrt(cv / T), 1e-12);
  }
  ASSERT_EQ(s.mean_l1_curve.size(), static_cast<std::size_t>(iters));
  for (int i = 0; i < iters; ++i) {
    double c = 0.0, a = 0.0, mis = 0.0;
    for (const RunTrace& t : traces) {
      c += t.records[i].l1_error;
      a += static_cast<double>(t.records[i].n_active);
      mis += t.records[i].data_misfit;
    }
    EXPECT_NEAR(s.mean_l1_curve[i], c / T, 1e-12);
    EXPECT_NEAR(s.mean_active_curve[i], a / T, 1e-12);
    EXPECT_NEAR(s.mean_misfit_curve[i], mis / T, 1e-12);
  }
}

TEST(AggregateTrials, Errors) {
  EXPECT_THROW(aggregate_trials({}), InvalidInput);
  Eigen::VectorXd truth = Eigen::VectorXd::Zero(2);
  RunTrace a = make_trace({truth, truth}, truth, 1.0);
  RunTrace b = make_trace({truth}, truth, 1.0);
  EXPECT_THROW(aggregate_trials({a, b}, truth), InvalidInput);
}

TEST(SpectralNorm, MatchesSvd) {
  Rng rng(4);
  Eigen::MatrixXd A(20, 50);
  for (int j = 0; j < 50; ++j) A.col(j) = rng.normal_vector(20);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  EXPECT_NEAR(spectral_norm(A), svd.singularValues()(0), 1e-8 * svd.singularValues()(0));
}

TEST(Ista, ZeroDataGivesZero) {
  CsProblem cs = cs_generate(1);
  EXPECT_EQ(ista_l1(cs.matrix, Eigen::VectorXd::Zero(20), 0.1, 100), Eigen::VectorXd::Zero(200));
}

TEST(Ista, OrthogonalDesignClosedForm) {
  Eigen::Vector2d y(1.5, -0.2);
  Eigen::VectorXd x = ista_l1(Eigen::MatrixXd::Identity(2, 2), y, 0.5, 500);
  EXPECT_NEAR(x(0), soft(1.5, 0.5), 1e-12);
  EXPECT_NEAR(x(1), soft(-0.2, 0.5), 1e-12);
}

TEST(Ista, ObjectiveNonIncreasing) {
  CsProblem cs = cs_generate(6);
  std::vector<double> obj;
  ista_l1(cs.matrix, cs.y, 0.5, 500, &obj);
  ASSERT_EQ(obj.size(), 501u);
  for (std::size_t i = 1; i < obj.size(); ++i) EXPECT_LE(obj[i], obj[i - 1] + 1e-12 * obj[i - 1]);
}

TEST(Ista, SatisfiesLassoOptimality) {
  // Subgradient conditions of lambda |x|_1 + 1/2 |Ax - y|^2:
  // g = A^T (y - Ax) equals lambda sgn(x_i) on the support, |g_i| <= lambda off it.
  const double lambda = 0.5;
  double l1 = 0.0;
  const int n = 5;
  for (int s = 0; s < n; ++s) {
    CsProblem cs = cs_generate(derive_seed(12, s));
    Eigen::VectorXd x = ista_l1(cs.matrix, cs.y, lambda, 30000);
    Eigen::VectorXd g = cs.matrix.transpose() * (cs.y - cs.matrix * x);
    for (int i = 0; i < 200; ++i) {
      if (x(i) != 0.0)
        EXPECT_NEAR(g(i), lambda * (x(i) > 0 ? 1.0 : -1.0), 1e-3) << "seed " << s << " i " << i;
      else
        EXPECT_LE(std::fabs(g(i)), lambda + 1e-3) << "seed " << s << " i " << i;
    }
    l1 += (x - cs.u_true).lpNorm<1>();
  }
  // 20 measurements of a 4-sparse signal in 200 dimensions: recovery is only
  // approximate, but far better than the zero estimate.
  EXPECT_LT(l1 / n, 2.5);
}
