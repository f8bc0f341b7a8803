#include <gtest/gtest.h>

#include <set>

#include "lpeki/errors.h"
#include "lpeki/forward_model.h"
#include "lpeki/random.h"
#include "lpeki/solver.h"

using namespace lpeki;

namespace {

struct Fixture {
  CsProblem cs = cs_generate(5);
  AugmentedProblem aug = build_augmented(cs.model(), cs.y, 1.0, 100.0);
  SolverConfig config = [] {
    SolverConfig c;
    c.ensemble_size = 50;
    c.max_iters = 20;
    c.stop_tol = 0.0;
    return c;
  }();
};

void expect_same_trace(const RunTrace& a, const RunTrace& b) {
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_EQ(a.records[i].iter, b.records[i].iter);
    EXPECT_EQ(a.records[i].estimate, b.records[i].estimate);
    EXPECT_EQ(a.records[i].n_active, b.records[i].n_active);
  }
  EXPECT_EQ(a.support, b.support);
}

}  // namespace

TEST(Multibatch, ZeroThresholdSingleBatchMatchesPlainRun) {
  Fixture f;
  BatchConfig b;
  b.n_batches = 1;
  b.iters_per_batch = 20;
  b.threshold = 0.0;
  Rng r1(1), r2(1);
  expect_same_trace(run_multibatch(f.aug, f.config, b, f.cs.u_true, r1),
                    run_lp_eki(f.aug, f.config, f.cs.u_true, r2));
}

TEST(Multibatch, ZeroThresholdCarryOverMatchesPlainRun) {
  Fixture f;
  BatchConfig b;
  b.n_batches = 4;
  b.iters_per_batch = 5;
  b.threshold = 0.0;
  b.reinit = ReinitPolicy::kCarryOver;
  Rng r1(2), r2(2);
  expect_same_trace(run_multibatch(f.aug, f.config, b, f.cs.u_true, r1),
                    run_lp_eki(f.aug, f.config, f.cs.u_true, r2));
}

TEST(Multibatch, RemovedComponentsStayZero) {
  Fixture f;
  BatchConfig b;
  b.n_batches = 1;
  b.iters_per_batch = 20;
  b.threshold = 0.05;
  b.schedule = ThresholdSchedule::kEveryIteration;
  b.threshold_start = 3;
  Rng rng(3);
  RunTrace t = run_multibatch(f.aug, f.config, b, f.cs.u_true, rng);
  ASSERT_EQ(t.records.size(), 21u);
  std::set<Eigen::Index> removed;
  Eigen::Index previous_active = 200;
  for (const IterationRecord& r : t.records) {
    for (Eigen::Index i : removed) EXPECT_EQ(r.estimate(i), 0.0) << "iter " << r.iter;
    EXPECT_LE(r.n_active, previous_active);
    previous_active = r.n_active;
    if (r.iter <= 3) {
      EXPECT_EQ(r.n_active, 200);
    }
    if (r.iter > 3) {
      for (Eigen::Index i = 0; i < 200; ++i)
        if (r.estimate(i) == 0.0) removed.insert(i);
    }
  }
  EXPECT_LT(t.final().n_active, 200);
  EXPECT_EQ(static_cast<Eigen::Index>(t.support.size()), t.final().n_active);
}

TEST(Multibatch, BatchBoundaryThresholdsOnlyBetweenBatches) {
  Fixture f;
  BatchConfig b;
  b.n_batches = 2;
  b.iters_per_batch = 10;
  b.threshold = 0.1;
  Rng rng(4);
  RunTrace t = run_multibatch(f.aug, f.config, b, f.cs.u_true, rng);
  ASSERT_EQ(t.records.size(), 21u);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(t.records[i].n_active, 200);
  const Eigen::Index after = t.records[10].n_active;
  EXPECT_LT(after, 200);
  for (int i = 10; i <= 20; ++i) EXPECT_EQ(t.records[i].n_active, after);
  // The kept components are exactly those at or above the threshold.
  for (Eigen::Index i = 0; i < 200; ++i) {
    double v = t.records[10].estimate(i);
    if (v != 0.0) {
      EXPECT_GE(std::fabs(v), 0.1);
    }
  }
}

TEST(Multibatch, EmptyActiveSetIsDegenerate) {
  Fixture f;
  BatchConfig b;
  b.n_batches = 2;
  b.iters_per_batch = 2;
  b.threshold = 1e6;
  Rng rng(5);
  try {
    run_multibatch(f.aug, f.config, b, f.cs.u_true, rng);
    FAIL() << "expected RunAborted";
  } catch (const RunAborted& e) {
    EXPECT_EQ(e.partial().records.size(), 2u);
    EXPECT_THROW(std::rethrow_exception(e.cause()), DegenerateProblem);
  }
}

TEST(Multibatch, RestrictedProblemKeepsObservations) {
  Fixture f;
  AugmentedProblem r = f.aug.restrict({0, 5, 7});
  EXPECT_EQ(r.active_dim(), 3);
  EXPECT_EQ(r.full_dim(), 200);
  EXPECT_EQ(r.aug_dim(), 23);
  EXPECT_EQ(r.z().head(20), f.cs.y);
  std::vector<Eigen::Index> expected{0, 5, 7};
  EXPECT_EQ(r.active(), expected);
  Vec v(3);
  v << 1.0, -2.0, 0.5;
  Vec full = r.to_state(v);
  EXPECT_EQ(full(5), -4.0);
  EXPECT_EQ(full.lpNorm<1>(), 1.0 + 4.0 + 0.25);
}

TEST(BatchConfig, ValidationAndStrings) {
  BatchConfig b;
  b.n_batches = 0;
  EXPECT_THROW(b.validate(), InvalidInput);
  b = BatchConfig{};
  b.threshold = -1.0;
  EXPECT_THROW(b.validate(), InvalidInput);
  EXPECT_EQ(threshold_schedule_from_string(to_string(ThresholdSchedule::kEveryIteration)),
            ThresholdSchedule::kEveryIteration);
  EXPECT_EQ(reinit_policy_from_string(to_string(ReinitPolicy::kCarryOver)), ReinitPolicy::kCarryOver);
  EXPECT_THROW(reinit_policy_from_string("keep"), InvalidInput);
}
