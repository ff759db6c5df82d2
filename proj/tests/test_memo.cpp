#include <gtest/gtest.h>

#include <atomic>
#include <algorithm>
#include <cmath>
#include <random>

#include "crembo/memo.hpp"
#include "support.hpp"

using namespace crembo;

namespace {

class AlwaysFails final : public ConsistentLearner {
public:
  LearnResult learn(const Dataset&, const ConstraintSample&) const override { return {}; }
  bool exact() const override { return false; }
  std::string name() const override { return "always-fails"; }
};

/// Wraps a learner and counts calls.
class Counting final : public ConsistentLearner {
public:
  explicit Counting(const ConsistentLearner& inner) : inner_(inner) {}
  LearnResult learn(const Dataset& d, const ConstraintSample& s) const override {
    ++calls;
    return inner_.learn(d, s);
  }
  bool exact() const override { return inner_.exact(); }
  std::string name() const override { return inner_.name(); }
  mutable std::atomic<std::size_t> calls{0};

private:
  const ConsistentLearner& inner_;
};

std::size_t ceil_log2(std::size_t n) {
  std::size_t k = 0;
  while ((std::size_t{1} << k) < n)
    ++k;
  return k;
}

} // namespace

TEST(BuildConstraints, Thresholding) {
  const OracleSource o(2, 3, {0.7, 0.2, 0.1, 0.4, 0.4, 0.2});
  const IndexList rows{0, 1};
  auto s = build_constraints(o, rows, 0.4);
  EXPECT_EQ(s.pairs[0].allowed, LabelSet::single(0));
  EXPECT_EQ(s.pairs[1].allowed.members(), (std::vector<ClassId>{0, 1}));
  s = build_constraints(o, rows, 0.0);
  for (const auto& p : s.pairs)
    EXPECT_EQ(p.allowed, LabelSet::full(3));
  s = build_constraints(o, rows, 1.0);
  EXPECT_TRUE(s.pairs[0].allowed.empty());
  EXPECT_EQ(s.empty_rows(), (IndexList{0, 1}));
  const OracleSource hot(1, 3, {0, 0, 1});
  EXPECT_EQ(build_constraints(hot, IndexList{0}, 1.0).pairs[0].allowed, LabelSet::single(2));
}

TEST(Memo, TwoRowExample) {
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 2);
  const OracleSource o(2, 2, {0.6, 0.4, 0.3, 0.7});
  EXPECT_DOUBLE_EQ(testkit::brute_force_max_depth(d, o), 0.6);
  const ExhaustiveLearner ex;
  const ConstrainedTreeLearner greedy;
  for (const ConsistentLearner* l : std::initializer_list<const ConsistentLearner*>{&ex, &greedy}) {
    const MemoResult r = memo(d, o, *l);
    EXPECT_DOUBLE_EQ(r.depth, 0.6);
    EXPECT_DOUBLE_EQ(r.threshold, 0.6);
    EXPECT_EQ(r.model.predict(d), (std::vector<ClassId>{0, 1}));
    EXPECT_EQ(r.thresholdCount, 4u);
    EXPECT_LE(r.learnerCalls, learner_call_bound(4));
  }
}

TEST(Memo, OneHotReachesFullDepth) {
  const Dataset d(3, 1, {0, 1, 2}, std::nullopt, 3);
  const OracleSource o(3, 3, {1, 0, 0, 0, 0, 1, 0, 1, 0});
  const MemoResult r = memo(d, o, ConstrainedTreeLearner{});
  EXPECT_DOUBLE_EQ(r.depth, 1.0);
  EXPECT_EQ(r.model.predict(d), (std::vector<ClassId>{0, 2, 1}));
}

TEST(Memo, LearnerCallBoundValues) {
  EXPECT_EQ(learner_call_bound(1), 1u);
  EXPECT_EQ(learner_call_bound(2), 2u);
  EXPECT_EQ(learner_call_bound(4), 3u);
  EXPECT_EQ(learner_call_bound(5), 4u);
  EXPECT_EQ(learner_call_bound(101), 8u);
  for (std::size_t n = 1; n < 3000; ++n)
    EXPECT_EQ(learner_call_bound(n), ceil_log2(n) + 1);
}

TEST(Memo, HundredTreeVoteOracleOnIris) {
  const Dataset d = load_csv(CREMBO_DATA_DIR "/iris.csv", "species");
  ForestConfig fc;
  fc.seed = 4;
  const OracleSource o = ensemble_vote_oracle(train_forest(d, fc), d);
  const ConstrainedTreeLearner lrn;
  const Counting counted(lrn);
  const MemoResult r = memo(d, o, counted);
  EXPECT_LE(r.thresholdCount, 101u);
  EXPECT_LE(r.learnerCalls, 8u);
  EXPECT_EQ(r.learnerCalls, counted.calls.load());
  EXPECT_LE(r.learnerCalls, learner_call_bound(r.thresholdCount));
  EXPECT_GE(r.depth, r.threshold);
  EXPECT_EQ(r.depth, empirical_depth(r.model, d, o, all_rows(d.num_rows())).overall);
}

TEST(Memo, AlwaysFailingLearner) {
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 2);
  const OracleSource o(2, 2, {0.6, 0.4, 0.3, 0.7});
  try {
    memo(d, o, AlwaysFails{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LearnerAlwaysFails);
  }
}

TEST(Memo, ShapeMismatch) {
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 2);
  const OracleSource o(1, 2, {0.6, 0.4});
  EXPECT_THROW(memo(d, o, ExhaustiveLearner{}), Error);
}

TEST(Memo, EmptyAllowedSetSkipsLearner) {
  // Theta = {0, 0.3, 0.4, 0.5}. The probe at 0.4 succeeds; at 0.5 row 1 has
  // no allowed class, so that probe is rejected without a learner call.
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 3);
  const OracleSource o(2, 3, {0.5, 0.5, 0.0, 0.4, 0.3, 0.3});
  const ExhaustiveLearner ex;
  const Counting counted(ex);
  const MemoResult r = memo(d, o, counted);
  EXPECT_DOUBLE_EQ(r.depth, 0.4);
  EXPECT_EQ(r.probedThresholds, (std::vector<double>{0.4, 0.5}));
  EXPECT_EQ(counted.calls.load(), 1u);
  EXPECT_EQ(r.learnerCalls, 1u);
}

TEST(Memo, OptimalAgainstBruteForceProperty) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = testkit::random_small_instance(rng);
    const ExhaustiveLearner ex;
    const Counting counted(ex);
    const MemoResult r = memo(inst.data, inst.oracle, counted);
    EXPECT_EQ(r.depth, testkit::brute_force_max_depth(inst.data, inst.oracle));
    EXPECT_EQ(r.depth, testkit::min_depth(r.model.predict(inst.data), inst.oracle));
    EXPECT_TRUE(threshold_set(inst.oracle).contains(r.depth));
    EXPECT_LE(counted.calls.load(), ceil_log2(r.thresholdCount) + 1);
  }
}

TEST(Memo, ExactFeasibilityIsMonotoneProperty) {
  std::mt19937_64 rng(42);
  const ExhaustiveLearner ex;
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testkit::random_small_instance(rng);
    const IndexList rows = all_rows(inst.data.num_rows());
    bool seenFail = false;
    for (double t : threshold_set(inst.oracle).values) {
      const auto s = build_constraints(inst.oracle, rows, t);
      const bool ok = s.empty_rows().empty() && ex.learn(inst.data, s).ok();
      if (seenFail)
        EXPECT_FALSE(ok) << "feasible above an infeasible threshold";
      seenFail |= !ok;
    }
  }
}

TEST(Memo, HeuristicResultIsConsistentProperty) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testkit::random_instance(rng, 30, 3, 10);
    LearnerConfig cfg;
    cfg.maxDepth = 2;
    const MemoResult r = memo(inst.data, inst.oracle, ConstrainedTreeLearner{cfg});
    EXPECT_EQ(r.depth, testkit::min_depth(r.model.predict(inst.data), inst.oracle));
    EXPECT_GE(r.depth, r.threshold);
    EXPECT_LE(r.learnerCalls, learner_call_bound(r.thresholdCount));
    const auto s = build_constraints(inst.oracle, all_rows(30), r.threshold);
    EXPECT_TRUE(testkit::check_constraints(r.model, inst.data, s));
  }
}

TEST(MemoTrimmed, BudgetApplication) {
  // Max probabilities 0.3, 0.9, 0.9.
  const OracleSource o(3, 4, {0.3, 0.3, 0.2, 0.2, 0.9, 0.05, 0.05, 0.0, 0.05, 0.9, 0.05, 0.0});
  const IndexList rows{0, 1, 2};
  const auto s = build_trimmed_constraints(o, rows, 0.9, trim_budget(0.34, 3));
  ASSERT_TRUE(s);
  EXPECT_EQ(s->trimmedRows, IndexList{0});
  ASSERT_EQ(s->pairs.size(), 2u);
  EXPECT_EQ(s->pairs[0].row, 1u);
  EXPECT_EQ(s->pairs[1].row, 2u);
  EXPECT_FALSE(build_trimmed_constraints(o, rows, 0.95, 1));
}

TEST(MemoTrimmed, TrimOrderUsesMaxProbabilityThenRow) {
  const OracleSource o(4, 2, {0.6, 0.4, 0.55, 0.45, 0.55, 0.45, 1.0, 0.0});
  const auto s = build_trimmed_constraints(o, IndexList{0, 1, 2, 3}, 0.7, 3);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->trimmedRows, (IndexList{1, 2, 0}));
}

TEST(MemoTrimmed, TrimExceedsSample) {
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 2);
  const OracleSource o(2, 2, {0.6, 0.4, 0.3, 0.7});
  try {
    memo_trimmed(d, o, ExhaustiveLearner{}, std::nextafter(1.0, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TrimExceedsSample);
  }
}

TEST(MemoTrimmed, ZeroEpsilonEqualsMemoProperty) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 100; ++trial) {
    const auto inst = testkit::random_small_instance(rng);
    EXPECT_EQ(memo_trimmed(inst.data, inst.oracle, ExhaustiveLearner{}, 0.0),
              memo(inst.data, inst.oracle, ExhaustiveLearner{}));
    EXPECT_EQ(memo_trimmed(inst.data, inst.oracle, ConstrainedTreeLearner{}, 0.0),
              memo(inst.data, inst.oracle, ConstrainedTreeLearner{}));
  }
}

TEST(MemoTrimmed, DepthNondecreasingInEpsilonProperty) {
  std::mt19937_64 rng(45);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testkit::random_instance(rng, 20, 3);
    double last = -1.0;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.3}) {
      const MemoResult r = memo_trimmed(inst.data, inst.oracle, ExhaustiveLearner{}, eps);
      EXPECT_GE(r.depth, last) << "epsilon " << eps;
      EXPECT_LE(r.trimmedRows.size(), trim_budget(eps, 20));
      const auto preds = r.model.predict(inst.data);
      double kept = 1.0;
      for (RowIndex i = 0; i < 20; ++i)
        if (std::find(r.trimmedRows.begin(), r.trimmedRows.end(), i) == r.trimmedRows.end())
          kept = std::min(kept, inst.oracle.prob(i, preds[i]));
      EXPECT_EQ(r.depth, kept);
      last = r.depth;
    }
  }
}
