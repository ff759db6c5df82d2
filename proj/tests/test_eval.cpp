#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "crembo/eval.hpp"
#include "crembo/kernels.hpp"
#include "crembo/serialize.hpp"
#include "support.hpp"

using namespace crembo;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::InvalidArgument;
}

const std::vector<std::string> kModels{"A", "B", "C"};

Dataset iris() { return load_csv(CREMBO_DATA_DIR "/iris.csv", "species"); }

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.big.forest.treeCount = 15;
  cfg.repeats = 1;
  cfg.seed = 3;
  return cfg;
}

} // namespace

TEST(WinRates, FractionalTies) {
  const std::vector<std::map<std::string, double>> rounds{{{"A", 0.9}, {"B", 0.8}, {"C", 0.9}},
                                                          {{"A", 0.7}, {"B", 0.8}, {"C", 0.6}}};
  const auto w = win_rates(rounds, kModels);
  EXPECT_DOUBLE_EQ(w.at("A"), 25.0);
  EXPECT_DOUBLE_EQ(w.at("B"), 50.0);
  EXPECT_DOUBLE_EQ(w.at("C"), 25.0);
}

TEST(WinRates, Dominance) {
  const std::vector<std::map<std::string, double>> rounds(5, {{"A", 0.5}, {"B", 0.9}, {"C", 0.1}});
  EXPECT_DOUBLE_EQ(win_rates(rounds, kModels).at("B"), 100.0);
}

TEST(WinRates, SumToHundredProperty) {
  std::mt19937_64 rng(61);
  std::uniform_int_distribution<int> acc(0, 4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::map<std::string, double>> rounds(static_cast<std::size_t>(1 + trial % 17));
    for (auto& r : rounds)
      for (const auto& m : kModels)
        r[m] = acc(rng) / 4.0;
    const auto w = win_rates(rounds, kModels);
    double total = 0.0;
    for (const auto& [m, v] : w)
      total += v;
    EXPECT_NEAR(total, 100.0, 1e-9);
  }
}

TEST(Agreement, Examples) {
  const std::vector<ClassId> a{0, 1, 1}, b{0, 0, 1}, zeros(3, 0), ones(3, 1);
  EXPECT_DOUBLE_EQ(agreement(a, a), 1.0);
  EXPECT_DOUBLE_EQ(agreement(a, b), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(agreement(zeros, ones), 0.0);
  EXPECT_EQ(code_of([&] { agreement(a, std::vector<ClassId>{0}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([&] { agreement(std::vector<ClassId>{}, std::vector<ClassId>{}); }), ErrorCode::LengthMismatch);
}

TEST(Agreement, SymmetricProperty) {
  std::mt19937_64 rng(62);
  std::uniform_int_distribution<int> c(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClassId> a(10), b(10);
    for (std::size_t i = 0; i < 10; ++i)
      a[i] = c(rng), b[i] = c(rng);
    EXPECT_EQ(agreement(a, b), agreement(b, a));
    EXPECT_GE(agreement(a, b), 0.0);
    EXPECT_LE(agreement(a, b), 1.0);
  }
}

TEST(Agreement, PairwiseMean) {
  const std::vector<std::vector<ClassId>> same(10, std::vector<ClassId>{0, 1, 2});
  EXPECT_DOUBLE_EQ(mean_pairwise_agreement(same), 1.0);
  const std::vector<std::vector<ClassId>> three{{0, 0}, {0, 1}, {1, 1}};
  EXPECT_DOUBLE_EQ(mean_pairwise_agreement(three), (0.5 + 0.0 + 0.5) / 3.0);
  EXPECT_THROW(mean_pairwise_agreement({{0}}), Error);
}

TEST(Generalization, AuditedAndConsistent) {
  const Dataset d = iris();
  const ExperimentReport r = generalization_experiment(d, small_config());
  ASSERT_EQ(r.folds.size(), 10u);
  EXPECT_EQ(r.seeds.size(), 1u);
  double total = 0.0;
  for (const auto& [m, w] : r.winRate)
    total += w;
  EXPECT_NEAR(total, 100.0, 1e-9);
  for (const auto& f : r.folds)
    for (const auto& [m, a] : f.accuracies) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, 1.0);
    }
  for (const auto& m : {kBenchmarkTree, kStudentTree, kMedianTree, std::string("RF")})
    EXPECT_TRUE(r.meanAccuracy.count(m));
  EXPECT_GT(r.meanAccuracy.at(kMedianTree), 0.85);
  EXPECT_NE(format_table(r, "iris").find("Win rate"), std::string::npos);
}

TEST(Generalization, IndependentOfThreadCount) {
  const Dataset d = iris();
  const int before = kernels::max_threads();
  kernels::set_max_threads(1);
  const std::string one = dump(to_json(generalization_experiment(d, small_config())));
  kernels::set_max_threads(3);
  const std::string three = dump(to_json(generalization_experiment(d, small_config())));
  kernels::set_max_threads(before);
  EXPECT_EQ(one, three);
}

TEST(Generalization, PartialRerunMatchesFullRun) {
  // Repeat r of a longer run equals the same repeat of a shorter run.
  const Dataset d = iris();
  PipelineConfig cfg = small_config();
  const ExperimentReport one = generalization_experiment(d, cfg);
  cfg.repeats = 2;
  const ExperimentReport two = generalization_experiment(d, cfg);
  EXPECT_EQ(one.seeds[0], two.seeds[0]);
  for (std::size_t j = 0; j < one.folds.size(); ++j)
    EXPECT_EQ(one.folds[j].accuracies, two.folds[j].accuracies);
}

TEST(Generalization, MatrixBigModel) {
  const Dataset d = iris();
  std::vector<double> probs;
  for (ClassId y : d.labels())
    for (ClassId c = 0; c < 3; ++c)
      probs.push_back(c == y ? 0.8 : 0.1);
  PipelineConfig cfg = small_config();
  cfg.big.kind = BigModelKind::Matrix;
  cfg.big.matrix = matrix_oracle(probs, 150, 3, d);
  const ExperimentReport r = generalization_experiment(d, cfg);
  EXPECT_DOUBLE_EQ(r.meanAccuracy.at("MATRIX"), 1.0);
  EXPECT_EQ(r.bigName, "MATRIX");
}

TEST(Generalization, Validation) {
  const Dataset d = iris();
  PipelineConfig cfg = small_config();
  cfg.repeats = 0;
  EXPECT_EQ(code_of([&] { generalization_experiment(d, cfg); }), ErrorCode::InvalidArgument);
  cfg = small_config();
  cfg.big.kind = BigModelKind::Matrix;
  EXPECT_THROW(generalization_experiment(d, cfg), Error);
}

TEST(Robustness, ScoresAreAgreements) {
  const Dataset d = iris();
  const RobustnessReport r = robustness_experiment(d, small_config());
  ASSERT_EQ(r.agreement.size(), 3u);
  for (const auto& [m, a] : r.agreement) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
  EXPECT_EQ(r.perRepeat.size(), 1u);
  EXPECT_NE(format_table(r, "iris").find("Agreement"), std::string::npos);
}

TEST(Robustness, InvariantLearnerAgreesFully) {
  // Labels depend on one feature with a wide margin, so every round's trees
  // find the same split and agree everywhere.
  std::vector<double> x;
  std::vector<ClassId> y;
  for (int i = 0; i < 60; ++i) {
    x.push_back(i < 30 ? i : i + 100);
    y.push_back(i < 30 ? 0 : 1);
  }
  const Dataset d(60, 1, x, y, 2);
  const RobustnessReport r = robustness_experiment(d, small_config());
  for (const auto& [m, a] : r.agreement)
    EXPECT_DOUBLE_EQ(a, 1.0) << m;
}

TEST(BreakdownProbe, TwoRowExample) {
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 2);
  const OracleSource o(2, 2, {0.6, 0.4, 0.3, 0.7});
  const BreakdownReport r = breakdown_probe(d, o, ExhaustiveLearner{});
  EXPECT_DOUBLE_EQ(r.pStar, 0.3);
  EXPECT_DOUBLE_EQ(r.depth, 0.6);
  EXPECT_NEAR(r.bound, 0.15, 1e-12);
  ASSERT_EQ(r.argmins.size(), 1u);
  EXPECT_EQ(r.argmins[0], (std::pair<RowIndex, ClassId>{1, 0}));
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_GT(r.withinBound, 0u);
  ASSERT_TRUE(r.empiricalBreakdown);
  EXPECT_GE(*r.empiricalBreakdown, 0.15 - 1e-9);
}

TEST(BreakdownProbe, DegenerateBound) {
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 2);
  const OracleSource o(2, 2, {0.5, 0.5, 0.5, 0.5});
  const BreakdownReport r = breakdown_probe(d, o, ExhaustiveLearner{});
  EXPECT_DOUBLE_EQ(r.bound, 0.0);
  EXPECT_EQ(r.withinBound, 0u);
  EXPECT_TRUE(r.passed);
}

TEST(BreakdownProbe, Preconditions) {
  const Dataset big(7, 1, {0, 1, 2, 3, 4, 5, 6}, std::nullopt, 2);
  const OracleSource o(7, 2, std::vector<double>(14, 0.5));
  EXPECT_EQ(code_of([&] { breakdown_probe(big, o, ExhaustiveLearner{}); }), ErrorCode::InstanceTooLarge);
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 2);
  const OracleSource o2(2, 2, {0.6, 0.4, 0.3, 0.7});
  EXPECT_THROW(breakdown_probe(d, o2, ConstrainedTreeLearner{}), Error);
}

TEST(BreakdownProbe, RandomInstancesRespectBoundProperty) {
  std::mt19937_64 rng(63);
  BreakdownOptions opts;
  opts.randomPerturbations = 5;
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testkit::random_small_instance(rng);
    opts.seed = static_cast<std::uint64_t>(trial);
    const BreakdownReport r = breakdown_probe(inst.data, inst.oracle, ExhaustiveLearner{}, opts);
    EXPECT_TRUE(r.passed);
    if (r.empiricalBreakdown)
      EXPECT_GE(*r.empiricalBreakdown, r.bound - 1e-9);
  }
}

TEST(ProjectRows, ClipAndRescale) {
  const auto p = project_rows({1.2, -0.2, 0.5, 0.5}, 2);
  EXPECT_DOUBLE_EQ(p[0], 1.0);
  EXPECT_DOUBLE_EQ(p[1], 0.0);
  EXPECT_DOUBLE_EQ(p[2], 0.5);
  const auto z = project_rows({-1.0, -1.0}, 2);
  EXPECT_DOUBLE_EQ(z[0], 0.5);
}

TEST(Synthetic, HeartSurrogateShape) {
  const Dataset a = make_synthetic(heart_surrogate_spec());
  EXPECT_EQ(a.num_rows(), 303u);
  EXPECT_EQ(a.num_attrs(), 13u);
  EXPECT_EQ(a.num_classes(), 5);
  const auto counts = a.class_counts();
  EXPECT_GT(counts[0], counts[4]);
  const Dataset b = make_synthetic(heart_surrogate_spec());
  EXPECT_TRUE(std::equal(a.features().begin(), a.features().end(), b.features().begin()));
  EXPECT_EQ(a.labels(), b.labels());
  SyntheticSpec bad = heart_surrogate_spec();
  bad.priors = {1.0};
  EXPECT_THROW(make_synthetic(bad), Error);
}
