#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "crembo/oracle.hpp"
#include "support.hpp"

using namespace crembo;
namespace fs = std::filesystem;

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

TreeModel constant_tree(ClassId c, int attrs, int K) { return TreeModel::constant(c, attrs, K); }

Dataset iris() { return load_csv(CREMBO_DATA_DIR "/iris.csv", "species"); }

} // namespace

TEST(OracleSource, ValidatesRows) {
  EXPECT_EQ(code_of([] { OracleSource(1, 3, {0.5, 0.5, 0.1}); }), ErrorCode::RowNotStochastic);
  EXPECT_EQ(code_of([] { OracleSource(1, 2, {1.2, -0.2}); }), ErrorCode::NegativeEntry);
  EXPECT_EQ(code_of([] { OracleSource(2, 2, {1.0, 0.0}); }), ErrorCode::ShapeMismatch);
  const OracleSource o(1, 2, {0.3, 0.7});
  EXPECT_EQ(o.prob(0, 1), o.row(0)[1]);
  EXPECT_EQ(o.argmax(0), 1);
}

TEST(OracleSource, QuantizesToGrid) {
  const OracleSource o(1, 2, {1.0 / 3.0, 2.0 / 3.0});
  EXPECT_EQ(o.prob(0, 0), std::nearbyint((1.0 / 3.0) / 1e-9) * 1e-9);
  EXPECT_EQ(quantize(0.25), 0.25);
  EXPECT_EQ(quantize(quantize(0.123456789123)), quantize(0.123456789123));
}

TEST(OracleSource, ArgmaxTiesGoLow) {
  const OracleSource o(1, 3, {0.4, 0.2, 0.4});
  EXPECT_EQ(o.argmax(0), 0);
  EXPECT_DOUBLE_EQ(o.max_prob(0), 0.4);
}

TEST(VoteOracle, FractionOfTrees) {
  // 4 trees, 3 vote class 2 on every row.
  std::vector<TreeModel> trees{constant_tree(2, 1, 3), constant_tree(2, 1, 3), constant_tree(0, 1, 3),
                               constant_tree(2, 1, 3)};
  const ForestModel f(trees, {1, 2, 3, 4}, ForestConfig{});
  const Dataset d(2, 1, {0.0, 1.0}, std::nullopt, 3);
  const OracleSource o = ensemble_vote_oracle(f, d);
  EXPECT_DOUBLE_EQ(o.prob(0, 2), 0.75);
  EXPECT_DOUBLE_EQ(o.prob(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(o.prob(1, 1), 0.0);
}

TEST(VoteOracle, HundredTreeGrid) {
  const Dataset d = iris();
  ForestConfig cfg;
  cfg.seed = 5;
  const ForestModel f = train_forest(d, cfg);
  const OracleSource o = ensemble_vote_oracle(f, d);
  EXPECT_LE(threshold_set(o).size(), 101u);
  for (double v : o.values()) {
    const double scaled = v * 100.0;
    EXPECT_NEAR(scaled, std::round(scaled), 1e-6);
  }
  for (RowIndex i = 0; i < d.num_rows(); ++i) {
    const auto votes = f.votes(d.row(i));
    for (ClassId y = 0; y < 3; ++y)
      if (votes[static_cast<std::size_t>(y)] == 100) {
        EXPECT_EQ(o.prob(i, y), 1.0);
        EXPECT_EQ(o.max_prob(i), 1.0);
      }
  }
}

TEST(VoteOracle, DimensionMismatch) {
  const ForestModel f({constant_tree(0, 2, 2)}, {1}, ForestConfig{});
  const Dataset d(1, 3, {0, 0, 0}, std::nullopt, 2);
  EXPECT_EQ(code_of([&] { ensemble_vote_oracle(f, d); }), ErrorCode::FeatureDimensionMismatch);
}

TEST(SoftVoteOracle, RowsAreStochastic) {
  const Dataset d = iris();
  ForestConfig cfg;
  cfg.treeCount = 10;
  const ForestModel f = train_forest(d, cfg);
  const OracleSource o = soft_vote_oracle(f, d);
  for (RowIndex i = 0; i < d.num_rows(); ++i) {
    double s = 0.0;
    for (double p : o.row(i))
      s += p;
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(CountingOracle, Fractions) {
  const std::vector<std::vector<ClassId>> preds{{0, 1}, {0, 0}, {1, 0}};
  const OracleSource o = counting_oracle(preds, 2);
  EXPECT_EQ(o.prob(0, 0), quantize(2.0 / 3.0));
  EXPECT_EQ(o.prob(1, 1), quantize(1.0 / 3.0));
  EXPECT_EQ(code_of([] { counting_oracle(std::vector<std::vector<ClassId>>{}, 2); }),
            ErrorCode::EmptyHypothesisSample);
}

TEST(MatrixOracle, ShapeAndStochasticity) {
  const Dataset d = iris();
  std::vector<double> ok(150 * 3, 1.0 / 3.0);
  EXPECT_EQ(matrix_oracle(ok, 150, 3, d).num_rows(), 150u);
  EXPECT_EQ(code_of([&] { matrix_oracle(std::vector<double>(150 * 4, 0.25), 150, 4, d); }),
            ErrorCode::ShapeMismatch);
  std::vector<double> bad = ok;
  bad[0] = 0.5, bad[1] = 0.5, bad[2] = 0.1;
  EXPECT_EQ(code_of([&] { matrix_oracle(bad, 150, 3, d); }), ErrorCode::RowNotStochastic);
  const OracleSource n = matrix_oracle(bad, 150, 3, d, MatrixOptions{true});
  EXPECT_NEAR(n.prob(0, 2), 0.1 / 1.1, 1e-9);
}

TEST(MatrixOracle, CsvRoundTripIsBitExact) {
  const Dataset d = iris();
  ForestConfig cfg;
  cfg.treeCount = 7; // sevenths do not terminate in decimal
  const OracleSource o = ensemble_vote_oracle(train_forest(d, cfg), d);
  const fs::path p = fs::temp_directory_path() / "crembo_oracle_roundtrip.csv";
  write_matrix_csv(o, p, d.class_names());
  const OracleSource back = matrix_oracle(p, d);
  EXPECT_TRUE(back == o);

  // Headerless variant.
  const fs::path q = fs::temp_directory_path() / "crembo_oracle_noheader.csv";
  {
    std::ifstream in(p);
    std::ofstream out(q);
    std::string line;
    std::getline(in, line);
    out << in.rdbuf();
  }
  EXPECT_TRUE(matrix_oracle(q, d) == o);
}

TEST(Softmax, Examples) {
  const auto half = softmax(std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(half[0], 0.5);
  EXPECT_DOUBLE_EQ(half[1], 0.5);

  // Reference values from a 40-digit evaluation of exp-normalize.
  const auto p = softmax(std::vector<double>{2.0, 1.0, 0.0});
  EXPECT_NEAR(p[0], 0.66524095577482188953, 1e-12);
  EXPECT_NEAR(p[1], 0.24472847105479765247, 1e-12);
  EXPECT_NEAR(p[2], 0.090030573170380457998, 1e-12);
  EXPECT_NEAR(p[0], 0.66524, 1e-5);
  EXPECT_NEAR(p[1], 0.24473, 1e-5);
  EXPECT_NEAR(p[2], 0.09003, 1e-5);

  const auto sharp = softmax(std::vector<double>{2.0, 1.0, 0.0}, 0.5);
  EXPECT_NEAR(sharp[0], 0.86681333219733487114, 1e-12);
  EXPECT_NEAR(sharp[2], 0.015876239976466766323, 1e-12);
}

TEST(Softmax, TemperatureLimitAndArgmax) {
  for (double T : {0.01, 1.0, 100.0, 1e6}) {
    const auto p = softmax(std::vector<double>{1.0, 0.0}, T);
    EXPECT_GT(p[0], p[1]);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
  }
  const auto flat = softmax(std::vector<double>{1.0, 0.0}, 1e9);
  EXPECT_NEAR(flat[0], 0.5, 1e-6);
  EXPECT_EQ(code_of([] { softmax(std::vector<double>{1.0}, 0.0); }), ErrorCode::NonPositiveTemperature);
  EXPECT_EQ(code_of([] { softmax(std::vector<double>{1.0}, -1.0); }), ErrorCode::NonPositiveTemperature);
}

TEST(Softmax, ArgmaxPreservedProperty) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 3.0);
  std::uniform_real_distribution<double> t(0.05, 20.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> s(4);
    for (double& v : s)
      v = n(rng);
    const auto p = softmax(s, t(rng));
    double sum = 0.0;
    for (double v : p)
      sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), std::max_element(s.begin(), s.end()) - s.begin());
  }
}

TEST(ScoreOracle, MatchesSoftmaxRows) {
  const std::vector<double> scores{2, 1, 0, 0, 0, 0};
  const OracleSource o = score_oracle(scores, 2, 3);
  EXPECT_EQ(o.prob(0, 0), quantize(softmax(std::vector<double>{2, 1, 0})[0]));
  EXPECT_EQ(o.prob(1, 1), quantize(1.0 / 3.0));
}

TEST(ThresholdSet, SortDedup) {
  const OracleSource o(2, 2, {0.2, 0.8, 0.5, 0.5});
  EXPECT_EQ(threshold_set(o).values, (std::vector<double>{0.2, 0.5, 0.8}));
  const OracleSource hot(1, 3, {0.0, 1.0, 0.0});
  EXPECT_EQ(threshold_set(hot).values, (std::vector<double>{0.0, 1.0}));
  const std::vector<RowIndex> first{0};
  EXPECT_EQ(threshold_set(o, first).values, (std::vector<double>{0.2, 0.8}));
}

TEST(ThresholdSet, ImageOfOracleProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testkit::random_small_instance(rng);
    const auto& o = inst.oracle;
    std::set<double> image;
    for (RowIndex i = 0; i < o.num_rows(); ++i)
      for (ClassId y = 0; y < o.num_classes(); ++y)
        image.insert(o.prob(i, y));
    const auto theta = threshold_set(o);
    EXPECT_EQ(theta.values, std::vector<double>(image.begin(), image.end()));
    EXPECT_TRUE(std::is_sorted(theta.values.begin(), theta.values.end()));
    EXPECT_LE(theta.size(), o.num_rows() * static_cast<std::size_t>(o.num_classes()));
  }
}
