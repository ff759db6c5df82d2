#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "crembo/core.hpp"
#include "crembo/learners.hpp"

namespace crembo {

/// Grid onto which every oracle probability is snapped.
inline constexpr double kOracleQuantum = 1e-9;
/// Allowed deviation of an oracle row sum from one.
inline constexpr double kStochasticTolerance = 1e-6;

double quantize(double p) noexcept;

/// Belief p(y | x_i) on the sample points, addressed by row position.
///
/// All adapters materialise a dense row-stochastic matrix; entries are
/// quantized to kOracleQuantum at construction so the set of distinct values
/// is finite and identical across platforms.
class OracleSource {
public:
  OracleSource() = default;
  /// `probs` is row-major [numRows x numClasses]. Validates entries in [0,1]
  /// and row sums within kStochasticTolerance after quantization.
  OracleSource(std::size_t numRows, int numClasses, std::vector<double> probs, std::string provenance = {});

  double prob(RowIndex i, ClassId y) const {
    return probs_[i * static_cast<std::size_t>(num_classes_) + static_cast<std::size_t>(y)];
  }
  std::span<const double> row(RowIndex i) const {
    return {probs_.data() + i * static_cast<std::size_t>(num_classes_), static_cast<std::size_t>(num_classes_)};
  }
  std::size_t num_rows() const { return num_rows_; }
  int num_classes() const { return num_classes_; }
  std::span<const double> values() const { return probs_; }
  const std::string& provenance() const { return provenance_; }

  /// Most probable class, ties to the lowest id.
  ClassId argmax(RowIndex i) const;
  double max_prob(RowIndex i) const;
  std::vector<ClassId> argmax_all() const;

  /// Oracle restricted to `rows`, re-indexed 0..rows.size()-1.
  OracleSource subset(std::span<const RowIndex> rows) const;

  bool operator==(const OracleSource& o) const {
    return num_rows_ == o.num_rows_ && num_classes_ == o.num_classes_ && probs_ == o.probs_;
  }

private:
  std::size_t num_rows_ = 0;
  int num_classes_ = 0;
  std::vector<double> probs_;
  std::string provenance_;
};

/// Fraction of trees voting for each class.
OracleSource ensemble_vote_oracle(const ForestModel& forest, const Dataset& d);

/// Mean of the trees' leaf class distributions. Not the canonical forest
/// belief; offered as an alternative.
OracleSource soft_vote_oracle(const ForestModel& forest, const Dataset& d);

/// Counting oracle of a hypothesis sample: O(x_i, y) = #{j : f_j(x_i) = y} / n.
/// `predictions[j]` holds hypothesis j's predictions on every row.
OracleSource counting_oracle(std::span<const std::vector<ClassId>> predictions, int numClasses);

struct MatrixOptions {
  bool normalize = false;
};

/// Loads a probability matrix CSV (one row per sample in dataset order, one
/// column per class, optional header).
OracleSource matrix_oracle(const std::filesystem::path& path, const Dataset& d, MatrixOptions opts = {});

/// In-memory counterpart of matrix_oracle.
OracleSource matrix_oracle(std::vector<double> values, std::size_t rows, std::size_t cols, const Dataset& d,
                           MatrixOptions opts = {}, std::string provenance = "matrix");

/// Writes the oracle in the matrix format; reals are printed with enough
/// digits to round-trip exactly.
void write_matrix_csv(const OracleSource& o, const std::filesystem::path& path,
                      std::span<const std::string> classNames = {});

std::vector<double> softmax(std::span<const double> scores, double temperature = 1.0);

/// Oracle from raw per-class scores (row-major), converted with softmax.
OracleSource score_oracle(std::span<const double> scores, std::size_t rows, int numClasses,
                          double temperature = 1.0);

/// Sorted distinct oracle values over rows x classes.
struct ThresholdSet {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool contains(double v) const;
};

ThresholdSet threshold_set(const OracleSource& o, std::span<const RowIndex> rows);
ThresholdSet threshold_set(const OracleSource& o);

} // namespace crembo
