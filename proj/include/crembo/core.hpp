#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crembo/error.hpp"

namespace crembo {

/// Dense class index in [0, numClasses).
using ClassId = int;

using RowIndex = std::size_t;
using IndexList = std::vector<RowIndex>;

inline constexpr int kMaxClasses = 64;

/// Subset of the class set, one bit per ClassId. The empty set is valid and
/// marks a point that no hypothesis can satisfy.
class LabelSet {
public:
  constexpr LabelSet() = default;
  constexpr explicit LabelSet(std::uint64_t bits) : bits_(bits) {}

  static constexpr LabelSet full(int numClasses) {
    return LabelSet(numClasses >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << numClasses) - 1);
  }
  static constexpr LabelSet single(ClassId c) { return LabelSet(std::uint64_t{1} << c); }

  constexpr bool contains(ClassId c) const { return (bits_ >> c) & 1U; }
  constexpr void insert(ClassId c) { bits_ |= std::uint64_t{1} << c; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr std::uint64_t bits() const { return bits_; }
  /// Lowest member; only meaningful when non-empty.
  constexpr ClassId lowest() const { return std::countr_zero(bits_); }

  constexpr LabelSet operator&(LabelSet o) const { return LabelSet(bits_ & o.bits_); }
  constexpr LabelSet& operator&=(LabelSet o) {
    bits_ &= o.bits_;
    return *this;
  }
  constexpr bool operator==(const LabelSet&) const = default;

  std::vector<ClassId> members() const;

private:
  std::uint64_t bits_ = 0;
};

/// Row-major feature matrix with optional labels. Immutable once built; the
/// constructor validates every invariant.
class Dataset {
public:
  Dataset() = default;
  Dataset(std::size_t numRows, std::size_t numAttrs, std::vector<double> features,
          std::optional<std::vector<ClassId>> labels, int numClasses,
          std::vector<std::string> columnNames = {}, std::vector<std::string> classNames = {});

  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_attrs() const { return num_attrs_; }
  int num_classes() const { return num_classes_; }

  std::span<const double> row(RowIndex i) const {
    return {features_.data() + i * num_attrs_, num_attrs_};
  }
  double at(RowIndex i, std::size_t attr) const { return features_[i * num_attrs_ + attr]; }
  std::span<const double> features() const { return features_; }

  bool has_labels() const { return labels_.has_value(); }
  /// Throws UnlabeledDataset when absent.
  const std::vector<ClassId>& labels() const;
  ClassId label(RowIndex i) const { return labels().at(i); }

  const std::vector<std::string>& column_names() const { return column_names_; }
  /// Raw label value for each dense class id (the re-indexing mapping).
  const std::vector<std::string>& class_names() const { return class_names_; }

  /// Rows in the given order; keeps class count and names.
  Dataset subset(std::span<const RowIndex> rows) const;
  /// Same features, labels replaced.
  Dataset with_labels(std::vector<ClassId> labels) const;

  std::vector<std::size_t> class_counts() const;

private:
  std::size_t num_rows_ = 0;
  std::size_t num_attrs_ = 0;
  std::vector<double> features_;
  std::optional<std::vector<ClassId>> labels_;
  int num_classes_ = 0;
  std::vector<std::string> column_names_;
  std::vector<std::string> class_names_;
};

struct ConstraintPair {
  RowIndex row = 0;
  LabelSet allowed;
  /// Most probable class of the row under the belief that produced the
  /// constraint; learners use it as a soft preference among allowed classes.
  ClassId preferred = 0;
};

/// The constrained sample {(x_i, Y_i)} handed to a consistent learner.
struct ConstraintSample {
  std::vector<ConstraintPair> pairs;
  IndexList trimmedRows;

  /// Rows with an empty allowed set.
  IndexList empty_rows() const;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double fraction = 0.15;
  bool stratified = true;
};

struct CsvSchema {
  /// Columns to ignore entirely (ids and the like).
  std::vector<std::string> dropColumns;
};

Dataset load_csv(const std::filesystem::path& path, const std::string& labelColumn,
                 const std::optional<CsvSchema>& schema = std::nullopt);

/// Unlabelled variant: every column is a feature.
Dataset load_csv_features(const std::filesystem::path& path);

/// (rest, held-out) row indices; the held-out part has ~fraction of the rows.
std::pair<IndexList, IndexList> split_indices(const Dataset& d, const SplitSpec& spec);

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec);

struct Fold {
  IndexList train;
  IndexList test;
};

std::vector<Fold> kfold(const Dataset& d, std::size_t k, std::uint64_t seed, bool stratified = true);

/// Fraction of positions where predictions equal the labels.
double accuracy(std::span<const ClassId> predictions, std::span<const ClassId> labels);

} // namespace crembo
