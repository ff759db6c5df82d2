#include "crembo/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "crembo/rng.hpp"
#include "csv_util.hpp"

namespace crembo {

using detail::CsvTable;
using detail::parse_real;
using detail::read_table;

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::Io: return "Io";
  case ErrorCode::MissingColumn: return "MissingColumn";
  case ErrorCode::NonNumericFeature: return "NonNumericFeature";
  case ErrorCode::EmptyDataset: return "EmptyDataset";
  case ErrorCode::TooManyClasses: return "TooManyClasses";
  case ErrorCode::ClassTooSmall: return "ClassTooSmall";
  case ErrorCode::FoldCountExceedsRows: return "FoldCountExceedsRows";
  case ErrorCode::UnlabeledDataset: return "UnlabeledDataset";
  case ErrorCode::FeatureDimensionMismatch: return "FeatureDimensionMismatch";
  case ErrorCode::ShapeMismatch: return "ShapeMismatch";
  case ErrorCode::RowNotStochastic: return "RowNotStochastic";
  case ErrorCode::NegativeEntry: return "NegativeEntry";
  case ErrorCode::NonPositiveTemperature: return "NonPositiveTemperature";
  case ErrorCode::EmptySample: return "EmptySample";
  case ErrorCode::EmptyHypothesisSample: return "EmptyHypothesisSample";
  case ErrorCode::TrimExceedsSample: return "TrimExceedsSample";
  case ErrorCode::LearnerAlwaysFails: return "LearnerAlwaysFails";
  case ErrorCode::EnumerationBudgetExceeded: return "EnumerationBudgetExceeded";
  case ErrorCode::AllEpsilonInfeasible: return "AllEpsilonInfeasible";
  case ErrorCode::LengthMismatch: return "LengthMismatch";
  case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
  case ErrorCode::ConstraintViolation: return "ConstraintViolation";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::LearnerAlwaysFails:
  case ErrorCode::AllEpsilonInfeasible:
  case ErrorCode::ConstraintViolation:
    return false;
  default:
    return true;
  }
}

std::vector<ClassId> LabelSet::members() const {
  std::vector<ClassId> out;
  for (std::uint64_t b = bits_; b != 0; b &= b - 1)
    out.push_back(std::countr_zero(b));
  return out;
}

IndexList ConstraintSample::empty_rows() const {
  IndexList out;
  for (const auto& p : pairs)
    if (p.allowed.empty())
      out.push_back(p.row);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(std::size_t numRows, std::size_t numAttrs, std::vector<double> features,
                 std::optional<std::vector<ClassId>> labels, int numClasses,
                 std::vector<std::string> columnNames, std::vector<std::string> classNames)
    : num_rows_(numRows), num_attrs_(numAttrs), features_(std::move(features)),
      labels_(std::move(labels)), num_classes_(numClasses), column_names_(std::move(columnNames)),
      class_names_(std::move(classNames)) {
  if (num_rows_ == 0 || num_attrs_ == 0)
    throw Error(ErrorCode::EmptyDataset, "dataset needs at least one row and one feature column");
  if (features_.size() != num_rows_ * num_attrs_)
    throw Error(ErrorCode::ShapeMismatch, "feature buffer size does not match rows x attrs");
  if (num_classes_ < 1 || num_classes_ > kMaxClasses)
    throw Error(ErrorCode::TooManyClasses,
                "class count must lie in [1, " + std::to_string(kMaxClasses) + "]");
  for (double v : features_)
    if (!std::isfinite(v))
      throw Error(ErrorCode::NonNumericFeature, "non-finite feature value");
  if (labels_) {
    if (labels_->size() != num_rows_)
      throw Error(ErrorCode::LengthMismatch, "label count differs from row count");
    for (ClassId c : *labels_)
      if (c < 0 || c >= num_classes_)
        throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(c) + " outside class range");
  }
  if (column_names_.empty())
    for (std::size_t a = 0; a < num_attrs_; ++a)
      column_names_.push_back("x" + std::to_string(a));
  if (class_names_.empty())
    for (int c = 0; c < num_classes_; ++c)
      class_names_.push_back(std::to_string(c));
}

const std::vector<ClassId>& Dataset::labels() const {
  if (!labels_)
    throw Error(ErrorCode::UnlabeledDataset, "operation requires a labeled dataset");
  return *labels_;
}

Dataset Dataset::subset(std::span<const RowIndex> rows) const {
  std::vector<double> feats;
  feats.reserve(rows.size() * num_attrs_);
  std::optional<std::vector<ClassId>> labs;
  if (labels_)
    labs.emplace().reserve(rows.size());
  for (RowIndex r : rows) {
    if (r >= num_rows_)
      throw Error(ErrorCode::InvalidArgument, "row index out of range");
    auto src = row(r);
    feats.insert(feats.end(), src.begin(), src.end());
    if (labs)
      labs->push_back((*labels_)[r]);
  }
  return Dataset(rows.size(), num_attrs_, std::move(feats), std::move(labs), num_classes_,
                 column_names_, class_names_);
}

Dataset Dataset::with_labels(std::vector<ClassId> labels) const {
  return Dataset(num_rows_, num_attrs_, features_, std::move(labels), num_classes_, column_names_,
                 class_names_);
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes_), 0);
  for (ClassId c : labels())
    ++counts[static_cast<std::size_t>(c)];
  return counts;
}

// ---------------------------------------------------------------------------
// CSV ingestion

Dataset load_csv(const std::filesystem::path& path, const std::string& labelColumn,
                 const std::optional<CsvSchema>& schema) {
  CsvTable t = read_table(path);
  auto labelIt = std::find(t.header.begin(), t.header.end(), labelColumn);
  if (labelIt == t.header.end())
    throw Error(ErrorCode::MissingColumn, "label column '" + labelColumn + "' not in " + path.string());
  const std::size_t labelCol = static_cast<std::size_t>(labelIt - t.header.begin());

  std::vector<std::size_t> featureCols;
  std::vector<std::string> names;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (c == labelCol)
      continue;
    if (schema && std::find(schema->dropColumns.begin(), schema->dropColumns.end(), t.header[c]) !=
                      schema->dropColumns.end())
      continue;
    featureCols.push_back(c);
    names.push_back(t.header[c]);
  }
  if (featureCols.empty() || t.rows.empty())
    throw Error(ErrorCode::EmptyDataset, path.string() + " has no feature columns or no rows");

  std::vector<double> feats;
  feats.reserve(t.rows.size() * featureCols.size());
  std::vector<std::string> rawLabels;
  rawLabels.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    for (std::size_t c : featureCols) {
      auto v = parse_real(t.rows[r][c]);
      if (!v)
        throw Error(ErrorCode::NonNumericFeature, "row " + std::to_string(r + 1) + ", column '" +
                                                      t.header[c] + "': '" + t.rows[r][c] + "'");
      feats.push_back(*v);
    }
    if (t.rows[r][labelCol].empty())
      throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(r + 1) + " has an empty label");
    rawLabels.push_back(t.rows[r][labelCol]);
  }

  // Dense re-indexing: numeric labels sort numerically, anything else lexically.
  std::vector<std::string> distinct = rawLabels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  const bool numeric = std::all_of(distinct.begin(), distinct.end(),
                                   [](const std::string& s) { return parse_real(s).has_value(); });
  if (numeric)
    std::stable_sort(distinct.begin(), distinct.end(), [](const std::string& a, const std::string& b) {
      return *parse_real(a) < *parse_real(b);
    });
  if (distinct.size() > static_cast<std::size_t>(kMaxClasses))
    throw Error(ErrorCode::TooManyClasses, std::to_string(distinct.size()) + " distinct labels");
  std::map<std::string, ClassId> index;
  for (std::size_t i = 0; i < distinct.size(); ++i)
    index.emplace(distinct[i], static_cast<ClassId>(i));
  std::vector<ClassId> labels;
  labels.reserve(rawLabels.size());
  for (const auto& s : rawLabels)
    labels.push_back(index.at(s));

  const auto numClasses = static_cast<int>(distinct.size());
  return Dataset(t.rows.size(), featureCols.size(), std::move(feats), std::move(labels), numClasses,
                 std::move(names), std::move(distinct));
}

Dataset load_csv_features(const std::filesystem::path& path) {
  CsvTable t = read_table(path);
  if (t.header.empty() || t.rows.empty())
    throw Error(ErrorCode::EmptyDataset, path.string() + " has no rows");
  std::vector<double> feats;
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      auto v = parse_real(t.rows[r][c]);
      if (!v)
        throw Error(ErrorCode::NonNumericFeature, "row " + std::to_string(r + 1) + ", column '" +
                                                      t.header[c] + "'");
      feats.push_back(*v);
    }
  return Dataset(t.rows.size(), t.header.size(), std::move(feats), std::nullopt, 1, t.header);
}

// ---------------------------------------------------------------------------
// Splitting

namespace {

std::size_t held_out_count(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

} // namespace

std::pair<IndexList, IndexList> split_indices(const Dataset& d, const SplitSpec& spec) {
  if (!(spec.fraction > 0.0 && spec.fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
  const std::size_t n = d.num_rows();
  if (n < 2)
    throw Error(ErrorCode::EmptyDataset, "need at least two rows to split");
  Rng rng(spec.seed);
  IndexList rest, held;

  if (spec.stratified && d.has_labels()) {
    std::vector<IndexList> byClass(static_cast<std::size_t>(d.num_classes()));
    for (RowIndex i = 0; i < n; ++i)
      byClass[static_cast<std::size_t>(d.label(i))].push_back(i);
    for (std::size_t c = 0; c < byClass.size(); ++c) {
      auto& rows = byClass[c];
      if (rows.empty())
        continue;
      if (rows.size() < 2)
        throw Error(ErrorCode::ClassTooSmall, "class '" + d.class_names()[c] +
                                                  "' has a single row; cannot appear in both parts");
      std::shuffle(rows.begin(), rows.end(), rng);
      const std::size_t k = held_out_count(rows.size(), spec.fraction);
      held.insert(held.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
      rest.insert(rest.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
    }
  } else {
    IndexList rows(n);
    std::iota(rows.begin(), rows.end(), RowIndex{0});
    std::shuffle(rows.begin(), rows.end(), rng);
    const std::size_t k = held_out_count(n, spec.fraction);
    held.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
    rest.assign(rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
  }
  std::sort(rest.begin(), rest.end());
  std::sort(held.begin(), held.end());
  return {std::move(rest), std::move(held)};
}

std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec) {
  auto [rest, held] = split_indices(d, spec);
  return {d.subset(rest), d.subset(held)};
}

std::vector<Fold> kfold(const Dataset& d, std::size_t k, std::uint64_t seed, bool stratified) {
  const std::size_t n = d.num_rows();
  if (k < 2)
    throw Error(ErrorCode::InvalidArgument, "fold count must be at least 2");
  if (k > n)
    throw Error(ErrorCode::FoldCountExceedsRows,
                std::to_string(k) + " folds requested for " + std::to_string(n) + " rows");
  Rng rng(seed);
  std::vector<IndexList> groups;
  if (stratified && d.has_labels()) {
    groups.resize(static_cast<std::size_t>(d.num_classes()));
    for (RowIndex i = 0; i < n; ++i)
      groups[static_cast<std::size_t>(d.label(i))].push_back(i);
  } else {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), RowIndex{0});
  }

  // Deal rows round-robin, continuing the counter across classes so fold
  // sizes differ by at most one.
  std::vector<Fold> folds(k);
  std::size_t next = 0;
  for (auto& g : groups) {
    std::shuffle(g.begin(), g.end(), rng);
    for (RowIndex r : g)
      folds[next++ % k].test.push_back(r);
  }
  for (auto& f : folds) {
    std::sort(f.test.begin(), f.test.end());
    std::vector<bool> inTest(n, false);
    for (RowIndex r : f.test)
      inTest[r] = true;
    for (RowIndex r = 0; r < n; ++r)
      if (!inTest[r])
        f.train.push_back(r);
  }
  return folds;
}

double accuracy(std::span<const ClassId> predictions, std::span<const ClassId> labels) {
  if (predictions.size() != labels.size())
    throw Error(ErrorCode::LengthMismatch, "prediction and label vectors differ in length");
  if (predictions.empty())
    throw Error(ErrorCode::EmptySample, "accuracy of an empty sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

} // namespace crembo
