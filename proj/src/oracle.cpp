#include "crembo/oracle.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "crembo/kernels.hpp"
#include "csv_util.hpp"

namespace crembo {

double quantize(double p) noexcept { return std::nearbyint(p / kOracleQuantum) * kOracleQuantum; }

OracleSource::OracleSource(std::size_t numRows, int numClasses, std::vector<double> probs,
                           std::string provenance)
    : num_rows_(numRows), num_classes_(numClasses), probs_(std::move(probs)),
      provenance_(std::move(provenance)) {
  if (num_classes_ < 1 || num_classes_ > kMaxClasses)
    throw Error(ErrorCode::TooManyClasses, "oracle class count out of range");
  if (probs_.size() != num_rows_ * static_cast<std::size_t>(num_classes_))
    throw Error(ErrorCode::ShapeMismatch, "oracle buffer size does not match rows x classes");
  for (double p : probs_) {
    if (!std::isfinite(p))
      throw Error(ErrorCode::InvalidArgument, "non-finite oracle value");
    if (p < 0.0)
      throw Error(ErrorCode::NegativeEntry, "negative oracle value");
  }
  for (RowIndex i = 0; i < num_rows_; ++i) {
    double sum = 0.0;
    for (ClassId y = 0; y < num_classes_; ++y) {
      double& p = probs_[i * static_cast<std::size_t>(num_classes_) + static_cast<std::size_t>(y)];
      p = quantize(p);
      if (p > 1.0)
        throw Error(ErrorCode::RowNotStochastic, "oracle value above one at row " + std::to_string(i));
      sum += p;
    }
    if (std::abs(sum - 1.0) > kStochasticTolerance)
      throw Error(ErrorCode::RowNotStochastic,
                  "row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }
}

ClassId OracleSource::argmax(RowIndex i) const {
  auto r = row(i);
  return static_cast<ClassId>(std::max_element(r.begin(), r.end()) - r.begin());
}

double OracleSource::max_prob(RowIndex i) const {
  auto r = row(i);
  return *std::max_element(r.begin(), r.end());
}

std::vector<ClassId> OracleSource::argmax_all() const {
  std::vector<ClassId> out(num_rows_);
  for (RowIndex i = 0; i < num_rows_; ++i)
    out[i] = argmax(i);
  return out;
}

OracleSource OracleSource::subset(std::span<const RowIndex> rows) const {
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(num_classes_));
  for (RowIndex r : rows) {
    if (r >= num_rows_)
      throw Error(ErrorCode::InvalidArgument, "oracle row index out of range");
    auto src = row(r);
    out.insert(out.end(), src.begin(), src.end());
  }
  return OracleSource(rows.size(), num_classes_, std::move(out), provenance_);
}

// ---------------------------------------------------------------------------
// Adapters

OracleSource ensemble_vote_oracle(const ForestModel& forest, const Dataset& d) {
  const auto counts = kernels::forest_votes(forest, d);
  const double n = static_cast<double>(forest.tree_count());
  std::vector<double> probs(counts.size());
  std::transform(counts.begin(), counts.end(), probs.begin(), [n](int c) { return c / n; });
  return OracleSource(d.num_rows(), forest.num_classes(), std::move(probs),
                      "forest-vote:" + std::to_string(forest.tree_count()));
}

OracleSource soft_vote_oracle(const ForestModel& forest, const Dataset& d) {
  auto probs = kernels::forest_soft_votes(forest, d);
  // Leaf distributions can drift off the simplex by rounding; renormalize.
  const auto K = static_cast<std::size_t>(forest.num_classes());
  for (RowIndex i = 0; i < d.num_rows(); ++i) {
    const double s = std::accumulate(probs.begin() + static_cast<std::ptrdiff_t>(i * K),
                                     probs.begin() + static_cast<std::ptrdiff_t>((i + 1) * K), 0.0);
    for (std::size_t c = 0; c < K; ++c)
      probs[i * K + c] /= s;
  }
  return OracleSource(d.num_rows(), forest.num_classes(), std::move(probs),
                      "forest-soft:" + std::to_string(forest.tree_count()));
}

OracleSource counting_oracle(std::span<const std::vector<ClassId>> predictions, int numClasses) {
  if (predictions.empty())
    throw Error(ErrorCode::EmptyHypothesisSample, "counting oracle needs at least one hypothesis");
  const std::size_t m = predictions.front().size();
  const auto K = static_cast<std::size_t>(numClasses);
  std::vector<int> counts(m * K, 0);
  for (const auto& preds : predictions) {
    if (preds.size() != m)
      throw Error(ErrorCode::LengthMismatch, "hypotheses disagree on sample size");
    for (std::size_t i = 0; i < m; ++i)
      ++counts[i * K + static_cast<std::size_t>(preds[i])];
  }
  const double n = static_cast<double>(predictions.size());
  std::vector<double> probs(counts.size());
  std::transform(counts.begin(), counts.end(), probs.begin(), [n](int c) { return c / n; });
  return OracleSource(m, numClasses, std::move(probs), "counting:" + std::to_string(predictions.size()));
}

OracleSource matrix_oracle(std::vector<double> values, std::size_t rows, std::size_t cols, const Dataset& d,
                           MatrixOptions opts, std::string provenance) {
  if (rows != d.num_rows() || cols != static_cast<std::size_t>(d.num_classes()))
    throw Error(ErrorCode::ShapeMismatch, "matrix is " + std::to_string(rows) + "x" + std::to_string(cols) +
                                              ", dataset needs " + std::to_string(d.num_rows()) + "x" +
                                              std::to_string(d.num_classes()));
  if (values.size() != rows * cols)
    throw Error(ErrorCode::ShapeMismatch, "matrix buffer size does not match its shape");
  for (std::size_t i = 0; i < rows; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = values[i * cols + c];
      if (v < 0.0)
        throw Error(ErrorCode::NegativeEntry, "negative matrix entry at row " + std::to_string(i));
      sum += v;
    }
    if (opts.normalize) {
      if (!(sum > 0.0))
        throw Error(ErrorCode::RowNotStochastic, "row " + std::to_string(i) + " has zero mass");
      for (std::size_t c = 0; c < cols; ++c)
        values[i * cols + c] /= sum;
    } else if (std::abs(sum - 1.0) > kStochasticTolerance) {
      throw Error(ErrorCode::RowNotStochastic,
                  "row " + std::to_string(i) + " sums to " + std::to_string(sum) + " (use --normalize)");
    }
  }
  return OracleSource(rows, static_cast<int>(cols), std::move(values), std::move(provenance));
}

OracleSource matrix_oracle(const std::filesystem::path& path, const Dataset& d, MatrixOptions opts) {
  auto cells = detail::read_cells(path);
  if (cells.empty())
    throw Error(ErrorCode::ShapeMismatch, path.string() + " is empty");
  const bool header = std::any_of(cells.front().begin(), cells.front().end(),
                                  [](const std::string& s) { return !detail::parse_real(s); });
  const std::size_t first = header ? 1 : 0;
  const std::size_t rows = cells.size() - first;
  const std::size_t cols = cells.front().size();
  std::vector<double> values;
  values.reserve(rows * cols);
  for (std::size_t r = first; r < cells.size(); ++r) {
    if (cells[r].size() != cols)
      throw Error(ErrorCode::ShapeMismatch, path.string() + ": ragged row " + std::to_string(r + 1));
    for (const auto& cell : cells[r]) {
      auto v = detail::parse_real(cell);
      if (!v)
        throw Error(ErrorCode::InvalidArgument, path.string() + ": non-numeric entry '" + cell + "'");
      values.push_back(*v);
    }
  }
  return matrix_oracle(std::move(values), rows, cols, d, opts, "matrix:" + path.filename().string());
}

void write_matrix_csv(const OracleSource& o, const std::filesystem::path& path,
                      std::span<const std::string> classNames) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  for (ClassId c = 0; c < o.num_classes(); ++c) {
    if (c > 0)
      out << ',';
    if (static_cast<std::size_t>(c) < classNames.size())
      out << "p_" << classNames[static_cast<std::size_t>(c)];
    else
      out << "p_" << c;
  }
  out << '\n';
  char buf[64];
  for (RowIndex i = 0; i < o.num_rows(); ++i) {
    for (ClassId c = 0; c < o.num_classes(); ++c) {
      if (c > 0)
        out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), o.prob(i, c));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
  if (!out)
    throw Error(ErrorCode::Io, "failed writing " + path.string());
}

std::vector<double> softmax(std::span<const double> scores, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw Error(ErrorCode::NonPositiveTemperature, "softmax temperature must be positive");
  if (scores.empty())
    throw Error(ErrorCode::InvalidArgument, "softmax of an empty vector");
  for (double s : scores)
    if (!std::isfinite(s))
      throw Error(ErrorCode::InvalidArgument, "softmax scores must be finite");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp((scores[i] - top) / temperature);
    sum += out[i];
  }
  for (double& v : out)
    v /= sum;
  return out;
}

OracleSource score_oracle(std::span<const double> scores, std::size_t rows, int numClasses,
                          double temperature) {
  const auto K = static_cast<std::size_t>(numClasses);
  if (scores.size() != rows * K)
    throw Error(ErrorCode::ShapeMismatch, "score buffer size does not match rows x classes");
  std::vector<double> probs;
  probs.reserve(scores.size());
  for (std::size_t i = 0; i < rows; ++i) {
    auto p = softmax(scores.subspan(i * K, K), temperature);
    probs.insert(probs.end(), p.begin(), p.end());
  }
  return OracleSource(rows, numClasses, std::move(probs), "scores:softmax");
}

// ---------------------------------------------------------------------------
// Threshold set

bool ThresholdSet::contains(double v) const { return std::binary_search(values.begin(), values.end(), v); }

ThresholdSet threshold_set(const OracleSource& o, std::span<const RowIndex> rows) {
  if (rows.empty())
    throw Error(ErrorCode::EmptySample, "threshold set over an empty sample");
  ThresholdSet t;
  t.values.reserve(rows.size() * static_cast<std::size_t>(o.num_classes()));
  for (RowIndex r : rows) {
    auto row = o.row(r);
    t.values.insert(t.values.end(), row.begin(), row.end());
  }
  std::sort(t.values.begin(), t.values.end());
  t.values.erase(std::unique(t.values.begin(), t.values.end()), t.values.end());
  return t;
}

ThresholdSet threshold_set(const OracleSource& o) {
  IndexList rows(o.num_rows());
  std::iota(rows.begin(), rows.end(), RowIndex{0});
  return threshold_set(o, rows);
}

} // namespace crembo
