#include "crembo/kernels.hpp"

#include <exception>

#include <omp.h>

namespace crembo::kernels {

namespace {

template <class Model>
void check(const Model& m, const Dataset& d) {
  check_dimensions(m.num_attrs(), d);
}

} // namespace

// ---------------------------------------------------------------------------
// Serial references

namespace serial {

std::vector<ClassId> predict(const TreeModel& tree, const Dataset& d) {
  check(tree, d);
  std::vector<ClassId> out(d.num_rows());
  for (RowIndex i = 0; i < d.num_rows(); ++i)
    out[i] = tree.predict_row(d.row(i));
  return out;
}

std::vector<int> forest_votes(const ForestModel& forest, const Dataset& d) {
  check(forest, d);
  const auto K = static_cast<std::size_t>(forest.num_classes());
  std::vector<int> counts(d.num_rows() * K, 0);
  for (RowIndex i = 0; i < d.num_rows(); ++i)
    for (const auto& t : forest.trees())
      ++counts[i * K + static_cast<std::size_t>(t.predict_row(d.row(i)))];
  return counts;
}

std::vector<ClassId> predict(const ForestModel& forest, const Dataset& d) {
  const auto votes = forest_votes(forest, d);
  const auto K = static_cast<std::size_t>(forest.num_classes());
  std::vector<ClassId> out(d.num_rows());
  for (RowIndex i = 0; i < d.num_rows(); ++i)
    out[i] = argmax_lowest(std::span<const int>(votes).subspan(i * K, K));
  return out;
}

std::vector<double> forest_soft_votes(const ForestModel& forest, const Dataset& d) {
  check(forest, d);
  const auto K = static_cast<std::size_t>(forest.num_classes());
  const double n = static_cast<double>(forest.tree_count());
  std::vector<double> out(d.num_rows() * K, 0.0);
  for (RowIndex i = 0; i < d.num_rows(); ++i) {
    for (const auto& t : forest.trees()) {
      const auto& leaf = t.leaf_for(d.row(i));
      if (leaf.distribution.size() == K)
        for (std::size_t c = 0; c < K; ++c)
          out[i * K + c] += leaf.distribution[c];
      else
        out[i * K + static_cast<std::size_t>(leaf.label)] += 1.0;
    }
    for (std::size_t c = 0; c < K; ++c)
      out[i * K + c] /= n;
  }
  return out;
}

std::vector<TreeModel> train_trees(const Dataset& d, const ForestConfig& cfg) {
  std::vector<TreeModel> trees;
  trees.reserve(static_cast<std::size_t>(cfg.treeCount));
  for (int i = 0; i < cfg.treeCount; ++i)
    trees.push_back(train_forest_tree(d, cfg, static_cast<std::size_t>(i)));
  return trees;
}

std::vector<double> point_depths(std::span<const ClassId> predictions, const OracleSource& o,
                                 std::span<const RowIndex> rows) {
  std::vector<double> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k)
    out[k] = o.prob(rows[k], predictions[rows[k]]);
  return out;
}

} // namespace serial

// ---------------------------------------------------------------------------
// OpenMP

std::vector<ClassId> predict(const TreeModel& tree, const Dataset& d) {
  check(tree, d);
  const auto n = static_cast<std::ptrdiff_t>(d.num_rows());
  std::vector<ClassId> out(d.num_rows());
#pragma omp parallel for schedule(static) if (n > 2048)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = tree.predict_row(d.row(static_cast<RowIndex>(i)));
  return out;
}

std::vector<int> forest_votes(const ForestModel& forest, const Dataset& d) {
  check(forest, d);
  const auto K = static_cast<std::size_t>(forest.num_classes());
  const auto n = static_cast<std::ptrdiff_t>(d.num_rows());
  std::vector<int> counts(d.num_rows() * K, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<RowIndex>(i);
    for (const auto& t : forest.trees())
      ++counts[r * K + static_cast<std::size_t>(t.predict_row(d.row(r)))];
  }
  return counts;
}

std::vector<ClassId> predict(const ForestModel& forest, const Dataset& d) {
  const auto votes = forest_votes(forest, d);
  const auto K = static_cast<std::size_t>(forest.num_classes());
  std::vector<ClassId> out(d.num_rows());
  for (RowIndex i = 0; i < d.num_rows(); ++i)
    out[i] = argmax_lowest(std::span<const int>(votes).subspan(i * K, K));
  return out;
}

std::vector<double> forest_soft_votes(const ForestModel& forest, const Dataset& d) {
  check(forest, d);
  const auto K = static_cast<std::size_t>(forest.num_classes());
  const double trees = static_cast<double>(forest.tree_count());
  const auto n = static_cast<std::ptrdiff_t>(d.num_rows());
  std::vector<double> out(d.num_rows() * K, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto r = static_cast<RowIndex>(i);
    // Per-row accumulation in tree order keeps the sum bit-identical to the
    // serial kernel.
    for (const auto& t : forest.trees()) {
      const auto& leaf = t.leaf_for(d.row(r));
      if (leaf.distribution.size() == K)
        for (std::size_t c = 0; c < K; ++c)
          out[r * K + c] += leaf.distribution[c];
      else
        out[r * K + static_cast<std::size_t>(leaf.label)] += 1.0;
    }
    for (std::size_t c = 0; c < K; ++c)
      out[r * K + c] /= trees;
  }
  return out;
}

std::vector<TreeModel> train_trees(const Dataset& d, const ForestConfig& cfg) {
  std::vector<TreeModel> trees(static_cast<std::size_t>(cfg.treeCount));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < cfg.treeCount; ++i) {
    try {
      trees[static_cast<std::size_t>(i)] = train_forest_tree(d, cfg, static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(crembo_train_trees)
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);
  return trees;
}

std::vector<double> point_depths(std::span<const ClassId> predictions, const OracleSource& o,
                                 std::span<const RowIndex> rows) {
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  std::vector<double> out(rows.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const RowIndex r = rows[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k)] = o.prob(r, predictions[r]);
  }
  return out;
}

void set_max_threads(int n) {
  if (n > 0)
    omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

} // namespace crembo::kernels
