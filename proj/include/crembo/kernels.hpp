#pragma once

// Data-parallel kernels. Every kernel has an OpenMP implementation (the one
// the library calls) and a serial reference in `serial::` that tests and the
// benchmark compare against. Both produce identical results for any thread
// count.

#include <span>
#include <vector>

#include "crembo/core.hpp"
#include "crembo/learners.hpp"
#include "crembo/oracle.hpp"

namespace crembo::kernels {

namespace serial {

std::vector<ClassId> predict(const TreeModel& tree, const Dataset& d);
std::vector<ClassId> predict(const ForestModel& forest, const Dataset& d);
/// Row-major [rows x classes] vote counts.
std::vector<int> forest_votes(const ForestModel& forest, const Dataset& d);
/// Row-major [rows x classes] mean leaf distributions.
std::vector<double> forest_soft_votes(const ForestModel& forest, const Dataset& d);
std::vector<TreeModel> train_trees(const Dataset& d, const ForestConfig& cfg);
/// O(x_r, predictions[r]) for each r in rows.
std::vector<double> point_depths(std::span<const ClassId> predictions, const OracleSource& o,
                                 std::span<const RowIndex> rows);

} // namespace serial

std::vector<ClassId> predict(const TreeModel& tree, const Dataset& d);
std::vector<ClassId> predict(const ForestModel& forest, const Dataset& d);
std::vector<int> forest_votes(const ForestModel& forest, const Dataset& d);
std::vector<double> forest_soft_votes(const ForestModel& forest, const Dataset& d);
std::vector<TreeModel> train_trees(const Dataset& d, const ForestConfig& cfg);
std::vector<double> point_depths(std::span<const ClassId> predictions, const OracleSource& o,
                                 std::span<const RowIndex> rows);

/// Caps the OpenMP team size; 0 keeps the runtime default.
void set_max_threads(int n);
int max_threads();

} // namespace crembo::kernels
