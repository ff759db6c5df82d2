#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "crembo/crembo.hpp"
#include "crembo/depth.hpp"
#include "crembo/eval.hpp"
#include "crembo/learners.hpp"
#include "crembo/memo.hpp"

namespace crembo {

/// Insertion-ordered so dumps are stable byte for byte.
using Json = nlohmann::ordered_json;

/// Nested form: internal nodes {"feat", "thr", "left", "right"}, leaves
/// {"leaf"} plus an optional "dist".
Json to_json(const TreeModel& t);
TreeModel tree_from_json(const Json& j);

Json to_json(const ForestModel& f);
ForestModel forest_from_json(const Json& j);

Json to_json(const LearnerConfig& c);
Json to_json(const ForestConfig& c);
Json to_json(const CremboConfig& c);
Json to_json(const MemoResult& r);
Json to_json(const CremboResult& r);
Json to_json(const DepthProfile& p);
Json to_json(const ExperimentReport& r);
Json to_json(const RobustnessReport& r);
Json to_json(const BreakdownReport& r);

/// Two-space indented with a trailing newline.
std::string dump(const Json& j);
void save_json(const std::filesystem::path& path, const Json& j);
Json load_json(const std::filesystem::path& path);

/// Nested if/else rendering of the tree.
std::string describe(const TreeModel& t, const std::vector<std::string>& columnNames = {},
                     const std::vector<std::string>& classNames = {});

} // namespace crembo
