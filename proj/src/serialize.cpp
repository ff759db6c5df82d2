#include "crembo/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace crembo {

namespace {

Json node_json(const TreeModel& t, int index) {
  const TreeNode& n = t.nodes()[static_cast<std::size_t>(index)];
  Json j;
  if (n.is_leaf()) {
    j["leaf"] = n.label;
    if (!n.distribution.empty())
      j["dist"] = n.distribution;
    return j;
  }
  j["feat"] = n.feature;
  j["thr"] = n.threshold;
  j["majority"] = n.label;
  j["left"] = node_json(t, n.left);
  j["right"] = node_json(t, n.right);
  return j;
}

int read_node(const Json& j, std::vector<TreeNode>& out) {
  const int index = static_cast<int>(out.size());
  out.emplace_back();
  TreeNode n;
  if (j.contains("leaf")) {
    n.label = j.at("leaf").get<ClassId>();
    if (j.contains("dist"))
      n.distribution = j.at("dist").get<std::vector<double>>();
  } else {
    n.feature = j.at("feat").get<int>();
    n.threshold = j.at("thr").get<double>();
    n.label = j.value("majority", ClassId{0});
    n.left = read_node(j.at("left"), out);
    n.right = read_node(j.at("right"), out);
  }
  out[static_cast<std::size_t>(index)] = std::move(n);
  return index;
}

const char* weighting_name(ClassWeighting w) { return w == ClassWeighting::Balanced ? "balanced" : "uniform"; }

ClassWeighting weighting_from(const std::string& s) {
  if (s == "balanced")
    return ClassWeighting::Balanced;
  if (s == "uniform")
    return ClassWeighting::Uniform;
  throw Error(ErrorCode::InvalidArgument, "unknown class weighting '" + s + "'");
}

template <typename F>
auto parse_guard(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed model file: ") + e.what());
  }
}

} // namespace

Json to_json(const TreeModel& t) {
  Json j;
  j["kind"] = "tree";
  j["num_attrs"] = t.num_attrs();
  j["num_classes"] = t.num_classes();
  j["max_depth"] = t.max_depth();
  j["root"] = node_json(t, 0);
  return j;
}

TreeModel tree_from_json(const Json& j) {
  return parse_guard([&] {
    if (j.at("kind").get<std::string>() != "tree")
      throw Error(ErrorCode::InvalidArgument, "not a tree model");
    std::vector<TreeNode> nodes;
    read_node(j.at("root"), nodes);
    return TreeModel(std::move(nodes), j.at("num_attrs").get<int>(), j.at("num_classes").get<int>(),
                     j.at("max_depth").get<int>());
  });
}

Json to_json(const LearnerConfig& c) {
  Json j;
  j["max_depth"] = c.maxDepth;
  j["min_leaf_size"] = c.minLeafSize;
  j["class_weighting"] = weighting_name(c.classWeighting);
  return j;
}

Json to_json(const ForestConfig& c) {
  Json j;
  j["tree_count"] = c.treeCount;
  j["max_depth"] = c.maxDepth;
  j["min_leaf_size"] = c.minLeafSize;
  j["class_weighting"] = weighting_name(c.classWeighting);
  j["seed"] = c.seed;
  return j;
}

Json to_json(const ForestModel& f) {
  Json j;
  j["kind"] = "forest";
  j["config"] = to_json(f.config());
  j["per_tree_seeds"] = f.per_tree_seeds();
  Json trees = Json::array();
  for (const auto& t : f.trees())
    trees.push_back(to_json(t));
  j["trees"] = std::move(trees);
  return j;
}

ForestModel forest_from_json(const Json& j) {
  return parse_guard([&] {
    if (j.at("kind").get<std::string>() != "forest")
      throw Error(ErrorCode::InvalidArgument, "not a forest model");
    const Json& c = j.at("config");
    ForestConfig cfg;
    cfg.treeCount = c.at("tree_count").get<int>();
    cfg.maxDepth = c.at("max_depth").get<int>();
    cfg.minLeafSize = c.at("min_leaf_size").get<int>();
    cfg.classWeighting = weighting_from(c.at("class_weighting").get<std::string>());
    cfg.seed = c.at("seed").get<std::uint64_t>();
    std::vector<TreeModel> trees;
    for (const auto& t : j.at("trees"))
      trees.push_back(tree_from_json(t));
    return ForestModel(std::move(trees), j.at("per_tree_seeds").get<std::vector<std::uint64_t>>(), cfg);
  });
}

Json to_json(const CremboConfig& c) {
  Json j;
  j["trim_grid"] = c.trimGrid;
  j["val_fraction"] = c.valFraction;
  j["seed"] = c.seed;
  j["stratified"] = c.stratified;
  return j;
}

Json to_json(const MemoResult& r) {
  Json j;
  j["depth"] = r.depth;
  j["threshold"] = r.threshold;
  j["learner_calls"] = r.learnerCalls;
  j["threshold_count"] = r.thresholdCount;
  j["probed_thresholds"] = r.probedThresholds;
  j["trimmed_rows"] = r.trimmedRows;
  j["model"] = to_json(r.model);
  return j;
}

Json to_json(const CremboResult& r) {
  Json j;
  j["chosen_epsilon"] = r.chosenEpsilon;
  j["depth"] = r.depth;
  j["val_accuracy"] = r.valAccuracy;
  j["threshold"] = r.threshold;
  j["learner_calls"] = r.learnerCalls;
  j["trimmed_rows"] = r.trimmedRows;
  Json trace = Json::array();
  for (const auto& e : r.perEpsilonTrace) {
    Json t;
    t["epsilon"] = e.epsilon;
    t["feasible"] = e.feasible;
    t["depth"] = e.depth;
    t["val_accuracy"] = e.valAccuracy;
    t["carried"] = e.carried;
    t["learner_calls"] = e.learnerCalls;
    trace.push_back(std::move(t));
  }
  j["trace"] = std::move(trace);
  j["model"] = to_json(r.model);
  return j;
}

Json to_json(const DepthProfile& p) {
  Json j;
  j["overall"] = p.overall;
  j["trimmed_rows"] = p.trimmedRows;
  Json pts = Json::array();
  for (const auto& q : p.perPoint)
    pts.push_back(Json{{"row", q.row}, {"depth", q.depth}});
  j["per_point"] = std::move(pts);
  return j;
}

Json to_json(const ExperimentReport& r) {
  Json j;
  j["compared"] = r.compared;
  j["big_model"] = r.bigName;
  j["repeats"] = r.repeats;
  j["seeds"] = r.seeds;
  Json acc, win;
  for (const auto& [m, a] : r.meanAccuracy)
    acc[m] = a;
  for (const auto& [m, w] : r.winRate)
    win[m] = w;
  j["mean_accuracy"] = std::move(acc);
  j["win_rate"] = std::move(win);
  Json folds = Json::array();
  for (const auto& f : r.folds) {
    Json fj;
    fj["repeat"] = f.repeat;
    fj["fold"] = f.foldIndex;
    Json a;
    for (const auto& [m, v] : f.accuracies)
      a[m] = v;
    fj["accuracy"] = std::move(a);
    fj["med_depth"] = f.medDepth;
    fj["med_epsilon"] = f.medEpsilon;
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  return j;
}

Json to_json(const RobustnessReport& r) {
  Json j;
  j["compared"] = r.compared;
  j["repeats"] = r.repeats;
  j["seeds"] = r.seeds;
  Json agr;
  for (const auto& [m, a] : r.agreement)
    agr[m] = a;
  j["agreement"] = std::move(agr);
  Json per = Json::array();
  for (const auto& rep : r.perRepeat) {
    Json e;
    for (const auto& [m, a] : rep)
      e[m] = a;
    per.push_back(std::move(e));
  }
  j["per_repeat"] = std::move(per);
  return j;
}

Json to_json(const BreakdownReport& r) {
  Json j;
  j["depth"] = r.depth;
  j["p_star"] = r.pStar;
  j["bound"] = r.bound;
  Json am = Json::array();
  for (const auto& [row, y] : r.argmins)
    am.push_back(Json::array({row, y}));
  j["argmins"] = std::move(am);
  j["perturbations"] = r.perturbations;
  j["within_bound"] = r.withinBound;
  j["violations"] = r.violations;
  j["empirical_breakdown"] = r.empiricalBreakdown ? Json(*r.empiricalBreakdown) : Json(nullptr);
  j["passed"] = r.passed;
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void save_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << dump(j);
  if (!out)
    throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void render(const TreeModel& t, int index, int indent, const std::vector<std::string>& cols,
            const std::vector<std::string>& classes, std::ostringstream& os) {
  const TreeNode& n = t.nodes()[static_cast<std::size_t>(index)];
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (n.is_leaf()) {
    os << pad << "return " << (static_cast<std::size_t>(n.label) < classes.size() ? classes[static_cast<std::size_t>(n.label)]
                                                                                   : std::to_string(n.label))
       << '\n';
    return;
  }
  const std::string name = static_cast<std::size_t>(n.feature) < cols.size() ? cols[static_cast<std::size_t>(n.feature)]
                                                                             : "x" + std::to_string(n.feature);
  os << pad << "if " << name << " < " << shortest(n.threshold) << ":\n";
  render(t, n.left, indent + 1, cols, classes, os);
  os << pad << "else:\n";
  render(t, n.right, indent + 1, cols, classes, os);
}

} // namespace

std::string describe(const TreeModel& t, const std::vector<std::string>& columnNames,
                     const std::vector<std::string>& classNames) {
  std::ostringstream os;
  render(t, 0, 0, columnNames, classNames, os);
  return os.str();
}

} // namespace crembo
