// Command-line driver: forest training, compression, experiments and model
// inspection. Every JSON artifact carries the resolved run configuration.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crembo/crembo.hpp"
#include "crembo/eval.hpp"
#include "crembo/kernels.hpp"
#include "crembo/oracle.hpp"
#include "crembo/serialize.hpp"

namespace fs = std::filesystem;
using namespace crembo;

namespace {

// ---------------------------------------------------------------------------
// Config file injection

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::Io, "cannot open config " + path.string());
  std::vector<std::string> args;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    line = trim_ws(line);
    if (line.empty())
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(lineNo) + ": expected key = value");
    const std::string key = trim_ws(line.substr(0, eq));
    const std::string value = trim_ws(line.substr(eq + 1));
    if (key.empty())
      throw Error(ErrorCode::InvalidArgument, path.string() + ":" + std::to_string(lineNo) + ": empty key");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

/// Removes `--config FILE` from argv and splices the file's entries in right
/// after the subcommand name, so explicit flags (which come later) win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> in(argv + 1, argv + argc), rest;
  std::optional<fs::path> config;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == "--config") {
      if (i + 1 >= in.size())
        throw Error(ErrorCode::InvalidArgument, "--config needs a file");
      config = in[++i];
    } else if (in[i].rfind("--config=", 0) == 0) {
      config = in[i].substr(9);
    } else {
      rest.push_back(in[i]);
    }
  }
  if (!config)
    return rest;
  const auto injected = read_config(*config);
  auto sub = std::find_if(rest.begin(), rest.end(), [](const std::string& a) { return a.empty() || a[0] != '-'; });
  if (sub == rest.end())
    throw Error(ErrorCode::InvalidArgument, "--config requires a subcommand");
  rest.insert(sub + 1, injected.begin(), injected.end());
  return rest;
}

// ---------------------------------------------------------------------------
// Shared options

struct DataArgs {
  std::string data;
  std::string label;
  std::string dropList;

  void add(CLI::App* app, bool labelRequired = true) {
    app->add_option("--data", data, "CSV dataset")->required();
    auto* l = app->add_option("--label", label, "label column");
    if (labelRequired)
      l->required();
    app->add_option("--drop", dropList, "comma separated columns to ignore");
  }

  Dataset load() const {
    if (label.empty())
      return load_csv_features(data);
    CsvSchema schema;
    std::stringstream ss(dropList);
    for (std::string c; std::getline(ss, c, ',');)
      if (!trim_ws(c).empty())
        schema.dropColumns.push_back(trim_ws(c));
    return load_csv(data, label, schema);
  }

  Json json() const {
    Json j;
    j["data"] = data;
    j["label"] = label;
    j["drop"] = dropList;
    return j;
  }
};

struct TreeArgs {
  int maxDepth = 4;
  int minLeaf = 1;
  std::string weighting = "balanced";

  void add(CLI::App* app) {
    app->add_option("--max-depth", maxDepth, "depth of the compact tree")->check(CLI::PositiveNumber);
    app->add_option("--min-leaf", minLeaf, "minimum rows per leaf for standard trees")->check(CLI::PositiveNumber);
    app->add_option("--weighting", weighting, "class weighting for Gini trees")
        ->check(CLI::IsMember({"balanced", "uniform"}));
  }

  LearnerConfig config() const {
    LearnerConfig c;
    c.maxDepth = maxDepth;
    c.minLeafSize = minLeaf;
    c.classWeighting = weighting == "uniform" ? ClassWeighting::Uniform : ClassWeighting::Balanced;
    return c;
  }
};

struct ForestArgs {
  int trees = 100;
  int maxDepth = 12;
  int minLeaf = 1;
  std::string weighting = "balanced";

  void add(CLI::App* app, const std::string& prefix) {
    app->add_option("--" + prefix + "trees", trees, "number of trees")->check(CLI::PositiveNumber);
    app->add_option("--" + prefix + "depth", maxDepth, "maximal tree depth")->check(CLI::PositiveNumber);
    app->add_option("--" + prefix + "min-leaf", minLeaf, "minimum rows per leaf")->check(CLI::PositiveNumber);
    app->add_option("--" + prefix + "weighting", weighting, "class weighting")
        ->check(CLI::IsMember({"balanced", "uniform"}));
  }

  ForestConfig config(std::uint64_t seed) const {
    ForestConfig c;
    c.treeCount = trees;
    c.maxDepth = maxDepth;
    c.minLeafSize = minLeaf;
    c.classWeighting = weighting == "uniform" ? ClassWeighting::Uniform : ClassWeighting::Balanced;
    c.seed = seed;
    return c;
  }
};

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    tok = trim_ws(tok);
    double v = 0.0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || r.ec != std::errc() || r.ptr != tok.data() + tok.size())
      throw Error(ErrorCode::InvalidArgument, "bad trim level '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

struct CremboArgs {
  std::string trimGrid = "0,0.01,0.02,0.05,0.1";
  double valFraction = 0.15;
  bool unstratified = false;

  void add(CLI::App* app) {
    app->add_option("--trim-grid", trimGrid, "comma separated ascending trim levels");
    app->add_option("--val-fraction", valFraction, "validation share of the training rows");
    app->add_flag("--unstratified", unstratified, "plain random splits");
  }

  CremboConfig config(std::uint64_t seed) const {
    CremboConfig c;
    c.trimGrid = parse_grid(trimGrid);
    c.valFraction = valFraction;
    c.seed = seed;
    c.stratified = !unstratified;
    validate(c);
    return c;
  }
};

struct Common {
  std::uint64_t seed = 0;
  int jobs = 0;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "master seed")->envname("CREMBO_SEED");
    app->add_option("--jobs", jobs, "worker threads (0: all)")->check(CLI::NonNegativeNumber);
  }
};

void prepare_out(const fs::path& p) {
  if (p.has_parent_path())
    fs::create_directories(p.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
  prepare_out(p);
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Io, "cannot write " + p.string());
  out << text;
}

std::string trace_table(const CremboResult& r) {
  std::ostringstream os;
  os << std::left << std::setw(9) << "epsilon" << std::setw(10) << "feasible" << std::setw(11) << "depth"
     << std::setw(10) << "val acc" << std::setw(8) << "calls" << "carried\n";
  for (const auto& e : r.perEpsilonTrace) {
    os << std::setw(9) << e.epsilon << std::setw(10) << (e.feasible ? "yes" : "no");
    if (e.feasible)
      os << std::setw(11) << std::fixed << std::setprecision(4) << e.depth << std::setw(10) << e.valAccuracy
         << std::defaultfloat << std::setw(8) << e.learnerCalls << (e.carried ? "yes" : "no");
    os << '\n';
  }
  os << "chosen epsilon " << r.chosenEpsilon << ", depth " << r.depth << ", validation accuracy " << r.valAccuracy
     << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Median-hypothesis compression of ensembles into small decision trees", "crembo"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  Common common;
  DataArgs data;
  TreeArgs tree;
  ForestArgs forest;
  CremboArgs crembo;

  // train-forest
  auto* trainCmd = app.add_subcommand("train-forest", "train a random forest and save it as JSON");
  std::string forestOut;
  data.add(trainCmd);
  forest.add(trainCmd, "");
  common.add(trainCmd);
  trainCmd->add_option("--out", forestOut, "forest JSON")->required();

  // compress
  auto* compressCmd = app.add_subcommand("compress", "compress a forest or a probability matrix into a tree");
  std::string forestIn, matrixIn, outDir = ".";
  bool normalize = false, softVotes = false;
  data.add(compressCmd);
  tree.add(compressCmd);
  crembo.add(compressCmd);
  common.add(compressCmd);
  auto* fOpt = compressCmd->add_option("--forest", forestIn, "forest JSON from train-forest");
  auto* mOpt = compressCmd->add_option("--matrix", matrixIn, "probability matrix CSV");
  fOpt->excludes(mOpt);
  compressCmd->add_flag("--normalize", normalize, "rescale matrix rows onto the simplex");
  compressCmd->add_flag("--soft-votes", softVotes, "average leaf distributions instead of hard votes");
  compressCmd->add_option("--out-dir", outDir, "directory for tree.json, crembo.json and tree.txt");

  // evaluate / robustness
  std::string big = "forest", reportOut;
  int repeats = 20;
  std::size_t folds = 10;
  double testFraction = 0.15;
  auto addExperiment = [&](CLI::App* cmd) {
    data.add(cmd);
    tree.add(cmd);
    forest.add(cmd, "forest-");
    crembo.add(cmd);
    common.add(cmd);
    cmd->add_option("--big", big, "big model kind")->check(CLI::IsMember({"forest", "matrix"}));
    cmd->add_option("--matrix", matrixIn, "probability matrix CSV for --big matrix");
    cmd->add_flag("--normalize", normalize, "rescale matrix rows onto the simplex");
    cmd->add_flag("--soft-votes", softVotes, "average leaf distributions instead of hard votes");
    cmd->add_option("--repeats", repeats, "repeats of the protocol");
    cmd->add_option("--folds", folds, "folds per repeat");
    cmd->add_option("--out", reportOut, "report JSON");
  };
  auto* evalCmd = app.add_subcommand("evaluate", "cross-validated accuracy and win rates of BM, ST and MED");
  addExperiment(evalCmd);
  auto* robustCmd = app.add_subcommand("robustness", "fold-omission agreement of BM, ST and MED");
  addExperiment(robustCmd);
  robustCmd->add_option("--test-fraction", testFraction, "held-out share");

  // export-oracle
  auto* exportCmd = app.add_subcommand("export-oracle", "write a forest's vote matrix in the matrix format");
  std::string matrixOut;
  DataArgs exportData;
  exportData.add(exportCmd, false);
  common.add(exportCmd);
  exportCmd->add_option("--forest", forestIn, "forest JSON")->required();
  exportCmd->add_option("--out", matrixOut, "matrix CSV")->required();
  exportCmd->add_flag("--soft-votes", softVotes, "average leaf distributions instead of hard votes");

  // describe
  auto* describeCmd = app.add_subcommand("describe", "render a tree as nested if/else");
  std::string modelIn;
  DataArgs describeData;
  describeCmd->add_option("--model", modelIn, "tree JSON, or a report holding one under \"model\"")->required();
  describeCmd->add_option("--data", describeData.data, "dataset for column and class names");
  describeCmd->add_option("--label", describeData.label, "label column of --data");

  // make-synthetic
  auto* synthCmd = app.add_subcommand("make-synthetic", "write a synthetic noisy multiclass dataset");
  SyntheticSpec synth = heart_surrogate_spec();
  std::string synthOut;
  synthCmd->add_option("--out", synthOut, "CSV path")->required();
  synthCmd->add_option("--seed", synth.seed, "generator seed")->envname("CREMBO_SEED");
  synthCmd->add_option("--rows", synth.rows, "rows");
  synthCmd->add_option("--noise", synth.labelNoise, "label noise");
  synthCmd->add_option("--separation", synth.separation, "class center spread");

  std::vector<std::string> args = expand_config(argc, argv);
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  kernels::set_max_threads(common.jobs);

  if (*trainCmd) {
    const Dataset d = data.load();
    const ForestModel f = train_forest(d, forest.config(common.seed));
    Json out = to_json(f);
    Json run;
    run["command"] = "train-forest";
    run["dataset"] = data.json();
    run["forest"] = to_json(forest.config(common.seed));
    run["seed"] = common.seed;
    out["run"] = std::move(run);
    prepare_out(forestOut);
    save_json(forestOut, out);
    std::cout << "wrote " << f.tree_count() << " trees to " << forestOut << '\n';
    return 0;
  }

  if (*compressCmd) {
    if (forestIn.empty() == matrixIn.empty())
      throw Error(ErrorCode::InvalidArgument, "give exactly one of --forest and --matrix");
    const Dataset d = data.load();
    const CremboConfig cc = crembo.config(common.seed);
    const LearnerConfig lc = tree.config();
    CompressResult r;
    if (!forestIn.empty()) {
      const ForestModel f = forest_from_json(load_json(forestIn));
      check_dimensions(f.num_attrs(), d);
      r = compress(d, f, cc, lc, softVotes);
    } else {
      r = compress(d, fs::path(matrixIn), MatrixOptions{normalize}, cc, lc);
    }
    Json run;
    run["command"] = "compress";
    run["dataset"] = data.json();
    run["oracle"] = forestIn.empty() ? Json{{"matrix", matrixIn}, {"normalize", normalize}}
                                     : Json{{"forest", forestIn}, {"soft_votes", softVotes}};
    run["oracle_provenance"] = r.oracleProvenance;
    run["learner"] = to_json(lc);
    run["crembo"] = to_json(cc);
    run["seed"] = common.seed;

    Json treeJson = to_json(r.crembo.model);
    treeJson["run"] = run;
    Json report = to_json(r.crembo);
    report["train_rows"] = r.trainRows;
    report["val_rows"] = r.valRows;
    report["run"] = run;
    const fs::path dir(outDir);
    fs::create_directories(dir);
    save_json(dir / "tree.json", treeJson);
    save_json(dir / "crembo.json", report);
    const std::string text = describe(r.crembo.model, d.column_names(), d.class_names());
    write_text(dir / "tree.txt", text);
    std::cout << trace_table(r.crembo) << '\n' << text;
    return 0;
  }

  if (*evalCmd || *robustCmd) {
    const Dataset d = data.load();
    PipelineConfig pc;
    pc.tree = tree.config();
    pc.crembo = crembo.config(common.seed);
    pc.folds = folds;
    pc.stratified = pc.crembo.stratified;
    pc.seed = common.seed;
    pc.repeats = repeats;
    pc.testFraction = testFraction;
    pc.big.softVotes = softVotes;
    if (big == "matrix") {
      if (matrixIn.empty())
        throw Error(ErrorCode::InvalidArgument, "--big matrix needs --matrix");
      pc.big.kind = BigModelKind::Matrix;
      pc.big.matrix = matrix_oracle(fs::path(matrixIn), d, MatrixOptions{normalize});
    } else {
      pc.big.forest = forest.config(common.seed);
    }
    validate(pc);

    Json run;
    run["command"] = *evalCmd ? "evaluate" : "robustness";
    run["dataset"] = data.json();
    run["big"] = big;
    if (big == "matrix")
      run["matrix"] = Json{{"path", matrixIn}, {"normalize", normalize}};
    else
      run["forest"] = to_json(pc.big.forest);
    run["soft_votes"] = softVotes;
    run["learner"] = to_json(pc.tree);
    run["crembo"] = to_json(pc.crembo);
    run["folds"] = folds;
    run["repeats"] = repeats;
    if (*robustCmd)
      run["test_fraction"] = testFraction;
    run["seed"] = common.seed;

    const std::string name = fs::path(data.data).stem().string();
    Json report;
    if (*evalCmd) {
      const ExperimentReport r = generalization_experiment(d, pc);
      std::cout << format_table(r, name);
      report = to_json(r);
    } else {
      const RobustnessReport r = robustness_experiment(d, pc);
      std::cout << format_table(r, name);
      report = to_json(r);
    }
    report["run"] = std::move(run);
    if (!reportOut.empty()) {
      prepare_out(reportOut);
      save_json(reportOut, report);
    }
    return 0;
  }

  if (*exportCmd) {
    const Dataset d = exportData.load();
    const ForestModel f = forest_from_json(load_json(forestIn));
    check_dimensions(f.num_attrs(), d);
    const OracleSource o = softVotes ? soft_vote_oracle(f, d) : ensemble_vote_oracle(f, d);
    std::vector<std::string> names = d.class_names();
    if (static_cast<int>(names.size()) != f.num_classes())
      names.clear();
    prepare_out(matrixOut);
    write_matrix_csv(o, matrixOut, names);
    Json run;
    run["command"] = "export-oracle";
    run["dataset"] = exportData.json();
    run["forest"] = forestIn;
    run["soft_votes"] = softVotes;
    run["provenance"] = o.provenance();
    run["seed"] = common.seed;
    save_json(matrixOut + ".json", Json{{"run", run}});
    std::cout << "wrote " << o.num_rows() << "x" << o.num_classes() << " matrix to " << matrixOut << '\n';
    return 0;
  }

  if (*describeCmd) {
    const Json j = load_json(modelIn);
    const TreeModel t = tree_from_json(j.contains("root") ? j : j.at("model"));
    std::vector<std::string> cols, classes;
    if (!describeData.data.empty()) {
      const Dataset d = describeData.load();
      cols = d.column_names();
      classes = d.class_names();
    }
    std::cout << describe(t, cols, classes);
    return 0;
  }

  if (*synthCmd) {
    const Dataset d = make_synthetic(synth);
    std::ostringstream os;
    for (const auto& c : d.column_names())
      os << c << ',';
    os << "label\n";
    for (RowIndex i = 0; i < d.num_rows(); ++i) {
      for (std::size_t a = 0; a < d.num_attrs(); ++a)
        os << d.at(i, a) << ',';
      os << d.label(i) << '\n';
    }
    write_text(synthOut, os.str());
    std::cout << "wrote " << d.num_rows() << " rows to " << synthOut << '\n';
    return 0;
  }
  return 2;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_validation_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
