#include "crembo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "crembo/depth.hpp"
#include "crembo/memo.hpp"
#include "crembo/rng.hpp"

namespace crembo {

void validate(const PipelineConfig& cfg) {
  if (cfg.repeats < 1)
    throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
  if (cfg.folds < 2)
    throw Error(ErrorCode::InvalidArgument, "at least two folds are required");
  if (!(cfg.testFraction > 0.0 && cfg.testFraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "test fraction must lie in (0, 1)");
  if (cfg.tree.maxDepth < 0)
    throw Error(ErrorCode::InvalidArgument, "tree depth must be non-negative");
  validate(cfg.crembo);
  if (cfg.big.kind == BigModelKind::Forest && cfg.big.forest.treeCount < 1)
    throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  if (cfg.big.kind == BigModelKind::Matrix && !cfg.big.matrix)
    throw Error(ErrorCode::InvalidArgument, "matrix big model selected without a matrix");
}

PipelineModels run_pipeline(const Dataset& d, const IndexList& trainRows, std::uint64_t seed,
                            const PipelineConfig& cfg) {
  const Dataset train = d.subset(trainRows);
  PipelineModels out;
  OracleSource oracle;
  std::vector<ClassId> teacher;
  if (cfg.big.kind == BigModelKind::Forest) {
    ForestConfig fc = cfg.big.forest;
    fc.seed = derive_seed(seed, stream::kForest);
    out.forest = train_forest(train, fc);
    oracle = cfg.big.softVotes ? soft_vote_oracle(*out.forest, train) : ensemble_vote_oracle(*out.forest, train);
    teacher = out.forest->predict(train);
  } else {
    const OracleSource& full = *cfg.big.matrix;
    if (full.num_rows() != d.num_rows() || full.num_classes() != d.num_classes())
      throw Error(ErrorCode::ShapeMismatch, "matrix does not cover the dataset");
    oracle = full.subset(trainRows);
    teacher = oracle.argmax_all();
  }

  out.bm = train_standard_tree(train, cfg.tree);
  out.st = train_standard_tree(train.with_labels(teacher), cfg.tree);

  CremboConfig cc = cfg.crembo;
  cc.seed = seed;
  CompressResult cr = compress(train, oracle, cc, cfg.tree);
  out.med = cr.crembo.model;
  out.crembo = std::move(cr.crembo);
  for (RowIndex r : cr.trainRows)
    out.medTrainRows.push_back(trainRows[r]);
  for (RowIndex r : cr.valRows)
    out.valRows.push_back(trainRows[r]);
  std::sort(out.medTrainRows.begin(), out.medTrainRows.end());
  std::sort(out.valRows.begin(), out.valRows.end());
  return out;
}

namespace {

std::vector<ClassId> big_predictions(const PipelineModels& pm, const PipelineConfig& cfg, const Dataset& test,
                                     const IndexList& testRows) {
  if (pm.forest)
    return pm.forest->predict(test);
  return cfg.big.matrix->subset(testRows).argmax_all();
}

bool disjoint(const IndexList& a, const IndexList& b) {
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j)
      return false;
    *i < *j ? ++i : ++j;
  }
  return true;
}

void audit(const IndexList& train, const IndexList& test, const PipelineModels& pm) {
  IndexList sortedTrain = train, sortedTest = test;
  std::sort(sortedTrain.begin(), sortedTrain.end());
  std::sort(sortedTest.begin(), sortedTest.end());
  const bool ok = disjoint(pm.medTrainRows, sortedTest) && disjoint(pm.valRows, sortedTest) &&
                  disjoint(pm.medTrainRows, pm.valRows) &&
                  std::includes(sortedTrain.begin(), sortedTrain.end(), pm.medTrainRows.begin(),
                                pm.medTrainRows.end()) &&
                  std::includes(sortedTrain.begin(), sortedTrain.end(), pm.valRows.begin(), pm.valRows.end());
  if (!ok)
    throw Error(ErrorCode::ConstraintViolation, "median tree training touched held-out rows");
}

/// Runs job(i) for i in [0, n) in parallel, rethrowing the first failure.
template <typename Job>
void run_jobs(std::size_t n, Job&& job) {
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      job(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(crembo_eval_jobs)
      if (!failure)
        failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);
}

const std::vector<std::string>& compared_models() {
  static const std::vector<std::string> names{kBenchmarkTree, kStudentTree, kMedianTree};
  return names;
}

} // namespace

std::map<std::string, double> win_rates(const std::vector<std::map<std::string, double>>& rounds,
                                        const std::vector<std::string>& models) {
  std::map<std::string, double> credit;
  for (const auto& m : models)
    credit[m] = 0.0;
  if (rounds.empty() || models.empty())
    return credit;
  for (const auto& round : rounds) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& m : models)
      best = std::max(best, round.at(m));
    std::vector<std::string> tied;
    for (const auto& m : models)
      if (round.at(m) == best)
        tied.push_back(m);
    for (const auto& m : tied)
      credit[m] += 1.0 / static_cast<double>(tied.size());
  }
  for (auto& [m, c] : credit)
    c = 100.0 * c / static_cast<double>(rounds.size());
  return credit;
}

ExperimentReport generalization_experiment(const Dataset& d, const PipelineConfig& cfg) {
  validate(cfg);
  const auto& labels = d.labels();
  ExperimentReport report;
  report.compared = compared_models();
  report.bigName = cfg.big.name();
  report.repeats = cfg.repeats;

  std::vector<std::vector<Fold>> folds;
  for (int r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t s = derive_seed(cfg.seed, stream::kRepeat, static_cast<std::uint64_t>(r));
    report.seeds.push_back(s);
    folds.push_back(kfold(d, cfg.folds, derive_seed(s, stream::kFold), cfg.stratified));
  }

  const std::size_t perRepeat = cfg.folds;
  std::vector<FoldOutcome> outcomes(folds.size() * perRepeat);
  run_jobs(outcomes.size(), [&](std::size_t job) {
    const std::size_t r = job / perRepeat, j = job % perRepeat;
    const Fold& fold = folds[r][j];
    const PipelineModels pm = run_pipeline(d, fold.train, derive_seed(report.seeds[r], stream::kRound, j), cfg);
    audit(fold.train, fold.test, pm);

    const Dataset test = d.subset(fold.test);
    std::vector<ClassId> truth;
    for (RowIndex i : fold.test)
      truth.push_back(labels[i]);
    FoldOutcome& fo = outcomes[job];
    fo.repeat = r;
    fo.foldIndex = j;
    fo.accuracies[kBenchmarkTree] = accuracy(pm.bm.predict(test), truth);
    fo.accuracies[kStudentTree] = accuracy(pm.st.predict(test), truth);
    fo.accuracies[kMedianTree] = accuracy(pm.med.predict(test), truth);
    fo.accuracies[report.bigName] = accuracy(big_predictions(pm, cfg, test, fold.test), truth);
    fo.models.emplace(kBenchmarkTree, pm.bm);
    fo.models.emplace(kStudentTree, pm.st);
    fo.models.emplace(kMedianTree, pm.med);
    fo.medDepth = pm.crembo.depth;
    fo.medEpsilon = pm.crembo.chosenEpsilon;
  });

  std::vector<std::map<std::string, double>> rounds;
  for (const auto& fo : outcomes) {
    rounds.push_back(fo.accuracies);
    for (const auto& [m, a] : fo.accuracies)
      report.meanAccuracy[m] += a;
  }
  for (auto& [m, a] : report.meanAccuracy)
    a /= static_cast<double>(outcomes.size());
  report.winRate = win_rates(rounds, report.compared);
  report.folds = std::move(outcomes);
  return report;
}

double agreement(std::span<const ClassId> a, std::span<const ClassId> b) {
  if (a.size() != b.size() || a.empty())
    throw Error(ErrorCode::LengthMismatch, "agreement needs two non-empty vectors of equal length");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    same += a[i] == b[i];
  return static_cast<double>(same) / static_cast<double>(a.size());
}

double mean_pairwise_agreement(const std::vector<std::vector<ClassId>>& predictions) {
  if (predictions.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "pairwise agreement needs at least two prediction vectors");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    for (std::size_t j = i + 1; j < predictions.size(); ++j) {
      total += agreement(predictions[i], predictions[j]);
      ++pairs;
    }
  return total / static_cast<double>(pairs);
}

RobustnessReport robustness_experiment(const Dataset& d, const PipelineConfig& cfg) {
  validate(cfg);
  (void)d.labels();
  RobustnessReport report;
  report.compared = compared_models();
  report.repeats = cfg.repeats;

  struct Plan {
    IndexList pool, test;
    std::vector<Fold> folds;
  };
  std::vector<Plan> plans;
  for (int r = 0; r < cfg.repeats; ++r) {
    const std::uint64_t s = derive_seed(cfg.seed, stream::kRepeat, static_cast<std::uint64_t>(r));
    report.seeds.push_back(s);
    Plan p;
    std::tie(p.pool, p.test) = split_indices(d, SplitSpec{derive_seed(s, stream::kTestSplit), cfg.testFraction,
                                                          cfg.stratified});
    p.folds = kfold(d.subset(p.pool), cfg.folds, derive_seed(s, stream::kFold), cfg.stratified);
    plans.push_back(std::move(p));
  }

  const std::size_t perRepeat = cfg.folds;
  // predictions[job][model]
  std::vector<std::vector<std::vector<ClassId>>> predictions(plans.size() * perRepeat);
  run_jobs(predictions.size(), [&](std::size_t job) {
    const std::size_t r = job / perRepeat, j = job % perRepeat;
    const Plan& p = plans[r];
    IndexList train;
    for (RowIndex i : p.folds[j].train)
      train.push_back(p.pool[i]);
    std::sort(train.begin(), train.end());
    const PipelineModels pm = run_pipeline(d, train, derive_seed(report.seeds[r], stream::kRound, j), cfg);
    audit(train, p.test, pm);
    const Dataset test = d.subset(p.test);
    predictions[job] = {pm.bm.predict(test), pm.st.predict(test), pm.med.predict(test)};
  });

  for (std::size_t r = 0; r < plans.size(); ++r) {
    std::map<std::string, double> scores;
    for (std::size_t m = 0; m < report.compared.size(); ++m) {
      std::vector<std::vector<ClassId>> same;
      for (std::size_t j = 0; j < perRepeat; ++j)
        same.push_back(predictions[r * perRepeat + j][m]);
      scores[report.compared[m]] = mean_pairwise_agreement(same);
    }
    for (const auto& [m, a] : scores)
      report.agreement[m] += a / static_cast<double>(plans.size());
    report.perRepeat.push_back(std::move(scores));
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<double> default_delta_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 100; ++i)
    g.push_back(static_cast<double>(i) / 100.0);
  return g;
}

std::vector<double> project_rows(std::vector<double> values, int numClasses) {
  const auto k = static_cast<std::size_t>(numClasses);
  for (std::size_t base = 0; base + k <= values.size(); base += k) {
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double& v = values[base + c];
      v = std::clamp(v, 0.0, 1.0);
      s += v;
    }
    for (std::size_t c = 0; c < k; ++c)
      values[base + c] = s > 0.0 ? values[base + c] / s : 1.0 / static_cast<double>(k);
  }
  return values;
}

BreakdownReport breakdown_probe(const Dataset& d, const OracleSource& o, const ConsistentLearner& learner,
                                const BreakdownOptions& opts) {
  if (d.num_rows() > kProbeMaxRows || d.num_classes() > kProbeMaxClasses)
    throw Error(ErrorCode::InstanceTooLarge, "breakdown probe is limited to 6 rows and 3 classes");
  if (!learner.exact())
    throw Error(ErrorCode::InvalidArgument, "breakdown probe needs an exact learner");
  const std::vector<double> grid = opts.deltaGrid.empty() ? default_delta_grid() : opts.deltaGrid;
  const std::size_t m = d.num_rows();
  const int K = d.num_classes();
  const auto k = static_cast<std::size_t>(K);

  BreakdownReport rep;
  const MemoResult base = memo(d, o, learner);
  rep.depth = base.depth;
  const auto values = o.values();
  rep.pStar = *std::min_element(values.begin(), values.end());
  for (RowIndex i = 0; i < m; ++i)
    for (ClassId y = 0; y < K; ++y)
      if (o.prob(i, y) == rep.pStar)
        rep.argmins.emplace_back(i, y);
  rep.bound = (rep.depth - rep.pStar) / 2.0;
  const std::vector<ClassId> basePred = base.model.predict(d);

  auto consider = [&](std::vector<double> raw) {
    const OracleSource perturbed(m, K, project_rows(std::move(raw), K), "perturbed");
    double norm = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
      norm = std::max(norm, std::abs(values[i] - perturbed.values()[i]));
    ++rep.perturbations;
    const bool inside = norm < rep.bound - 1e-9;
    rep.withinBound += inside;
    const auto preds = memo(d, perturbed, learner).model.predict(d);
    const bool flipped = std::any_of(rep.argmins.begin(), rep.argmins.end(),
                                     [&](const auto& a) { return preds[a.first] == a.second; });
    if (!flipped)
      return;
    if (!rep.empiricalBreakdown || norm < *rep.empiricalBreakdown)
      rep.empiricalBreakdown = norm;
    rep.violations += inside;
  };

  const std::vector<double> original(values.begin(), values.end());
  const double spread = K > 1 ? 1.0 / static_cast<double>(K - 1) : 0.0;
  // Moves mass delta onto `up` and takes it evenly from the other classes.
  auto push = [&](std::vector<double>& raw, RowIndex i, ClassId up, double delta) {
    for (ClassId y = 0; y < K; ++y)
      raw[i * k + static_cast<std::size_t>(y)] += y == up ? delta : -delta * spread;
  };
  auto pull = [&](std::vector<double>& raw, RowIndex i, ClassId down, double delta) {
    for (ClassId y = 0; y < K; ++y)
      raw[i * k + static_cast<std::size_t>(y)] += y == down ? -delta : delta * spread;
  };

  Rng rng(derive_seed(opts.seed, stream::kPerturbation));
  std::uniform_int_distribution<int> sign(-1, 1);
  for (double delta : grid) {
    if (K > 1) {
      for (const auto& [x, y] : rep.argmins) {
        std::vector<double> both = original, target = original, rest = original;
        push(both, x, y, delta);
        push(target, x, y, delta);
        for (RowIndex i = 0; i < m; ++i) {
          if (i == x)
            continue;
          pull(both, i, basePred[i], delta);
          pull(rest, i, basePred[i], delta);
        }
        consider(std::move(both));
        consider(std::move(target));
        consider(std::move(rest));
      }
    }
    for (std::size_t t = 0; t < opts.randomPerturbations; ++t) {
      std::vector<double> raw = original;
      for (double& v : raw)
        v += delta * sign(rng);
      consider(std::move(raw));
    }
  }
  rep.passed = rep.violations == 0;
  return rep;
}

// ---------------------------------------------------------------------------

SyntheticSpec heart_surrogate_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.rows = 303;
  s.attrs = 13;
  s.informative = 5;
  s.classes = 5;
  s.priors = {164, 55, 36, 35, 13};
  s.separation = 1.6;
  s.labelNoise = 0.25;
  s.seed = seed;
  return s;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.rows == 0 || spec.attrs == 0)
    throw Error(ErrorCode::InvalidArgument, "synthetic data needs rows and attributes");
  if (spec.classes < 2 || spec.classes > kMaxClasses)
    throw Error(ErrorCode::InvalidArgument, "synthetic class count must lie in [2, 64]");
  if (spec.informative > spec.attrs)
    throw Error(ErrorCode::InvalidArgument, "more informative attributes than attributes");
  if (!spec.priors.empty() && spec.priors.size() != static_cast<std::size_t>(spec.classes))
    throw Error(ErrorCode::InvalidArgument, "one prior per class is required");
  if (!(spec.labelNoise >= 0.0 && spec.labelNoise <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "label noise must lie in [0, 1]");

  Rng rng(derive_seed(spec.seed, stream::kSynthetic));
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto K = static_cast<std::size_t>(spec.classes);
  std::vector<double> centers(K * spec.informative);
  for (double& c : centers)
    c = spec.separation * unit(rng);

  std::vector<double> priors = spec.priors;
  if (priors.empty())
    priors.assign(K, 1.0);
  std::discrete_distribution<int> draw(priors.begin(), priors.end());
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> anyClass(0, spec.classes - 1);

  std::vector<double> features(spec.rows * spec.attrs);
  std::vector<ClassId> labels(spec.rows);
  for (std::size_t i = 0; i < spec.rows; ++i) {
    const int c = draw(rng);
    for (std::size_t a = 0; a < spec.attrs; ++a) {
      double v = unit(rng);
      if (a < spec.informative)
        v += centers[static_cast<std::size_t>(c) * spec.informative + a];
      // Three decimals keep a CSV dump exact.
      features[i * spec.attrs + a] = std::round(v * 1000.0) / 1000.0;
    }
    labels[i] = coin(rng) < spec.labelNoise ? anyClass(rng) : c;
  }
  std::vector<std::string> columns, classes;
  for (std::size_t a = 0; a < spec.attrs; ++a)
    columns.push_back("x" + std::to_string(a));
  for (int c = 0; c < spec.classes; ++c)
    classes.push_back(std::to_string(c));
  return Dataset(spec.rows, spec.attrs, std::move(features), std::move(labels), spec.classes, std::move(columns),
                 std::move(classes));
}

// ---------------------------------------------------------------------------

namespace {

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

std::string cell(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

} // namespace

std::string format_table(const ExperimentReport& r, const std::string& datasetName) {
  constexpr std::size_t w = 8;
  const std::size_t nameW = std::max<std::size_t>(datasetName.size(), 7);
  std::vector<std::string> accCols = r.compared;
  accCols.push_back(r.bigName);

  std::ostringstream os;
  const std::size_t accW = accCols.size() * w, winW = r.compared.size() * w;
  os << std::left << std::setw(static_cast<int>(nameW)) << "" << " | " << std::setw(static_cast<int>(accW))
     << "Accuracy (%)" << " | " << "Win rate (%)" << '\n';
  os << std::setw(static_cast<int>(nameW)) << "Dataset" << " | ";
  for (const auto& m : accCols)
    os << cell(m, w);
  os << " | ";
  for (const auto& m : r.compared)
    os << cell(m, w);
  os << '\n' << std::string(nameW + 3 + accW + 3 + winW, '-') << '\n';
  os << std::setw(static_cast<int>(nameW)) << datasetName << " | ";
  for (const auto& m : accCols) {
    const auto it = r.meanAccuracy.find(m);
    os << cell(it == r.meanAccuracy.end() ? "-" : pct(it->second), w);
  }
  os << " | ";
  for (const auto& m : r.compared)
    os << cell(pct(r.winRate.at(m) / 100.0), w);
  os << '\n';
  return os.str();
}

std::string format_table(const RobustnessReport& r, const std::string& datasetName) {
  constexpr std::size_t w = 8;
  const std::size_t nameW = std::max<std::size_t>(datasetName.size(), 7);
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(nameW)) << "" << " | " << "Agreement (%)" << '\n';
  os << std::setw(static_cast<int>(nameW)) << "Dataset" << " | ";
  for (const auto& m : r.compared)
    os << cell(m, w);
  os << '\n' << std::string(nameW + 3 + r.compared.size() * w, '-') << '\n';
  os << std::setw(static_cast<int>(nameW)) << datasetName << " | ";
  for (const auto& m : r.compared)
    os << cell(pct(r.agreement.at(m)), w);
  os << '\n';
  return os.str();
}

} // namespace crembo
