// Serial reference vs OpenMP kernels on Iris-sized and enlarged inputs.

#include <benchmark/benchmark.h>

#include <random>

#include "crembo/kernels.hpp"

using namespace crembo;

namespace {

/// Three Gaussian classes on four attributes.
Dataset make_data(std::size_t rows) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> x;
  std::vector<ClassId> y;
  for (std::size_t i = 0; i < rows; ++i) {
    const ClassId c = static_cast<ClassId>(i % 3);
    for (int a = 0; a < 4; ++a)
      x.push_back(2.0 * c + a + noise(rng));
    y.push_back(c);
  }
  return Dataset(rows, 4, std::move(x), std::move(y), 3);
}

const Dataset& data() {
  static const Dataset d = make_data(5000);
  return d;
}

ForestConfig forest_config(int trees) {
  ForestConfig fc;
  fc.treeCount = trees;
  fc.maxDepth = 8;
  fc.seed = 3;
  return fc;
}

const ForestModel& forest() {
  static const ForestModel f = train_forest(data(), forest_config(100));
  return f;
}

const OracleSource& oracle() {
  static const OracleSource o = ensemble_vote_oracle(forest(), data());
  return o;
}

template <auto Fn>
void run_votes(benchmark::State& state) {
  const ForestModel& f = forest();
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(f, data()));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data().num_rows()));
}

template <auto Fn>
void run_train(benchmark::State& state) {
  const Dataset d = make_data(1000);
  const ForestConfig fc = forest_config(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(d, fc));
}

template <auto Fn>
void run_depths(benchmark::State& state) {
  const std::vector<ClassId> f = forest().predict(data());
  const IndexList rows = [] {
    IndexList r(data().num_rows());
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] = i;
    return r;
  }();
  const OracleSource& o = oracle();
  for (auto _ : state)
    benchmark::DoNotOptimize(Fn(f, o, rows));
}

using PredictFn = std::vector<ClassId> (*)(const ForestModel&, const Dataset&);
using TrainFn = std::vector<TreeModel> (*)(const Dataset&, const ForestConfig&);

constexpr PredictFn kSerialPredict = &kernels::serial::predict;
constexpr PredictFn kOmpPredict = &kernels::predict;
constexpr TrainFn kSerialTrain = &kernels::serial::train_trees;
constexpr TrainFn kOmpTrain = &kernels::train_trees;

} // namespace

BENCHMARK(run_votes<kSerialPredict>)->Name("predict/serial");
BENCHMARK(run_votes<kOmpPredict>)->Name("predict/omp");
BENCHMARK(run_votes<&kernels::serial::forest_votes>)->Name("votes/serial");
BENCHMARK(run_votes<&kernels::forest_votes>)->Name("votes/omp");
BENCHMARK(run_votes<&kernels::serial::forest_soft_votes>)->Name("soft_votes/serial");
BENCHMARK(run_votes<&kernels::forest_soft_votes>)->Name("soft_votes/omp");
BENCHMARK(run_train<kSerialTrain>)->Name("train_trees/serial")->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(run_train<kOmpTrain>)->Name("train_trees/omp")->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(run_depths<&kernels::serial::point_depths>)->Name("point_depths/serial");
BENCHMARK(run_depths<&kernels::point_depths>)->Name("point_depths/omp");

BENCHMARK_MAIN();
