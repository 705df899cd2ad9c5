#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "step/clustering.hpp"
#include "step/direction.hpp"
#include "step/face.hpp"
#include "step/model.hpp"

namespace {

step::Matrix uniform_points(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  step::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

void BM_StepDirection(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  const step::Matrix pts = uniform_points(rows, 8, 1);
  std::vector<step::Label> labels(static_cast<std::size_t>(rows));
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = i % 2 ? step::Label::kPositive : step::Label::kNegative;
  const step::Vector poi = step::Vector::Zero(8);
  const auto alpha = step::AlphaFunction::volcano(2.0, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(step::step_direction(poi, pts, labels, alpha));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_StepDirection)->Range(256, 65536);

void BM_KMeans(benchmark::State& state) {
  const step::Matrix pts = uniform_points(state.range(0), 8, 2);
  for (auto _ : state) benchmark::DoNotOptimize(step::kmeans(pts, 3, 7));
}
BENCHMARK(BM_KMeans)->Range(256, 8192)->Unit(benchmark::kMillisecond);

void BM_FacePaths(benchmark::State& state) {
  const step::Matrix pts = uniform_points(state.range(0), 2, 3);
  const step::LogisticModel model((step::Vector(2) << 1.0, 1.0).finished(), -3.0);
  const step::Vector poi = step::Vector::Constant(2, -2.0);
  for (auto _ : state) {
    const step::RecourseGraph g = step::build_graph(pts, poi, 0.5);
    benchmark::DoNotOptimize(step::face_paths(g, model, 0.7, 3));
  }
}
BENCHMARK(BM_FacePaths)->Range(256, 4096)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
