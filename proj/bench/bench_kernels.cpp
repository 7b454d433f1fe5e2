// Serial reference kernels against their OpenMP counterparts.
// Run with OMP_NUM_THREADS set to compare thread counts; args are {n, p, k}.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "taxaudit/kernels.hpp"

namespace {

namespace k = taxaudit::kernels;

struct Problem {
    Eigen::MatrixXd points;
    Eigen::MatrixXd centroids;
    std::vector<int> assignments;
    std::vector<double> distances;
};

Problem make_problem(const benchmark::State& state) {
    const auto n = state.range(0), p = state.range(1), clusters = state.range(2);
    std::mt19937_64 gen(11);
    std::normal_distribution<double> z;
    Problem pr;
    pr.points = Eigen::MatrixXd::NullaryExpr(n, p, [&] { return z(gen); });
    pr.centroids = pr.points.topRows(clusters);
    pr.assignments.resize(static_cast<std::size_t>(n));
    pr.distances.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) pr.assignments[static_cast<std::size_t>(i)] = static_cast<int>(i % clusters);
    return pr;
}

template <auto Fn>
void assign(benchmark::State& state) {
    auto pr = make_problem(state);
    for (auto _ : state) {
        Fn(pr.points, pr.centroids, pr.assignments, pr.distances);
        benchmark::DoNotOptimize(pr.assignments.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void update(benchmark::State& state) {
    auto pr = make_problem(state);
    const int clusters = static_cast<int>(state.range(2));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(pr.points, pr.assignments, clusters));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void inertia(benchmark::State& state) {
    auto pr = make_problem(state);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(pr.points, pr.centroids, pr.assignments));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void sizes(benchmark::internal::Benchmark* b) {
    b->Args({50, 4, 5})->Args({2000, 16, 8})->Args({50000, 32, 16});
}

}  // namespace

BENCHMARK(assign<k::serial::assign_nearest>)->Name("assign_nearest/serial")->Apply(sizes);
BENCHMARK(assign<k::omp::assign_nearest>)->Name("assign_nearest/omp")->Apply(sizes);
BENCHMARK(update<k::serial::update_centroids>)->Name("update_centroids/serial")->Apply(sizes);
BENCHMARK(update<k::omp::update_centroids>)->Name("update_centroids/omp")->Apply(sizes);
BENCHMARK(inertia<k::serial::inertia>)->Name("inertia/serial")->Apply(sizes);
BENCHMARK(inertia<k::omp::inertia>)->Name("inertia/omp")->Apply(sizes);

BENCHMARK_MAIN();
