// Serial reference vs OpenMP kernels. Thread count follows FSPIKE_THREADS.

#include "fspike/data_io.hpp"
#include "fspike/kernels.hpp"
#include "fspike/train.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using namespace fspike;

std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double zero_fraction = 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = p(rng) < zero_fraction ? 0.0 : u(rng);
    return v;
}

template <bool Parallel>
void BM_HistorySum(benchmark::State& state) {
    const int steps = static_cast<int>(state.range(0));
    const std::size_t dim = 4096;
    const auto c = predictor_weights(steps, 0.1, FractionalOrder(0.7));
    const auto hist = random_vector(static_cast<std::size_t>(steps + 1) * dim, 1);
    std::vector<double> out(dim);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::omp::history_sum(out, c, hist, steps, 0, steps - 1);
        else
            kernels::serial::history_sum(out, c, hist, steps, 0, steps - 1);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * steps * static_cast<std::int64_t>(dim));
}

template <bool Parallel>
void BM_Matvec(benchmark::State& state) {
    const std::size_t rows = static_cast<std::size_t>(state.range(0));
    const std::size_t cols = 784;
    const auto w = random_vector(rows * cols, 2);
    const auto x = random_vector(cols, 3, 0.7);
    std::vector<double> out(rows);
    for (auto _ : state) {
        std::fill(out.begin(), out.end(), 0.0);
        if constexpr (Parallel)
            kernels::omp::matvec_accumulate(out, w, x);
        else
            kernels::serial::matvec_accumulate(out, w, x);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_Outer(benchmark::State& state) {
    const std::size_t rows = static_cast<std::size_t>(state.range(0));
    const std::size_t cols = 784;
    std::vector<double> g(rows * cols);
    const auto u = random_vector(rows, 4);
    const auto x = random_vector(cols, 5, 0.7);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::omp::outer_accumulate(g, 1e-3, u, x);
        else
            kernels::serial::outer_accumulate(g, 1e-3, u, x);
        benchmark::DoNotOptimize(g.data());
    }
}

template <kernels::Exec E>
void BM_BatchGradient(benchmark::State& state) {
    const int batch = static_cast<int>(state.range(0));
    NeuronParams p;
    p.alpha = FractionalOrder(0.8);
    const std::size_t dims[] = {784, 128, 10};
    const NetworkSpec spec = make_network(dims, p, p.alpha, 0);
    TrainConfig cfg;
    cfg.exec = E;
    Dataset data;
    data.feature_dim = 784;
    data.classes = 10;
    data.features = random_vector(static_cast<std::size_t>(batch) * 784, 6);
    for (auto& v : data.features) v = std::abs(v) * 0.5;
    for (int b = 0; b < batch; ++b) data.labels.push_back(b % 10);
    std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) idx[static_cast<std::size_t>(b)] = static_cast<std::size_t>(b);
    const InputTensor input = encode_batch(data, idx, cfg, 1);
    for (auto _ : state) {
        auto r = batch_gradient(spec, input, data.labels, cfg);
        benchmark::DoNotOptimize(r.loss);
    }
    state.SetItemsProcessed(state.iterations() * batch);
}

} // namespace

BENCHMARK(BM_HistorySum<false>)->Name("history_sum/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_HistorySum<true>)->Name("history_sum/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_Matvec<false>)->Name("matvec/serial")->Arg(128)->Arg(1024);
BENCHMARK(BM_Matvec<true>)->Name("matvec/omp")->Arg(128)->Arg(1024);
BENCHMARK(BM_Outer<false>)->Name("outer/serial")->Arg(128)->Arg(1024);
BENCHMARK(BM_Outer<true>)->Name("outer/omp")->Arg(128)->Arg(1024);
BENCHMARK(BM_BatchGradient<fspike::kernels::Exec::serial>)->Name("batch_gradient/serial")->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradient<fspike::kernels::Exec::parallel>)->Name("batch_gradient/omp")->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
