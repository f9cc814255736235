// Microbenchmarks for the hot tensor kernels. The finite guard is switched
// off in main so the numbers reflect raw kernel cost, not NaN scanning.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <utility>
#include <vector>

#include "ctc/init.hpp"
#include "ctc/ops.hpp"
#include "ctc/tape.hpp"
#include "ctc/tensor.hpp"

namespace {

ctc::Tensor random_tensor(ctc::Shape shape, std::uint64_t seed, bool requires_grad = false) {
    ctc::SeededRng rng(seed);
    std::vector<float> v(static_cast<std::size_t>(ctc::shape_numel(shape)));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return ctc::tensor_create<float>(std::move(shape), std::move(v), requires_grad);
}

void BM_matmul(benchmark::State& state) {
    const ctc::Extent n = state.range(0);
    const auto a = random_tensor({n, n}, 1);
    const auto b = random_tensor({n, n}, 2);
    for (auto _ : state) {
        auto c = ctc::matmul(a, b);
        benchmark::DoNotOptimize(c.values().data());
    }
    state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_conv1d(benchmark::State& state) {
    const ctc::Extent t = state.range(0);
    const auto x = random_tensor({8, 128, t}, 3);
    const auto k = random_tensor({128, 128, 3}, 4);
    const auto b = random_tensor({128}, 5);
    for (auto _ : state) {
        auto y = ctc::conv1d(x, k, b);
        benchmark::DoNotOptimize(y.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 8 * (t - 2));
}
BENCHMARK(BM_conv1d)->Arg(100)->Arg(500);

void BM_global_max_pool(benchmark::State& state) {
    const auto x = random_tensor({8, 128, 500}, 6);
    for (auto _ : state) {
        auto y = ctc::global_max_pool(x);
        benchmark::DoNotOptimize(y.values().data());
    }
}
BENCHMARK(BM_global_max_pool);

void BM_softmax_cross_entropy(benchmark::State& state) {
    const auto logits = random_tensor({256, 25}, 7);
    std::vector<int> labels(256);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 25);
    for (auto _ : state) {
        auto loss = ctc::cross_entropy(ctc::softmax(logits), labels);
        benchmark::DoNotOptimize(loss.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_softmax_cross_entropy);

// One taped forward + backward through a conv/pool/dense chain: the shape of
// a single training step at the op level.
void BM_forward_backward_chain(benchmark::State& state) {
    const auto x = random_tensor({8, 64, 100}, 8);
    auto k = random_tensor({64, 64, 3}, 9, true);
    auto b = random_tensor({64}, 10, true);
    auto w = random_tensor({64, 25}, 11, true);
    std::vector<int> labels(8);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 25);
    for (auto _ : state) {
        ctc::Tape tape;
        ctc::Tape::Scope scope(tape);
        auto h = ctc::global_max_pool(ctc::relu(ctc::conv1d(x, k, b)));
        auto loss = ctc::cross_entropy(ctc::softmax(ctc::matmul(h, w)), labels);
        ctc::backward(loss);
        benchmark::DoNotOptimize(loss.values().data());
        k.zero_grad();
        b.zero_grad();
        w.zero_grad();
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_forward_backward_chain);

}  // namespace

int main(int argc, char** argv) {
    ctc::set_finite_guard(false);  // throughput only; the test suites keep it on
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
