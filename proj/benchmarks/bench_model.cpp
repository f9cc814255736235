// Whole-model timings: forward passes, batched prediction, and one optimizer
// step, at desk dimensions and at the published full-width dimensions.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "ctc/init.hpp"
#include "ctc/models.hpp"
#include "ctc/ops.hpp"
#include "ctc/tape.hpp"
#include "ctc/tensor.hpp"
#include "ctc/train.hpp"

namespace {

constexpr ctc::Extent kVocab = 120;

std::vector<std::vector<int>> random_ids(ctc::Extent batch, ctc::Extent t, std::uint64_t seed) {
    ctc::SeededRng rng(seed);
    std::vector<std::vector<int>> ids(static_cast<std::size_t>(batch),
                                      std::vector<int>(static_cast<std::size_t>(t)));
    for (auto& row : ids) {
        for (auto& id : row) {
            id = 2 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(kVocab - 2));
        }
    }
    return ids;
}

void model_forward(benchmark::State& state, ctc::ModelKind kind, bool desk, ctc::Extent batch,
                   ctc::Extent t) {
    auto mc = desk ? ctc::desk_config(kind, kVocab, 25) : ctc::default_config(kind, kVocab, 25);
    mc.seed = 1;
    const ctc::Model model(mc);
    const auto ids = random_ids(batch, t, 11);
    for (auto _ : state) {
        auto probs = model.forward(ids);
        benchmark::DoNotOptimize(probs.values().data());
    }
    state.SetItemsProcessed(state.iterations() * batch);
}

void BM_concat_forward_desk(benchmark::State& state) {
    model_forward(state, ctc::ModelKind::concat, true, 32, 60);
}
BENCHMARK(BM_concat_forward_desk);

void BM_concat_forward_full(benchmark::State& state) {
    model_forward(state, ctc::ModelKind::concat, false, 8, 60);
}
BENCHMARK(BM_concat_forward_full);

void BM_textcnn_forward_desk(benchmark::State& state) {
    model_forward(state, ctc::ModelKind::textcnn, true, 256, 44);
}
BENCHMARK(BM_textcnn_forward_desk);

void BM_bilstm_forward_desk(benchmark::State& state) {
    model_forward(state, ctc::ModelKind::bilstm, true, 64, 60);
}
BENCHMARK(BM_bilstm_forward_desk);

void BM_vgg_forward_desk(benchmark::State& state) {
    model_forward(state, ctc::ModelKind::vgg, true, 32, 60);
}
BENCHMARK(BM_vgg_forward_desk);

// Full training step on the desk fused model: taped forward, cross-entropy,
// backward, gradient clip, optimizer update.
void BM_train_step_desk(benchmark::State& state) {
    auto mc = ctc::desk_config(ctc::ModelKind::concat, kVocab, 25);
    mc.seed = 2;
    ctc::Model model(mc);
    ctc::TrainConfig tc;
    ctc::Optimizer opt(model.params(), tc);
    const auto ids = random_ids(32, 44, 12);
    std::vector<int> labels(32);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 25);
    for (auto _ : state) {
        opt.zero_grad();
        ctc::Tape tape;
        ctc::Tape::Scope scope(tape);
        auto loss = ctc::cross_entropy(model.forward(ids), labels);
        ctc::backward(loss);
        ctc::clip_gradients(model.params(), tc.clip_norm);
        opt.step();
        benchmark::DoNotOptimize(loss.values().data());
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_train_step_desk);

}  // namespace

int main(int argc, char** argv) {
    ctc::set_finite_guard(false);  // throughput only; the test suites keep it on
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
