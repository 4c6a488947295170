#include "avemo/audio.hpp"
#include "avemo/models.hpp"
#include "avemo/rng.hpp"

#include <benchmark/benchmark.h>

using namespace avemo;

namespace {

Tensor<float> random_tensor(Shape shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor<float> t(std::move(shape));
    for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-1, 1));
    return t;
}

}  // namespace

static void BM_Stft(benchmark::State& state) {
    Rng rng(1);
    std::vector<float> x(48000);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
    for (auto _ : state) benchmark::DoNotOptimize(stft(x, StftParams{}));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

static void BM_Conv2dForwardBackward(benchmark::State& state) {
    const auto c = static_cast<std::size_t>(state.range(0));
    auto x = random_tensor({6, c, 32, 38}, 2);
    auto k = random_tensor({2 * c, c, 3, 3}, 3);
    auto b = random_tensor({2 * c}, 4);
    k.set_requires_grad(true);
    for (auto _ : state) {
        Graph<float> g;
        auto y = g.conv2d(x, k, b, {1, 1});
        g.backward(g.sum(y));
        benchmark::DoNotOptimize(k.grad().data());
    }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

static void BM_BiLstm(benchmark::State& state) {
    Rng rng(5);
    auto fwd = make_lstm_params<float>(64, 32, rng);
    auto bwd = make_lstm_params<float>(64, 32, rng);
    auto seq = random_tensor({6, static_cast<std::size_t>(state.range(0)), 64}, 6);
    for (auto _ : state) {
        Graph<float> g;
        auto y = bilstm(g, seq, fwd, bwd);
        g.backward(g.sum(y));
        benchmark::DoNotOptimize(fwd.w_hidden.grad().data());
    }
}
BENCHMARK(BM_BiLstm)->Arg(4)->Arg(16)->Unit(benchmark::kMicrosecond);

static void BM_AnetToyStep(benchmark::State& state) {
    JointConfig cfg;
    AffectModel<float> model(Stage::anet, cfg, 1);
    auto s = cfg.anet.backbone_input_shape();
    ModelInputs<float> in{random_tensor({6, 1, s[0], s[1], s[2]}, 7), {}};
    Rng dropout(8);
    for (auto _ : state) {
        Graph<float> g;
        auto pred = model.forward(g, in, &dropout);
        g.backward(g.sum(pred));
    }
}
BENCHMARK(BM_AnetToyStep)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
