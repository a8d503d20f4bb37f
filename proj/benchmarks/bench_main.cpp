#include <benchmark/benchmark.h>

#include <vector>

#include "colgrade/descriptors.hpp"
#include "colgrade/dqn.hpp"
#include "colgrade/nn.hpp"
#include "colgrade/rng.hpp"
#include "colgrade/roi_env.hpp"
#include "colgrade/synthgen.hpp"

using namespace colgrade;

namespace {

Phantom bench_phantom(int dim, int roi_edge) {
  PhantomSpec spec;
  spec.seed = 7;
  spec.dims = {dim, dim, dim};
  spec.lesion_center = {dim / 2.0, dim / 2.0, dim / 2.0};
  spec.lesion_radii = {dim * 0.12, dim * 0.12, dim * 0.12};
  spec.roi_edge = roi_edge;
  return gen_phantom(spec);
}

Cube bench_cube(int edge) {
  const Phantom ph = bench_phantom(edge * 2, edge);
  return normalize_unit(extract_cube({&ph.tmax, &ph.rbf, &ph.rbv}, ph.roi));
}

void conv3d_forward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  nn::Network<float> net;
  net.add<nn::Conv3d<float>>(3, 8, 3, 2, 1);
  Rng rng(1);
  net.init(rng);
  nn::Tensor<float> in({3, n, n, n});
  for (auto& v : in.data) v = static_cast<float>(rng.uniform());
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(in));
}

void conv3d_train_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  nn::Network<float> net;
  net.add<nn::Conv3d<float>>(3, 8, 3, 2, 1);
  net.add<nn::Tanh<float>>();
  net.add<nn::Flatten<float>>();
  net.add<nn::Dense<float>>(8 * nn::detail::conv_out_dim(n, 3, 2, 1) *
                                nn::detail::conv_out_dim(n, 3, 2, 1) *
                                nn::detail::conv_out_dim(n, 3, 2, 1),
                            6);
  Rng rng(1);
  net.init(rng);
  nn::Sgd<float> opt({0.001, 1e-6, 0.9});
  nn::Tensor<float> in({3, n, n, n});
  for (auto& v : in.data) v = static_cast<float>(rng.uniform());
  for (auto _ : state) {
    net.zero_grad();
    nn::Tensor<float> out = net.forward(in);
    for (auto& v : out.data) v = 2 * (v - 0.5f);
    net.backward(out);
    opt.step(net);
  }
}

void lbp_descriptor(benchmark::State& state) {
  const Cube cube = bench_cube(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lbp_histogram(cube));
}

void hog_descriptor(benchmark::State& state) {
  const Cube cube = bench_cube(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(hog_histogram(cube));
}

void env_step(benchmark::State& state) {
  const std::array<int, 3> dims{128, 128, 128};
  const EnvConfig cfg;
  const CubeState target{{30, 40, 50}, 64};
  CubeState s{{0, 0, 0}, 64};
  int a = 0;
  for (auto _ : state) {
    const Transition t =
        apply_action(s, static_cast<Action>(a), target, dims, cfg);
    benchmark::DoNotOptimize(t);
    s = t.state_after;
    a = (a + 1) % kNumActions;
  }
}

void cube_iou(benchmark::State& state) {
  const CubeState a{{10, 20, 30}, 64};
  const CubeState b{{40, 25, 35}, 64};
  for (auto _ : state) benchmark::DoNotOptimize(iou(a, b));
}

void observation_pool(benchmark::State& state) {
  const Phantom ph = bench_phantom(128, 64);
  for (auto _ : state)
    benchmark::DoNotOptimize(pooled_frame(ph.tmax, ph.roi, 16));
}

void phantom_generation(benchmark::State& state) {
  PhantomSpec spec;
  spec.seed = 3;
  const int n = static_cast<int>(state.range(0));
  spec.dims = {n, n, n};
  spec.lesion_center = {n / 2.0, n / 2.0, n / 2.0};
  spec.lesion_radii = {n * 0.12, n * 0.12, n * 0.12};
  spec.roi_edge = n / 2;
  for (auto _ : state) benchmark::DoNotOptimize(gen_phantom(spec));
}

BENCHMARK(conv3d_forward)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);
BENCHMARK(conv3d_train_step)->Arg(16)->Unit(benchmark::kMicrosecond);
BENCHMARK(lbp_descriptor)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(hog_descriptor)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(env_step)->Unit(benchmark::kNanosecond);
BENCHMARK(cube_iou)->Unit(benchmark::kNanosecond);
BENCHMARK(observation_pool)->Unit(benchmark::kMicrosecond);
BENCHMARK(phantom_generation)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
