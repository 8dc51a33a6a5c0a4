#include <benchmark/benchmark.h>

#include <random>

#include "cernet/dataset.hpp"
#include "cernet/evaluation.hpp"
#include "cernet/gradients.hpp"
#include "cernet/runtime.hpp"
#include "cernet/training.hpp"

using namespace cernet;

namespace {

const char* kPresets[] = {"SingleMini", "SingleStandard", "SingleLarge",
                          "MultiMini",  "MultiStandard",  "MultiLarge"};

Checkpoint make_checkpoint(int preset_index, int num_classes = 5) {
  Checkpoint ck;
  ck.config = preset(kPresets[preset_index], num_classes, 3);
  ck.params = NetworkParams::random_init(ck.config, 1);
  return ck;
}

Matrix sequence(int steps, std::uint64_t seed = 3) {
  data::SyntheticSpec spec;
  spec.num_classes = 1;
  spec.timesteps = steps;
  spec.hold_tail = steps / 10;
  spec.seed = seed;
  return data::generate_synthetic(spec).classes[0].points;
}

// One timestep through the allocation-free kernel.
void BM_RunStep(benchmark::State& state) {
  const Checkpoint ck = make_checkpoint(static_cast<int>(state.range(0)));
  StepBuffers buf;
  buf.resize(ck.config);
  const auto zero = initial_state(ck.config);
  const Vector c = one_hot(0, ck.config.num_classes).values;
  const double obs[3] = {0.1, -0.2, 0.3};
  for (auto _ : state) {
    run_step(ck.params, ck.config, c, zero, zero, obs, buf);
    benchmark::DoNotOptimize(buf.prediction.data());
  }
  state.SetLabel(kPresets[state.range(0)]);
}
BENCHMARK(BM_RunStep)->DenseRange(0, 5);

// Forward plus reverse pass over a 100-step sequence.
void BM_Bptt(benchmark::State& state) {
  const Checkpoint ck = make_checkpoint(static_cast<int>(state.range(0)));
  const Matrix seq = sequence(100);
  const Vector c = one_hot(0, ck.config.num_classes).values;
  SequenceTape tape;
  NetworkParams grad = NetworkParams::zeros(ck.config);
  for (auto _ : state) {
    forward_sequence(ck.params, ck.config, c, seq, tape);
    backward_sequence(ck.params, ck.config, c, seq, tape, &grad, nullptr);
    benchmark::DoNotOptimize(grad.W_o.data());
  }
  state.SetLabel(kPresets[state.range(0)]);
}
BENCHMARK(BM_Bptt)->DenseRange(0, 5)->Unit(benchmark::kMicrosecond);

// One full-batch epoch (5 classes, T=100) including the Adam update.
void BM_TrainEpoch(benchmark::State& state) {
  data::SyntheticSpec spec;
  spec.num_classes = 5;
  const auto ds = data::generate_synthetic(spec);
  const ModelConfig cfg = preset(kPresets[state.range(0)], 5, 3);
  TrainConfig tc;
  tc.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(ds, cfg, tc).trace.best_loss());
  state.SetLabel(kPresets[state.range(0)]);
}
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

// One past-reconstruction update (n_iter replays) over a prefix of length n.
void BM_PastReconstruction(benchmark::State& state) {
  const Checkpoint ck = make_checkpoint(3);
  const Matrix seq = sequence(static_cast<int>(state.range(0)));
  const ClassEmbedding c = ClassEmbedding::zeros(ck.config.num_classes);
  InferenceConfig ic;
  SequenceTape tape;
  for (auto _ : state)
    benchmark::DoNotOptimize(past_reconstruction_update(ck, c, seq, ic, &tape).mse);
}
BENCHMARK(BM_PastReconstruction)->Arg(10)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_Dtw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix a(n, 3), b(n, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(dtw(a, b).score);
  state.SetComplexityN(n);
}
BENCHMARK(BM_Dtw)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

}  // namespace

BENCHMARK_MAIN();
