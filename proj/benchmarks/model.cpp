#include <benchmark/benchmark.h>

#include "rim/cs.hpp"
#include "rim/mri_model.hpp"
#include "rim/phantom.hpp"
#include "rim/rim_net.hpp"
#include "rim/training.hpp"

namespace {

struct Problem {
  rim::ComplexImage reference;
  rim::SamplingMask mask;
  rim::CoilSet coils;
};

Problem problem(std::size_t n) {
  Problem p;
  p.reference = rim::gen_phantom(rim::PhantomKind::Textured, n, 0);
  p.mask = rim::gaussian_mask(n, n, 4.0, 1);
  p.coils = rim::acquire(p.reference, rim::synth_sensitivities(n, n, 4, 2).sensitivities, p.mask);
  return p;
}

rim::CellKind cell(int64_t k) { return static_cast<rim::CellKind>(k); }

void BM_LoglikGradient(benchmark::State& state) {
  const auto p = problem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rim::loglik_gradient(p.reference, p.coils, p.mask, 1.0));
}
BENCHMARK(BM_LoglikGradient)->Arg(64)->Arg(128);

// args: cell (0 gru, 1 mgu, 2 indrnn), features
void BM_RimStep(benchmark::State& state) {
  const std::size_t n = 64;
  const auto p = problem(n);
  const auto model = rim::RimModel::initialized({static_cast<std::size_t>(state.range(1)), 1, cell(state.range(0))}, 0);
  const auto grad = rim::loglik_gradient(p.reference, p.coils, p.mask, 1.0);
  const auto s0 = rim::initial_state(model, p.reference);
  for (auto _ : state) benchmark::DoNotOptimize(rim::rim_step(model, s0, grad));
  state.SetLabel(std::string(rim::to_string(cell(state.range(0)))));
}
BENCHMARK(BM_RimStep)->ArgsProduct({{0, 1, 2}, {16, 64}})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const std::size_t n = 64;
  const auto p = problem(n);
  const auto model = rim::RimModel::initialized({static_cast<std::size_t>(state.range(1)), 8, cell(state.range(0))}, 0);
  const auto loss = rim::LossSpec::make(rim::LossNorm::L1, 8);
  std::vector<rim::Tensor> grads;
  for (auto _ : state)
    benchmark::DoNotOptimize(rim::loss_and_gradients(model, p.coils, p.mask, 1.0, p.reference, loss, grads));
  state.SetLabel(std::string(rim::to_string(cell(state.range(0)))));
}
BENCHMARK(BM_TrainStep)->ArgsProduct({{0, 2}, {16}})->Unit(benchmark::kMillisecond);

void BM_CsReconstruct(benchmark::State& state) {
  const auto p = problem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(rim::cs_reconstruct(p.coils, p.mask));
}
BENCHMARK(BM_CsReconstruct)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
