/*
Copyright 2026 The qvae Authors.

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// Sweep costs of the classical and path-integral samplers.

#include <benchmark/benchmark.h>

#include "qvae/qbm/qbm.hpp"
#include "qvae/rbm/rbm.hpp"

namespace {

using namespace qvae;

rbm::RbmParams random_rbm(std::size_t units) {
  Rng rng(7);
  return rbm::RbmParams::random(units / 2, units - units / 2, 0.5, rng);
}

void BM_GibbsSweep(benchmark::State& state) {
  const auto units = static_cast<std::size_t>(state.range(0));
  const auto params = random_rbm(units);
  rbm::PcdState chains(100, units, 1);
  for (auto _ : state) benchmark::DoNotOptimize(rbm::pcd_negative_phase(params, chains, 1));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_GibbsSweep)->Arg(16)->Arg(64)->Arg(256);

// One cluster sweep over 100 chains; items are chains.
void BM_ClusterSweep(benchmark::State& state) {
  const auto units = static_cast<std::size_t>(state.range(0));
  const auto slices = static_cast<std::size_t>(state.range(1));
  const auto params = qbm::QbmParams::uniform(random_rbm(units), 1.0);
  qbm::QmcChains chains(100, units, slices, 1);
  for (auto _ : state) benchmark::DoNotOptimize(qbm::qmc_negative_phase(params, chains, 1));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_ClusterSweep)->Args({16, 16})->Args({16, 64})->Args({64, 16})->Args({64, 64})->Unit(benchmark::kMillisecond);

void BM_QuantumAnnealing(benchmark::State& state) {
  const auto params = qbm::QbmParams::uniform(random_rbm(16), 1.0);
  qbm::QuantumPaOptions o;
  o.population = 200;
  o.steps = 20;
  o.sweeps = 1;
  o.slices = 16;
  o.replicas = 1;
  for (auto _ : state) benchmark::DoNotOptimize(qbm::quantum_log_z_pa(params, o));
}
BENCHMARK(BM_QuantumAnnealing)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
