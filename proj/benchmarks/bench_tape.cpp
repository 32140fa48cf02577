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

// Forward plus backward through an encoder-sized MLP.

#include <benchmark/benchmark.h>

#include "qvae/diff/network.hpp"
#include "qvae/diff/tape.hpp"

namespace {

using namespace qvae;
using diff::Tensor;

void BM_MlpStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  auto net = diff::Network::mlp(784, {200, 200}, 64, true, rng);
  std::vector<double> pixels(batch * 784);
  for (double& p : pixels) p = uniform01(rng) < 0.13 ? 1.0 : 0.0;
  const Tensor x = Tensor::from_values({batch, 784}, pixels);
  for (auto _ : state) {
    diff::Tape tape;
    tape.backward(tape.mean(tape.sigmoid(net.forward(tape, x, true))));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_MlpStep)->Arg(1)->Arg(32)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_TapeOverhead(benchmark::State& state) {
  const Tensor x = Tensor::filled({1, 8}, 0.5, true);
  for (auto _ : state) {
    diff::Tape tape;
    Tensor y = x;
    for (int i = 0; i < 64; ++i) y = tape.sigmoid(tape.add(y, x));
    tape.backward(tape.sum(y));
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_TapeOverhead);

}  // namespace
