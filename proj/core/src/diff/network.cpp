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

#include "qvae/diff/network.hpp"

#include <cmath>
#include <stdexcept>

namespace qvae::diff {

Network::Network(std::size_t input_size, std::vector<LayerSpec> layers, Rng& init_rng, std::string name)
    : input_size_(input_size), name_(std::move(name)) {
  std::size_t width = input_size;
  for (const auto& spec : layers) {
    Layer layer;
    layer.spec = spec;
    switch (spec.kind) {
      case LayerSpec::Kind::kAffine: {
        if (spec.units == 0) throw std::invalid_argument(name_ + ": affine layer with zero units");
        const double a = std::sqrt(6.0 / static_cast<double>(width + spec.units));
        std::vector<double> w(width * spec.units);
        for (double& v : w) v = (2.0 * uniform01(init_rng) - 1.0) * a;
        layer.weight = Tensor::from_values({width, spec.units}, std::move(w), true);
        layer.bias = Tensor::zeros({spec.units}, true);
        width = spec.units;
        break;
      }
      case LayerSpec::Kind::kBatchNorm:
        layer.weight = Tensor::filled({width}, 1.0, true);
        layer.bias = Tensor::zeros({width}, true);
        layer.stats.running_mean = Tensor::zeros({width});
        layer.stats.running_var = Tensor::filled({width}, 1.0);
        break;
      case LayerSpec::Kind::kRelu:
      case LayerSpec::Kind::kSigmoid:
        break;
    }
    layers_.push_back(std::move(layer));
  }
  output_size_ = width;
}

Network Network::mlp(std::size_t input_size, const std::vector<std::size_t>& hidden, std::size_t output_size,
                     bool batch_norm, Rng& init_rng, std::string name) {
  std::vector<LayerSpec> layers;
  for (std::size_t h : hidden) {
    layers.push_back({LayerSpec::Kind::kAffine, h});
    if (batch_norm) layers.push_back({LayerSpec::Kind::kBatchNorm, 0});
    layers.push_back({LayerSpec::Kind::kRelu, 0});
  }
  layers.push_back({LayerSpec::Kind::kAffine, output_size});
  return Network(input_size, std::move(layers), init_rng, std::move(name));
}

Tensor Network::forward(Tape& tape, const Tensor& x, bool training) {
  if (x.cols() != input_size_) {
    throw std::invalid_argument(name_ + ": expected " + std::to_string(input_size_) + " input columns, got " +
                                x.describe());
  }
  Tensor h = x;
  for (auto& layer : layers_) {
    switch (layer.spec.kind) {
      case LayerSpec::Kind::kAffine:
        h = tape.affine(h, layer.weight, layer.bias);
        break;
      case LayerSpec::Kind::kBatchNorm:
        h = tape.batch_norm(h, layer.weight, layer.bias, layer.stats, training);
        break;
      case LayerSpec::Kind::kRelu:
        h = tape.relu(h);
        break;
      case LayerSpec::Kind::kSigmoid:
        h = tape.sigmoid(h);
        break;
    }
  }
  return h;
}

std::vector<Tensor> Network::parameters() const {
  std::vector<Tensor> out;
  for (const auto& layer : layers_) {
    if (layer.weight.defined()) out.push_back(layer.weight);
    if (layer.bias.defined()) out.push_back(layer.bias);
  }
  return out;
}

std::vector<NamedTensor> Network::named_state() const {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    const std::string prefix = name_ + "." + std::to_string(i) + ".";
    if (layer.spec.kind == LayerSpec::Kind::kAffine) {
      out.push_back({prefix + "weight", layer.weight});
      out.push_back({prefix + "bias", layer.bias});
    } else if (layer.spec.kind == LayerSpec::Kind::kBatchNorm) {
      out.push_back({prefix + "gamma", layer.weight});
      out.push_back({prefix + "beta", layer.bias});
      out.push_back({prefix + "running_mean", layer.stats.running_mean});
      out.push_back({prefix + "running_var", layer.stats.running_var});
    }
  }
  return out;
}

}  // namespace qvae::diff
