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

#pragma once

#include <string>
#include <vector>

#include "qvae/common.hpp"
#include "qvae/diff/tape.hpp"

namespace qvae::diff {

struct LayerSpec {
  enum class Kind { kAffine, kRelu, kSigmoid, kBatchNorm };
  Kind kind = Kind::kAffine;
  std::size_t units = 0;  // output width, affine only
};

/// Feed-forward network built from affine, relu, sigmoid and batch-norm layers.
///
/// Affine weights are drawn from U(-a, a) with a = sqrt(6 / (fan_in + fan_out));
/// biases start at zero; batch-norm starts as the identity.
class Network {
 public:
  Network() = default;
  Network(std::size_t input_size, std::vector<LayerSpec> layers, Rng& init_rng, std::string name = "net");

  /// affine -> [batch-norm] -> relu for each hidden width, then a final affine
  /// producing `output_size` logits.
  static Network mlp(std::size_t input_size, const std::vector<std::size_t>& hidden, std::size_t output_size,
                     bool batch_norm, Rng& init_rng, std::string name = "mlp");

  Tensor forward(Tape& tape, const Tensor& x, bool training);

  std::size_t input_size() const { return input_size_; }
  std::size_t output_size() const { return output_size_; }
  const std::string& name() const { return name_; }

  /// Trainable tensors, in a stable order.
  std::vector<Tensor> parameters() const;
  /// Trainable tensors plus batch-norm running statistics, for checkpoints.
  std::vector<NamedTensor> named_state() const;

 private:
  struct Layer {
    LayerSpec spec;
    Tensor weight;
    Tensor bias;
    BatchNormStats stats;
  };
  std::size_t input_size_ = 0;
  std::size_t output_size_ = 0;
  std::string name_;
  std::vector<Layer> layers_;
};

}  // namespace qvae::diff
