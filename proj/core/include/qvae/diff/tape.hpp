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

#include <functional>
#include <span>
#include <vector>

#include "qvae/diff/tensor.hpp"

namespace qvae::diff {

/// Running statistics for a batch-normalization layer.
struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
};

/// Reverse-mode recording of primitive operations.
///
/// Every op evaluates eagerly and, when any input requires a gradient,
/// appends a backward closure. backward() replays the closures in reverse
/// order, so each node is visited exactly once. A Tape is single-threaded;
/// independent training contexts use independent tapes.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  // x[B,in] * w[in,out] + b[out]
  Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
  Tensor relu(const Tensor& x);
  Tensor sigmoid(const Tensor& x);
  Tensor log(const Tensor& x);
  Tensor exp(const Tensor& x);
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scale(const Tensor& x, double factor);
  /// Column-wise concatenation of matrices with equal row counts.
  Tensor concat(std::span<const Tensor> parts);
  Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
  Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                    bool training);
  /// Sum of all entries, shape [1].
  Tensor sum(const Tensor& x);
  Tensor mean(const Tensor& x);
  /// Per-row sum, shape [B].
  Tensor row_sum(const Tensor& x);
  /// Per-row sum_d x*a - softplus(a) for binary targets x (no gradient) and logits a; shape [B].
  Tensor bernoulli_log_likelihood(const Tensor& targets, const Tensor& logits);

  /// Records a custom op. `backward` reads out.grad() and accumulates into the inputs.
  Tensor custom(Shape shape, std::vector<double> values, std::span<const Tensor> inputs,
                std::function<void(const Tensor& out)> backward);

  /// Seeds d(loss)/d(loss) = 1 and accumulates gradients into every tensor that
  /// requires one. Parameter gradients add up across calls until cleared.
  void backward(const Tensor& loss);

  void clear();
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

 private:
  struct Record {
    Tensor output;
    BackwardFn fn;
  };
  Tensor make_output(Shape shape, std::vector<double> values, std::span<const Tensor> inputs);
  void record(const Tensor& out, BackwardFn fn);

  std::vector<Record> records_;
};

}  // namespace qvae::diff
