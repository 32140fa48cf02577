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

#include <vector>

#include "qvae/common.hpp"
#include "qvae/diff/network.hpp"
#include "qvae/diff/tape.hpp"

namespace qvae::reparam {

/// One encoder pass: aligned noise, Bernoulli probabilities, discrete and
/// smoothed latents, all [B, L].
struct LatentSample {
  diff::Tensor rho;
  diff::Tensor q;
  diff::Tensor z;
  diff::Tensor zeta;
  double beta = 1.0;
};

/// Group layout of a hierarchical approximating posterior.
struct HierarchySpec {
  std::vector<std::size_t> group_sizes;

  static HierarchySpec uniform(std::size_t latent_size, std::size_t groups);
  std::size_t latent_size() const;
  std::size_t groups() const { return group_sizes.size(); }
  std::size_t offset(std::size_t group) const;
  void validate() const;
};

/// Tape ops over [B, L] tensors.
///
/// zeta gets d zeta/d q on the exponential branch. z carries the
/// discrete-gradient rule: d/dq += dL/dz * (1 - z) / (1 - q).
diff::Tensor spike_exp_zeta(diff::Tape& tape, const diff::Tensor& rho, const diff::Tensor& q, double beta);
diff::Tensor discrete_latent(diff::Tape& tape, const diff::Tensor& rho, const diff::Tensor& q);

/// Per-row analytic entropy sum_l H(q_l), shape [B].
diff::Tensor entropy(diff::Tape& tape, const diff::Tensor& q);
/// Per-row log q(z) = sum_l z log q + (1 - z) log(1 - q), shape [B]. z carries no gradient.
diff::Tensor log_bernoulli(diff::Tape& tape, const diff::Tensor& z, const diff::Tensor& q);
/// Per-row cross-entropy against a factorial prior with logits b ([L]), shape [B].
diff::Tensor bernoulli_cross_entropy_logits(diff::Tape& tape, const diff::Tensor& q, const diff::Tensor& logits);
/// Per-row KL(N(mu, e^{2 s}) || N(0, 1)) with s = log sigma, shape [B].
diff::Tensor gaussian_kl_log_sigma(diff::Tape& tape, const diff::Tensor& mu, const diff::Tensor& log_sigma);

/// Fills a [B, L] tensor with U[0, 1) noise (no gradient).
diff::Tensor uniform_noise(std::size_t rows, std::size_t cols, Rng& rng);
diff::Tensor normal_noise(std::size_t rows, std::size_t cols, Rng& rng);

/// Hierarchical approximating posterior q(z_g | zeta_{<g}, x).
///
/// Group g's network reads [x, zeta_0 .. zeta_{g-1}] and emits the logits of
/// its own units; probabilities are sigmoids of those logits.
class HierarchicalEncoder {
 public:
  HierarchicalEncoder() = default;
  HierarchicalEncoder(std::size_t input_size, HierarchySpec spec, const std::vector<std::size_t>& hidden,
                      bool batch_norm, Rng& init_rng);

  LatentSample sample(diff::Tape& tape, const diff::Tensor& x, const diff::Tensor& rho, double beta,
                      bool training);

  const HierarchySpec& spec() const { return spec_; }
  std::size_t input_size() const { return input_size_; }
  std::vector<diff::Network>& networks() { return nets_; }
  const std::vector<diff::Network>& networks() const { return nets_; }
  std::vector<diff::Tensor> parameters() const;
  std::vector<diff::NamedTensor> named_state() const;

 private:
  std::size_t input_size_ = 0;
  HierarchySpec spec_;
  std::vector<diff::Network> nets_;
};

}  // namespace qvae::reparam
