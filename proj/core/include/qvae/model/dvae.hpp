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

#include <memory>
#include <span>
#include <vector>

#include "qvae/data/dataset.hpp"
#include "qvae/diff/network.hpp"
#include "qvae/model/config.hpp"
#include "qvae/model/prior.hpp"
#include "qvae/reparam/latent.hpp"

namespace qvae::model {

/// One reparameterized ELBO estimate. The scalars are batch means and
/// satisfy total = autoencoding + entropy - cross_entropy.
struct ElboBreakdown {
  diff::Tensor rows;  // [B] per-row ELBO
  diff::Tensor loss;  // scalar -mean(rows)
  double autoencoding = 0.0;
  double entropy = 0.0;
  double cross_entropy = 0.0;
  double total = 0.0;
  reparam::LatentSample latent;
  diff::Tensor decoder_logits;
};

/// Encoder, smoothing transform, prior and Bernoulli decoder.
///
/// Discrete priors (bernoulli, rbm, qbm) use the hierarchical
/// spike-and-exponential posterior. The gaussian prior is the continuous
/// baseline with an N(mu, sigma^2) posterior.
class Dvae {
 public:
  Dvae(const VaeConfig& config, std::size_t input_size, Rng& init_rng);

  /// Single-sample estimate with the given noise: uniform for discrete
  /// latents, standard normal for the gaussian model; [B, L].
  ElboBreakdown elbo(diff::Tape& tape, const diff::Tensor& x, const diff::Tensor& noise, double beta, bool training);
  /// Draws the noise from `rng`.
  ElboBreakdown elbo(diff::Tape& tape, const diff::Tensor& x, Rng& rng, double beta, bool training);
  /// The same estimate for a QBM prior, where the cross-entropy is the
  /// Golden-Thompson bound. Throws unless the prior is a qbm.
  ElboBreakdown qelbo(diff::Tape& tape, const diff::Tensor& x, const diff::Tensor& noise, double beta, bool training);

  diff::Tensor draw_noise(std::size_t rows, Rng& rng) const;
  /// Decoder logits for smoothed latents.
  diff::Tensor decode(diff::Tape& tape, const diff::Tensor& zeta, bool training);

  const VaeConfig& config() const { return config_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t latent_size() const { return config_.latent_size; }
  bool gaussian() const { return config_.prior == PriorKind::kGaussian; }
  /// nullptr for the gaussian model.
  Prior* prior() { return prior_.get(); }
  const Prior* prior() const { return prior_.get(); }
  reparam::HierarchicalEncoder& encoder() { return encoder_; }
  diff::Network& gaussian_encoder() { return gaussian_encoder_; }
  diff::Network& decoder() { return decoder_; }

  std::vector<diff::Tensor> parameters() const;
  /// Everything a checkpoint needs, including batch-norm statistics.
  std::vector<diff::NamedTensor> named_state() const;

 private:
  VaeConfig config_;
  std::size_t input_size_;
  reparam::HierarchicalEncoder encoder_;
  diff::Network gaussian_encoder_;
  diff::Network decoder_;
  std::unique_ptr<Prior> prior_;
};

/// Rows of `data` as a [B, D] tensor without gradient.
diff::Tensor gather_rows(const data::Dataset& data, std::span<const std::size_t> rows);

}  // namespace qvae::model
