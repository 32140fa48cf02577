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
#include <optional>
#include <span>
#include <vector>

#include "qvae/diff/tape.hpp"
#include "qvae/model/config.hpp"
#include "qvae/qbm/qbm.hpp"
#include "qvae/reparam/latent.hpp"

namespace qvae::model {

/// Prior over binary latents used by the discrete models.
class Prior {
 public:
  virtual ~Prior() = default;
  virtual PriorKind kind() const = 0;
  virtual std::size_t latent_size() const = 0;

  /// Per-row cross-entropy -E_q[log p(z)] (or its quantum bound), shape [B].
  virtual diff::Tensor cross_entropy(diff::Tape& tape, const reparam::LatentSample& sample) = 0;
  /// log p(z) for one binary state.
  virtual double log_prob(std::span<const std::uint8_t> z) = 0;
  /// `n` states drawn from the prior.
  virtual std::vector<rbm::State> sample(std::size_t n, Rng& rng) = 0;

  /// Called once per gradient step before cross_entropy().
  virtual void refresh_negative_phase() {}
  /// Called once per epoch; refreshes log Z.
  virtual void refresh_log_z() {}
  virtual double log_z() const { return 0.0; }
  virtual double log_z_stderr() const { return 0.0; }

  virtual std::vector<diff::Tensor> parameters() const { return {}; }
  virtual std::vector<diff::NamedTensor> named_state() const { return {}; }
};

/// Factorial Bernoulli prior with learned logits b: p(z_l = 1) = sigmoid(b_l).
class BernoulliPrior final : public Prior {
 public:
  explicit BernoulliPrior(std::size_t latent);
  PriorKind kind() const override { return PriorKind::kBernoulli; }
  std::size_t latent_size() const override { return logits_.size(); }
  diff::Tensor cross_entropy(diff::Tape& tape, const reparam::LatentSample& sample) override;
  double log_prob(std::span<const std::uint8_t> z) override;
  std::vector<rbm::State> sample(std::size_t n, Rng& rng) override;
  std::vector<diff::Tensor> parameters() const override { return {logits_}; }
  std::vector<diff::NamedTensor> named_state() const override { return {{"prior.logits", logits_}}; }
  const diff::Tensor& logits() const { return logits_; }

 private:
  diff::Tensor logits_;
};

/// RBM or transverse-field QBM prior. With Gamma = 0 it is the classical RBM.
///
/// The cross-entropy value is E(z) + log Z with log Z frozen between
/// refresh_log_z() calls; its gradient carries the negative phase measured
/// by the last refresh_negative_phase().
class BoltzmannPrior final : public Prior {
 public:
  BoltzmannPrior(const VaeConfig& config, Rng& init_rng);

  PriorKind kind() const override { return kind_; }
  std::size_t latent_size() const override { return left_ + right_; }
  diff::Tensor cross_entropy(diff::Tape& tape, const reparam::LatentSample& sample) override;
  double log_prob(std::span<const std::uint8_t> z) override;
  std::vector<rbm::State> sample(std::size_t n, Rng& rng) override;
  void refresh_negative_phase() override;
  void refresh_log_z() override;
  double log_z() const override { return log_z_; }
  double log_z_stderr() const override { return log_z_stderr_; }
  std::vector<diff::Tensor> parameters() const override { return {h_, w_}; }
  std::vector<diff::NamedTensor> named_state() const override { return {{"prior.h", h_}, {"prior.w", w_}}; }

  /// Snapshot of the current parameters.
  qbm::QbmParams params() const;
  double gamma() const { return gamma_; }
  bool quantum() const { return gamma_ > 0.0; }
  /// Method actually used after resolving kAuto.
  NegativePhase negative_phase_method() const { return negative_; }
  LogZMethod log_z_method() const { return log_z_method_; }
  const rbm::Moments& negative_moments() const { return moments_; }
  /// Diagnostics of the last population-annealing refresh, if any.
  const std::vector<qbm::PaStep>& pa_trace() const { return pa_trace_; }
  const diff::Tensor& h() const { return h_; }
  const diff::Tensor& w() const { return w_; }

 private:
  PriorKind kind_;
  std::size_t left_, right_;
  double gamma_;
  SamplerConfig sampler_;
  LogZConfig log_z_config_;
  NegativePhase negative_;
  LogZMethod log_z_method_;
  std::size_t threads_;
  std::uint64_t seed_;
  std::uint64_t refreshes_ = 0;

  diff::Tensor h_;
  diff::Tensor w_;
  double log_z_ = 0.0;
  double log_z_stderr_ = 0.0;
  rbm::Moments moments_;
  std::optional<rbm::PcdState> pcd_;
  std::optional<qbm::QmcChains> qmc_;
  std::vector<qbm::PaStep> pa_trace_;
  // Exact diagonal probabilities cached per log Z refresh for log_prob().
  std::vector<double> exact_diagonal_;
};

/// Builds the prior named by `config.prior`; nullptr for the gaussian model,
/// whose prior is fixed and handled by the model itself.
std::unique_ptr<Prior> make_prior(const VaeConfig& config, Rng& init_rng);

/// Per-row E(z) + log_z on the tape. d/dz is the local field, d/dh and d/dW
/// the positive phase minus the supplied negative-phase moments.
diff::Tensor boltzmann_cross_entropy(diff::Tape& tape, const diff::Tensor& z, const diff::Tensor& h,
                                     const diff::Tensor& w, double log_z, const rbm::Moments& negative);

}  // namespace qvae::model
