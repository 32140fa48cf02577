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

#include "qvae/model/dvae.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qvae/reparam/spike_exp.hpp"

namespace qvae::model {

using diff::Tape;
using diff::Tensor;

namespace {

double batch_mean(const Tensor& t) {
  double s = 0.0;
  for (double v : t.values()) s += v;
  return s / static_cast<double>(t.size());
}

// Per-row entropy of N(mu, e^{2s}): sum_l 0.5 log(2 pi e) + s_l.
Tensor gaussian_entropy(Tape& tape, const Tensor& log_sigma) {
  const std::size_t rows = log_sigma.rows(), cols = log_sigma.cols();
  const double c = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  std::vector<double> h(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) h[r] += c + log_sigma[r * cols + j];
  const Tensor inputs[] = {log_sigma};
  return tape.custom({rows}, std::move(h), inputs, [log_sigma, rows, cols](const Tensor& out) {
    auto g = out.grad();
    auto ds = log_sigma.grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j) ds[r * cols + j] += g[r];
  });
}

}  // namespace

Dvae::Dvae(const VaeConfig& config, std::size_t input_size, Rng& init_rng)
    : config_(config), input_size_(input_size) {
  config_.validate();
  if (input_size == 0) throw ConfigError("data", "input size must be >= 1");
  const std::size_t latent = config_.latent_size;
  if (gaussian()) {
    gaussian_encoder_ =
        diff::Network::mlp(input_size, config_.encoder_hidden, 2 * latent, config_.batch_norm, init_rng, "encoder");
  } else {
    encoder_ = reparam::HierarchicalEncoder(input_size, reparam::HierarchySpec::uniform(latent, config_.groups),
                                            config_.encoder_hidden, config_.batch_norm, init_rng);
  }
  decoder_ = diff::Network::mlp(latent, config_.decoder_hidden, input_size, config_.batch_norm, init_rng, "decoder");
  prior_ = make_prior(config_, init_rng);
}

Tensor Dvae::draw_noise(std::size_t rows, Rng& rng) const {
  return gaussian() ? reparam::normal_noise(rows, config_.latent_size, rng)
                    : reparam::uniform_noise(rows, config_.latent_size, rng);
}

Tensor Dvae::decode(Tape& tape, const Tensor& zeta, bool training) { return decoder_.forward(tape, zeta, training); }

ElboBreakdown Dvae::elbo(Tape& tape, const Tensor& x, Rng& rng, double beta, bool training) {
  return elbo(tape, x, draw_noise(x.rows(), rng), beta, training);
}

ElboBreakdown Dvae::elbo(Tape& tape, const Tensor& x, const Tensor& noise, double beta, bool training) {
  if (x.cols() != input_size_) {
    throw std::invalid_argument("dvae: expected " + std::to_string(input_size_) + " input columns, got " +
                                x.describe());
  }
  ElboBreakdown out;
  Tensor entropy, cross_entropy;
  if (gaussian()) {
    const std::size_t latent = config_.latent_size;
    const Tensor stats = gaussian_encoder_.forward(tape, x, training);
    const Tensor mu = tape.slice_cols(stats, 0, latent);
    const Tensor log_sigma = tape.slice_cols(stats, latent, latent);
    const Tensor zeta = tape.add(mu, tape.mul(tape.exp(log_sigma), noise));
    out.latent.rho = noise;
    out.latent.q = mu;
    out.latent.zeta = zeta;
    out.latent.beta = beta;
    entropy = gaussian_entropy(tape, log_sigma);
    cross_entropy = tape.add(entropy, reparam::gaussian_kl_log_sigma(tape, mu, log_sigma));
  } else {
    out.latent = encoder_.sample(tape, x, noise, beta, training);
    entropy = reparam::entropy(tape, out.latent.q);
    cross_entropy = prior_->cross_entropy(tape, out.latent);
  }
  out.decoder_logits = decode(tape, out.latent.zeta, training);
  const Tensor autoencoding = tape.bernoulli_log_likelihood(x, out.decoder_logits);
  out.rows = tape.sub(tape.add(autoencoding, entropy), cross_entropy);
  out.loss = tape.scale(tape.mean(out.rows), -1.0);
  out.autoencoding = batch_mean(autoencoding);
  out.entropy = batch_mean(entropy);
  out.cross_entropy = batch_mean(cross_entropy);
  out.total = out.autoencoding + out.entropy - out.cross_entropy;
  if (!std::isfinite(out.total)) throw NumericalError("dvae: non-finite ELBO");
  return out;
}

ElboBreakdown Dvae::qelbo(Tape& tape, const Tensor& x, const Tensor& noise, double beta, bool training) {
  if (config_.prior != PriorKind::kQbm) throw std::logic_error("qelbo: prior is " + to_string(config_.prior));
  return elbo(tape, x, noise, beta, training);
}

std::vector<Tensor> Dvae::parameters() const {
  std::vector<Tensor> out = gaussian() ? gaussian_encoder_.parameters() : encoder_.parameters();
  for (const auto& t : decoder_.parameters()) out.push_back(t);
  if (prior_)
    for (const auto& t : prior_->parameters()) out.push_back(t);
  return out;
}

std::vector<diff::NamedTensor> Dvae::named_state() const {
  std::vector<diff::NamedTensor> out = gaussian() ? gaussian_encoder_.named_state() : encoder_.named_state();
  for (auto& t : decoder_.named_state()) out.push_back(t);
  if (prior_)
    for (auto& t : prior_->named_state()) out.push_back(t);
  return out;
}

Tensor gather_rows(const data::Dataset& data, std::span<const std::size_t> rows) {
  std::vector<double> v;
  v.reserve(rows.size() * data.cols);
  for (std::size_t r : rows) {
    const auto src = data.row(r);
    v.insert(v.end(), src.begin(), src.end());
  }
  return Tensor::from_values({rows.size(), data.cols}, std::move(v));
}

}  // namespace qvae::model
