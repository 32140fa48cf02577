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

#include "qvae/reparam/latent.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "qvae/reparam/spike_exp.hpp"

namespace qvae::reparam {

using diff::Tape;
using diff::Tensor;

HierarchySpec HierarchySpec::uniform(std::size_t latent_size, std::size_t groups) {
  if (groups == 0 || latent_size % groups != 0) {
    throw std::invalid_argument("hierarchy: latent size " + std::to_string(latent_size) + " not divisible into " +
                                std::to_string(groups) + " groups");
  }
  return HierarchySpec{std::vector<std::size_t>(groups, latent_size / groups)};
}

std::size_t HierarchySpec::latent_size() const {
  return std::accumulate(group_sizes.begin(), group_sizes.end(), std::size_t{0});
}

std::size_t HierarchySpec::offset(std::size_t group) const {
  return std::accumulate(group_sizes.begin(), group_sizes.begin() + static_cast<std::ptrdiff_t>(group),
                         std::size_t{0});
}

void HierarchySpec::validate() const {
  if (group_sizes.empty()) throw std::invalid_argument("hierarchy: no groups");
  for (std::size_t s : group_sizes)
    if (s == 0) throw std::invalid_argument("hierarchy: empty group");
}

Tensor spike_exp_zeta(Tape& tape, const Tensor& rho, const Tensor& q, double beta) {
  if (rho.size() != q.size()) {
    throw std::invalid_argument("spike_exp_zeta: rho " + rho.describe() + " vs q " + q.describe());
  }
  std::vector<double> zeta(q.size());
  for (std::size_t i = 0; i < zeta.size(); ++i) zeta[i] = spike_exp_inverse_cdf(rho[i], q[i], beta);
  const Tensor inputs[] = {q};
  return tape.custom(q.shape(), std::move(zeta), inputs, [rho, q, beta](const Tensor& out) mutable {
    auto g = out.grad();
    auto dq = q.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dq[i] += g[i] * spike_exp_inverse_cdf_dq(rho[i], q[i], beta);
  });
}

Tensor discrete_latent(Tape& tape, const Tensor& rho, const Tensor& q) {
  if (rho.size() != q.size()) {
    throw std::invalid_argument("discrete_latent: rho " + rho.describe() + " vs q " + q.describe());
  }
  std::vector<double> z(q.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = discrete_from_noise(rho[i], q[i]);
  const Tensor inputs[] = {q};
  return tape.custom(q.shape(), std::move(z), inputs, [q](const Tensor& out) mutable {
    auto g = out.grad();
    auto zv = out.values();
    auto dq = q.grad();
    for (std::size_t i = 0; i < g.size(); ++i)
      dq[i] += g[i] * discrete_grad_weight(static_cast<std::uint8_t>(zv[i]), q[i]);
  });
}

Tensor entropy(Tape& tape, const Tensor& q) {
  const std::size_t rows = q.rows(), cols = q.cols();
  std::vector<double> h(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) h[r] = bernoulli_entropy(q.values().subspan(r * cols, cols));
  const Tensor inputs[] = {q};
  return tape.custom({rows}, std::move(h), inputs, [q, rows, cols](const Tensor& out) mutable {
    auto g = out.grad();
    auto dq = q.grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j) {
        const double v = clip_probability(q[r * cols + j]);
        dq[r * cols + j] += g[r] * (std::log1p(-v) - std::log(v));
      }
  });
}

Tensor log_bernoulli(Tape& tape, const Tensor& z, const Tensor& q) {
  if (z.size() != q.size()) throw std::invalid_argument("log_bernoulli: z " + z.describe() + " vs q " + q.describe());
  const std::size_t rows = q.rows(), cols = q.cols();
  std::vector<double> lp(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t i = r * cols + j;
      const double v = clip_probability(q[i]);
      lp[r] += z[i] > 0.5 ? std::log(v) : std::log1p(-v);
    }
  const Tensor inputs[] = {q};
  return tape.custom({rows}, std::move(lp), inputs, [z, q, rows, cols](const Tensor& out) mutable {
    auto g = out.grad();
    auto dq = q.grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t i = r * cols + j;
        const double v = clip_probability(q[i]);
        dq[i] += g[r] * (z[i] > 0.5 ? 1.0 / v : -1.0 / (1.0 - v));
      }
  });
}

Tensor bernoulli_cross_entropy_logits(Tape& tape, const Tensor& q, const Tensor& logits) {
  const std::size_t rows = q.rows(), cols = q.cols();
  if (logits.size() != cols) {
    throw std::invalid_argument("bernoulli_cross_entropy: q " + q.describe() + " vs logits " + logits.describe());
  }
  std::vector<double> h(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = q[r * cols + j];
      h[r] += v * softplus(-logits[j]) + (1.0 - v) * softplus(logits[j]);
    }
  const Tensor inputs[] = {q, logits};
  return tape.custom({rows}, std::move(h), inputs, [q, logits, rows, cols](const Tensor& out) mutable {
    auto g = out.grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j) {
        const double v = q[r * cols + j];
        if (q.requires_grad()) q.grad()[r * cols + j] += g[r] * -logits[j];
        if (logits.requires_grad()) logits.grad()[j] += g[r] * (qvae::sigmoid(logits[j]) - v);
      }
  });
}

Tensor gaussian_kl_log_sigma(Tape& tape, const Tensor& mu, const Tensor& log_sigma) {
  if (mu.size() != log_sigma.size()) {
    throw std::invalid_argument("gaussian_kl: mu " + mu.describe() + " vs log_sigma " + log_sigma.describe());
  }
  const std::size_t rows = mu.rows(), cols = mu.cols();
  std::vector<double> kl(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t i = r * cols + j;
      kl[r] += 0.5 * (mu[i] * mu[i] + std::exp(2.0 * log_sigma[i]) - 1.0 - 2.0 * log_sigma[i]);
    }
  const Tensor inputs[] = {mu, log_sigma};
  return tape.custom({rows}, std::move(kl), inputs, [mu, log_sigma, rows, cols](const Tensor& out) mutable {
    auto g = out.grad();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t i = r * cols + j;
        if (mu.requires_grad()) mu.grad()[i] += g[r] * mu[i];
        if (log_sigma.requires_grad()) log_sigma.grad()[i] += g[r] * (std::exp(2.0 * log_sigma[i]) - 1.0);
      }
  });
}

Tensor uniform_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = uniform01(rng);
  return Tensor::from_values({rows, cols}, std::move(v));
}

Tensor normal_noise(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = normal(rng);
  return Tensor::from_values({rows, cols}, std::move(v));
}

HierarchicalEncoder::HierarchicalEncoder(std::size_t input_size, HierarchySpec spec,
                                         const std::vector<std::size_t>& hidden, bool batch_norm, Rng& init_rng)
    : input_size_(input_size), spec_(std::move(spec)) {
  spec_.validate();
  std::size_t upstream = 0;
  for (std::size_t g = 0; g < spec_.groups(); ++g) {
    nets_.push_back(diff::Network::mlp(input_size + upstream, hidden, spec_.group_sizes[g], batch_norm, init_rng,
                                       "encoder" + std::to_string(g)));
    upstream += spec_.group_sizes[g];
  }
}

LatentSample HierarchicalEncoder::sample(Tape& tape, const Tensor& x, const Tensor& rho, double beta, bool training) {
  const std::size_t batch = x.rows();
  const std::size_t latent = spec_.latent_size();
  if (x.cols() != input_size_) {
    throw std::invalid_argument("encoder: expected " + std::to_string(input_size_) + " input columns, got " +
                                x.describe());
  }
  if (rho.rows() != batch || rho.cols() != latent) {
    throw std::invalid_argument("encoder: noise " + rho.describe() + " does not match [" + std::to_string(batch) +
                                "," + std::to_string(latent) + "]");
  }
  std::vector<Tensor> qs, zs, zetas;
  std::vector<Tensor> inputs{x};
  for (std::size_t g = 0; g < spec_.groups(); ++g) {
    const Tensor in = inputs.size() == 1 ? x : tape.concat(inputs);
    const Tensor logits = nets_[g].forward(tape, in, training);
    const Tensor q = tape.sigmoid(logits);
    std::vector<double> rho_g(batch * spec_.group_sizes[g]);
    const std::size_t off = spec_.offset(g), width = spec_.group_sizes[g];
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < width; ++j) rho_g[r * width + j] = rho[r * latent + off + j];
    const Tensor rho_t = Tensor::from_values({batch, width}, std::move(rho_g));
    const Tensor zeta = spike_exp_zeta(tape, rho_t, q, beta);
    qs.push_back(q);
    zs.push_back(discrete_latent(tape, rho_t, q));
    zetas.push_back(zeta);
    inputs.push_back(zeta);
  }
  LatentSample s;
  s.rho = rho;
  s.beta = beta;
  s.q = qs.size() == 1 ? qs.front() : tape.concat(qs);
  s.z = zs.size() == 1 ? zs.front() : tape.concat(zs);
  s.zeta = zetas.size() == 1 ? zetas.front() : tape.concat(zetas);
  return s;
}

std::vector<Tensor> HierarchicalEncoder::parameters() const {
  std::vector<Tensor> out;
  for (const auto& n : nets_) {
    auto p = n.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<diff::NamedTensor> HierarchicalEncoder::named_state() const {
  std::vector<diff::NamedTensor> out;
  for (const auto& n : nets_) {
    auto p = n.named_state();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace qvae::reparam
