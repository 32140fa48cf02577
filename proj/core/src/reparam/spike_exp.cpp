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

#include "qvae/reparam/spike_exp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qvae::reparam {

double clip_probability(double q) { return std::clamp(q, kProbabilityClip, 1.0 - kProbabilityClip); }

double spike_exp_cdf(double zeta, double q, double beta) {
  q = clip_probability(q);
  if (zeta < 0) return 0.0;
  if (zeta >= 1) return 1.0;
  return (1.0 - q) + q * std::expm1(beta * zeta) / std::expm1(beta);
}

double spike_exp_inverse_cdf(double rho, double q, double beta) {
  q = clip_probability(q);
  const double excess = rho + q - 1.0;
  if (excess <= 0) return 0.0;
  const double zeta = std::log1p(excess / q * std::expm1(beta)) / beta;
  return std::min(zeta, 1.0);
}

double spike_exp_inverse_cdf_dq(double rho, double q, double beta) {
  q = clip_probability(q);
  const double excess = rho + q - 1.0;
  if (excess <= 0) return 0.0;
  const double em1 = std::expm1(beta);
  const double u = excess / q;
  const double du_dq = (1.0 - rho) / (q * q);
  return em1 * du_dq / (beta * (u * em1 + 1.0));
}

std::uint8_t discrete_from_noise(double rho, double q) { return rho + clip_probability(q) - 1.0 > 0 ? 1 : 0; }

double discrete_grad_weight(std::uint8_t z, double q) { return z ? 0.0 : 1.0 / (1.0 - clip_probability(q)); }

double bernoulli_entropy(std::span<const double> q) {
  double h = 0.0;
  for (double v : q) {
    v = clip_probability(v);
    h -= v * std::log(v) + (1.0 - v) * std::log1p(-v);
  }
  return h;
}

double bernoulli_cross_entropy(std::span<const double> q, std::span<const double> p) {
  if (q.size() != p.size()) throw std::invalid_argument("bernoulli_cross_entropy: length mismatch");
  double h = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double qi = clip_probability(q[i]);
    const double pi = clip_probability(p[i]);
    h -= qi * std::log(pi) + (1.0 - qi) * std::log1p(-pi);
  }
  return h;
}

double gaussian_kl(std::span<const double> mu, std::span<const double> sigma) {
  if (mu.size() != sigma.size()) throw std::invalid_argument("gaussian_kl: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (!(sigma[i] > 0)) throw std::invalid_argument("gaussian_kl: sigma[" + std::to_string(i) + "] must be positive");
    const double s2 = sigma[i] * sigma[i];
    kl += 0.5 * (mu[i] * mu[i] + s2 - 1.0 - std::log(s2));
  }
  return kl;
}

std::vector<double> gaussian_reparam(std::span<const double> rho_normal, std::span<const double> mu,
                                     std::span<const double> sigma) {
  if (rho_normal.size() != mu.size() || mu.size() != sigma.size())
    throw std::invalid_argument("gaussian_reparam: length mismatch");
  std::vector<double> zeta(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) zeta[i] = mu[i] + sigma[i] * rho_normal[i];
  return zeta;
}

double linear_schedule(std::size_t epoch, std::size_t epochs, double start, double end) {
  if (epochs <= 1) return start;
  const double f = std::min(1.0, static_cast<double>(epoch) / static_cast<double>(epochs - 1));
  return start + (end - start) * f;
}

}  // namespace qvae::reparam
