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

#include <cstdint>
#include <span>
#include <vector>

namespace qvae::reparam {

/// Probabilities are clipped to [kProbabilityClip, 1 - kProbabilityClip]
/// before any log or division.
inline constexpr double kProbabilityClip = 1e-7;

double clip_probability(double q);

/// Mixture CDF of q(zeta) = (1-q) delta(zeta) + q * beta e^{beta zeta} / (e^beta - 1) on [0, 1].
double spike_exp_cdf(double zeta, double q, double beta);

/// Generalized inverse of spike_exp_cdf:
/// zeta = log[ max(rho+q-1, 0)/q * (e^beta - 1) + 1 ] / beta.
double spike_exp_inverse_cdf(double rho, double q, double beta);

/// d zeta / d q of the inverse CDF: the closed-form partial on the
/// exponential branch, zero on the spike.
double spike_exp_inverse_cdf_dq(double rho, double q, double beta);

/// z = Theta(rho + q - 1).
std::uint8_t discrete_from_noise(double rho, double q);

/// Multiplier m such that d/dq E_rho[f(z)] is estimated by m * df/dz:
/// m = (z - 1) * d/dq log(1 - q) = (1 - z) / (1 - q).
double discrete_grad_weight(std::uint8_t z, double q);

/// Sum of per-unit binary entropies in nats.
double bernoulli_entropy(std::span<const double> q);

/// -sum_l q_l log p_l + (1 - q_l) log(1 - p_l).
double bernoulli_cross_entropy(std::span<const double> q, std::span<const double> p);

/// KL( N(mu, sigma^2) || N(0, 1) ) summed over units. Throws on sigma <= 0.
double gaussian_kl(std::span<const double> mu, std::span<const double> sigma);

/// zeta = mu + sigma * rho.
std::vector<double> gaussian_reparam(std::span<const double> rho_normal, std::span<const double> mu,
                                     std::span<const double> sigma);

/// Linear smoothing-sharpness schedule: `start` at epoch 0, `end` at the last epoch.
double linear_schedule(std::size_t epoch, std::size_t epochs, double start, double end);

}  // namespace qvae::reparam
