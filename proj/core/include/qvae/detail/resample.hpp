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

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "qvae/common.hpp"

namespace qvae::detail {

/// (sum w)^2 / sum w^2 from log weights.
inline double effective_sample_size(std::span<const double> log_w) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_w) m = std::max(m, v);
  if (!std::isfinite(m)) return 0.0;
  double s1 = 0.0, s2 = 0.0;
  for (double v : log_w) {
    const double w = std::exp(v - m);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

/// Systematic resampling. Afterwards every log weight equals the log mean
/// weight, so sums over the population are unchanged.
template <class Particle>
void systematic_resample(std::vector<Particle>& particles, std::vector<double>& log_w, Rng& rng) {
  const std::size_t n = particles.size();
  const double total = log_sum_exp(log_w);
  std::vector<Particle> next;
  next.reserve(n);
  const double u0 = uniform01(rng) / static_cast<double>(n);
  double cumulative = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = u0 + static_cast<double>(i) / static_cast<double>(n);
    while (k + 1 < n && cumulative + std::exp(log_w[k] - total) <= target) {
      cumulative += std::exp(log_w[k] - total);
      ++k;
    }
    next.push_back(particles[k]);
  }
  particles = std::move(next);
  const double mean = total - std::log(static_cast<double>(n));
  for (double& v : log_w) v = mean;
}

}  // namespace qvae::detail
