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

#include "qvae/common.hpp"

namespace qvae::rbm {

using State = std::vector<std::uint8_t>;

/// Biases and bipartite couplings of E(z) = sum_l h_l z_l + sum_{l<m} W_lm z_l z_m, z in {0,1}^L.
///
/// Units [0, left) form one side and [left, left + right) the other; only
/// cross-side couplings exist, stored as a left x right row-major block.
struct RbmParams {
  std::size_t left = 0;
  std::size_t right = 0;
  std::vector<double> h;
  std::vector<double> w;

  static RbmParams zeros(std::size_t left, std::size_t right);
  /// h and W drawn from U(-scale, scale).
  static RbmParams random(std::size_t left, std::size_t right, double scale, Rng& rng);

  std::size_t size() const { return left + right; }
  double coupling(std::size_t i, std::size_t j) const { return w[i * right + j]; }
  double& coupling(std::size_t i, std::size_t j) { return w[i * right + j]; }
  void validate() const;
};

double energy(const RbmParams& params, std::span<const std::uint8_t> z);

/// h_l + sum_m W_lm z_m for unit l.
double local_field(const RbmParams& params, std::span<const std::uint8_t> z, std::size_t unit);

/// P(z_unit = 1 | rest) = sigmoid(-local_field).
double conditional_probability(const RbmParams& params, std::span<const std::uint8_t> z, std::size_t unit);

/// Resamples the right side given the left, then the left given the right.
void gibbs_block_sweep(const RbmParams& params, std::span<std::uint8_t> z, Rng& rng);

/// First moments <z_l> and cross-side second moments <z_i z_j> (left x right).
struct Moments {
  std::vector<double> first;
  std::vector<double> second;
  /// Standard errors of the same entries; zero for exact moments.
  std::vector<double> first_stderr;
  std::vector<double> second_stderr;
};

Moments empirical_moments(const RbmParams& params, std::span<const State> states);

/// Persistent Gibbs chains for the negative phase.
class PcdState {
 public:
  PcdState(std::size_t chains, std::size_t units, std::uint64_t seed);
  std::vector<State>& chains() { return chains_; }
  const std::vector<State>& chains() const { return chains_; }
  std::uint64_t sweeps() const { return sweeps_; }
  Rng& rng() { return rng_; }
  void count_sweeps(std::uint64_t n) { sweeps_ += n; }

 private:
  std::vector<State> chains_;
  std::uint64_t sweeps_ = 0;
  Rng rng_;
};

/// Advances every persistent chain by `k_sweeps` block sweeps and returns the
/// Monte-Carlo estimates of the model moments.
Moments pcd_negative_phase(const RbmParams& params, PcdState& state, std::size_t k_sweeps);

/// log sum_z exp(-E(z)) by enumeration. Throws for L > 24.
double exact_log_z(const RbmParams& params);
Moments exact_moments(const RbmParams& params);
/// exp(-E(z) - log Z) for every z, indexed by the integer with bit l = z_l.
std::vector<double> exact_probabilities(const RbmParams& params);

struct PaOptions {
  std::size_t population = 1000;
  std::size_t steps = 100;
  std::size_t sweeps = 1;
  /// Independent populations; the standard error comes from their spread.
  std::size_t replicas = 4;
  /// Resample when ESS drops below this fraction of the population.
  double resample_threshold = 0.5;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct LogZEstimate {
  double log_z = 0.0;
  double std_error = 0.0;
  /// Smallest ESS / N seen across steps and replicas.
  double min_ess_fraction = 1.0;
  /// Set when ESS fell below 1% of the population.
  bool degenerate = false;
  std::size_t resamples = 0;
};

/// Combines independent per-replica estimates of log Z: the mean of Z in
/// log space, with a delta-method standard error.
LogZEstimate combine_replicas(std::span<const double> log_z_per_replica);

/// Population annealing along theta_t = t * theta from the uniform
/// distribution (log Z_0 = L log 2).
LogZEstimate log_z_population_annealing(const RbmParams& params, const PaOptions& options);

/// Index helpers for enumerations: bit l of `index` is z_l.
State state_from_index(std::uint64_t index, std::size_t units);
std::uint64_t index_from_state(std::span<const std::uint8_t> z);

}  // namespace qvae::rbm
