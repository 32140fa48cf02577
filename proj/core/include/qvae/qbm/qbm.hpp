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
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "qvae/rbm/rbm.hpp"

namespace qvae::qbm {

using rbm::State;

/// Weight assigned to one imaginary-time kink between adjacent slices.
enum class KinkWeight {
  /// tanh(Gamma/M) per kink and cosh(Gamma/M) per link: the exact Trotter
  /// factorisation of exp(-Gamma sigma^x / M).
  kTrotter,
  /// Gamma/M per kink, the first-order form.
  kLinear,
};

/// H = sum_l Gamma_l sigma^x_l + diag(E(z)), with E the RBM energy in {0,1}
/// form and sigma^z |z> = (2z - 1) |z>.
struct QbmParams {
  std::vector<double> gamma;
  rbm::RbmParams classical;
  KinkWeight kink = KinkWeight::kTrotter;

  static QbmParams uniform(rbm::RbmParams classical, double gamma);

  std::size_t size() const { return classical.size(); }
  bool is_classical() const;
  /// Every parameter, Gamma included, multiplied by t.
  QbmParams scaled(double t) const;
  void validate() const;
};

/// Binary worldlines, stored site-major: bit (site, slice) at site * slices + slice.
/// Slice `slices` wraps to slice 0.
struct PathConfiguration {
  std::size_t sites = 0;
  std::size_t slices = 0;
  std::vector<std::uint8_t> bits;

  static PathConfiguration straight(std::span<const std::uint8_t> z, std::size_t slices);

  std::uint8_t at(std::size_t site, std::size_t slice) const { return bits[site * slices + slice]; }
  std::uint8_t& at(std::size_t site, std::size_t slice) { return bits[site * slices + slice]; }
  State slice(std::size_t a) const;
  std::size_t kinks(std::size_t site) const;
  std::size_t kinks() const;
};

/// Kink weight of one site at M slices.
double kink_weight(const QbmParams& params, std::size_t site, std::size_t slices);

struct PathEnergy {
  /// -sum_i k_i log w_i.
  double quantum = 0.0;
  /// Mean classical energy over slices.
  double classical = 0.0;
  std::size_t kinks = 0;
  /// sum_i M log cosh(Gamma_i / M) under Trotter weights, else 0.
  double log_normalizer = 0.0;

  double log_weight() const { return log_normalizer - quantum - classical; }
};

/// Throws if any Gamma is zero (use the classical module) or M < 2.
PathEnergy path_energy(const QbmParams& params, const PathConfiguration& path);

/// <z|H|z>: the transverse term has no diagonal part.
double classical_energy_of_state(const QbmParams& params, std::span<const std::uint8_t> z);

/// One sweep of imaginary-time cluster updates over every site, followed by
/// one whole-worldline flip proposal per site. With `clamp_first_slice`,
/// slice 0 never changes.
void cluster_update(const QbmParams& params, PathConfiguration& path, Rng& rng, bool clamp_first_slice = false);

/// Diagonal moments averaged over every slice of every path.
rbm::Moments path_moments(const QbmParams& params, std::span<const PathConfiguration> paths);

class QmcChains {
 public:
  QmcChains(std::size_t chains, std::size_t units, std::size_t slices, std::uint64_t seed);
  std::vector<PathConfiguration>& paths() { return paths_; }
  const std::vector<PathConfiguration>& paths() const { return paths_; }
  std::size_t slices() const { return slices_; }
  Rng& rng() { return rng_; }
  /// Replaces the chains, e.g. by an equilibrated annealing population.
  void reset(std::vector<PathConfiguration> paths);

 private:
  std::vector<PathConfiguration> paths_;
  std::size_t slices_;
  Rng rng_;
};

/// Runs `sweeps` cluster sweeps on every chain, then returns the diagonal
/// moments of the quantum Boltzmann distribution.
rbm::Moments qmc_negative_phase(const QbmParams& params, QmcChains& chains, std::size_t sweeps);

/// Moments and slice-state frequencies accumulated over `sweeps` further
/// cluster sweeps of `paths`. Standard errors are taken across paths of their
/// time averages. Frequencies are filled only for L <= 16.
struct PathMeasurement {
  rbm::Moments moments;
  std::vector<double> state_frequency;
};
PathMeasurement measure_paths(const QbmParams& params, std::vector<PathConfiguration>& paths, std::size_t sweeps,
                              Rng& rng);

struct QuantumPaOptions {
  std::size_t population = 1000;
  std::size_t steps = 100;
  std::size_t sweeps = 5;
  std::size_t slices = 64;
  std::size_t replicas = 4;
  double resample_threshold = 0.5;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool record_trace = false;
};

struct PaStep {
  std::size_t replica = 0;
  std::size_t step = 0;
  double t = 0.0;
  double ess_fraction = 1.0;
  double kink_density = 0.0;
  bool resampled = false;
};

struct QuantumPaResult {
  rbm::LogZEstimate estimate;
  /// Equally weighted final particles of every replica.
  std::vector<PathConfiguration> population;
  std::vector<PaStep> trace;
};

/// Population annealing of the path integral along t * (Gamma, h, W) from
/// straight worldlines. Without a clamp the t = 0 reference is log 2^L; with
/// slice 0 clamped to z it is 0 and the result estimates log <z|e^{-H}|z>.
QuantumPaResult quantum_population_annealing(const QbmParams& params, const QuantumPaOptions& options,
                                             std::optional<State> clamp = std::nullopt);

/// log Tr e^{-H}. All-zero Gamma falls back to the classical estimator.
rbm::LogZEstimate quantum_log_z_pa(const QbmParams& params, const QuantumPaOptions& options);

struct ClampedLogProb {
  double log_prob = 0.0;
  double std_error = 0.0;
  bool degenerate = false;
};

/// log <z|e^{-H}|z> - log Z. Pass `log_z` to reuse one estimate across calls.
ClampedLogProb clamped_log_prob(const QbmParams& params, std::span<const std::uint8_t> z,
                                const QuantumPaOptions& options,
                                std::optional<rbm::LogZEstimate> log_z = std::nullopt);

struct QuantumOracle {
  double log_z = 0.0;
  /// <z|e^{-H}|z> / Z indexed as in rbm::state_from_index.
  std::vector<double> diagonal;
  rbm::Moments moments;
};

/// Dense 2^L x 2^L eigendecomposition. Throws for L > 12.
QuantumOracle exact_quantum_oracle(const QbmParams& params);

/// One JSON object per line.
void write_diagnostics(std::ostream& out, std::span<const PaStep> trace);

}  // namespace qvae::qbm
