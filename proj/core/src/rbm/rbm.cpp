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

#include "qvae/rbm/rbm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qvae/detail/parallel.hpp"
#include "qvae/detail/resample.hpp"

namespace qvae::rbm {

RbmParams RbmParams::zeros(std::size_t left, std::size_t right) {
  RbmParams p;
  p.left = left;
  p.right = right;
  p.h.assign(left + right, 0.0);
  p.w.assign(left * right, 0.0);
  return p;
}

RbmParams RbmParams::random(std::size_t left, std::size_t right, double scale, Rng& rng) {
  RbmParams p = zeros(left, right);
  for (double& v : p.h) v = scale * (2.0 * uniform01(rng) - 1.0);
  for (double& v : p.w) v = scale * (2.0 * uniform01(rng) - 1.0);
  return p;
}

void RbmParams::validate() const {
  if (h.size() != left + right || w.size() != left * right) {
    throw std::invalid_argument("rbm: parameter sizes do not match " + std::to_string(left) + "x" +
                                std::to_string(right));
  }
  for (double v : h)
    if (!std::isfinite(v)) throw NumericalError("rbm: non-finite bias");
  for (double v : w)
    if (!std::isfinite(v)) throw NumericalError("rbm: non-finite coupling");
}

namespace {

void check_length(const RbmParams& params, std::size_t n) {
  if (n != params.size()) {
    throw std::invalid_argument("rbm: state of length " + std::to_string(n) + " for " +
                                std::to_string(params.size()) + " units");
  }
}

}  // namespace

double energy(const RbmParams& params, std::span<const std::uint8_t> z) {
  check_length(params, z.size());
  double e = 0.0;
  for (std::size_t l = 0; l < z.size(); ++l)
    if (z[l]) e += params.h[l];
  for (std::size_t i = 0; i < params.left; ++i) {
    if (!z[i]) continue;
    for (std::size_t j = 0; j < params.right; ++j)
      if (z[params.left + j]) e += params.coupling(i, j);
  }
  return e;
}

double local_field(const RbmParams& params, std::span<const std::uint8_t> z, std::size_t unit) {
  double f = params.h[unit];
  if (unit < params.left) {
    for (std::size_t j = 0; j < params.right; ++j)
      if (z[params.left + j]) f += params.coupling(unit, j);
  } else {
    const std::size_t j = unit - params.left;
    for (std::size_t i = 0; i < params.left; ++i)
      if (z[i]) f += params.coupling(i, j);
  }
  return f;
}

double conditional_probability(const RbmParams& params, std::span<const std::uint8_t> z, std::size_t unit) {
  return sigmoid(-local_field(params, z, unit));
}

void gibbs_block_sweep(const RbmParams& params, std::span<std::uint8_t> z, Rng& rng) {
  check_length(params, z.size());
  for (std::size_t j = params.left; j < params.size(); ++j)
    z[j] = uniform01(rng) < conditional_probability(params, z, j) ? 1 : 0;
  for (std::size_t i = 0; i < params.left; ++i)
    z[i] = uniform01(rng) < conditional_probability(params, z, i) ? 1 : 0;
}

Moments empirical_moments(const RbmParams& params, std::span<const State> states) {
  const std::size_t n = states.size();
  Moments m;
  m.first.assign(params.size(), 0.0);
  m.second.assign(params.left * params.right, 0.0);
  for (const auto& z : states) {
    for (std::size_t l = 0; l < params.size(); ++l) m.first[l] += z[l];
    for (std::size_t i = 0; i < params.left; ++i) {
      if (!z[i]) continue;
      for (std::size_t j = 0; j < params.right; ++j) m.second[i * params.right + j] += z[params.left + j];
    }
  }
  // Binary observables: variance p(1-p).
  auto finish = [n](std::vector<double>& mean, std::vector<double>& se) {
    se.assign(mean.size(), 0.0);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] /= static_cast<double>(n);
      se[k] = n > 1 ? std::sqrt(mean[k] * (1.0 - mean[k]) / static_cast<double>(n - 1)) : 0.0;
    }
  };
  finish(m.first, m.first_stderr);
  finish(m.second, m.second_stderr);
  return m;
}

PcdState::PcdState(std::size_t chains, std::size_t units, std::uint64_t seed) : rng_(seed) {
  chains_.assign(chains, State(units, 0));
  for (auto& c : chains_)
    for (auto& v : c) v = uniform01(rng_) < 0.5 ? 1 : 0;
}

Moments pcd_negative_phase(const RbmParams& params, PcdState& state, std::size_t k_sweeps) {
  if (k_sweeps == 0) throw std::invalid_argument("pcd: k_sweeps must be >= 1");
  for (auto& chain : state.chains()) {
    check_length(params, chain.size());
    for (std::size_t s = 0; s < k_sweeps; ++s) gibbs_block_sweep(params, chain, state.rng());
  }
  state.count_sweeps(k_sweeps);
  return empirical_moments(params, state.chains());
}

State state_from_index(std::uint64_t index, std::size_t units) {
  State z(units);
  for (std::size_t l = 0; l < units; ++l) z[l] = (index >> l) & 1U;
  return z;
}

std::uint64_t index_from_state(std::span<const std::uint8_t> z) {
  std::uint64_t idx = 0;
  for (std::size_t l = 0; l < z.size(); ++l)
    if (z[l]) idx |= std::uint64_t{1} << l;
  return idx;
}

namespace {

constexpr std::size_t kMaxEnumerated = 24;

template <class F>
void enumerate_states(const RbmParams& params, F&& visit) {
  const std::size_t n = params.size();
  if (n > kMaxEnumerated) {
    throw std::invalid_argument("rbm: exact enumeration limited to " + std::to_string(kMaxEnumerated) +
                                " units, got " + std::to_string(n));
  }
  State z(n, 0);
  for (std::uint64_t idx = 0; idx < (std::uint64_t{1} << n); ++idx) {
    for (std::size_t l = 0; l < n; ++l) z[l] = (idx >> l) & 1U;
    visit(idx, z);
  }
}

}  // namespace

double exact_log_z(const RbmParams& params) {
  LogSumExp acc;
  enumerate_states(params, [&](std::uint64_t, const State& z) { acc.add(-energy(params, z)); });
  return acc.value();
}

std::vector<double> exact_probabilities(const RbmParams& params) {
  const double log_z = exact_log_z(params);
  std::vector<double> p(std::size_t{1} << params.size());
  enumerate_states(params, [&](std::uint64_t idx, const State& z) { p[idx] = std::exp(-energy(params, z) - log_z); });
  return p;
}

Moments exact_moments(const RbmParams& params) {
  const auto p = exact_probabilities(params);
  Moments m;
  m.first.assign(params.size(), 0.0);
  m.second.assign(params.left * params.right, 0.0);
  enumerate_states(params, [&](std::uint64_t idx, const State& z) {
    for (std::size_t l = 0; l < params.size(); ++l) m.first[l] += p[idx] * z[l];
    for (std::size_t i = 0; i < params.left; ++i)
      for (std::size_t j = 0; j < params.right; ++j)
        m.second[i * params.right + j] += p[idx] * z[i] * z[params.left + j];
  });
  m.first_stderr.assign(m.first.size(), 0.0);
  m.second_stderr.assign(m.second.size(), 0.0);
  return m;
}

LogZEstimate combine_replicas(std::span<const double> log_z_per_replica) {
  LogZEstimate est;
  const std::size_t r = log_z_per_replica.size();
  if (r == 0) throw std::invalid_argument("combine_replicas: no replicas");
  est.log_z = log_sum_exp(log_z_per_replica) - std::log(static_cast<double>(r));
  if (r > 1) {
    double var = 0.0;
    for (double lz : log_z_per_replica) {
      const double ratio = std::exp(lz - est.log_z);
      var += (ratio - 1.0) * (ratio - 1.0);
    }
    var /= static_cast<double>(r - 1);
    est.std_error = std::sqrt(var / static_cast<double>(r));
  }
  return est;
}

LogZEstimate log_z_population_annealing(const RbmParams& params, const PaOptions& options) {
  params.validate();
  if (options.population < 100) throw std::invalid_argument("population annealing: population must be >= 100");
  if (options.steps == 0 || options.replicas == 0) throw std::invalid_argument("population annealing: empty schedule");
  const std::size_t n = options.population;
  const std::size_t units = params.size();

  struct ReplicaResult {
    double log_z = 0.0;
    double min_ess = 1.0;
    std::size_t resamples = 0;
  };
  std::vector<ReplicaResult> results(options.replicas);

  detail::parallel_for(options.replicas, options.threads, [&](std::size_t rep) {
    Rng rng(derive_seed(options.seed, rep));
    std::vector<State> particles(n, State(units));
    for (auto& p : particles)
      for (auto& v : p) v = uniform01(rng) < 0.5 ? 1 : 0;
    std::vector<double> log_w(n, 0.0);
    RbmParams scaled = params;
    double log_z = static_cast<double>(units) * std::log(2.0);
    ReplicaResult& out = results[rep];

    for (std::size_t step = 1; step <= options.steps; ++step) {
      const double t_prev = static_cast<double>(step - 1) / static_cast<double>(options.steps);
      const double t = static_cast<double>(step) / static_cast<double>(options.steps);
      const double before = log_sum_exp(log_w);
      for (std::size_t k = 0; k < n; ++k) log_w[k] -= (t - t_prev) * energy(params, particles[k]);
      log_z += log_sum_exp(log_w) - before;

      const double ess = detail::effective_sample_size(log_w);
      out.min_ess = std::min(out.min_ess, ess / static_cast<double>(n));
      if (ess < options.resample_threshold * static_cast<double>(n)) {
        detail::systematic_resample(particles, log_w, rng);
        ++out.resamples;
      }

      for (std::size_t l = 0; l < units; ++l) scaled.h[l] = t * params.h[l];
      for (std::size_t k = 0; k < scaled.w.size(); ++k) scaled.w[k] = t * params.w[k];
      for (auto& p : particles)
        for (std::size_t s = 0; s < options.sweeps; ++s) gibbs_block_sweep(scaled, p, rng);
    }
    out.log_z = log_z;
  });

  std::vector<double> per_replica;
  for (const auto& r : results) per_replica.push_back(r.log_z);
  LogZEstimate est = combine_replicas(per_replica);
  for (const auto& r : results) {
    est.min_ess_fraction = std::min(est.min_ess_fraction, r.min_ess);
    est.resamples += r.resamples;
  }
  est.degenerate = est.min_ess_fraction < 0.01;
  return est;
}

}  // namespace qvae::rbm
