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

#include "qvae/model/prior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qvae/reparam/spike_exp.hpp"

namespace qvae::model {

using diff::Tape;
using diff::Tensor;

namespace {

constexpr std::size_t kExactNegativeClassical = 12;
constexpr std::size_t kExactNegativeQuantum = 6;
constexpr std::size_t kGibbsBurnIn = 200;

// Inverse-CDF draws from an enumerated distribution.
std::vector<rbm::State> sample_enumerated(std::span<const double> p, std::size_t units, std::size_t n, Rng& rng) {
  std::vector<double> cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  std::vector<rbm::State> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = uniform01(rng) * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const auto idx = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
    out.push_back(rbm::state_from_index(idx, units));
  }
  return out;
}

}  // namespace

Tensor boltzmann_cross_entropy(Tape& tape, const Tensor& z, const Tensor& h, const Tensor& w, double log_z,
                               const rbm::Moments& negative) {
  const std::size_t batch = z.rows(), units = z.cols();
  if (h.size() != units || w.rank() != 2 || w.shape()[0] + w.shape()[1] != units) {
    throw std::invalid_argument("boltzmann_cross_entropy: z " + z.describe() + ", h " + h.describe() + ", W " +
                                w.describe());
  }
  const std::size_t left = w.shape()[0], right = w.shape()[1];
  if (negative.first.size() != units || negative.second.size() != left * right) {
    throw std::invalid_argument("boltzmann_cross_entropy: negative-phase moments do not match the prior");
  }
  std::vector<double> ce(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* zb = z.values().data() + b * units;
    double e = 0.0;
    for (std::size_t l = 0; l < units; ++l) e += h[l] * zb[l];
    for (std::size_t i = 0; i < left; ++i) {
      if (zb[i] == 0.0) continue;
      for (std::size_t j = 0; j < right; ++j) e += w[i * right + j] * zb[i] * zb[left + j];
    }
    ce[b] = e + log_z;
  }
  const Tensor inputs[] = {z, h, w};
  return tape.custom({batch}, std::move(ce), inputs,
                     [z, h, w, negative, batch, units, left, right](const Tensor& out) {
                       auto g = out.grad();
                       const auto zv = z.values();
                       for (std::size_t b = 0; b < batch; ++b) {
                         const double gb = g[b];
                         const double* zb = zv.data() + b * units;
                         if (z.requires_grad()) {
                           auto dz = z.grad();
                           for (std::size_t l = 0; l < units; ++l) dz[b * units + l] += gb * h[l];
                           for (std::size_t i = 0; i < left; ++i)
                             for (std::size_t j = 0; j < right; ++j) {
                               dz[b * units + i] += gb * w[i * right + j] * zb[left + j];
                               dz[b * units + left + j] += gb * w[i * right + j] * zb[i];
                             }
                         }
                         if (h.requires_grad()) {
                           auto dh = h.grad();
                           for (std::size_t l = 0; l < units; ++l) dh[l] += gb * (zb[l] - negative.first[l]);
                         }
                         if (w.requires_grad()) {
                           auto dw = w.grad();
                           for (std::size_t i = 0; i < left; ++i)
                             for (std::size_t j = 0; j < right; ++j)
                               dw[i * right + j] += gb * (zb[i] * zb[left + j] - negative.second[i * right + j]);
                         }
                       }
                     });
}

BernoulliPrior::BernoulliPrior(std::size_t latent) : logits_(Tensor::zeros({latent}, true)) {}

Tensor BernoulliPrior::cross_entropy(Tape& tape, const reparam::LatentSample& sample) {
  return reparam::bernoulli_cross_entropy_logits(tape, sample.q, logits_);
}

double BernoulliPrior::log_prob(std::span<const std::uint8_t> z) {
  double lp = 0.0;
  for (std::size_t l = 0; l < z.size(); ++l) lp -= softplus(z[l] ? -logits_[l] : logits_[l]);
  return lp;
}

std::vector<rbm::State> BernoulliPrior::sample(std::size_t n, Rng& rng) {
  std::vector<rbm::State> out(n, rbm::State(latent_size()));
  for (auto& s : out)
    for (std::size_t l = 0; l < s.size(); ++l) s[l] = uniform01(rng) < sigmoid(logits_[l]) ? 1 : 0;
  return out;
}

BoltzmannPrior::BoltzmannPrior(const VaeConfig& config, Rng& init_rng)
    : kind_(config.prior),
      left_(config.left_units()),
      right_(config.right_units()),
      gamma_(config.prior == PriorKind::kQbm ? config.gamma : 0.0),
      sampler_(config.sampler),
      log_z_config_(config.log_z),
      threads_(config.threads),
      seed_(derive_seed(config.seed, 0x707269ULL)) {
  const std::size_t units = left_ + right_;
  h_ = Tensor::zeros({units}, true);
  w_ = Tensor::zeros({left_, right_}, true);
  for (double& v : w_.values()) v = 0.01 * (2.0 * uniform01(init_rng) - 1.0);

  negative_ = sampler_.method;
  if (negative_ == NegativePhase::kAuto) {
    if (quantum()) {
      negative_ = units <= kExactNegativeQuantum ? NegativePhase::kExact : NegativePhase::kQmc;
    } else {
      negative_ = units <= kExactNegativeClassical ? NegativePhase::kExact : NegativePhase::kPcd;
    }
  }
  if (!quantum() && negative_ == NegativePhase::kQmc) negative_ = NegativePhase::kPcd;
  if (quantum() && negative_ == NegativePhase::kPcd)
    throw ConfigError("prior.sampler.method", "pcd cannot sample a prior with gamma > 0; use qmc");
  if (negative_ == NegativePhase::kExact && units > (quantum() ? 12 : 24))
    throw ConfigError("prior.sampler.method", "exact negative phase needs a smaller latent space");

  log_z_method_ = log_z_config_.method;
  if (log_z_method_ == LogZMethod::kAuto) {
    const std::size_t limit = quantum() ? log_z_config_.dense_limit : log_z_config_.exact_limit;
    log_z_method_ = units <= limit ? LogZMethod::kExact : LogZMethod::kPa;
  }
  if (log_z_method_ == LogZMethod::kExact && units > (quantum() ? 12 : 24))
    throw ConfigError("prior.log_z.method", "exact log Z needs a smaller latent space");

  if (negative_ == NegativePhase::kPcd) pcd_.emplace(sampler_.chains, units, derive_seed(seed_, 1));
  if (negative_ == NegativePhase::kQmc) qmc_.emplace(sampler_.chains, units, sampler_.slices, derive_seed(seed_, 2));
  moments_.first.assign(units, 0.5);
  moments_.second.assign(left_ * right_, 0.25);
}

qbm::QbmParams BoltzmannPrior::params() const {
  rbm::RbmParams c = rbm::RbmParams::zeros(left_, right_);
  std::copy(h_.values().begin(), h_.values().end(), c.h.begin());
  std::copy(w_.values().begin(), w_.values().end(), c.w.begin());
  qbm::QbmParams p = qbm::QbmParams::uniform(std::move(c), gamma_);
  p.kink = sampler_.kink;
  return p;
}

Tensor BoltzmannPrior::cross_entropy(Tape& tape, const reparam::LatentSample& sample) {
  return boltzmann_cross_entropy(tape, sample.z, h_, w_, log_z_, moments_);
}

void BoltzmannPrior::refresh_negative_phase() {
  const qbm::QbmParams p = params();
  switch (negative_) {
    case NegativePhase::kExact:
      moments_ = quantum() ? qbm::exact_quantum_oracle(p).moments : rbm::exact_moments(p.classical);
      break;
    case NegativePhase::kPcd:
      moments_ = rbm::pcd_negative_phase(p.classical, *pcd_, sampler_.sweeps);
      break;
    case NegativePhase::kQmc:
      moments_ = qbm::qmc_negative_phase(p, *qmc_, sampler_.sweeps);
      break;
    case NegativePhase::kAuto:
      throw std::logic_error("prior: unresolved negative-phase method");
  }
}

void BoltzmannPrior::refresh_log_z() {
  const qbm::QbmParams p = params();
  exact_diagonal_.clear();
  pa_trace_.clear();
  const std::uint64_t seed = derive_seed(seed_, 1000 + refreshes_++);
  if (log_z_method_ == LogZMethod::kExact) {
    if (quantum()) {
      auto oracle = qbm::exact_quantum_oracle(p);
      log_z_ = oracle.log_z;
      exact_diagonal_ = std::move(oracle.diagonal);
    } else {
      log_z_ = rbm::exact_log_z(p.classical);
    }
    log_z_stderr_ = 0.0;
    return;
  }
  if (!quantum()) {
    rbm::PaOptions o;
    o.population = log_z_config_.population;
    o.steps = log_z_config_.steps;
    o.sweeps = log_z_config_.sweeps;
    o.replicas = log_z_config_.replicas;
    o.seed = seed;
    o.threads = threads_;
    const auto est = rbm::log_z_population_annealing(p.classical, o);
    log_z_ = est.log_z;
    log_z_stderr_ = est.std_error;
    return;
  }
  qbm::QuantumPaOptions o;
  o.population = log_z_config_.population;
  o.steps = log_z_config_.steps;
  o.sweeps = log_z_config_.sweeps;
  o.replicas = log_z_config_.replicas;
  o.slices = sampler_.slices;
  o.seed = seed;
  o.threads = threads_;
  o.record_trace = true;
  auto result = qbm::quantum_population_annealing(p, o);
  log_z_ = result.estimate.log_z;
  log_z_stderr_ = result.estimate.std_error;
  pa_trace_ = std::move(result.trace);
  if (qmc_) {
    // Spread the persistent chains over the equilibrated population.
    std::vector<qbm::PathConfiguration> chains;
    const std::size_t n = result.population.size();
    for (std::size_t c = 0; c < sampler_.chains; ++c) chains.push_back(result.population[(c * n) / sampler_.chains]);
    qmc_->reset(std::move(chains));
  }
}

double BoltzmannPrior::log_prob(std::span<const std::uint8_t> z) {
  if (!quantum()) return -rbm::energy(params().classical, z) - log_z_;
  if (!exact_diagonal_.empty()) return std::log(exact_diagonal_[rbm::index_from_state(z)]);
  qbm::QuantumPaOptions o;
  o.population = log_z_config_.population;
  o.steps = log_z_config_.steps;
  o.sweeps = log_z_config_.sweeps;
  o.replicas = log_z_config_.replicas;
  o.slices = sampler_.slices;
  o.seed = derive_seed(seed_, rbm::index_from_state(z));
  o.threads = threads_;
  return qbm::clamped_log_prob(params(), z, o, rbm::LogZEstimate{log_z_, log_z_stderr_}).log_prob;
}

std::vector<rbm::State> BoltzmannPrior::sample(std::size_t n, Rng& rng) {
  const qbm::QbmParams p = params();
  const std::size_t units = left_ + right_;
  if (!quantum() && units <= kExactNegativeClassical) return sample_enumerated(rbm::exact_probabilities(p.classical), units, n, rng);
  if (quantum() && units <= kExactNegativeQuantum)
    return sample_enumerated(qbm::exact_quantum_oracle(p).diagonal, units, n, rng);
  std::vector<rbm::State> out;
  if (!quantum()) {
    rbm::PcdState chains(n, units, rng());
    for (std::size_t s = 0; s < kGibbsBurnIn; ++s)
      for (auto& c : chains.chains()) rbm::gibbs_block_sweep(p.classical, c, chains.rng());
    return chains.chains();
  }
  qbm::QmcChains chains(n, units, sampler_.slices, rng());
  for (std::size_t s = 0; s < kGibbsBurnIn; ++s)
    for (auto& c : chains.paths()) qbm::cluster_update(p, c, chains.rng());
  for (const auto& c : chains.paths()) out.push_back(c.slice(0));
  return out;
}

std::unique_ptr<Prior> make_prior(const VaeConfig& config, Rng& init_rng) {
  switch (config.prior) {
    case PriorKind::kGaussian: return nullptr;
    case PriorKind::kBernoulli: return std::make_unique<BernoulliPrior>(config.latent_size);
    case PriorKind::kRbm:
    case PriorKind::kQbm: return std::make_unique<BoltzmannPrior>(config, init_rng);
  }
  return nullptr;
}

}  // namespace qvae::model
