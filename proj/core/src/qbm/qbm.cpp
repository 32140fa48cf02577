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

#include "qvae/qbm/qbm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iterator>
#include <nlohmann/json.hpp>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qvae/detail/parallel.hpp"
#include "qvae/detail/resample.hpp"

namespace qvae::qbm {

namespace {

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

// h_i + sum_j W_ij z_j at slice a, with z read from the path.
double site_field(const rbm::RbmParams& c, const PathConfiguration& path, std::size_t site, std::size_t a) {
  double f = c.h[site];
  if (site < c.left) {
    for (std::size_t j = 0; j < c.right; ++j)
      if (path.at(c.left + j, a)) f += c.coupling(site, j);
  } else {
    const std::size_t j = site - c.left;
    for (std::size_t i = 0; i < c.left; ++i)
      if (path.at(i, a)) f += c.coupling(i, j);
  }
  return f;
}

double classical_path_energy(const rbm::RbmParams& c, const PathConfiguration& path) {
  double total = 0.0;
  State z(path.sites);
  for (std::size_t a = 0; a < path.slices; ++a) {
    for (std::size_t i = 0; i < path.sites; ++i) z[i] = path.at(i, a);
    total += rbm::energy(c, z);
  }
  return total / static_cast<double>(path.slices);
}

bool metropolis(double delta_e, Rng& rng) { return delta_e <= 0.0 || uniform01(rng) < std::exp(-delta_e); }

// Segment flips use heat-bath odds; Metropolis would flip every zero-cost
// segment together and never change the relative alignment.
bool heat_bath(double delta_e, Rng& rng) { return uniform01(rng) < sigmoid(-delta_e); }

}  // namespace

QbmParams QbmParams::uniform(rbm::RbmParams classical, double gamma) {
  QbmParams p;
  p.gamma.assign(classical.size(), gamma);
  p.classical = std::move(classical);
  return p;
}

bool QbmParams::is_classical() const {
  for (double g : gamma)
    if (g != 0.0) return false;
  return true;
}

QbmParams QbmParams::scaled(double t) const {
  QbmParams p = *this;
  for (double& g : p.gamma) g *= t;
  for (double& v : p.classical.h) v *= t;
  for (double& v : p.classical.w) v *= t;
  return p;
}

void QbmParams::validate() const {
  classical.validate();
  if (gamma.size() != classical.size()) {
    throw std::invalid_argument("qbm: " + std::to_string(gamma.size()) + " transverse fields for " +
                                std::to_string(classical.size()) + " units");
  }
  for (double g : gamma)
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("qbm: transverse field must be finite and >= 0");
}

PathConfiguration PathConfiguration::straight(std::span<const std::uint8_t> z, std::size_t slices) {
  PathConfiguration p;
  p.sites = z.size();
  p.slices = slices;
  p.bits.resize(p.sites * slices);
  for (std::size_t i = 0; i < p.sites; ++i)
    for (std::size_t a = 0; a < slices; ++a) p.at(i, a) = z[i];
  return p;
}

State PathConfiguration::slice(std::size_t a) const {
  State z(sites);
  for (std::size_t i = 0; i < sites; ++i) z[i] = at(i, a);
  return z;
}

std::size_t PathConfiguration::kinks(std::size_t site) const {
  std::size_t k = 0;
  for (std::size_t a = 0; a < slices; ++a) k += at(site, a) != at(site, (a + 1) % slices);
  return k;
}

std::size_t PathConfiguration::kinks() const {
  std::size_t k = 0;
  for (std::size_t i = 0; i < sites; ++i) k += kinks(i);
  return k;
}

double kink_weight(const QbmParams& params, std::size_t site, std::size_t slices) {
  const double x = params.gamma[site] / static_cast<double>(slices);
  return params.kink == KinkWeight::kTrotter ? std::tanh(x) : x;
}

PathEnergy path_energy(const QbmParams& params, const PathConfiguration& path) {
  params.validate();
  if (params.is_classical()) throw std::invalid_argument("path_energy: Gamma = 0 has no path representation");
  if (path.slices < 2) throw std::invalid_argument("path_energy: need at least 2 slices");
  if (path.sites != params.size()) throw std::invalid_argument("path_energy: path size does not match parameters");
  PathEnergy e;
  for (std::size_t i = 0; i < path.sites; ++i) {
    const std::size_t k = path.kinks(i);
    e.kinks += k;
    if (k > 0) {
      if (params.gamma[i] == 0.0) throw std::invalid_argument("path_energy: kink on a site with Gamma = 0");
      e.quantum -= static_cast<double>(k) * std::log(kink_weight(params, i, path.slices));
    }
    if (params.kink == KinkWeight::kTrotter)
      e.log_normalizer += static_cast<double>(path.slices) * log_cosh(params.gamma[i] / static_cast<double>(path.slices));
  }
  e.classical = classical_path_energy(params.classical, path);
  return e;
}

double classical_energy_of_state(const QbmParams& params, std::span<const std::uint8_t> z) {
  return rbm::energy(params.classical, z);
}

void cluster_update(const QbmParams& params, PathConfiguration& path, Rng& rng, bool clamp_first_slice) {
  const std::size_t m = path.slices;
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<double> field(m);
  std::vector<std::size_t> cuts;

  for (std::size_t i = 0; i < path.sites; ++i) {
    for (std::size_t a = 0; a < m; ++a) field[a] = site_field(params.classical, path, i, a);
    const double w = kink_weight(params, i, m);
    auto flip_cost = [&](std::size_t a) { return (path.at(i, a) ? -field[a] : field[a]) * inv_m; };

    if (w >= 1.0) {
      // No bonds survive; fall back to single-slice moves that pay for kinks.
      const double log_w = std::log(w);
      for (std::size_t a = clamp_first_slice ? 1 : 0; a < m; ++a) {
        const std::uint8_t z = path.at(i, a);
        const int before = (z != path.at(i, (a + m - 1) % m)) + (z != path.at(i, (a + 1) % m));
        const double delta = flip_cost(a) - (2 - 2 * before) * log_w;
        if (metropolis(delta, rng)) path.at(i, a) ^= 1U;
      }
    } else {
      // Link a joins slices a and a+1; it is cut unless aligned and bonded.
      cuts.clear();
      for (std::size_t a = 0; a < m; ++a) {
        const bool aligned = path.at(i, a) == path.at(i, (a + 1) % m);
        if (!aligned || uniform01(rng) < w) cuts.push_back(a);
      }
      if (!cuts.empty()) {
        for (std::size_t c = 0; c < cuts.size(); ++c) {
          const std::size_t begin = (cuts[c] + 1) % m;
          const std::size_t end = (cuts[(c + 1) % cuts.size()] + 1) % m;
          double delta = 0.0;
          bool frozen = false;
          std::size_t a = begin;
          do {
            frozen = frozen || (clamp_first_slice && a == 0);
            delta += flip_cost(a);
            a = (a + 1) % m;
          } while (a != end);
          if (frozen || !heat_bath(delta, rng)) continue;
          a = begin;
          do {
            path.at(i, a) ^= 1U;
            a = (a + 1) % m;
          } while (a != end);
        }
      }
    }

    if (!clamp_first_slice) {
      double delta = 0.0;
      for (std::size_t a = 0; a < m; ++a) delta += flip_cost(a);
      if (metropolis(delta, rng))
        for (std::size_t a = 0; a < m; ++a) path.at(i, a) ^= 1U;
    }
  }
}

rbm::Moments path_moments(const QbmParams& params, std::span<const PathConfiguration> paths) {
  const auto& c = params.classical;
  const std::size_t n = paths.size();
  rbm::Moments m;
  m.first.assign(c.size(), 0.0);
  m.second.assign(c.left * c.right, 0.0);
  std::vector<double> first_sq(m.first.size(), 0.0), second_sq(m.second.size(), 0.0);
  std::vector<double> first(m.first.size()), second(m.second.size());
  for (const auto& path : paths) {
    std::fill(first.begin(), first.end(), 0.0);
    std::fill(second.begin(), second.end(), 0.0);
    for (std::size_t a = 0; a < path.slices; ++a) {
      for (std::size_t l = 0; l < c.size(); ++l) first[l] += path.at(l, a);
      for (std::size_t i = 0; i < c.left; ++i) {
        if (!path.at(i, a)) continue;
        for (std::size_t j = 0; j < c.right; ++j) second[i * c.right + j] += path.at(c.left + j, a);
      }
    }
    const double inv = 1.0 / static_cast<double>(path.slices);
    for (std::size_t k = 0; k < first.size(); ++k) {
      m.first[k] += first[k] * inv;
      first_sq[k] += first[k] * inv * first[k] * inv;
    }
    for (std::size_t k = 0; k < second.size(); ++k) {
      m.second[k] += second[k] * inv;
      second_sq[k] += second[k] * inv * second[k] * inv;
    }
  }
  auto finish = [n](std::vector<double>& mean, const std::vector<double>& sq, std::vector<double>& se) {
    se.assign(mean.size(), 0.0);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] /= static_cast<double>(n);
      if (n > 1) {
        const double var = std::max(0.0, sq[k] / static_cast<double>(n) - mean[k] * mean[k]) *
                           static_cast<double>(n) / static_cast<double>(n - 1);
        se[k] = std::sqrt(var / static_cast<double>(n));
      }
    }
  };
  finish(m.first, first_sq, m.first_stderr);
  finish(m.second, second_sq, m.second_stderr);
  return m;
}

QmcChains::QmcChains(std::size_t chains, std::size_t units, std::size_t slices, std::uint64_t seed)
    : slices_(slices), rng_(seed) {
  if (slices < 2) throw std::invalid_argument("qmc: need at least 2 slices");
  State z(units);
  for (std::size_t c = 0; c < chains; ++c) {
    for (auto& v : z) v = uniform01(rng_) < 0.5 ? 1 : 0;
    paths_.push_back(PathConfiguration::straight(z, slices));
  }
}

void QmcChains::reset(std::vector<PathConfiguration> paths) {
  for (const auto& p : paths)
    if (p.slices != slices_) throw std::invalid_argument("qmc: replacement path has a different slice count");
  paths_ = std::move(paths);
}

rbm::Moments qmc_negative_phase(const QbmParams& params, QmcChains& chains, std::size_t sweeps) {
  params.validate();
  if (sweeps == 0) throw std::invalid_argument("qmc: sweeps must be >= 1");
  for (auto& path : chains.paths()) {
    if (path.sites != params.size()) throw std::invalid_argument("qmc: chain size does not match parameters");
    for (std::size_t s = 0; s < sweeps; ++s) cluster_update(params, path, chains.rng());
  }
  return path_moments(params, chains.paths());
}

PathMeasurement measure_paths(const QbmParams& params, std::vector<PathConfiguration>& paths, std::size_t sweeps,
                              Rng& rng) {
  if (paths.empty() || sweeps == 0) throw std::invalid_argument("measure_paths: nothing to measure");
  const std::size_t units = params.size();
  PathMeasurement out;
  const bool histogram = units <= 16;
  if (histogram) out.state_frequency.assign(std::size_t{1} << units, 0.0);
  // Per-path time averages: one path_moments call per sweep, averaged.
  std::vector<rbm::Moments> per_path(paths.size());
  for (std::size_t s = 0; s < sweeps; ++s) {
    for (std::size_t p = 0; p < paths.size(); ++p) {
      auto& path = paths[p];
      cluster_update(params, path, rng);
      const auto m = path_moments(params, std::span<const PathConfiguration>(&path, 1));
      auto& acc = per_path[p];
      if (acc.first.empty()) {
        acc.first.assign(m.first.size(), 0.0);
        acc.second.assign(m.second.size(), 0.0);
      }
      for (std::size_t k = 0; k < m.first.size(); ++k) acc.first[k] += m.first[k];
      for (std::size_t k = 0; k < m.second.size(); ++k) acc.second[k] += m.second[k];
      if (histogram)
        for (std::size_t a = 0; a < path.slices; ++a) {
          std::uint64_t index = 0;
          for (std::size_t l = 0; l < units; ++l) index |= std::uint64_t{path.at(l, a)} << l;
          out.state_frequency[index] += 1.0;
        }
    }
  }
  if (histogram) {
    double total = 0.0;
    for (double f : out.state_frequency) total += f;
    for (double& f : out.state_frequency) f /= total;
  }
  auto reduce = [&](auto member, auto se_member) {
    const std::size_t size = (per_path.front().*member).size();
    auto& mean = out.moments.*member;
    auto& se = out.moments.*se_member;
    mean.assign(size, 0.0);
    se.assign(size, 0.0);
    const double n = static_cast<double>(per_path.size());
    for (std::size_t k = 0; k < size; ++k) {
      double sum = 0.0, sq = 0.0;
      for (const auto& acc : per_path) {
        const double v = (acc.*member)[k] / static_cast<double>(sweeps);
        sum += v;
        sq += v * v;
      }
      mean[k] = sum / n;
      if (per_path.size() > 1) se[k] = std::sqrt(std::max(0.0, sq / n - mean[k] * mean[k]) / (n - 1.0));
    }
  };
  reduce(&rbm::Moments::first, &rbm::Moments::first_stderr);
  reduce(&rbm::Moments::second, &rbm::Moments::second_stderr);
  return out;
}

QuantumPaResult quantum_population_annealing(const QbmParams& params, const QuantumPaOptions& options,
                                             std::optional<State> clamp) {
  params.validate();
  if (options.population < 100) throw std::invalid_argument("population annealing: population must be >= 100");
  if (options.steps == 0 || options.replicas == 0) throw std::invalid_argument("population annealing: empty schedule");
  if (options.slices < 2) throw std::invalid_argument("population annealing: need at least 2 slices");
  const std::size_t units = params.size();
  if (clamp && clamp->size() != units) throw std::invalid_argument("population annealing: clamp has the wrong size");
  const std::size_t n = options.population;
  const std::size_t m = options.slices;

  struct Replica {
    double log_z = 0.0;
    double min_ess = 1.0;
    std::size_t resamples = 0;
    std::vector<PathConfiguration> population;
    std::vector<PaStep> trace;
  };
  std::vector<Replica> replicas(options.replicas);

  detail::parallel_for(options.replicas, options.threads, [&](std::size_t rep) {
    Rng rng(derive_seed(options.seed, rep));
    Replica& out = replicas[rep];
    std::vector<PathConfiguration> particles;
    particles.reserve(n);
    State z(units);
    for (std::size_t k = 0; k < n; ++k) {
      if (clamp) {
        z = *clamp;
      } else {
        for (auto& v : z) v = uniform01(rng) < 0.5 ? 1 : 0;
      }
      particles.push_back(PathConfiguration::straight(z, m));
    }
    std::vector<double> log_w(n, 0.0);
    double log_z = clamp ? 0.0 : static_cast<double>(units) * std::log(2.0);
    std::vector<double> delta_log_w(units);

    for (std::size_t step = 1; step <= options.steps; ++step) {
      const double t_prev = static_cast<double>(step - 1) / static_cast<double>(options.steps);
      const double t = static_cast<double>(step) / static_cast<double>(options.steps);
      double delta_norm = 0.0;
      for (std::size_t i = 0; i < units; ++i) {
        const double g = params.gamma[i] / static_cast<double>(m);
        if (g == 0.0) {
          delta_log_w[i] = 0.0;
          continue;
        }
        if (params.kink == KinkWeight::kTrotter) {
          delta_log_w[i] = t_prev > 0 ? std::log(std::tanh(t * g)) - std::log(std::tanh(t_prev * g)) : 0.0;
          delta_norm += static_cast<double>(m) * (log_cosh(t * g) - log_cosh(t_prev * g));
        } else {
          delta_log_w[i] = t_prev > 0 ? std::log(t / t_prev) : 0.0;
        }
      }

      const double before = log_sum_exp(log_w);
      std::size_t total_kinks = 0;
      for (std::size_t k = 0; k < n; ++k) {
        double inc = delta_norm - (t - t_prev) * classical_path_energy(params.classical, particles[k]);
        for (std::size_t i = 0; i < units; ++i) {
          const std::size_t kinks = particles[k].kinks(i);
          total_kinks += kinks;
          if (kinks > 0) inc += static_cast<double>(kinks) * delta_log_w[i];
        }
        log_w[k] += inc;
      }
      log_z += log_sum_exp(log_w) - before;

      const double ess = detail::effective_sample_size(log_w) / static_cast<double>(n);
      out.min_ess = std::min(out.min_ess, ess);
      const bool resample = ess < options.resample_threshold;
      if (resample) {
        detail::systematic_resample(particles, log_w, rng);
        ++out.resamples;
      }
      if (options.record_trace) {
        out.trace.push_back({rep, step, t, ess,
                             static_cast<double>(total_kinks) / static_cast<double>(n * units * m), resample});
      }

      const QbmParams at_t = params.scaled(t);
      for (auto& p : particles)
        for (std::size_t s = 0; s < options.sweeps; ++s) cluster_update(at_t, p, rng, clamp.has_value());
    }
    if (detail::effective_sample_size(log_w) < static_cast<double>(n) * (1.0 - 1e-12))
      detail::systematic_resample(particles, log_w, rng);
    out.log_z = log_z;
    out.population = std::move(particles);
  });

  QuantumPaResult result;
  std::vector<double> per_replica;
  for (const auto& r : replicas) per_replica.push_back(r.log_z);
  result.estimate = rbm::combine_replicas(per_replica);
  for (auto& r : replicas) {
    result.estimate.min_ess_fraction = std::min(result.estimate.min_ess_fraction, r.min_ess);
    result.estimate.resamples += r.resamples;
    std::move(r.population.begin(), r.population.end(), std::back_inserter(result.population));
    result.trace.insert(result.trace.end(), r.trace.begin(), r.trace.end());
  }
  result.estimate.degenerate = result.estimate.min_ess_fraction < 0.01;
  return result;
}

rbm::LogZEstimate quantum_log_z_pa(const QbmParams& params, const QuantumPaOptions& options) {
  params.validate();
  if (params.is_classical()) {
    rbm::PaOptions classical;
    classical.population = options.population;
    classical.steps = options.steps;
    classical.sweeps = options.sweeps;
    classical.replicas = options.replicas;
    classical.resample_threshold = options.resample_threshold;
    classical.seed = options.seed;
    classical.threads = options.threads;
    return rbm::log_z_population_annealing(params.classical, classical);
  }
  return quantum_population_annealing(params, options).estimate;
}

ClampedLogProb clamped_log_prob(const QbmParams& params, std::span<const std::uint8_t> z,
                                const QuantumPaOptions& options, std::optional<rbm::LogZEstimate> log_z) {
  const rbm::LogZEstimate total = log_z ? *log_z : quantum_log_z_pa(params, options);
  ClampedLogProb out;
  if (params.is_classical()) {
    out.log_prob = -rbm::energy(params.classical, z) - total.log_z;
    out.std_error = total.std_error;
    out.degenerate = total.degenerate;
    return out;
  }
  QuantumPaOptions clamped = options;
  clamped.seed = derive_seed(options.seed, 0x636c616d70ULL);
  const auto numerator = quantum_population_annealing(params, clamped, State(z.begin(), z.end())).estimate;
  out.log_prob = numerator.log_z - total.log_z;
  out.std_error = std::hypot(numerator.std_error, total.std_error);
  out.degenerate = numerator.degenerate || total.degenerate;
  return out;
}

QuantumOracle exact_quantum_oracle(const QbmParams& params) {
  params.validate();
  const std::size_t units = params.size();
  if (units > 12) throw std::invalid_argument("exact_quantum_oracle: limited to 12 units, got " + std::to_string(units));
  const std::size_t dim = std::size_t{1} << units;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t s = 0; s < dim; ++s) {
    const auto z = rbm::state_from_index(s, units);
    const auto si = static_cast<Eigen::Index>(s);
    h(si, si) = rbm::energy(params.classical, z);
    for (std::size_t l = 0; l < units; ++l) h(si, static_cast<Eigen::Index>(s ^ (std::size_t{1} << l))) = params.gamma[l];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("exact_quantum_oracle: eigendecomposition failed");
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double shift = lambda.minCoeff();
  const Eigen::VectorXd boltzmann = (-(lambda.array() - shift)).exp().matrix();

  QuantumOracle out;
  out.log_z = -shift + std::log(boltzmann.sum());
  const Eigen::VectorXd diag = solver.eigenvectors().array().square().matrix() * boltzmann / boltzmann.sum();
  out.diagonal.assign(diag.data(), diag.data() + diag.size());

  const auto& c = params.classical;
  out.moments.first.assign(units, 0.0);
  out.moments.second.assign(c.left * c.right, 0.0);
  for (std::size_t s = 0; s < dim; ++s) {
    const auto z = rbm::state_from_index(s, units);
    for (std::size_t l = 0; l < units; ++l) out.moments.first[l] += out.diagonal[s] * z[l];
    for (std::size_t i = 0; i < c.left; ++i)
      for (std::size_t j = 0; j < c.right; ++j)
        out.moments.second[i * c.right + j] += out.diagonal[s] * z[i] * z[c.left + j];
  }
  out.moments.first_stderr.assign(out.moments.first.size(), 0.0);
  out.moments.second_stderr.assign(out.moments.second.size(), 0.0);
  return out;
}

void write_diagnostics(std::ostream& out, std::span<const PaStep> trace) {
  for (const auto& s : trace) {
    nlohmann::json j = {{"replica", s.replica},           {"step", s.step},
                        {"t", s.t},                       {"ess_fraction", s.ess_fraction},
                        {"kink_density", s.kink_density}, {"resampled", s.resampled}};
    out << j.dump() << '\n';
  }
}

}  // namespace qvae::qbm
