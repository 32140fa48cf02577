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

#include "qvae/eval/eval.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qvae/model/train.hpp"
#include "qvae/reparam/spike_exp.hpp"

namespace qvae::eval {

using diff::Tape;
using diff::Tensor;

namespace {

constexpr std::size_t kChunk = 1000;

// log p(z) with a per-call cache; quantum priors without an exact oracle
// pay one clamped annealing run per distinct state.
class LogProbCache {
 public:
  explicit LogProbCache(model::Prior& prior) : prior_(prior) {}
  double operator()(const rbm::State& z) {
    auto it = cache_.find(z);
    if (it != cache_.end()) return it->second;
    const double v = prior_.log_prob(z);
    cache_.emplace(z, v);
    return v;
  }

 private:
  model::Prior& prior_;
  std::map<rbm::State, double> cache_;
};

rbm::State row_state(const Tensor& z, std::size_t r) {
  rbm::State s(z.cols());
  for (std::size_t l = 0; l < s.size(); ++l) s[l] = z.at(r, l) > 0.5 ? 1 : 0;
  return s;
}

Tensor repeat_row(std::span<const double> row, std::size_t times) {
  std::vector<double> v;
  v.reserve(row.size() * times);
  for (std::size_t t = 0; t < times; ++t) v.insert(v.end(), row.begin(), row.end());
  return Tensor::from_values({times, row.size()}, std::move(v));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

data::Dataset probabilities(const Tensor& logits) {
  data::Dataset out;
  out.rows = logits.rows();
  out.cols = logits.cols();
  out.values.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.values[i] = sigmoid(logits[i]);
  return out;
}

// Every latent space we can enumerate exactly, quantum or not.
bool prior_is_exact(model::Prior* prior) {
  auto* bp = dynamic_cast<model::BoltzmannPrior*>(prior);
  return !bp || !bp->quantum() || bp->log_z_method() == model::LogZMethod::kExact;
}

}  // namespace

std::vector<double> log_importance_weights(model::Dvae& m, const Tensor& x, const Tensor& noise, double beta) {
  Tape tape;
  const std::size_t rows = x.rows();
  std::vector<double> out(rows);
  if (m.gaussian()) {
    const std::size_t latent = m.latent_size();
    const Tensor stats = m.gaussian_encoder().forward(tape, x, false);
    const Tensor mu = tape.slice_cols(stats, 0, latent);
    const Tensor log_sigma = tape.slice_cols(stats, latent, latent);
    const Tensor zeta = tape.add(mu, tape.mul(tape.exp(log_sigma), noise));
    const Tensor ll = tape.bernoulli_log_likelihood(x, m.decode(tape, zeta, false));
    for (std::size_t r = 0; r < rows; ++r) {
      double lw = ll[r];
      for (std::size_t l = 0; l < latent; ++l) {
        const double z = zeta.at(r, l), rho = noise.at(r, l);
        lw += -0.5 * z * z + 0.5 * rho * rho + log_sigma.at(r, l);
      }
      out[r] = lw;
    }
    return out;
  }
  const auto sample = m.encoder().sample(tape, x, noise, beta, false);
  const Tensor ll = tape.bernoulli_log_likelihood(x, m.decode(tape, sample.zeta, false));
  LogProbCache log_prior(*m.prior());
  for (std::size_t r = 0; r < rows; ++r) {
    double log_q = 0.0;
    for (std::size_t l = 0; l < sample.q.cols(); ++l) {
      const double q = reparam::clip_probability(sample.q.at(r, l));
      log_q += sample.z.at(r, l) > 0.5 ? std::log(q) : std::log1p(-q);
    }
    out[r] = ll[r] + log_prior(row_state(sample.z, r)) - log_q;
  }
  return out;
}

IwElbo iw_elbo(model::Dvae& m, const data::Dataset& data, std::size_t k, std::uint64_t seed, double beta) {
  if (k == 0) throw std::invalid_argument("iw_elbo: k must be >= 1");
  IwElbo out;
  Rng rng(seed);
  for (std::size_t r = 0; r < data.rows; ++r) {
    LogSumExp acc;
    for (std::size_t done = 0; done < k; done += kChunk) {
      const std::size_t n = std::min(kChunk, k - done);
      const Tensor x = repeat_row(data.row(r), n);
      for (double lw : log_importance_weights(m, x, m.draw_noise(n, rng), beta)) acc.add(lw);
    }
    out.per_point.push_back(acc.value() - std::log(static_cast<double>(k)));
  }
  out.mean = mean_of(out.per_point);
  out.std_error = std_error_of(out.per_point);
  return out;
}

QuantumElbo quantum_elbo_eval(model::Dvae& m, const data::Dataset& data, std::uint64_t seed, double beta,
                              bool use_exact) {
  auto* prior = dynamic_cast<model::BoltzmannPrior*>(m.prior());
  if (!prior) throw std::invalid_argument("quantum_elbo_eval: needs an rbm or qbm prior");
  const qbm::QbmParams params = prior->params();
  double log_z = prior->log_z();
  std::vector<double> diagonal;
  if (use_exact) {
    auto oracle = qbm::exact_quantum_oracle(params);
    log_z = oracle.log_z;
    diagonal = std::move(oracle.diagonal);
  }
  LogProbCache log_prior(*prior);
  QuantumElbo out;
  Rng rng(seed);
  for (const auto& rows : data::epoch_batches(data.rows, kChunk, nullptr)) {
    Tape tape;
    const Tensor x = model::gather_rows(data, rows);
    const auto sample = m.encoder().sample(tape, x, m.draw_noise(rows.size(), rng), beta, false);
    const Tensor ae = tape.bernoulli_log_likelihood(x, m.decode(tape, sample.zeta, false));
    const Tensor h = reparam::entropy(tape, sample.q);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const rbm::State z = row_state(sample.z, r);
      const double energy = qbm::classical_energy_of_state(params, z);
      const double log_p = use_exact ? std::log(diagonal[rbm::index_from_state(z)]) : log_prior(z);
      out.qelbo_per_point.push_back(ae[r] + h[r] - (energy + log_z));
      out.elbo_per_point.push_back(ae[r] + h[r] + log_p);
    }
  }
  out.elbo = mean_of(out.elbo_per_point);
  out.qelbo = mean_of(out.qelbo_per_point);
  return out;
}

data::Dataset generate(model::Dvae& m, std::size_t n, Rng& rng, double beta) {
  const std::size_t latent = m.latent_size();
  std::vector<double> zeta(n * latent, 0.0);
  if (m.gaussian()) {
    std::normal_distribution<double> normal;
    for (double& v : zeta) v = normal(rng);
  } else {
    const auto states = m.prior()->sample(n, rng);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < latent; ++l)
        if (states[i][l]) zeta[i * latent + l] = std::log1p(uniform01(rng) * std::expm1(beta)) / beta;
  }
  Tape tape;
  return probabilities(m.decode(tape, Tensor::from_values({n, latent}, std::move(zeta)), false));
}

data::Dataset reconstruct(model::Dvae& m, const data::Dataset& x, Rng& rng, double beta) {
  Tape tape;
  const std::vector<std::size_t> all = [&] {
    std::vector<std::size_t> v(x.rows);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    return v;
  }();
  const auto b = m.elbo(tape, model::gather_rows(x, all), rng, beta, false);
  return probabilities(b.decoder_logits);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = {{"elbo", elbo},
                      {"iw_elbo", iw_elbo ? nlohmann::json(*iw_elbo) : nlohmann::json(nullptr)},
                      {"iw_elbo_stderr", iw_elbo_stderr},
                      {"k", k},
                      {"logz", logz},
                      {"logz_stderr", logz_stderr},
                      {"n_test", n_test}};
  j["qelbo"] = qelbo ? nlohmann::json(*qelbo) : nlohmann::json(nullptr);
  return j;
}

EvalReport evaluate(model::Dvae& m, const data::Dataset& test, std::size_t k, std::uint64_t seed, double beta) {
  EvalReport report;
  report.k = k;
  report.n_test = test.rows;
  const auto single = model::evaluate_elbo(m, test, beta, derive_seed(seed, 1));
  report.elbo = single.elbo;
  if (m.prior()) {
    report.logz = m.prior()->log_z();
    report.logz_stderr = m.prior()->log_z_stderr();
  }
  if (m.config().prior == model::PriorKind::kQbm) {
    // The training objective is the bound; the ELBO uses the true diagonal.
    const bool exact = prior_is_exact(m.prior());
    const auto q = quantum_elbo_eval(m, test, derive_seed(seed, 1), beta, exact);
    report.qelbo = q.qelbo;
    report.elbo = q.elbo;
  }
  // Quantum priors without the dense oracle would need one clamped
  // annealing run per sampled state.
  if (!prior_is_exact(m.prior())) return report;
  const auto iw = iw_elbo(m, test, k, derive_seed(seed, 2), beta);
  report.iw_elbo = iw.mean;
  report.iw_elbo_stderr = iw.std_error;
  return report;
}

}  // namespace qvae::eval
