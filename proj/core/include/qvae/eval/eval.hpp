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
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvae/data/dataset.hpp"
#include "qvae/model/dvae.hpp"

namespace qvae::eval {

/// log w = log p(x | zeta) + log p(z) - log q(z | x) for each row of `x`,
/// using the given noise. The smoothing densities r(zeta | z) cancel between
/// model and posterior. For the gaussian model z is zeta itself.
std::vector<double> log_importance_weights(model::Dvae& model, const diff::Tensor& x, const diff::Tensor& noise,
                                           double beta);

struct IwElbo {
  double mean = 0.0;
  /// Standard error of the mean over data points.
  double std_error = 0.0;
  std::vector<double> per_point;
};

/// log (1/k sum_i w_i) per point, averaged over the dataset.
IwElbo iw_elbo(model::Dvae& model, const data::Dataset& data, std::size_t k, std::uint64_t seed, double beta);

struct QuantumElbo {
  /// Cross-entropy from the true diagonal probability <z|e^{-H}|z> / Z.
  double elbo = 0.0;
  /// Cross-entropy from the Golden-Thompson bound E(z) + log Z.
  double qelbo = 0.0;
  std::vector<double> elbo_per_point;
  std::vector<double> qelbo_per_point;
};

/// Both bounds from the same draws. `use_exact` selects the dense oracle
/// for log Z and the diagonal probabilities; otherwise the prior's own
/// estimators are used.
QuantumElbo quantum_elbo_eval(model::Dvae& model, const data::Dataset& data, std::uint64_t seed, double beta,
                              bool use_exact);

/// Pixel probabilities of `n` samples from the model.
data::Dataset generate(model::Dvae& model, std::size_t n, Rng& rng, double beta);
/// Pixel probabilities after one encode-sample-decode pass.
data::Dataset reconstruct(model::Dvae& model, const data::Dataset& x, Rng& rng, double beta);

struct EvalReport {
  double elbo = 0.0;
  /// Absent for quantum priors too large for the dense oracle.
  std::optional<double> iw_elbo;
  std::optional<double> qelbo;
  std::size_t k = 0;
  double logz = 0.0;
  double logz_stderr = 0.0;
  std::size_t n_test = 0;
  double iw_elbo_stderr = 0.0;

  nlohmann::json to_json() const;
};

EvalReport evaluate(model::Dvae& model, const data::Dataset& test, std::size_t k, std::uint64_t seed, double beta);

}  // namespace qvae::eval
