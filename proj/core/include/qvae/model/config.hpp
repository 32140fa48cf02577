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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvae/qbm/qbm.hpp"

namespace qvae::model {

/// Raised for invalid configuration; `field()` names the offending key path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class PriorKind { kGaussian, kBernoulli, kRbm, kQbm };

enum class NegativePhase {
  kAuto,   // exact when enumerable, else PCD (classical) or QMC (quantum)
  kExact,
  kPcd,
  kQmc,
};

enum class LogZMethod {
  kAuto,  // exact when enumerable, else population annealing
  kExact,
  kPa,
};

struct SamplerConfig {
  NegativePhase method = NegativePhase::kAuto;
  std::size_t chains = 100;
  std::size_t sweeps = 20;
  std::size_t slices = 64;
  qbm::KinkWeight kink = qbm::KinkWeight::kTrotter;
};

struct LogZConfig {
  LogZMethod method = LogZMethod::kAuto;
  std::size_t population = 1000;
  std::size_t steps = 100;
  std::size_t sweeps = 5;
  std::size_t replicas = 4;
  /// Largest latent size handled by enumeration (classical) under kAuto.
  std::size_t exact_limit = 20;
  /// Largest latent size handled by the dense oracle (quantum) under kAuto.
  std::size_t dense_limit = 10;
};

struct DataConfig {
  std::string kind = "bars_and_stripes";  // or "mnist"
  std::size_t side = 4;
  std::size_t train = 1000;
  std::size_t validation = 200;
  std::size_t test = 200;
  /// MNIST directory; empty means $QVAE_DATA_DIR.
  std::string dir;
  double threshold = 0.5;
  /// Rows of the MNIST training file held out for validation.
  std::size_t mnist_validation = 10000;
};

struct VaeConfig {
  std::size_t latent_size = 0;
  std::size_t groups = 1;
  std::vector<std::size_t> encoder_hidden{64};
  std::vector<std::size_t> decoder_hidden{64};
  bool batch_norm = false;

  PriorKind prior = PriorKind::kRbm;
  /// Units on the first side of the bipartite prior; 0 means latent_size / 2.
  std::size_t rbm_left = 0;
  double gamma = 0.0;
  SamplerConfig sampler;
  LogZConfig log_z;

  double beta_start = 1.0;
  double beta_end = 10.0;
  double learning_rate = 1e-3;
  double lr_decay = 0.995;
  std::size_t batch_size = 200;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Snapshot every k epochs (0: only the rolling checkpoint).
  std::size_t checkpoint_every = 0;
  /// Importance samples per point in evaluation.
  std::size_t iw_samples = 1000;

  DataConfig data;

  std::size_t left_units() const { return rbm_left ? rbm_left : latent_size / 2; }
  std::size_t right_units() const { return latent_size - left_units(); }

  /// Requires "latent_size" and "prior"; every other key has a default.
  /// Unknown keys are rejected.
  static VaeConfig from_json(const nlohmann::json& j);
  static VaeConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
};

std::string to_string(PriorKind kind);

}  // namespace qvae::model
