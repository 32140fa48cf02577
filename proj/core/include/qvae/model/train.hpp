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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvae/data/dataset.hpp"
#include "qvae/model/dvae.hpp"

namespace qvae::model {

/// One line of metrics.jsonl. `elbo` and `autoenc` are validation means;
/// `kl_or_bound` is cross-entropy minus entropy (the KL, or its quantum
/// bound).
struct EpochMetrics {
  std::size_t epoch = 0;
  double elbo = 0.0;
  double autoenc = 0.0;
  double kl_or_bound = 0.0;
  double logz = 0.0;
  double logz_stderr = 0.0;
  double beta = 1.0;
  double lr = 0.0;
  double train_elbo = 0.0;
  double wallclock = 0.0;

  nlohmann::json to_json() const;
};

struct TrainOptions {
  /// Where checkpoints and metrics go; empty keeps everything in memory.
  std::filesystem::path run_dir;
  /// Progress lines, one per epoch; may be null.
  std::ostream* log = nullptr;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  bool diverged = false;
  std::string divergence;
  /// Rolling checkpoint holding the last good parameters.
  std::filesystem::path checkpoint;
};

/// Mean ELBO terms over a dataset, in evaluation mode, with noise from `seed`.
struct DatasetElbo {
  double elbo = 0.0;
  double autoencoding = 0.0;
  double entropy = 0.0;
  double cross_entropy = 0.0;
};
DatasetElbo evaluate_elbo(Dvae& model, const data::Dataset& data, double beta, std::uint64_t seed,
                          std::size_t batch_size = 500);

/// Smoothing sharpness and learning rate used in a 1-based epoch.
double beta_at(const VaeConfig& config, std::size_t epoch);
double learning_rate_at(const VaeConfig& config, std::size_t epoch);

/// Runs config.epochs epochs of ADAM on shuffled minibatches. A non-finite
/// loss or gradient stops training with `diverged` set; the checkpoint on
/// disk then still holds the last completed epoch.
TrainResult train(Dvae& model, const data::Dataset& train_set, const data::Dataset& validation,
                  const TrainOptions& options = {});

void save_model(const Dvae& model, const std::filesystem::path& manifest, const nlohmann::json& metadata = {});
/// Restores parameters in place; returns the checkpoint metadata. Throws
/// std::invalid_argument when names or shapes do not match the model.
nlohmann::json load_model(Dvae& model, const std::filesystem::path& manifest);

}  // namespace qvae::model
