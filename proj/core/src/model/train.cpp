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

#include "qvae/model/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "qvae/diff/adam.hpp"
#include "qvae/diff/checkpoint.hpp"
#include "qvae/reparam/spike_exp.hpp"

namespace qvae::model {

namespace {

enum Stream : std::uint64_t { kShuffle = 11, kNoise = 12, kValidation = 13 };

std::string snapshot_name(std::size_t epoch) {
  std::ostringstream s;
  s << "checkpoint-" << std::setw(4) << std::setfill('0') << epoch << ".json";
  return s.str();
}

}  // namespace

nlohmann::json EpochMetrics::to_json() const {
  return {{"epoch", epoch}, {"elbo", elbo},   {"autoenc", autoenc},         {"kl_or_bound", kl_or_bound},
          {"logz", logz},   {"beta", beta},   {"lr", lr},                   {"wallclock", wallclock},
          {"train_elbo", train_elbo},         {"logz_stderr", logz_stderr}};
}

double beta_at(const VaeConfig& config, std::size_t epoch) {
  return reparam::linear_schedule(epoch == 0 ? 0 : epoch - 1, config.epochs, config.beta_start, config.beta_end);
}

double learning_rate_at(const VaeConfig& config, std::size_t epoch) {
  return config.learning_rate * std::pow(config.lr_decay, static_cast<double>(epoch == 0 ? 0 : epoch - 1));
}

DatasetElbo evaluate_elbo(Dvae& model, const data::Dataset& data, double beta, std::uint64_t seed,
                          std::size_t batch_size) {
  DatasetElbo out;
  if (data.rows == 0) return out;
  Rng rng(seed);
  for (const auto& rows : data::epoch_batches(data.rows, batch_size, nullptr)) {
    diff::Tape tape;
    const auto x = gather_rows(data, rows);
    const auto b = model.elbo(tape, x, rng, beta, false);
    const double n = static_cast<double>(rows.size());
    out.elbo += b.total * n;
    out.autoencoding += b.autoencoding * n;
    out.entropy += b.entropy * n;
    out.cross_entropy += b.cross_entropy * n;
  }
  const double inv = 1.0 / static_cast<double>(data.rows);
  out.elbo *= inv;
  out.autoencoding *= inv;
  out.entropy *= inv;
  out.cross_entropy *= inv;
  return out;
}

void save_model(const Dvae& model, const std::filesystem::path& manifest, const nlohmann::json& metadata) {
  nlohmann::json meta = metadata.is_object() ? metadata : nlohmann::json::object();
  meta["config"] = model.config().to_json();
  meta["input_size"] = model.input_size();
  if (model.prior()) {
    meta["logz"] = model.prior()->log_z();
    meta["logz_stderr"] = model.prior()->log_z_stderr();
  }
  const auto state = model.named_state();
  diff::save_checkpoint(manifest, state, meta);
}

nlohmann::json load_model(Dvae& model, const std::filesystem::path& manifest) {
  const auto cp = diff::load_checkpoint(manifest);
  if (cp.metadata.contains("input_size") && cp.metadata.at("input_size").get<std::size_t>() != model.input_size()) {
    throw std::invalid_argument("checkpoint " + manifest.string() + " was written for input size " +
                                cp.metadata.at("input_size").dump() + ", model has " +
                                std::to_string(model.input_size()));
  }
  auto state = model.named_state();
  diff::restore(cp, state);
  return cp.metadata;
}

TrainResult train(Dvae& model, const data::Dataset& train_set, const data::Dataset& validation,
                  const TrainOptions& options) {
  const VaeConfig& config = model.config();
  if (train_set.cols != model.input_size()) {
    throw std::invalid_argument("train: dataset has " + std::to_string(train_set.cols) + " columns, model expects " +
                                std::to_string(model.input_size()));
  }
  TrainResult result;
  const auto start = std::chrono::steady_clock::now();
  Rng shuffle_rng(derive_seed(config.seed, kShuffle));
  Rng noise_rng(derive_seed(config.seed, kNoise));
  const std::uint64_t validation_seed = derive_seed(config.seed, kValidation);
  diff::AdamState adam(diff::AdamOptions{config.learning_rate});
  auto params = model.parameters();
  Prior* prior = model.prior();

  std::ofstream metrics, sampler_log;
  if (!options.run_dir.empty()) {
    std::filesystem::create_directories(options.run_dir);
    result.checkpoint = options.run_dir / "checkpoint.json";
    metrics.open(options.run_dir / "metrics.jsonl");
    if (prior && prior->kind() == PriorKind::kQbm) sampler_log.open(options.run_dir / "sampler.jsonl");
  }
  auto log_sampler = [&] {
    auto* bp = dynamic_cast<BoltzmannPrior*>(prior);
    if (sampler_log.is_open() && bp) qbm::write_diagnostics(sampler_log, bp->pa_trace());
  };

  try {
    if (prior) {
      prior->refresh_log_z();
      log_sampler();
    }
  } catch (const NumericalError& e) {
    result.diverged = true;
    result.divergence = e.what();
    return result;
  }
  if (!result.checkpoint.empty()) save_model(model, result.checkpoint, {{"epoch", 0}});

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const double beta = beta_at(config, epoch);
    const double lr = learning_rate_at(config, epoch);
    adam.set_learning_rate(lr);
    double train_sum = 0.0;
    try {
      for (const auto& rows : data::epoch_batches(train_set.rows, config.batch_size, &shuffle_rng)) {
        diff::Tape tape;
        const auto x = gather_rows(train_set, rows);
        if (prior) prior->refresh_negative_phase();
        const auto b = model.elbo(tape, x, noise_rng, beta, true);
        tape.backward(b.loss);
        adam.step(params);
        train_sum += b.total * static_cast<double>(rows.size());
      }
      if (prior) {
        prior->refresh_log_z();
        log_sampler();
      }
    } catch (const NumericalError& e) {
      result.diverged = true;
      result.divergence = "epoch " + std::to_string(epoch) + ": " + e.what();
      if (options.log) *options.log << "diverged: " << result.divergence << '\n';
      return result;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.beta = beta;
    m.lr = lr;
    m.train_elbo = train_sum / static_cast<double>(std::max<std::size_t>(1, train_set.rows));
    const auto v = evaluate_elbo(model, validation.rows ? validation : train_set, beta, validation_seed);
    m.elbo = v.elbo;
    m.autoenc = v.autoencoding;
    m.kl_or_bound = v.cross_entropy - v.entropy;
    if (prior) {
      m.logz = prior->log_z();
      m.logz_stderr = prior->log_z_stderr();
    }
    m.wallclock = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(m);

    if (metrics.is_open()) metrics << m.to_json().dump() << '\n' << std::flush;
    if (options.log) {
      *options.log << "epoch " << epoch << "  elbo " << std::fixed << std::setprecision(3) << m.elbo << "  train "
                   << m.train_elbo << "  kl " << m.kl_or_bound << "  beta " << m.beta << '\n';
      options.log->unsetf(std::ios::floatfield);
    }
    if (!result.checkpoint.empty()) {
      save_model(model, result.checkpoint, {{"epoch", epoch}});
      if (config.checkpoint_every && epoch % config.checkpoint_every == 0)
        save_model(model, options.run_dir / snapshot_name(epoch), {{"epoch", epoch}});
    }
  }
  return result;
}

}  // namespace qvae::model
