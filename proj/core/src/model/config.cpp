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

#include "qvae/model/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace qvae::model {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ConfigError(where + it.key(), "unknown field");
}

template <class T>
void read(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + key, "has the wrong type (" + std::string(j.at(key).type_name()) + ")");
  }
}

const json& object_at(const json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigError(field, "must be an object");
  return j;
}

PriorKind parse_prior(const std::string& s) {
  if (s == "gaussian") return PriorKind::kGaussian;
  if (s == "bernoulli") return PriorKind::kBernoulli;
  if (s == "rbm") return PriorKind::kRbm;
  if (s == "qbm") return PriorKind::kQbm;
  throw ConfigError("prior.kind", "expected gaussian, bernoulli, rbm or qbm, got \"" + s + "\"");
}

NegativePhase parse_negative(const std::string& s) {
  if (s == "auto") return NegativePhase::kAuto;
  if (s == "exact") return NegativePhase::kExact;
  if (s == "pcd") return NegativePhase::kPcd;
  if (s == "qmc") return NegativePhase::kQmc;
  throw ConfigError("prior.sampler.method", "expected auto, exact, pcd or qmc, got \"" + s + "\"");
}

std::string negative_name(NegativePhase m) {
  switch (m) {
    case NegativePhase::kAuto: return "auto";
    case NegativePhase::kExact: return "exact";
    case NegativePhase::kPcd: return "pcd";
    case NegativePhase::kQmc: return "qmc";
  }
  return "auto";
}

LogZMethod parse_log_z(const std::string& s) {
  if (s == "auto") return LogZMethod::kAuto;
  if (s == "exact") return LogZMethod::kExact;
  if (s == "pa") return LogZMethod::kPa;
  throw ConfigError("prior.log_z.method", "expected auto, exact or pa, got \"" + s + "\"");
}

std::string log_z_name(LogZMethod m) {
  switch (m) {
    case LogZMethod::kAuto: return "auto";
    case LogZMethod::kExact: return "exact";
    case LogZMethod::kPa: return "pa";
  }
  return "auto";
}

}  // namespace

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::kGaussian: return "gaussian";
    case PriorKind::kBernoulli: return "bernoulli";
    case PriorKind::kRbm: return "rbm";
    case PriorKind::kQbm: return "qbm";
  }
  return "rbm";
}

VaeConfig VaeConfig::from_json(const json& j) {
  object_at(j, "config");
  reject_unknown(j, "",
                 {"latent_size", "groups", "encoder_hidden", "decoder_hidden", "batch_norm", "prior", "beta",
                  "learning_rate", "lr_decay", "batch_size", "epochs", "seed", "threads", "checkpoint_every",
                  "iw_samples", "data"});
  VaeConfig c;
  if (!j.contains("latent_size")) throw ConfigError("latent_size", "missing required field");
  if (!j.contains("prior")) throw ConfigError("prior", "missing required field");
  read(j, "", "latent_size", c.latent_size);
  read(j, "", "groups", c.groups);
  read(j, "", "encoder_hidden", c.encoder_hidden);
  read(j, "", "decoder_hidden", c.decoder_hidden);
  read(j, "", "batch_norm", c.batch_norm);
  read(j, "", "learning_rate", c.learning_rate);
  read(j, "", "lr_decay", c.lr_decay);
  read(j, "", "batch_size", c.batch_size);
  read(j, "", "epochs", c.epochs);
  read(j, "", "seed", c.seed);
  read(j, "", "threads", c.threads);
  read(j, "", "checkpoint_every", c.checkpoint_every);
  read(j, "", "iw_samples", c.iw_samples);

  const json& prior = j.at("prior");
  if (prior.is_string()) {
    c.prior = parse_prior(prior.get<std::string>());
  } else {
    object_at(prior, "prior");
    reject_unknown(prior, "prior.", {"kind", "left", "gamma", "sampler", "log_z"});
    if (!prior.contains("kind")) throw ConfigError("prior.kind", "missing required field");
    std::string kind;
    read(prior, "prior.", "kind", kind);
    c.prior = parse_prior(kind);
    read(prior, "prior.", "left", c.rbm_left);
    read(prior, "prior.", "gamma", c.gamma);
    if (prior.contains("sampler")) {
      const json& s = object_at(prior.at("sampler"), "prior.sampler");
      reject_unknown(s, "prior.sampler.", {"method", "chains", "sweeps", "slices", "kink_weight"});
      std::string method = "auto";
      read(s, "prior.sampler.", "method", method);
      c.sampler.method = parse_negative(method);
      read(s, "prior.sampler.", "chains", c.sampler.chains);
      read(s, "prior.sampler.", "sweeps", c.sampler.sweeps);
      read(s, "prior.sampler.", "slices", c.sampler.slices);
      std::string kink = "trotter";
      read(s, "prior.sampler.", "kink_weight", kink);
      if (kink == "trotter") {
        c.sampler.kink = qbm::KinkWeight::kTrotter;
      } else if (kink == "linear") {
        c.sampler.kink = qbm::KinkWeight::kLinear;
      } else {
        throw ConfigError("prior.sampler.kink_weight", "expected trotter or linear, got \"" + kink + "\"");
      }
    }
    if (prior.contains("log_z")) {
      const json& s = object_at(prior.at("log_z"), "prior.log_z");
      reject_unknown(s, "prior.log_z.",
                     {"method", "population", "steps", "sweeps", "replicas", "exact_limit", "dense_limit"});
      std::string method = "auto";
      read(s, "prior.log_z.", "method", method);
      c.log_z.method = parse_log_z(method);
      read(s, "prior.log_z.", "population", c.log_z.population);
      read(s, "prior.log_z.", "steps", c.log_z.steps);
      read(s, "prior.log_z.", "sweeps", c.log_z.sweeps);
      read(s, "prior.log_z.", "replicas", c.log_z.replicas);
      read(s, "prior.log_z.", "exact_limit", c.log_z.exact_limit);
      read(s, "prior.log_z.", "dense_limit", c.log_z.dense_limit);
    }
  }

  if (j.contains("beta")) {
    const json& b = object_at(j.at("beta"), "beta");
    reject_unknown(b, "beta.", {"start", "end"});
    read(b, "beta.", "start", c.beta_start);
    read(b, "beta.", "end", c.beta_end);
  }
  if (j.contains("data")) {
    const json& d = object_at(j.at("data"), "data");
    reject_unknown(d, "data.", {"kind", "side", "train", "validation", "test", "dir", "threshold", "mnist_validation"});
    read(d, "data.", "kind", c.data.kind);
    read(d, "data.", "side", c.data.side);
    read(d, "data.", "train", c.data.train);
    read(d, "data.", "validation", c.data.validation);
    read(d, "data.", "test", c.data.test);
    read(d, "data.", "dir", c.data.dir);
    read(d, "data.", "threshold", c.data.threshold);
    read(d, "data.", "mnist_validation", c.data.mnist_validation);
  }
  c.validate();
  return c;
}

VaeConfig VaeConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

json VaeConfig::to_json() const {
  return {
      {"latent_size", latent_size},
      {"groups", groups},
      {"encoder_hidden", encoder_hidden},
      {"decoder_hidden", decoder_hidden},
      {"batch_norm", batch_norm},
      {"prior",
       {{"kind", model::to_string(prior)},
        {"left", left_units()},
        {"gamma", gamma},
        {"sampler",
         {{"method", negative_name(sampler.method)},
          {"chains", sampler.chains},
          {"sweeps", sampler.sweeps},
          {"slices", sampler.slices},
          {"kink_weight", sampler.kink == qbm::KinkWeight::kTrotter ? "trotter" : "linear"}}},
        {"log_z",
         {{"method", log_z_name(log_z.method)},
          {"population", log_z.population},
          {"steps", log_z.steps},
          {"sweeps", log_z.sweeps},
          {"replicas", log_z.replicas},
          {"exact_limit", log_z.exact_limit},
          {"dense_limit", log_z.dense_limit}}}}},
      {"beta", {{"start", beta_start}, {"end", beta_end}}},
      {"learning_rate", learning_rate},
      {"lr_decay", lr_decay},
      {"batch_size", batch_size},
      {"epochs", epochs},
      {"seed", seed},
      {"threads", threads},
      {"checkpoint_every", checkpoint_every},
      {"iw_samples", iw_samples},
      {"data",
       {{"kind", data.kind},
        {"side", data.side},
        {"train", data.train},
        {"validation", data.validation},
        {"test", data.test},
        {"dir", data.dir},
        {"threshold", data.threshold},
        {"mnist_validation", data.mnist_validation}}},
  };
}

void VaeConfig::validate() const {
  if (latent_size == 0) throw ConfigError("latent_size", "must be >= 1");
  if (groups == 0) throw ConfigError("groups", "must be >= 1");
  if (latent_size % groups != 0) {
    throw ConfigError("groups", std::to_string(groups) + " does not divide latent_size " + std::to_string(latent_size));
  }
  if (prior == PriorKind::kGaussian && groups != 1) throw ConfigError("groups", "the gaussian prior needs groups = 1");
  if (left_units() > latent_size) throw ConfigError("prior.left", "exceeds latent_size");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("prior.gamma", "must be finite and >= 0");
  if (gamma != 0.0 && prior != PriorKind::kQbm) throw ConfigError("prior.gamma", "must be 0 unless prior is qbm");
  if (sampler.chains == 0) throw ConfigError("prior.sampler.chains", "must be >= 1");
  if (sampler.sweeps == 0) throw ConfigError("prior.sampler.sweeps", "must be >= 1");
  if (sampler.slices < 2) throw ConfigError("prior.sampler.slices", "must be >= 2");
  if (log_z.population < 100) throw ConfigError("prior.log_z.population", "must be >= 100");
  if (log_z.steps == 0) throw ConfigError("prior.log_z.steps", "must be >= 1");
  if (log_z.replicas == 0) throw ConfigError("prior.log_z.replicas", "must be >= 1");
  if (!(beta_start > 0.0) || !(beta_end > 0.0)) throw ConfigError("beta", "start and end must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (!(lr_decay > 0.0) || lr_decay > 1.0) throw ConfigError("lr_decay", "must be in (0, 1]");
  if (batch_size == 0) throw ConfigError("batch_size", "must be >= 1");
  if (threads == 0) throw ConfigError("threads", "must be >= 1");
  if (iw_samples == 0) throw ConfigError("iw_samples", "must be >= 1");
  if (data.kind != "bars_and_stripes" && data.kind != "mnist")
    throw ConfigError("data.kind", "expected bars_and_stripes or mnist, got \"" + data.kind + "\"");
  if (data.kind == "bars_and_stripes" && data.side < 2) throw ConfigError("data.side", "must be >= 2");
  if (!(data.threshold >= 0.0 && data.threshold <= 1.0)) throw ConfigError("data.threshold", "must be in [0, 1]");
}

}  // namespace qvae::model
