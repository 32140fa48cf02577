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

#include "commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qvae/diff/checkpoint.hpp"
#include "qvae/eval/eval.hpp"
#include "qvae/eval/images.hpp"
#include "qvae/model/train.hpp"

namespace qvae::cli {

namespace {

enum Stream : std::uint64_t { kInit = 21, kTrainData = 22, kValidationData = 23, kTestData = 24, kSampling = 25 };

data::Dataset cap_rows(const data::Dataset& d, std::size_t cap) {
  return cap == 0 || cap >= d.rows ? d : d.slice(0, cap);
}

std::filesystem::path resolve_data_dir(const model::VaeConfig& config, const std::filesystem::path& override_dir) {
  if (!override_dir.empty()) return override_dir;
  if (!config.data.dir.empty()) return config.data.dir;
  if (const char* env = std::getenv(kDataDirVariable)) return env;
  throw model::ConfigError("data.dir", std::string("no MNIST directory given and $") + kDataDirVariable + " is unset");
}

struct CommonArgs {
  std::string config;
  std::string run_dir;
  std::string runs_root = "runs";
  std::string data_dir;
  std::int64_t seed = -1;
};

model::VaeConfig load_config(const CommonArgs& a) {
  model::VaeConfig c = model::VaeConfig::load(a.config);
  if (a.seed >= 0) c.seed = static_cast<std::uint64_t>(a.seed);
  return c;
}

std::filesystem::path run_dir_for(const CommonArgs& a, std::uint64_t seed) {
  return a.run_dir.empty() ? default_run_dir(a.runs_root, seed) : std::filesystem::path(a.run_dir);
}

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-c,--config", a.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  cmd->add_option("--run-dir", a.run_dir, "Output directory (default: <runs-root>/<timestamp>-seed<seed>)");
  cmd->add_option("--runs-root", a.runs_root, "Parent of generated run directories");
  cmd->add_option("--data-dir", a.data_dir, std::string("MNIST directory (default: $") + kDataDirVariable + ")");
  cmd->add_option("--seed", a.seed, "Override the config seed");
}

int cmd_train(const CommonArgs& a, std::ostream& out) {
  const auto config = load_config(a);
  const auto sets = load_datasets(config, a.data_dir);
  const auto dir = run_dir_for(a, config.seed);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.json") << config.to_json().dump(2) << '\n';
  Rng init(derive_seed(config.seed, kInit));
  model::Dvae m(config, sets.train.cols, init);
  out << "run directory " << dir.string() << '\n';
  model::TrainOptions options;
  options.run_dir = dir;
  options.log = &out;
  const auto result = model::train(m, sets.train, sets.validation, options);
  if (result.diverged) {
    out << "training diverged (" << result.divergence << "); last good checkpoint kept at "
        << result.checkpoint.string() << '\n';
    return kDiverged;
  }
  return kOk;
}

std::filesystem::path checkpoint_or_default(const std::string& checkpoint, const CommonArgs& a) {
  if (!checkpoint.empty()) return checkpoint;
  if (!a.run_dir.empty()) return std::filesystem::path(a.run_dir) / "checkpoint.json";
  throw model::ConfigError("checkpoint", "pass --checkpoint or --run-dir");
}

// Rebuilds the model and restores a checkpoint; mismatches are invalid input.
model::Dvae restore_model(const model::VaeConfig& config, std::size_t input_size, const std::filesystem::path& path,
                          double& beta) {
  // Compare the architecture first so a mismatch names the config field
  // rather than a tensor shape.
  const auto meta = diff::load_checkpoint(path).metadata;
  if (meta.contains("config")) {
    const auto saved = meta.at("config");
    const auto now = config.to_json();
    for (const char* key : {"latent_size", "groups", "encoder_hidden", "decoder_hidden", "batch_norm"}) {
      if (saved.value(key, nlohmann::json()) != now.at(key))
        throw model::ConfigError(key, "checkpoint was trained with " + saved.value(key, nlohmann::json()).dump());
    }
    if (saved.at("prior").value("kind", "") != now.at("prior").at("kind"))
      throw model::ConfigError("prior.kind", "checkpoint was trained with " + saved.at("prior").at("kind").dump());
  }
  Rng init(derive_seed(config.seed, kInit));
  model::Dvae m(config, input_size, init);
  model::load_model(m, path);
  const std::size_t epoch = meta.value("epoch", config.epochs);
  beta = model::beta_at(config, epoch);
  if (m.prior()) m.prior()->refresh_log_z();
  return m;
}

int cmd_eval(const CommonArgs& a, const std::string& checkpoint, std::size_t k, const std::string& report_path,
             std::ostream& out) {
  const auto config = load_config(a);
  const auto sets = load_datasets(config, a.data_dir);
  double beta = config.beta_end;
  auto m = restore_model(config, sets.test.cols, checkpoint_or_default(checkpoint, a), beta);
  const auto report = eval::evaluate(m, sets.test, k ? k : config.iw_samples, derive_seed(config.seed, 31), beta);
  const std::filesystem::path path =
      report_path.empty() ? checkpoint_or_default(checkpoint, a).parent_path() / "report.json" : std::filesystem::path(report_path);
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << report.to_json().dump(2) << '\n';
  out << report.to_json().dump(2) << '\n' << "report written to " << path.string() << '\n';
  return kOk;
}

int cmd_sample(const CommonArgs& a, const std::string& checkpoint, std::size_t n, std::size_t columns,
               std::ostream& out) {
  const auto config = load_config(a);
  const auto sets = load_datasets(config, a.data_dir);
  double beta = config.beta_end;
  const auto cp = checkpoint_or_default(checkpoint, a);
  auto m = restore_model(config, sets.test.cols, cp, beta);
  Rng rng(derive_seed(config.seed, kSampling));
  const auto dir = a.run_dir.empty() ? cp.parent_path() : std::filesystem::path(a.run_dir);
  eval::write_images(dir / "samples", eval::generate(m, n, rng, beta), sets.width, sets.height, columns);
  const auto originals = sets.test.slice(0, std::min(n, sets.test.rows));
  const auto recon = eval::reconstruct(m, originals, rng, beta);
  // Originals and reconstructions interleaved row by row.
  data::Dataset paired;
  paired.cols = originals.cols;
  for (std::size_t r = 0; r < originals.rows; r += columns) {
    const std::size_t count = std::min(columns, originals.rows - r);
    for (const auto* src : {&originals, &recon})
      for (std::size_t i = 0; i < count; ++i) {
        const auto row = src->row(r + i);
        paired.values.insert(paired.values.end(), row.begin(), row.end());
        ++paired.rows;
      }
  }
  eval::write_images(dir / "reconstructions", paired, sets.width, sets.height, columns);
  out << "wrote " << n << " samples and " << originals.rows << " reconstructions under " << dir.string() << '\n';
  return kOk;
}

}  // namespace

Datasets load_datasets(const model::VaeConfig& config, const std::filesystem::path& data_dir) {
  Datasets s;
  if (config.data.kind == "bars_and_stripes") {
    Rng train(derive_seed(config.seed, kTrainData)), valid(derive_seed(config.seed, kValidationData)),
        test(derive_seed(config.seed, kTestData));
    s.train = data::bars_and_stripes(config.data.side, config.data.train, train);
    s.validation = data::bars_and_stripes(config.data.side, config.data.validation, valid);
    s.test = data::bars_and_stripes(config.data.side, config.data.test, test);
    s.width = s.height = config.data.side;
    return s;
  }
  const auto split = data::load_mnist(resolve_data_dir(config, data_dir), config.data.mnist_validation);
  s.train = cap_rows(data::binarize_static(split.train, config.data.threshold), config.data.train);
  s.validation = cap_rows(data::binarize_static(split.validation, config.data.threshold), config.data.validation);
  s.test = cap_rows(data::binarize_static(split.test, config.data.threshold), config.data.test);
  s.width = s.height = 28;
  return s;
}

std::filesystem::path default_run_dir(const std::filesystem::path& root, std::uint64_t seed) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream name;
  name << std::put_time(&utc, "%Y%m%dT%H%M%SZ") << "-seed" << seed;
  return root / name.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete and quantum variational autoencoders"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, sample_args;
  std::string eval_checkpoint, report_path, sample_checkpoint;
  std::size_t k = 0, n = 64, columns = 8;
  OracleCheckOptions oracle;

  auto* train = app.add_subcommand("train", "Train a model from a config file");
  add_common(train, train_args);
  auto* evaluate = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(evaluate, eval_args);
  evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint manifest (default: <run-dir>/checkpoint.json)");
  evaluate->add_option("-k,--iw-samples", k, "Importance samples per test point (default: config iw_samples)");
  evaluate->add_option("--report", report_path, "Report path (default: next to the checkpoint)");
  auto* sample = app.add_subcommand("sample", "Write generated and reconstructed images as PGM");
  add_common(sample, sample_args);
  sample->add_option("--checkpoint", sample_checkpoint, "Checkpoint manifest (default: <run-dir>/checkpoint.json)");
  sample->add_option("-n,--count", n, "Number of samples")->check(CLI::PositiveNumber);
  sample->add_option("--columns", columns, "Tiles per grid row")->check(CLI::PositiveNumber);
  auto* check = app.add_subcommand("oracle-check", "Compare the QMC sampler with the dense oracle");
  check->add_option("--size", oracle.size, "Number of spins (<= 12)")->check(CLI::Range(1, 12));
  check->add_option("--gamma", oracle.gamma, "Transverse field")->check(CLI::NonNegativeNumber);
  check->add_option("--seed", oracle.seed, "Instance and sampler seed");
  check->add_option("--slices", oracle.slices, "Imaginary-time slices M")->check(CLI::Range(2, 100000));
  check->add_option("--scale", oracle.scale, "h and W drawn from U(-scale, scale)");
  check->add_option("--population", oracle.population, "Particles per replica")->check(CLI::Range(100, 100000000));
  check->add_option("--steps", oracle.steps, "Annealing steps")->check(CLI::PositiveNumber);
  check->add_option("--sweeps", oracle.sweeps, "Sweeps per annealing step")->check(CLI::PositiveNumber);
  check->add_option("--replicas", oracle.replicas, "Independent populations")->check(CLI::Range(2, 1000));
  check->add_option("--measure-sweeps", oracle.measure_sweeps, "Sweeps averaged for moments")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kInvalidInput;
  }

  try {
    if (train->parsed()) return cmd_train(train_args, out);
    if (evaluate->parsed()) return cmd_eval(eval_args, eval_checkpoint, k, report_path, out);
    if (sample->parsed()) return cmd_sample(sample_args, sample_checkpoint, n, columns, out);
    if (check->parsed()) return oracle_check(oracle, out);
  } catch (const model::ConfigError& e) {
    err << "invalid config: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalidInput;
  }
  return kInvalidInput;
}

}  // namespace qvae::cli
