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

#include "qvae/data/dataset.hpp"
#include "qvae/model/config.hpp"

namespace qvae::cli {

enum ExitCode : int {
  kOk = 0,
  kOracleFailure = 1,
  kInvalidInput = 2,
  kDiverged = 3,
};

/// Environment variable naming the directory that holds MNIST IDX files.
inline constexpr const char* kDataDirVariable = "QVAE_DATA_DIR";

struct Datasets {
  data::Dataset train;
  data::Dataset validation;
  data::Dataset test;
  std::size_t width = 0;
  std::size_t height = 0;
};

/// Builds or loads the splits named by `config.data`. `data_dir` overrides
/// both the config and the environment.
Datasets load_datasets(const model::VaeConfig& config, const std::filesystem::path& data_dir = {});

/// `<root>/<UTC timestamp>-seed<seed>`.
std::filesystem::path default_run_dir(const std::filesystem::path& root, std::uint64_t seed);

/// Entry point shared by main() and the tests. Human-readable text goes to
/// `out` and `err`; the return value is one of ExitCode.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct OracleCheckOptions {
  std::size_t size = 2;
  double gamma = 1.0;
  std::uint64_t seed = 1;
  std::size_t slices = 64;
  double scale = 1.0;
  std::size_t population = 1000;
  std::size_t steps = 100;
  std::size_t sweeps = 5;
  std::size_t replicas = 4;
  std::size_t measure_sweeps = 50;
};

/// Compares population-annealing QMC against the dense oracle on one random
/// instance and prints a table. Returns kOk when every gated entry is within
/// three standard errors.
int oracle_check(const OracleCheckOptions& options, std::ostream& out);

}  // namespace qvae::cli
