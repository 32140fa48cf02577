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
#include <span>
#include <vector>

#include "qvae/common.hpp"

namespace qvae::data {

/// Row-major [rows, cols] array of reals in [0, 1], with optional labels.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  /// Rows [begin, begin + count).
  Dataset slice(std::size_t begin, std::size_t count) const;
  double mean() const;
};

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

/// Reads an unsigned-byte IDX file, gzip-compressed or not. Errors name the
/// byte offset at which the file stopped making sense.
IdxArray read_idx(const std::filesystem::path& path);
void write_idx(const std::filesystem::path& path, const IdxArray& array, bool gzip = false);

/// Images as [N, rows*cols] scaled by 1/255, with labels attached when given.
Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels = {});

struct MnistSplit {
  Dataset train;
  Dataset validation;
  Dataset test;
};

/// Looks for train-images-idx3-ubyte (optionally .gz) and friends in `dir`.
/// Validation is the last `validation` rows of the training file.
MnistSplit load_mnist(const std::filesystem::path& dir, std::size_t validation = 10000);

/// x >= threshold -> 1, else 0.
Dataset binarize_static(const Dataset& images, double threshold = 0.5);

/// The 2^(n+1) - 2 distinct n x n patterns with every row constant or every
/// column constant. The blank and full images are counted once each.
std::vector<std::vector<std::uint8_t>> bars_and_stripes_patterns(std::size_t n);
/// `count` patterns drawn uniformly with replacement.
Dataset bars_and_stripes(std::size_t n, std::size_t count, Rng& rng);

/// Index batches covering every row exactly once, in shuffled order when an
/// rng is given. The last batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size, Rng* rng);

}  // namespace qvae::data
