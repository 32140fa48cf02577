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

#include "qvae/data/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace qvae::data {

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > rows) {
    throw std::out_of_range("dataset: slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                            ") of " + std::to_string(rows) + " rows");
  }
  Dataset out;
  out.rows = count;
  out.cols = cols;
  out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                    values.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  if (!labels.empty())
    out.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                      labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return out;
}

double Dataset::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

Dataset binarize_static(const Dataset& images, double threshold) {
  Dataset out = images;
  for (double& v : out.values) v = v >= threshold ? 1.0 : 0.0;
  return out;
}

std::vector<std::vector<std::uint8_t>> bars_and_stripes_patterns(std::size_t n) {
  if (n < 2) throw std::invalid_argument("bars_and_stripes: side must be >= 2");
  if (n > 20) throw std::invalid_argument("bars_and_stripes: side must be <= 20");
  std::set<std::vector<std::uint8_t>> unique;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::vector<std::uint8_t> rows_on(n * n), cols_on(n * n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        rows_on[r * n + c] = (mask >> r) & 1U;
        cols_on[r * n + c] = (mask >> c) & 1U;
      }
    unique.insert(rows_on);
    unique.insert(cols_on);
  }
  return {unique.begin(), unique.end()};
}

Dataset bars_and_stripes(std::size_t n, std::size_t count, Rng& rng) {
  const auto patterns = bars_and_stripes_patterns(n);
  Dataset out;
  out.rows = count;
  out.cols = n * n;
  out.values.reserve(count * n * n);
  std::uniform_int_distribution<std::size_t> pick(0, patterns.size() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& p = patterns[pick(rng)];
    out.values.insert(out.values.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t rows, std::size_t batch_size, Rng* rng) {
  if (batch_size == 0) throw std::invalid_argument("epoch_batches: batch size must be >= 1");
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  if (rng) std::shuffle(order.begin(), order.end(), *rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < rows; b += batch_size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(rows, b + batch_size)));
  return batches;
}

}  // namespace qvae::data
