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

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "qvae/data/dataset.hpp"

namespace qvae::data {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("qvae_data_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

IdxArray synthetic_images(std::uint32_t n) {
  IdxArray a;
  a.dims = {n, 28, 28};
  a.data.resize(std::size_t{n} * 784);
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] = static_cast<std::uint8_t>((i * 37 + 11) % 256);
  return a;
}

IdxArray synthetic_labels(std::uint32_t n) {
  IdxArray a;
  a.dims = {n};
  for (std::uint32_t i = 0; i < n; ++i) a.data.push_back(static_cast<std::uint8_t>(i % 10));
  return a;
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_bytes(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TEST(Idx, RoundTripPlainAndGzip) {
  TempDir dir;
  const auto images = synthetic_images(5);
  for (bool gz : {false, true}) {
    const auto path = dir.path() / (gz ? "a.idx.gz" : "a.idx");
    write_idx(path, images, gz);
    const auto back = read_idx(path);
    EXPECT_EQ(back.dims, images.dims);
    EXPECT_EQ(back.data, images.data);
  }
  // The plain file starts with the big-endian magic for a 3-d unsigned-byte array.
  const auto bytes = read_bytes(dir.path() / "a.idx");
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes[0], 0);
  EXPECT_EQ(bytes[1], 0);
  EXPECT_EQ(bytes[2], 0x08);
  EXPECT_EQ(bytes[3], 0x03);
  EXPECT_EQ(bytes.size(), 16u + 5 * 784);
}

TEST(Idx, TruncatedFileNamesOffset) {
  TempDir dir;
  const auto path = dir.path() / "t.idx";
  write_idx(path, synthetic_images(2));
  auto bytes = read_bytes(path);
  bytes.resize(100);
  write_bytes(path, bytes);
  try {
    read_idx(path);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  bytes.resize(6);
  write_bytes(path, bytes);
  EXPECT_ANY_THROW(read_idx(path));
}

TEST(Idx, BadMagicNamesOffset) {
  TempDir dir;
  const auto images = dir.path() / "img.idx";
  const auto labels = dir.path() / "lab.idx";
  write_idx(images, synthetic_images(3));
  write_idx(labels, synthetic_labels(3));
  // Labels passed where images are expected: magic 2049 instead of 2051.
  try {
    load_mnist_idx(labels);
    FAIL() << "expected an error";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("offset 0"), std::string::npos) << e.what();
  }
  auto bytes = read_bytes(images);
  bytes[2] = 0x0d;  // float element type
  write_bytes(images, bytes);
  EXPECT_ANY_THROW(read_idx(images));
}

TEST(Idx, LabelCountMismatchIsAnError) {
  TempDir dir;
  write_idx(dir.path() / "img.idx", synthetic_images(3));
  write_idx(dir.path() / "lab.idx", synthetic_labels(4));
  EXPECT_ANY_THROW(load_mnist_idx(dir.path() / "img.idx", dir.path() / "lab.idx"));
}

TEST(Mnist, ShapeAndScaling) {
  TempDir dir;
  auto raw = synthetic_images(4);
  raw.data[0] = 255;
  raw.data[1] = 0;
  write_idx(dir.path() / "img.idx", raw);
  write_idx(dir.path() / "lab.idx", synthetic_labels(4));
  const auto d = load_mnist_idx(dir.path() / "img.idx", dir.path() / "lab.idx");
  EXPECT_EQ(d.rows, 4u);
  EXPECT_EQ(d.cols, 784u);
  EXPECT_EQ(d.values[0], 1.0);
  EXPECT_EQ(d.values[1], 0.0);
  EXPECT_DOUBLE_EQ(d.values[2], raw.data[2] / 255.0);
  EXPECT_EQ(d.labels, (std::vector<std::uint8_t>{0, 1, 2, 3}));
}

TEST(Mnist, SplitTakesValidationFromEndOfTraining) {
  TempDir dir;
  write_idx(dir.path() / "train-images-idx3-ubyte.gz", synthetic_images(10), true);
  write_idx(dir.path() / "train-labels-idx1-ubyte.gz", synthetic_labels(10), true);
  write_idx(dir.path() / "t10k-images-idx3-ubyte", synthetic_images(3));
  write_idx(dir.path() / "t10k-labels-idx1-ubyte", synthetic_labels(3));
  const auto s = load_mnist(dir.path(), 4);
  EXPECT_EQ(s.train.rows, 6u);
  EXPECT_EQ(s.validation.rows, 4u);
  EXPECT_EQ(s.test.rows, 3u);
  EXPECT_EQ(s.validation.labels.front(), 6);
  EXPECT_ANY_THROW(load_mnist(dir.path() / "missing", 4));
  EXPECT_ANY_THROW(load_mnist(dir.path(), 11));
}

TEST(Mnist, BinarisedMeanOnRealData) {
  const char* env = std::getenv("QVAE_DATA_DIR");
  const fs::path dir = env ? fs::path(env) : fs::path("/root/data/mnist5k");
  if (!fs::exists(dir)) GTEST_SKIP() << "no MNIST files at " << dir;
  const auto s = load_mnist(dir, 1000);
  EXPECT_EQ(s.train.cols, 784u);
  const double mean = binarize_static(s.train).mean();
  EXPECT_GE(mean, 0.10);
  EXPECT_LE(mean, 0.17);
}

TEST(Binarize, ThresholdAndIdempotence) {
  Dataset d{1, 4, {0.4, 0.6, 0.5, 0.0}, {}};
  const auto b = binarize_static(d);
  EXPECT_EQ(b.values, (std::vector<double>{0, 1, 1, 0}));
  EXPECT_EQ(binarize_static(b).values, b.values);
  EXPECT_EQ(binarize_static(d, 0.7).values, (std::vector<double>{0, 0, 0, 0}));
}

bool rows_or_columns_constant(std::span<const std::uint8_t> p, std::size_t n) {
  bool rows = true, cols = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      rows = rows && p[i * n + j] == p[i * n];
      cols = cols && p[i * n + j] == p[j];
    }
  return rows || cols;
}

TEST(BarsAndStripes, PatternCounts) {
  EXPECT_EQ(bars_and_stripes_patterns(2).size(), 6u);
  for (std::size_t n : {2, 3, 4, 5}) {
    const auto patterns = bars_and_stripes_patterns(n);
    EXPECT_EQ(patterns.size(), (std::size_t{1} << (n + 1)) - 2) << n;
    std::set<std::vector<std::uint8_t>> distinct(patterns.begin(), patterns.end());
    EXPECT_EQ(distinct.size(), patterns.size());
    for (const auto& p : patterns) EXPECT_TRUE(rows_or_columns_constant(p, n));
  }
}

TEST(BarsAndStripes, SamplesAndSeeds) {
  Rng a(3), b(3), c(4);
  const auto x = bars_and_stripes(4, 300, a);
  EXPECT_EQ(x.rows, 300u);
  EXPECT_EQ(x.cols, 16u);
  for (std::size_t r = 0; r < x.rows; ++r) {
    std::vector<std::uint8_t> p(x.row(r).begin(), x.row(r).end());
    EXPECT_TRUE(rows_or_columns_constant(p, 4));
  }
  EXPECT_EQ(bars_and_stripes(4, 300, b).values, x.values);
  EXPECT_NE(bars_and_stripes(4, 300, c).values, x.values);
}

TEST(Batches, CoverEveryRowOnce) {
  Rng rng(5);
  for (std::size_t rows : {1, 7, 100, 101}) {
    for (Rng* r : {static_cast<Rng*>(nullptr), &rng}) {
      const auto batches = epoch_batches(rows, 10, r);
      std::vector<int> seen(rows, 0);
      for (std::size_t i = 0; i < batches.size(); ++i) {
        EXPECT_LE(batches[i].size(), 10u);
        if (i + 1 < batches.size()) EXPECT_EQ(batches[i].size(), 10u);
        for (auto idx : batches[i]) ++seen[idx];
      }
      EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    }
  }
  const auto ordered = epoch_batches(5, 2, nullptr);
  EXPECT_EQ(ordered.front(), (std::vector<std::size_t>{0, 1}));
}

TEST(Dataset, SliceAndMean) {
  Dataset d{3, 2, {0, 1, 1, 1, 0, 0}, {7, 8, 9}};
  const auto s = d.slice(1, 2);
  EXPECT_EQ(s.rows, 2u);
  EXPECT_EQ(s.values, (std::vector<double>{1, 1, 0, 0}));
  EXPECT_EQ(s.labels, (std::vector<std::uint8_t>{8, 9}));
  EXPECT_DOUBLE_EQ(d.mean(), 0.5);
}

}  // namespace
}  // namespace qvae::data
