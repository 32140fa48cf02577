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

#include <zlib.h>

#include <array>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>

#include "qvae/data/dataset.hpp"

namespace qvae::data {

namespace {

constexpr std::uint32_t kImagesMagic = 2051;
constexpr std::uint32_t kLabelsMagic = 2049;

// gzread passes uncompressed files through unchanged.
std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("idx: cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::array<std::uint8_t, 1 << 16> buf{};
  for (;;) {
    const int n = gzread(f, buf.data(), static_cast<unsigned>(buf.size()));
    if (n < 0) {
      int code = 0;
      const std::string msg = gzerror(f, &code);
      gzclose(f);
      throw std::runtime_error("idx: read error in " + path.string() + " after " + std::to_string(out.size()) +
                               " bytes: " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), buf.begin(), buf.begin() + n);
  }
  gzclose(f);
  return out;
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t offset, const std::filesystem::path& path) {
  if (offset + 4 > b.size()) {
    throw std::runtime_error("idx: " + path.string() + " truncated at offset " + std::to_string(offset) +
                             " while reading a 4-byte header field");
  }
  return (std::uint32_t{b[offset]} << 24) | (std::uint32_t{b[offset + 1]} << 16) |
         (std::uint32_t{b[offset + 2]} << 8) | std::uint32_t{b[offset + 3]};
}

std::filesystem::path find_file(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* suffix : {"", ".gz"}) {
    const auto p = dir / (stem + suffix);
    if (std::filesystem::exists(p)) return p;
  }
  // Some mirrors use dots in place of the final hyphen.
  std::string dotted = stem;
  dotted[dotted.rfind('-')] = '.';
  for (const char* suffix : {"", ".gz"}) {
    const auto p = dir / (dotted + suffix);
    if (std::filesystem::exists(p)) return p;
  }
  throw std::runtime_error("mnist: no " + stem + "[.gz] in " + dir.string());
}

}  // namespace

IdxArray read_idx(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const std::uint32_t magic = read_be32(bytes, 0, path);
  // 0x00 0x00 <type> <rank>; only unsigned bytes (0x08) are supported.
  if ((magic >> 16) != 0 || ((magic >> 8) & 0xFF) != 0x08) {
    std::ostringstream msg;
    msg << "idx: " << path.string() << " has bad magic 0x" << std::hex << magic << " at offset 0";
    throw std::runtime_error(msg.str());
  }
  const std::size_t rank = magic & 0xFF;
  if (rank == 0) throw std::runtime_error("idx: " + path.string() + " declares rank 0 at offset 3");
  IdxArray out;
  std::size_t count = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    out.dims.push_back(read_be32(bytes, 4 + 4 * d, path));
    count *= out.dims.back();
  }
  const std::size_t header = 4 + 4 * rank;
  if (bytes.size() < header + count) {
    throw std::runtime_error("idx: " + path.string() + " truncated at offset " + std::to_string(bytes.size()) +
                             ", expected " + std::to_string(header + count) + " bytes");
  }
  if (bytes.size() > header + count) {
    throw std::runtime_error("idx: " + path.string() + " has trailing data at offset " +
                             std::to_string(header + count));
  }
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return out;
}

void write_idx(const std::filesystem::path& path, const IdxArray& array, bool gzip) {
  std::vector<std::uint8_t> bytes;
  auto put32 = [&](std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) bytes.push_back(static_cast<std::uint8_t>(v >> s));
  };
  put32(0x0800U | static_cast<std::uint32_t>(array.dims.size()));
  std::size_t count = 1;
  for (auto d : array.dims) {
    put32(d);
    count *= d;
  }
  if (count != array.data.size()) throw std::invalid_argument("write_idx: dims do not match data size");
  bytes.insert(bytes.end(), array.data.begin(), array.data.end());
  gzFile f = gzopen(path.c_str(), gzip ? "wb9" : "wbT");
  if (!f) throw std::runtime_error("idx: cannot create " + path.string());
  const int written = gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  const int closed = gzclose(f);
  if (written != static_cast<int>(bytes.size()) || closed != Z_OK)
    throw std::runtime_error("idx: short write to " + path.string());
}

Dataset load_mnist_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxArray img = read_idx(images);
  const std::uint32_t magic = 0x0800U | static_cast<std::uint32_t>(img.dims.size());
  if (magic != kImagesMagic) {
    throw std::runtime_error("mnist: " + images.string() + " has magic " + std::to_string(magic) +
                             " at offset 0, expected " + std::to_string(kImagesMagic));
  }
  Dataset out;
  out.rows = img.dims[0];
  out.cols = std::size_t{img.dims[1]} * img.dims[2];
  out.values.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) out.values[i] = img.data[i] / 255.0;
  if (!labels.empty()) {
    const IdxArray lab = read_idx(labels);
    const std::uint32_t lmagic = 0x0800U | static_cast<std::uint32_t>(lab.dims.size());
    if (lmagic != kLabelsMagic) {
      throw std::runtime_error("mnist: " + labels.string() + " has magic " + std::to_string(lmagic) +
                               " at offset 0, expected " + std::to_string(kLabelsMagic));
    }
    if (lab.dims[0] != out.rows) {
      throw std::runtime_error("mnist: " + labels.string() + " holds " + std::to_string(lab.dims[0]) +
                               " labels at offset 4 for " + std::to_string(out.rows) + " images");
    }
    out.labels = lab.data;
  }
  return out;
}

MnistSplit load_mnist(const std::filesystem::path& dir, std::size_t validation) {
  MnistSplit split;
  const Dataset train =
      load_mnist_idx(find_file(dir, "train-images-idx3-ubyte"), find_file(dir, "train-labels-idx1-ubyte"));
  if (validation >= train.rows) {
    throw std::invalid_argument("mnist: validation size " + std::to_string(validation) + " >= " +
                                std::to_string(train.rows) + " training rows");
  }
  split.train = train.slice(0, train.rows - validation);
  split.validation = train.slice(train.rows - validation, validation);
  split.test = load_mnist_idx(find_file(dir, "t10k-images-idx3-ubyte"), find_file(dir, "t10k-labels-idx1-ubyte"));
  return split;
}

}  // namespace qvae::data
