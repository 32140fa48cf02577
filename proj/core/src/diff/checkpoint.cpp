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

#include "qvae/diff/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace qvae::diff {
namespace {

std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffULL) << (8 * (7 - i));
  return r;
}

std::filesystem::path blob_path(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".bin");
  return p;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t.tensor;
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& manifest, std::span<const NamedTensor> tensors,
                     const nlohmann::json& metadata) {
  const auto blob = blob_path(manifest);
  std::ofstream out(blob, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + blob.string());

  nlohmann::json entries = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& nt : tensors) {
    for (double v : nt.tensor.values()) {
      const std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    entries.push_back({{"name", nt.name},
                       {"shape", nt.tensor.shape()},
                       {"dtype", "float64"},
                       {"offset", offset},
                       {"count", nt.tensor.size()}});
    offset += nt.tensor.size() * sizeof(double);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + blob.string());

  nlohmann::json doc = {{"format", "qvae-checkpoint"},
                        {"version", 1},
                        {"byte_order", "little"},
                        {"blob", blob.filename().string()},
                        {"blob_bytes", offset},
                        {"tensors", entries},
                        {"metadata", metadata}};
  std::ofstream mf(manifest, std::ios::trunc);
  if (!mf) throw std::runtime_error("checkpoint: cannot write " + manifest.string());
  mf << doc.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
  std::ifstream mf(manifest);
  if (!mf) throw std::runtime_error("checkpoint: cannot open " + manifest.string());
  nlohmann::json doc;
  try {
    mf >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: malformed manifest " + manifest.string() + ": " + e.what());
  }
  if (doc.value("format", "") != "qvae-checkpoint") {
    throw std::runtime_error("checkpoint: " + manifest.string() + " is not a qvae checkpoint manifest");
  }

  const auto blob = manifest.parent_path() / doc.at("blob").get<std::string>();
  std::ifstream in(blob, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + blob.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Checkpoint cp;
  cp.metadata = doc.value("metadata", nlohmann::json::object());
  for (const auto& e : doc.at("tensors")) {
    if (e.at("dtype").get<std::string>() != "float64") {
      throw std::runtime_error("checkpoint: unsupported dtype for " + e.at("name").get<std::string>());
    }
    const Shape shape = e.at("shape").get<Shape>();
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto count = e.at("count").get<std::uint64_t>();
    if (count != shape_size(shape) || offset + count * sizeof(double) > bytes.size()) {
      throw std::runtime_error("checkpoint: entry " + e.at("name").get<std::string>() + " exceeds blob " +
                               blob.string());
    }
    std::vector<double> values(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, bytes.data() + offset + i * sizeof(double), sizeof bits);
      values[i] = std::bit_cast<double>(to_little(bits));
    }
    cp.tensors.push_back({e.at("name").get<std::string>(), Tensor::from_values(shape, std::move(values))});
  }
  return cp;
}

void restore(const Checkpoint& checkpoint, std::span<NamedTensor> targets) {
  for (auto& target : targets) {
    const Tensor* src = checkpoint.find(target.name);
    if (!src) throw std::invalid_argument("checkpoint: missing tensor " + target.name);
    if (src->shape() != target.tensor.shape()) {
      throw std::invalid_argument("checkpoint: tensor " + target.name + " has shape " + src->describe() +
                                  ", expected " + target.tensor.describe());
    }
    std::copy(src->values().begin(), src->values().end(), target.tensor.values().begin());
  }
}

}  // namespace qvae::diff
