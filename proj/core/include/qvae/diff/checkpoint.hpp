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
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvae/diff/tensor.hpp"

namespace qvae::diff {

/// On-disk layout: `<stem>.json` manifest listing name, shape, dtype and byte
/// offset of every tensor, plus `<stem>.bin` holding the values as
/// little-endian IEEE-754 doubles, concatenated in manifest order.
struct Checkpoint {
  nlohmann::json metadata;
  std::vector<NamedTensor> tensors;

  const Tensor* find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& manifest, std::span<const NamedTensor> tensors,
                     const nlohmann::json& metadata = nlohmann::json::object());

Checkpoint load_checkpoint(const std::filesystem::path& manifest);

/// Copies checkpoint values into `targets` by name. Missing names or shape
/// mismatches throw std::invalid_argument.
void restore(const Checkpoint& checkpoint, std::span<NamedTensor> targets);

}  // namespace qvae::diff
