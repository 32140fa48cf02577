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

#include "qvae/data/dataset.hpp"

namespace qvae::eval {

/// Binary PGM (P5), 8-bit gray.
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels);

/// Tiles each row of `images` (values in [0, 1], `width` x `height`) into a
/// grid with `columns` tiles per row and a one-pixel black border.
struct Montage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};
Montage montage(const data::Dataset& images, std::size_t width, std::size_t height, std::size_t columns);

/// Writes every image as its own PGM plus grid.pgm into `dir`.
void write_images(const std::filesystem::path& dir, const data::Dataset& images, std::size_t width,
                  std::size_t height, std::size_t columns);

}  // namespace qvae::eval
