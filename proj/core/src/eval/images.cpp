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

#include "qvae/eval/images.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qvae::eval {

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               std::span<const std::uint8_t> pixels) {
  if (pixels.size() != width * height) throw std::invalid_argument("write_pgm: pixel count does not match size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm: cannot create " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

namespace {

std::uint8_t to_gray(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Montage montage(const data::Dataset& images, std::size_t width, std::size_t height, std::size_t columns) {
  if (images.cols != width * height) throw std::invalid_argument("montage: image size does not match width x height");
  if (columns == 0) throw std::invalid_argument("montage: columns must be >= 1");
  const std::size_t n = images.rows;
  const std::size_t cols = std::min(columns, std::max<std::size_t>(n, 1));
  const std::size_t rows = (n + cols - 1) / cols;
  Montage m;
  m.width = cols * (width + 1) + 1;
  m.height = rows * (height + 1) + 1;
  m.pixels.assign(m.width * m.height, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t ox = (i % cols) * (width + 1) + 1, oy = (i / cols) * (height + 1) + 1;
    const auto img = images.row(i);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) m.pixels[(oy + y) * m.width + ox + x] = to_gray(img[y * width + x]);
  }
  return m;
}

void write_images(const std::filesystem::path& dir, const data::Dataset& images, std::size_t width,
                  std::size_t height, std::size_t columns) {
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> px(width * height);
  for (std::size_t i = 0; i < images.rows; ++i) {
    const auto img = images.row(i);
    std::transform(img.begin(), img.end(), px.begin(), to_gray);
    std::ostringstream name;
    name << "image-" << std::setw(4) << std::setfill('0') << i << ".pgm";
    write_pgm(dir / name.str(), width, height, px);
  }
  const Montage m = montage(images, width, height, columns);
  write_pgm(dir / "grid.pgm", m.width, m.height, m.pixels);
}

}  // namespace qvae::eval
