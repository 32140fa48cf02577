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

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qvae::diff {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of 64-bit reals with an optional gradient buffer.
///
/// Tensor is a shared handle: copies alias the same storage, which is how the
/// tape refers to parameters and intermediates. Use clone() for a deep copy.
/// Rank-2 tensors are [rows, cols] with one sample per row; rank-1 tensors
/// are treated as a single row wherever a matrix is expected.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t rank() const { return shape().size(); }
  /// Leading extent for rank 2, 1 for rank <= 1.
  std::size_t rows() const;
  /// Trailing extent; the full size for rank <= 1.
  std::size_t cols() const;

  std::span<double> values();
  std::span<const double> values() const;
  double& operator[](std::size_t i) { return values()[i]; }
  double operator[](std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  /// Gradient buffer, allocated (zeroed) on first access. Writable through
  /// const handles, like the storage it belongs to.
  std::span<double> grad() const;
  bool has_grad() const;
  void zero_grad();

  Tensor clone() const;
  std::string describe() const { return shape_string(shape()); }

  friend bool same_storage(const Tensor& a, const Tensor& b) { return a.storage_ == b.storage_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Storage> storage_;
  const Storage& storage() const;
  Storage& storage();
  Storage* storage_ptr() const;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace qvae::diff
