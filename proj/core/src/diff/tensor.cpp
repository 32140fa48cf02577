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

#include "qvae/diff/tensor.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace qvae::diff {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape_size(shape)) {
    throw std::invalid_argument("tensor: " + std::to_string(values.size()) + " values for shape " +
                                shape_string(shape));
  }
  Tensor t;
  t.storage_ = std::make_shared<Storage>();
  t.storage_->shape = std::move(shape);
  t.storage_->values = std::move(values);
  t.storage_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from_values({1}, {value}, requires_grad); }

const Tensor::Storage& Tensor::storage() const {
  if (!storage_) throw std::logic_error("tensor: use of undefined tensor");
  return *storage_;
}

Tensor::Storage* Tensor::storage_ptr() const {
  if (!storage_) throw std::logic_error("tensor: use of undefined tensor");
  return storage_.get();
}

Tensor::Storage& Tensor::storage() {
  if (!storage_) throw std::logic_error("tensor: use of undefined tensor");
  return *storage_;
}

const Shape& Tensor::shape() const { return storage().shape; }
std::size_t Tensor::size() const { return storage().values.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  return s.size() >= 2 ? s.front() : 1;
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  if (s.size() >= 2) return size() / s.front();
  return size();
}

std::span<double> Tensor::values() { return storage().values; }
std::span<const double> Tensor::values() const { return storage().values; }

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("tensor: item() on shape " + describe());
  return storage().values[0];
}

bool Tensor::requires_grad() const { return storage().requires_grad; }
void Tensor::set_requires_grad(bool on) { storage().requires_grad = on; }

std::span<double> Tensor::grad() const {
  // Handle semantics: constness of the handle does not extend to the buffer.
  auto& s = *storage_ptr();
  if (s.grad.size() != s.values.size()) s.grad.assign(s.values.size(), 0.0);
  return s.grad;
}

bool Tensor::has_grad() const { return storage().grad.size() == storage().values.size(); }

void Tensor::zero_grad() {
  auto& s = storage();
  s.grad.assign(s.values.size(), 0.0);
}

Tensor Tensor::clone() const {
  Tensor t = from_values(shape(), std::vector<double>(values().begin(), values().end()), requires_grad());
  if (has_grad()) t.storage_->grad = storage().grad;
  return t;
}

}  // namespace qvae::diff
