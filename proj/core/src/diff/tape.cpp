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

#include "qvae/diff/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qvae/common.hpp"

namespace qvae::diff {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(std::span<const double> v, std::size_t rows, std::size_t cols) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap as_matrix(std::span<double> v, std::size_t rows, std::size_t cols) {
  return MutMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.describe() + " and " + b.describe());
}

void check_finite(const char* op, std::span<const double> values) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError(std::string(op) + ": produced a non-finite value");
  }
}

bool any_requires_grad(std::span<const Tensor> inputs) {
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

// Elementwise binary ops accept an exact size match or a row-vector right operand.
bool broadcasts_row(const Tensor& a, const Tensor& b) { return b.size() == a.cols() && a.size() != b.size(); }

// Equal shapes, or two single rows of the same width ([n] against [1, n]).
bool same_layout(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() || (a.size() == b.size() && a.rows() == 1 && b.rows() == 1);
}

}  // namespace

Tensor Tape::make_output(Shape shape, std::vector<double> values, std::span<const Tensor> inputs) {
  return Tensor::from_values(std::move(shape), std::move(values), any_requires_grad(inputs));
}

void Tape::record(const Tensor& out, BackwardFn fn) {
  if (out.requires_grad()) records_.push_back({out, std::move(fn)});
}

Tensor Tape::affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t batch = x.rows();
  const std::size_t in = x.cols();
  if (w.rank() != 2 || w.shape()[0] != in) shape_error("affine", x, w);
  const std::size_t out = w.shape()[1];
  if (b.size() != out) shape_error("affine(bias)", w, b);

  std::vector<double> y(batch * out);
  auto ym = as_matrix(std::span<double>(y), batch, out);
  ym.noalias() = as_matrix(x.values(), batch, in) * as_matrix(w.values(), in, out);
  ym.rowwise() += as_matrix(b.values(), 1, out).row(0);

  const Tensor inputs[] = {x, w, b};
  Tensor result = make_output({batch, out}, std::move(y), inputs);
  check_finite("affine", result.values());
  record(result, [x, w, b, result, batch, in, out]() mutable {
    auto dy = as_matrix(std::span<const double>(result.grad()), batch, out);
    if (x.requires_grad()) as_matrix(x.grad(), batch, in).noalias() += dy * as_matrix(w.values(), in, out).transpose();
    if (w.requires_grad()) as_matrix(w.grad(), in, out).noalias() += as_matrix(x.values(), batch, in).transpose() * dy;
    if (b.requires_grad()) as_matrix(b.grad(), 1, out) += dy.colwise().sum();
  });
  return result;
}

Tensor Tape::relu(const Tensor& x) {
  std::vector<double> y(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0 ? xv[i] : 0.0;
  const Tensor inputs[] = {x};
  Tensor out = make_output(x.shape(), std::move(y), inputs);
  record(out, [x, out]() mutable {
    auto g = out.grad();
    auto dx = x.grad();
    auto xv = x.values();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0) dx[i] += g[i];
  });
  return out;
}

Tensor Tape::sigmoid(const Tensor& x) {
  std::vector<double> y(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = qvae::sigmoid(xv[i]);
  const Tensor inputs[] = {x};
  Tensor out = make_output(x.shape(), std::move(y), inputs);
  record(out, [x, out]() mutable {
    auto g = out.grad();
    auto yv = out.values();
    auto dx = x.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * yv[i] * (1.0 - yv[i]);
  });
  return out;
}

Tensor Tape::log(const Tensor& x) {
  std::vector<double> y(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::log(xv[i]);
  check_finite("log", y);
  const Tensor inputs[] = {x};
  Tensor out = make_output(x.shape(), std::move(y), inputs);
  record(out, [x, out]() mutable {
    auto g = out.grad();
    auto xv = x.values();
    auto dx = x.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / xv[i];
  });
  return out;
}

Tensor Tape::exp(const Tensor& x) {
  std::vector<double> y(x.size());
  auto xv = x.values();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::exp(xv[i]);
  check_finite("exp", y);
  const Tensor inputs[] = {x};
  Tensor out = make_output(x.shape(), std::move(y), inputs);
  record(out, [x, out]() mutable {
    auto g = out.grad();
    auto yv = out.values();
    auto dx = x.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * yv[i];
  });
  return out;
}

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  const bool bc = broadcasts_row(a, b);
  if (!bc && !same_layout(a, b)) shape_error("add", a, b);
  const std::size_t n = a.size(), cols = a.cols();
  std::vector<double> y(n);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) y[i] = av[i] + bv[bc ? i % cols : i];
  const Tensor inputs[] = {a, b};
  Tensor out = make_output(a.shape(), std::move(y), inputs);
  check_finite("add", out.values());
  record(out, [a, b, out, bc, cols]() mutable {
    auto g = out.grad();
    if (a.requires_grad()) {
      auto da = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    }
    if (b.requires_grad()) {
      auto db = b.grad();
      for (std::size_t i = 0; i < g.size(); ++i) db[bc ? i % cols : i] += g[i];
    }
  });
  return out;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  if (!broadcasts_row(a, b) && !same_layout(a, b)) shape_error("sub", a, b);
  return add(a, scale(b, -1.0));
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  const bool bc = broadcasts_row(a, b);
  if (!bc && !same_layout(a, b)) shape_error("mul", a, b);
  const std::size_t n = a.size(), cols = a.cols();
  std::vector<double> y(n);
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < n; ++i) y[i] = av[i] * bv[bc ? i % cols : i];
  const Tensor inputs[] = {a, b};
  Tensor out = make_output(a.shape(), std::move(y), inputs);
  check_finite("mul", out.values());
  record(out, [a, b, out, bc, cols]() mutable {
    auto g = out.grad();
    auto av = a.values();
    auto bv = b.values();
    if (a.requires_grad()) {
      auto da = a.grad();
      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * bv[bc ? i % cols : i];
    }
    if (b.requires_grad()) {
      auto db = b.grad();
      for (std::size_t i = 0; i < g.size(); ++i) db[bc ? i % cols : i] += g[i] * av[i];
    }
  });
  return out;
}

Tensor Tape::scale(const Tensor& x, double factor) {
  std::vector<double> y(x.values().begin(), x.values().end());
  for (double& v : y) v *= factor;
  const Tensor inputs[] = {x};
  Tensor out = make_output(x.shape(), std::move(y), inputs);
  record(out, [x, out, factor]() mutable {
    auto g = out.grad();
    auto dx = x.grad();
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += factor * g[i];
  });
  return out;
}

Tensor Tape::concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const std::size_t batch = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != batch) shape_error("concat", parts.front(), p);
    total += p.cols();
  }
  std::vector<double> y(batch * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.cols();
    auto pv = p.values();
    for (std::size_t r = 0; r < batch; ++r)
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(r * c), c, y.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    offset += c;
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  Tensor out = make_output({batch, total}, std::move(y), inputs);
  record(out, [inputs, out, batch, total]() mutable {
    auto g = out.grad();
    std::size_t offset = 0;
    for (auto& p : inputs) {
      const std::size_t c = p.cols();
      if (p.requires_grad()) {
        auto dp = p.grad();
        for (std::size_t r = 0; r < batch; ++r)
          for (std::size_t j = 0; j < c; ++j) dp[r * c + j] += g[r * total + offset + j];
      }
      offset += c;
    }
  });
  return out;
}

Tensor Tape::slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  const std::size_t batch = x.rows(), cols = x.cols();
  if (begin + count > cols) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                                ") outside " + x.describe());
  }
  std::vector<double> y(batch * count);
  auto xv = x.values();
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < count; ++j) y[r * count + j] = xv[r * cols + begin + j];
  const Tensor inputs[] = {x};
  Tensor out = make_output({batch, count}, std::move(y), inputs);
  record(out, [x, out, batch, cols, begin, count]() mutable {
    auto g = out.grad();
    auto dx = x.grad();
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < count; ++j) dx[r * cols + begin + j] += g[r * count + j];
  });
  return out;
}

Tensor Tape::batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats,
                        bool training) {
  const std::size_t batch = x.rows(), features = x.cols();
  if (gamma.size() != features) shape_error("batch_norm(gamma)", x, gamma);
  if (beta.size() != features) shape_error("batch_norm(beta)", x, beta);
  if (stats.running_mean.size() != features || stats.running_var.size() != features)
    shape_error("batch_norm(stats)", x, stats.running_mean);

  std::vector<double> mean(features, 0.0), inv_std(features, 0.0);
  auto xv = x.values();
  if (training) {
    std::vector<double> var(features, 0.0);
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < features; ++j) mean[j] += xv[r * features + j];
    for (double& m : mean) m /= static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < features; ++j) {
        const double d = xv[r * features + j] - mean[j];
        var[j] += d * d;
      }
    for (double& v : var) v /= static_cast<double>(batch);
    auto rm = stats.running_mean.values();
    auto rv = stats.running_var.values();
    const double unbias = batch > 1 ? static_cast<double>(batch) / static_cast<double>(batch - 1) : 1.0;
    for (std::size_t j = 0; j < features; ++j) {
      inv_std[j] = 1.0 / std::sqrt(var[j] + stats.epsilon);
      rm[j] = (1.0 - stats.momentum) * rm[j] + stats.momentum * mean[j];
      rv[j] = (1.0 - stats.momentum) * rv[j] + stats.momentum * var[j] * unbias;
    }
  } else {
    auto rm = stats.running_mean.values();
    auto rv = stats.running_var.values();
    for (std::size_t j = 0; j < features; ++j) {
      mean[j] = rm[j];
      inv_std[j] = 1.0 / std::sqrt(rv[j] + stats.epsilon);
    }
  }

  std::vector<double> xhat(batch * features), y(batch * features);
  auto gv = gamma.values();
  auto bv = beta.values();
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < features; ++j) {
      const std::size_t i = r * features + j;
      xhat[i] = (xv[i] - mean[j]) * inv_std[j];
      y[i] = gv[j] * xhat[i] + bv[j];
    }
  const Tensor inputs[] = {x, gamma, beta};
  Tensor out = make_output(x.shape(), std::move(y), inputs);
  check_finite("batch_norm", out.values());
  record(out, [x, gamma, beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), batch, features,
               training]() mutable {
    auto g = out.grad();
    auto gv = gamma.values();
    if (gamma.requires_grad() || beta.requires_grad()) {
      auto dg = gamma.grad();
      auto db = beta.grad();
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < features; ++j) {
          const std::size_t i = r * features + j;
          if (gamma.requires_grad()) dg[j] += g[i] * xhat[i];
          if (beta.requires_grad()) db[j] += g[i];
        }
    }
    if (!x.requires_grad()) return;
    auto dx = x.grad();
    if (!training) {
      for (std::size_t r = 0; r < batch; ++r)
        for (std::size_t j = 0; j < features; ++j) dx[r * features + j] += g[r * features + j] * gv[j] * inv_std[j];
      return;
    }
    const double n = static_cast<double>(batch);
    for (std::size_t j = 0; j < features; ++j) {
      double sum_d = 0.0, sum_dx = 0.0;
      for (std::size_t r = 0; r < batch; ++r) {
        const std::size_t i = r * features + j;
        const double d = g[i] * gv[j];
        sum_d += d;
        sum_dx += d * xhat[i];
      }
      for (std::size_t r = 0; r < batch; ++r) {
        const std::size_t i = r * features + j;
        const double d = g[i] * gv[j];
        dx[i] += inv_std[j] / n * (n * d - sum_d - xhat[i] * sum_dx);
      }
    }
  });
  return out;
}

Tensor Tape::sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v;
  const Tensor inputs[] = {x};
  Tensor out = make_output({1}, {s}, inputs);
  record(out, [x, out]() mutable {
    const double g = out.grad()[0];
    for (double& d : x.grad()) d += g;
  });
  return out;
}

Tensor Tape::mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor Tape::row_sum(const Tensor& x) {
  const std::size_t batch = x.rows(), cols = x.cols();
  std::vector<double> y(batch, 0.0);
  auto xv = x.values();
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < cols; ++j) y[r] += xv[r * cols + j];
  const Tensor inputs[] = {x};
  Tensor out = make_output({batch}, std::move(y), inputs);
  record(out, [x, out, batch, cols]() mutable {
    auto g = out.grad();
    auto dx = x.grad();
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < cols; ++j) dx[r * cols + j] += g[r];
  });
  return out;
}

Tensor Tape::bernoulli_log_likelihood(const Tensor& targets, const Tensor& logits) {
  if (targets.size() != logits.size()) shape_error("bernoulli_log_likelihood", targets, logits);
  const std::size_t batch = logits.rows(), cols = logits.cols();
  std::vector<double> y(batch, 0.0);
  auto tv = targets.values();
  auto av = logits.values();
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t i = r * cols + j;
      y[r] += tv[i] * av[i] - softplus(av[i]);
    }
  const Tensor inputs[] = {logits};
  Tensor out = make_output({batch}, std::move(y), inputs);
  check_finite("bernoulli_log_likelihood", out.values());
  record(out, [targets, logits, out, batch, cols]() mutable {
    auto g = out.grad();
    auto tv = targets.values();
    auto av = logits.values();
    auto da = logits.grad();
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t j = 0; j < cols; ++j) {
        const std::size_t i = r * cols + j;
        da[i] += g[r] * (tv[i] - qvae::sigmoid(av[i]));
      }
  });
  return out;
}

Tensor Tape::custom(Shape shape, std::vector<double> values, std::span<const Tensor> inputs,
                    std::function<void(const Tensor& out)> backward) {
  Tensor out = make_output(std::move(shape), std::move(values), inputs);
  check_finite("custom", out.values());
  record(out, [out, fn = std::move(backward)]() { fn(out); });
  return out;
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) throw std::invalid_argument("backward: loss must be a scalar, got shape " + loss.describe());
  if (records_.empty()) throw std::logic_error("backward: tape is empty");
  for (auto& r : records_) r.output.zero_grad();
  Tensor l = loss;
  l.grad()[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) it->fn();
}

void Tape::clear() { records_.clear(); }

}  // namespace qvae::diff
