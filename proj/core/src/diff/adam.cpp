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

#include "qvae/diff/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "qvae/common.hpp"

namespace qvae::diff {

void AdamState::step(std::span<Tensor> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) {
    throw std::invalid_argument("adam: parameter list changed from " + std::to_string(m_.size()) + " to " +
                                std::to_string(params.size()) + " tensors");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != m_[k].size()) {
      throw std::invalid_argument("adam: parameter " + std::to_string(k) + " changed shape to " +
                                  params[k].describe());
    }
    for (double g : params[k].grad()) {
      if (!std::isfinite(g)) throw NumericalError("adam: non-finite gradient in parameter " + std::to_string(k));
    }
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(options_.beta1, t);
  const double c2 = 1.0 - std::pow(options_.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto w = params[k].values();
    auto g = params[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
    }
    params[k].zero_grad();
  }
}

}  // namespace qvae::diff
