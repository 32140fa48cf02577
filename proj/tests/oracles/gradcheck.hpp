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

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "qvae/diff/tape.hpp"

namespace qvae::oracle {

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
};

/// Compares tape gradients of a scalar loss with central differences.
/// `loss` records a fresh graph on the tape each call and returns a [1] tensor.
inline GradCheck grad_check(const std::function<diff::Tensor(diff::Tape&)>& loss, std::vector<diff::Tensor> params,
                            double step = 1e-5) {
  for (auto& p : params) p.zero_grad();
  {
    diff::Tape tape;
    tape.backward(loss(tape));
  }
  GradCheck out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].values();
    const auto grad = params[k].grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      diff::Tape up;
      const double plus = loss(up).item();
      values[i] = saved - step;
      diff::Tape down;
      const double minus = loss(down).item();
      values[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double rel = std::abs(grad[i] - numeric) / std::max({1.0, std::abs(grad[i]), std::abs(numeric)});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = "param " + std::to_string(k) + "[" + std::to_string(i) + "]: tape " + std::to_string(grad[i]) +
                    " vs numeric " + std::to_string(numeric);
      }
    }
  }
  return out;
}

}  // namespace qvae::oracle
