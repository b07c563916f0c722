// Copyright 2026 The NN-ETM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NNETM_ADAM_HPP_
#define NNETM_ADAM_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "nnetm/errors.hpp"
#include "nnetm/mlp.hpp"

namespace nnetm {

struct AdamConfig {
  double learning_rate = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

// First/second moment estimates, persisted across epochs.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected adaptive-moment update in place.
inline void AdamStep(std::span<double> params, std::span<const double> grad,
                     AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grad.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw DimensionError("optimizer state does not match parameter count");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

inline void AdamStep(Mlp& net, std::span<const double> grad, AdamState& state,
                     const AdamConfig& cfg) {
  AdamStep(net.mutable_params(), grad, state, cfg);
  net.Touch();
}

// Rescales `grad` so its Euclidean norm is at most `max_norm`. Returns the
// norm before clipping.
inline double ClipGlobalNorm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

}  // namespace nnetm

#endif  // NNETM_ADAM_HPP_
