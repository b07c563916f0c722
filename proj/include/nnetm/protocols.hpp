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

#ifndef NNETM_PROTOCOLS_HPP_
#define NNETM_PROTOCOLS_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "nnetm/autodiff.hpp"
#include "nnetm/errors.hpp"
#include "nnetm/graph.hpp"

namespace nnetm {

enum class ProtocolKind { kLinear, kSlidingMode };

// How z(0) is chosen. kReference: z_i(0) = r_i(0) (and derivatives for the
// sliding-mode levels), so sum(z) tracks sum(r). kZeroSum: z(0) = 0.
enum class InitMode { kReference, kZeroSum };

// Highest sliding-mode order the signal generator can feed (needs r^(m+1)).
inline constexpr int kMaxSlidingOrder = 1;

struct ProtocolConfig {
  ProtocolKind kind = ProtocolKind::kLinear;
  double kappa = 5.0;                  // linear coupling gain
  std::vector<double> gains{2.0, 4.0};  // sliding-mode k_0..k_m
  int order = 1;                       // sliding-mode m
  InitMode init = InitMode::kReference;

  bool operator==(const ProtocolConfig&) const = default;

  int state_dim() const {
    return kind == ProtocolKind::kLinear ? 1 : order + 1;
  }

  void Validate() const {
    if (kind == ProtocolKind::kLinear) {
      if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
      return;
    }
    if (order < 1 || order > kMaxSlidingOrder)
      throw ConfigError("sliding-mode order " + std::to_string(order) +
                        " unsupported (max " + std::to_string(kMaxSlidingOrder) + ")");
    if (gains.size() != static_cast<std::size_t>(order + 1))
      throw ConfigError("sliding-mode needs order+1 gains");
    for (double k : gains)
      if (!(k > 0.0)) throw ConfigError("sliding-mode gains must be positive");
  }
};

// Single-agent view of the consensus/trigger state.
struct AgentState {
  std::vector<double> z;        // [z_i] or [z_i0, ..., z_im]
  double last_broadcast = 0.0;  // m_i(z_i(tau)) = z_i0(tau)
  double last_event_time = 0.0;
  std::vector<double> events;   // event times, including the t = 0 broadcast

  long event_count() const { return static_cast<long>(events.size()); }
  double message() const { return z.at(0); }
};

inline double Sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// |x|^alpha sign(x) for alpha > 0, sign(x) for alpha == 0.
inline double SignedPower(double x, double alpha) {
  if (alpha == 0.0) return Sign(x);
  return std::pow(std::abs(x), alpha) * Sign(x);
}

// Explicit Euler step of dz_i = dr_i - kappa * sum_j (b_i - b_j), where b holds
// the last broadcast values of every agent (own term included).
template <class S>
void StepLinear(std::span<S> states, std::span<const S> broadcasts,
                std::span<const double> dr, const NetworkGraph& graph,
                double kappa, double h) {
  const int n = graph.n_agents();
  if (states.size() != static_cast<std::size_t>(n) ||
      broadcasts.size() != static_cast<std::size_t>(n) ||
      dr.size() != static_cast<std::size_t>(n))
    throw DimensionError("linear step expects one value per agent");
  for (int i = 0; i < n; ++i) {
    S coupling(0.0);
    bool first = true;
    for (int j : graph.neighbors(i)) {
      S d = broadcasts[i] - broadcasts[j];
      coupling = first ? d : coupling + d;
      first = false;
    }
    states[i] = states[i] + h * (dr[i] - kappa * coupling);
  }
}

inline std::vector<double> StepLinear(std::vector<double> states,
                                      std::span<const double> broadcasts,
                                      std::span<const double> dr,
                                      const NetworkGraph& graph, double kappa,
                                      double h) {
  StepLinear<double>(std::span<double>(states), broadcasts, dr, graph, kappa, h);
  return states;
}

// Per-agent coupling sum_j ceil(b_i - b_j)^alpha for one level.
inline double SlidingCoupling(std::span<const double> broadcasts,
                              const NetworkGraph& graph, int agent, double alpha) {
  double acc = 0.0;
  for (int j : graph.neighbors(agent))
    acc += SignedPower(broadcasts[agent] - broadcasts[j], alpha);
  return acc;
}

// Explicit Euler step of the m-th order sliding-mode consensus. `states` is
// agent-major with m+1 levels per agent; `broadcasts` holds the held z_j0;
// `r_top` holds r_i^(m+1)(t).
inline void StepSliding(std::span<double> states, std::span<const double> broadcasts,
                        std::span<const double> r_top, const NetworkGraph& graph,
                        std::span<const double> gains, int order, double h) {
  if (order < 1 || order > kMaxSlidingOrder)
    throw ConfigError("sliding-mode order " + std::to_string(order) + " unsupported");
  const int n = graph.n_agents();
  const int dim = order + 1;
  if (states.size() != static_cast<std::size_t>(n * dim) ||
      broadcasts.size() != static_cast<std::size_t>(n) ||
      r_top.size() != static_cast<std::size_t>(n) ||
      gains.size() != static_cast<std::size_t>(dim))
    throw DimensionError("sliding step dimensions");
  std::vector<double> rate(states.size());
  for (int i = 0; i < n; ++i) {
    for (int mu = 0; mu <= order; ++mu) {
      const double alpha = static_cast<double>(order - mu) / (order + 1);
      const double drive = mu < order ? states[i * dim + mu + 1] : r_top[i];
      rate[i * dim + mu] =
          drive - gains[mu] * SlidingCoupling(broadcasts, graph, i, alpha);
    }
  }
  for (std::size_t k = 0; k < states.size(); ++k) states[k] += h * rate[k];
}

}  // namespace nnetm

#endif  // NNETM_PROTOCOLS_HPP_
