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

#ifndef NNETM_COST_HPP_
#define NNETM_COST_HPP_

#include <algorithm>
#include <cmath>

#include "nnetm/autodiff.hpp"
#include "nnetm/errors.hpp"
#include "nnetm/rollout.hpp"

namespace nnetm {

// Baselines below this are treated as degenerate; the relative error then
// divides by the floor instead.
inline constexpr double kBaselineFloor = 1e-12;

// Error/communication trade-off for one rollout.
struct CostBreakdown {
  double mse = 0.0;        // E
  double comm_rate = 0.0;  // C in [0, 1]
  double mse_fc = 0.0;     // E_fc
  double rel_error = 0.0;  // (E - E_fc) / E_fc
  double total = 0.0;      // J = E_r + lambda C
  double lambda = 0.0;
  bool degenerate_baseline = false;
};

// E = h/(N T) sum_i sum_k ||zbar(kh) - z_i(kh)||^2 from the stored trajectory.
inline double MeanSquareError(const RolloutResult& r) {
  double acc = 0.0;
  for (int k = 0; k <= r.n_steps; ++k)
    for (int i = 0; i < r.n_agents; ++i)
      for (int c = 0; c < r.state_dim; ++c) {
        const double d = r.consensus_avg[k * r.state_dim + c] - r.state(k, i, c);
        acc += d * d;
      }
  return acc * r.step / (r.n_agents * r.horizon);
}

// C = h/(N T) sum_i e_i.
template <class S>
S CommunicationRate(const S& comm_sum, int n_agents, double step, double horizon) {
  return comm_sum * (step / (n_agents * horizon));
}

template <class S>
S RelativeError(const S& mse, double mse_fc) {
  return (mse - mse_fc) * (1.0 / std::max(mse_fc, kBaselineFloor));
}

template <class S>
S TotalCost(const S& rel_error, const S& comm_rate, double lambda) {
  return rel_error + lambda * comm_rate;
}

inline CostBreakdown ComputeCost(const RolloutResult& rollout,
                                 const RolloutResult& baseline, double lambda) {
  if (rollout.n_agents != baseline.n_agents || rollout.n_steps != baseline.n_steps ||
      rollout.step != baseline.step)
    throw DimensionError("rollout and baseline grids differ");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  CostBreakdown c;
  c.lambda = lambda;
  c.mse = MeanSquareError(rollout);
  c.mse_fc = MeanSquareError(baseline);
  c.degenerate_baseline = c.mse_fc < kBaselineFloor;
  double comm = 0.0;
  for (double e : rollout.comm_count) comm += e;
  c.comm_rate = CommunicationRate(comm, rollout.n_agents, rollout.step, rollout.horizon);
  c.rel_error = RelativeError(c.mse, c.mse_fc);
  c.total = TotalCost(c.rel_error, c.comm_rate, lambda);
  return c;
}

}  // namespace nnetm

#endif  // NNETM_COST_HPP_
