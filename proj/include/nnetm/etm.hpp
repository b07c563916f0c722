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

#ifndef NNETM_ETM_HPP_
#define NNETM_ETM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "nnetm/autodiff.hpp"
#include "nnetm/errors.hpp"
#include "nnetm/protocols.hpp"

namespace nnetm {

enum class TriggerMode { kHard, kFuzzy };
enum class ThresholdSource { kFixed, kLearned };

// Send-on-delta trigger with threshold delta = sigma * eta + epsilon.
struct TriggerPolicy {
  double sigma = 0.1;
  double epsilon = 0.001;
  double alpha = 100.0;  // fuzzy steepness
  double fixed_eta = 0.5;
  ThresholdSource source = ThresholdSource::kLearned;
  TriggerMode mode = TriggerMode::kHard;

  bool operator==(const TriggerPolicy&) const = default;

  void Validate() const {
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
    if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    if (!(fixed_eta >= 0.0 && fixed_eta <= 1.0))
      throw ConfigError("fixed eta must lie in [0, 1]");
  }

  template <class S>
  S Threshold(const S& eta) const {
    return sigma * eta + epsilon;
  }
};

struct TriggerDecision {
  bool fired = false;
  double nu = 0.0;  // 0/1 in hard mode, sigmoid weight in fuzzy mode
  double delta = 0.0;
  double eta = 0.0;
};

// Fuzzy event weight nu = sigmoid(alpha (err - delta)).
template <class S>
S FuzzyWeight(const S& err, const S& delta, double alpha) {
  return Sigmoid(alpha * (err - delta));
}

inline TriggerDecision EvaluateHard(const AgentState& agent, double message,
                                    double eta, const TriggerPolicy& policy) {
  TriggerDecision d;
  d.eta = eta;
  d.delta = policy.Threshold(eta);
  d.fired = std::abs(message - agent.last_broadcast) >= d.delta;
  d.nu = d.fired ? 1.0 : 0.0;
  return d;
}

inline TriggerDecision EvaluateFuzzy(const AgentState& agent, double message,
                                     double eta, const TriggerPolicy& policy) {
  TriggerDecision d;
  d.eta = eta;
  d.delta = policy.Threshold(eta);
  d.nu = FuzzyWeight(std::abs(message - agent.last_broadcast), d.delta, policy.alpha);
  d.fired = d.nu >= 0.5;
  return d;
}

// Applies a decision at time t. Hard: reset on fire. Fuzzy: blend the held
// broadcast and last event time with weight nu.
inline void ApplyDecision(AgentState& agent, double message, double t,
                          const TriggerDecision& d, TriggerMode mode) {
  if (mode == TriggerMode::kHard) {
    if (!d.fired) return;
    agent.last_broadcast = message;
    agent.last_event_time = t;
    agent.events.push_back(t);
    return;
  }
  agent.last_broadcast = Blend(d.nu, message, agent.last_broadcast);
  agent.last_event_time = Blend(d.nu, t, agent.last_event_time);
}

struct InterEventStats {
  double min_gap = 0.0;   // horizon when no agent has two events
  double mean_gap = 0.0;  // horizon when no agent has two events
  std::vector<long> counts;
};

inline InterEventStats InterEventStatistics(
    const std::vector<std::vector<double>>& events, double horizon) {
  InterEventStats s;
  s.min_gap = horizon;
  double total = 0.0;
  long pairs = 0;
  for (const auto& agent : events) {
    s.counts.push_back(static_cast<long>(agent.size()));
    for (std::size_t k = 1; k < agent.size(); ++k) {
      const double gap = agent[k] - agent[k - 1];
      s.min_gap = std::min(s.min_gap, gap);
      total += gap;
      ++pairs;
    }
  }
  s.mean_gap = pairs ? total / pairs : horizon;
  return s;
}

}  // namespace nnetm

#endif  // NNETM_ETM_HPP_
