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

#ifndef NNETM_ROLLOUT_HPP_
#define NNETM_ROLLOUT_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "nnetm/autodiff.hpp"
#include "nnetm/errors.hpp"
#include "nnetm/etm.hpp"
#include "nnetm/graph.hpp"
#include "nnetm/mlp.hpp"
#include "nnetm/protocols.hpp"
#include "nnetm/signals.hpp"

namespace nnetm {

enum class Communication { kEventTriggered, kFull };

// Number of network inputs: neighbor disagreement and time since last event.
inline constexpr int kFeatureDim = 2;

// Full trajectory record of one simulated sequence. Per-step arrays are
// indexed [k * n_agents + i] (states: [(k * n_agents + i) * state_dim + c]).
struct RolloutResult {
  ProtocolKind protocol = ProtocolKind::kLinear;
  Communication communication = Communication::kEventTriggered;
  TriggerMode mode = TriggerMode::kHard;
  int n_agents = 0;
  int state_dim = 1;
  int n_steps = 0;  // K; grid points k = 0..K
  double step = 0.0;
  double horizon = 0.0;

  std::vector<double> times;
  std::vector<double> states;
  std::vector<double> broadcasts;    // held values after trigger evaluation
  std::vector<double> eta;
  std::vector<double> delta;
  std::vector<double> nu;            // 0/1 hard, sigmoid weight fuzzy
  std::vector<double> held_error;    // |m_i(z_i) - held| after evaluation
  std::vector<double> consensus_avg; // [k * state_dim + c]
  std::vector<double> disagreement_norm;
  // Event times per agent, the t = 0 broadcast first.
  std::vector<std::vector<double>> events;
  // Events per agent excluding the t = 0 broadcast (sum of nu when fuzzy).
  std::vector<double> comm_count;
  // Mean square consensus error accumulated during the run.
  double mse = 0.0;
  std::uint64_t param_version = 0;

  double state(int k, int i, int c = 0) const {
    return states[(static_cast<std::size_t>(k) * n_agents + i) * state_dim + c];
  }
  double at(const std::vector<double>& v, int k, int i) const {
    return v[static_cast<std::size_t>(k) * n_agents + i];
  }
};

// Differentiable summary of a rollout (scalar S may be a tape variable).
template <class S>
struct RolloutTotals {
  S mse;
  S comm_sum;  // sum over agents of e_i
};

namespace detail {

template <class S>
void InitialState(const SignalBatch& signals, int seq, const ProtocolConfig& protocol,
                  std::vector<S>& z) {
  const int n = signals.n_agents();
  const int dim = protocol.state_dim();
  z.assign(static_cast<std::size_t>(n) * dim, S(0.0));
  if (protocol.init == InitMode::kZeroSum) return;
  for (int i = 0; i < n; ++i) {
    z[i * dim] = S(signals.r(seq, i, 0));
    if (dim > 1) z[i * dim + 1] = S(signals.dr(seq, i, 0));
  }
}

}  // namespace detail

// Simulates one sequence on the fixed grid. At k = 0 every agent broadcasts.
// At every k >= 1 each agent evaluates its trigger on the current state (all
// agents decide on the same snapshot), then the protocol integrates from k
// to k + 1 with the held broadcasts.
//
// `eta_fn(i, features)` returns eta_i given the feature array
// {sum_j (z_i0 - b_j), t - tau_i}. Trace is optional.
template <class S, class EtaFn>
RolloutTotals<S> Simulate(const SignalBatch& signals, int seq,
                          const NetworkGraph& graph, const ProtocolConfig& protocol,
                          const TriggerPolicy& policy, Communication communication,
                          EtaFn&& eta_fn, RolloutResult* trace) {
  constexpr bool kPlain = std::is_same_v<S, double>;
  protocol.Validate();
  policy.Validate();
  const int n = graph.n_agents();
  if (signals.n_agents() != n)
    throw DimensionError("signal batch has " + std::to_string(signals.n_agents()) +
                         " agents, graph has " + std::to_string(n));
  if (seq < 0 || seq >= signals.batch_size()) throw DimensionError("sequence index");
  if constexpr (!kPlain) {
    if (protocol.kind != ProtocolKind::kLinear)
      throw ConfigError("differentiable rollouts support the linear protocol only");
    if (communication == Communication::kEventTriggered && policy.mode == TriggerMode::kHard)
      throw ConfigError("differentiable rollouts need the fuzzy trigger");
  }

  const int dim = protocol.state_dim();
  const int steps = signals.n_steps();
  const double h = signals.step();
  const bool fuzzy = policy.mode == TriggerMode::kFuzzy;
  const bool full = communication == Communication::kFull;

  std::vector<S> z;
  detail::InitialState(signals, seq, protocol, z);
  std::vector<S> held(n), tau(n, S(0.0)), comm(n, S(0.0));
  for (int i = 0; i < n; ++i) held[i] = z[i * dim];
  S sq_sum(0.0);

  if (trace) {
    auto& t = *trace;
    t = RolloutResult{};
    t.protocol = protocol.kind;
    t.communication = communication;
    t.mode = policy.mode;
    t.n_agents = n;
    t.state_dim = dim;
    t.n_steps = steps;
    t.step = h;
    t.horizon = signals.horizon();
    const std::size_t pts = static_cast<std::size_t>(steps) + 1;
    t.times.resize(pts);
    t.states.resize(pts * n * dim);
    t.broadcasts.resize(pts * n);
    t.eta.assign(pts * n, 0.0);
    t.delta.assign(pts * n, 0.0);
    t.nu.assign(pts * n, 0.0);
    t.held_error.assign(pts * n, 0.0);
    t.consensus_avg.resize(pts * dim);
    t.disagreement_norm.resize(pts);
    t.events.assign(n, std::vector<double>{0.0});
  }

  std::vector<std::array<S, kFeatureDim>> features(n);
  std::vector<S> eta(n), delta(n), nu(n), err(n);
  std::vector<double> dr(n), r_top(n);
  std::vector<S> zbar(dim);

  for (int k = 0; k <= steps; ++k) {
    const double t = signals.time(k);

    if (!full) {
      // Snapshot features before any agent updates its broadcast.
      for (int i = 0; i < n; ++i) {
        S dis(0.0);
        bool first = true;
        for (int j : graph.neighbors(i)) {
          S d = z[i * dim] - held[j];
          dis = first ? d : dis + d;
          first = false;
        }
        features[i] = {dis, t - tau[i]};
      }
      for (int i = 0; i < n; ++i) {
        eta[i] = policy.source == ThresholdSource::kFixed ? S(policy.fixed_eta)
                                                          : S(eta_fn(i, features[i]));
        delta[i] = policy.Threshold(eta[i]);
      }
    }

    if (k > 0) {
      for (int i = 0; i < n; ++i) {
        const S message = z[i * dim];
        if (full) {
          held[i] = message;
          tau[i] = S(t);
          comm[i] = comm[i] + 1.0;
          nu[i] = S(1.0);
          if (trace) trace->events[i].push_back(t);
          continue;
        }
        err[i] = Abs(message - held[i]);
        if (!fuzzy) {
          if constexpr (kPlain) {
            const bool fired = err[i] >= delta[i];
            nu[i] = fired ? 1.0 : 0.0;
            if (fired) {
              held[i] = message;
              tau[i] = t;
              comm[i] += 1.0;
              if (trace) trace->events[i].push_back(t);
            }
          }
        } else {
          nu[i] = FuzzyWeight(err[i], delta[i], policy.alpha);
          held[i] = Blend(nu[i], message, held[i]);
          tau[i] = Blend(nu[i], S(t), tau[i]);
          comm[i] = comm[i] + nu[i];
          if (trace && Value(nu[i]) >= 0.5) trace->events[i].push_back(t);
        }
      }
    }

    // Consensus average and squared deviation.
    for (int c = 0; c < dim; ++c) {
      S acc = z[c];
      for (int i = 1; i < n; ++i) acc = acc + z[i * dim + c];
      zbar[c] = acc * (1.0 / n);
    }
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < dim; ++c) sq_sum = sq_sum + Square(zbar[c] - z[i * dim + c]);

    if (trace) {
      auto& tr = *trace;
      tr.times[k] = t;
      double dis_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = static_cast<std::size_t>(k) * n + i;
        for (int c = 0; c < dim; ++c) {
          tr.states[idx * dim + c] = Value(z[i * dim + c]);
          const double x = Value(z[i * dim + c]) - Value(zbar[c]);
          dis_sq += x * x;
        }
        tr.broadcasts[idx] = Value(held[i]);
        tr.held_error[idx] = std::abs(Value(z[i * dim]) - Value(held[i]));
        if (!full) {
          tr.eta[idx] = Value(eta[i]);
          tr.delta[idx] = Value(delta[i]);
        }
        tr.nu[idx] = k > 0 ? Value(nu[i]) : 1.0;
      }
      for (int c = 0; c < dim; ++c) tr.consensus_avg[k * dim + c] = Value(zbar[c]);
      tr.disagreement_norm[k] = std::sqrt(dis_sq);
    }

    if (k == steps) break;

    for (int i = 0; i < n; ++i) dr[i] = signals.dr(seq, i, k);
    if (protocol.kind == ProtocolKind::kLinear) {
      StepLinear<S>(std::span<S>(z), std::span<const S>(held), dr, graph,
                    protocol.kappa, h);
    } else if constexpr (kPlain) {
      for (int i = 0; i < n; ++i) r_top[i] = signals.ddr(seq, i, k);
      StepSliding(z, held, r_top, graph, protocol.gains, protocol.order, h);
    }
    if constexpr (kPlain) {
      for (double v : z)
        if (!std::isfinite(v)) throw NumericError("non-finite state at step " + std::to_string(k));
    }
  }

  RolloutTotals<S> totals;
  totals.mse = sq_sum * (h / (n * signals.horizon()));
  S total_comm = comm[0];
  for (int i = 1; i < n; ++i) total_comm = total_comm + comm[i];
  totals.comm_sum = total_comm;
  if (trace) {
    trace->mse = Value(totals.mse);
    trace->comm_count.resize(n);
    for (int i = 0; i < n; ++i) trace->comm_count[i] = Value(comm[i]);
  }
  return totals;
}

// Rollout with broadcasts refreshed at every step; the E_fc baseline.
inline RolloutResult FullCommunicationRollout(const SignalBatch& signals, int seq,
                                              const NetworkGraph& graph,
                                              const ProtocolConfig& protocol) {
  RolloutResult out;
  TriggerPolicy policy;
  policy.source = ThresholdSource::kFixed;
  Simulate<double>(signals, seq, graph, protocol, policy, Communication::kFull,
                   [](int, const std::array<double, kFeatureDim>&) { return 0.0; }, &out);
  return out;
}

// Hard- or fuzzy-mode rollout in plain arithmetic. `net` may be null when the
// policy uses a fixed eta.
inline RolloutResult EventTriggeredRollout(const SignalBatch& signals, int seq,
                                           const NetworkGraph& graph,
                                           const ProtocolConfig& protocol,
                                           const TriggerPolicy& policy,
                                           const Mlp* net) {
  if (policy.source == ThresholdSource::kLearned && !net)
    throw ConfigError("learned threshold needs network weights");
  if (net && net->input_dim() != kFeatureDim)
    throw DimensionError("network input width must be " + std::to_string(kFeatureDim));
  RolloutResult out;
  const std::uint64_t version = net ? net->version() : 0;
  Simulate<double>(signals, seq, graph, protocol, policy, Communication::kEventTriggered,
                   [&](int, const std::array<double, kFeatureDim>& f) {
                     return net->Forward(f);
                   },
                   &out);
  if (net && net->version() != version)
    throw NumericError("network parameters changed during a rollout");
  out.param_version = version;
  return out;
}

// Fuzzy rollout recorded on `tape`; network calls go through `recorder`.
inline RolloutTotals<Var> TapedFuzzyRollout(const SignalBatch& signals, int seq,
                                            const NetworkGraph& graph,
                                            const ProtocolConfig& protocol,
                                            const TriggerPolicy& policy, Tape& tape,
                                            MlpTapeRecorder& recorder,
                                            RolloutResult* trace = nullptr) {
  return Simulate<Var>(signals, seq, graph, protocol, policy, Communication::kEventTriggered,
                       [&](int, const std::array<Var, kFeatureDim>& f) {
                         return recorder.Evaluate(tape, f);
                       },
                       trace);
}

// CSV: t, z_1..z_N (first component), ||x||, ev_1..ev_N (0/1), eta_1..eta_N.
inline void WriteRolloutCsv(const RolloutResult& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  const int n = r.n_agents;
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",z_" << i;
  out << ",x_norm";
  for (int i = 1; i <= n; ++i) out << ",ev_" << i;
  for (int i = 1; i <= n; ++i) out << ",eta_" << i;
  out << "\n";
  std::vector<std::size_t> cursor(n, 0);
  char buf[32];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.10g", x);
    out << buf;
  };
  for (int k = 0; k <= r.n_steps; ++k) {
    const double t = r.times[k];
    put(t);
    for (int i = 0; i < n; ++i) out << ',', put(r.state(k, i));
    out << ',', put(r.disagreement_norm[k]);
    for (int i = 0; i < n; ++i) {
      const auto& ev = r.events[i];
      bool hit = cursor[i] < ev.size() && std::abs(ev[cursor[i]] - t) < 0.5 * r.step;
      if (hit) ++cursor[i];
      out << ',' << (hit ? 1 : 0);
    }
    for (int i = 0; i < n; ++i) out << ',', put(r.at(r.eta, k, i));
    out << "\n";
  }
}

}  // namespace nnetm

#endif  // NNETM_ROLLOUT_HPP_
