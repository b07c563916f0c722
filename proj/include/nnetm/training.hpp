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

#ifndef NNETM_TRAINING_HPP_
#define NNETM_TRAINING_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "nnetm/adam.hpp"
#include "nnetm/autodiff.hpp"
#include "nnetm/cost.hpp"
#include "nnetm/errors.hpp"
#include "nnetm/etm.hpp"
#include "nnetm/graph.hpp"
#include "nnetm/mlp.hpp"
#include "nnetm/protocols.hpp"
#include "nnetm/rollout.hpp"
#include "nnetm/signals.hpp"

namespace nnetm {

struct TrainingConfig {
  double lambda = 0.1;
  AdamConfig adam;
  int epochs = 150;
  int pretrain_epochs = 200;
  double pretrain_target = 0.5;
  // Pre-training keeps every stride-th step of each rollout as a sample.
  int pretrain_stride = 10;
  double clip_norm = 10.0;
  int threads = 1;
  int checkpoint_interval = 0;  // 0 disables checkpoints

  bool operator==(const TrainingConfig&) const = default;

  void Validate() const {
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
    if (epochs < 0 || pretrain_epochs < 0) throw ConfigError("epoch counts must be >= 0");
    if (pretrain_stride < 1) throw ConfigError("pretrain stride must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;
  double cost = 0.0;  // sum of J over the batch
  double mean_rel_error = 0.0;
  double mean_comm_rate = 0.0;
  double grad_norm = 0.0;  // before clipping
};

struct TrainReport {
  std::vector<EpochRecord> trace;
  bool aborted = false;
  std::string diagnostic;
};

struct PretrainReport {
  std::vector<double> cost;  // mean (eta - target)^2 per epoch
  double final_deviation = 0.0;  // mean |eta - target| after the last update
  bool converged = false;
};

namespace detail {

// Runs fn(seq) for seq in [0, count) on `threads` workers. Each worker handles
// a contiguous block, so per-sequence outputs are independent of scheduling.
inline void ParallelFor(int count, int threads, const std::function<void(int, int)>& fn) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int s = 0; s < count; ++s) fn(0, s);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int s = w; s < count; s += threads) fn(w, s);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

// E_fc for every sequence in the batch. Policy independent, computed once.
inline std::vector<double> BaselineErrors(const SignalBatch& batch, const NetworkGraph& graph,
                                          const ProtocolConfig& protocol, int threads = 1) {
  std::vector<double> out(batch.batch_size());
  detail::ParallelFor(batch.batch_size(), threads, [&](int, int s) {
    out[s] = MeanSquareError(FullCommunicationRollout(batch, s, graph, protocol));
  });
  return out;
}

// Value and parameter gradient of J for one sequence under the fuzzy trigger.
struct SequenceGradient {
  double cost = 0.0;
  double rel_error = 0.0;
  double comm_rate = 0.0;
  std::vector<double> grad;
};

inline SequenceGradient FuzzyCostGradient(const Mlp& net, const SignalBatch& batch, int seq,
                                          const NetworkGraph& graph,
                                          const ProtocolConfig& protocol,
                                          const TriggerPolicy& policy, double mse_fc,
                                          double lambda, Tape& tape,
                                          MlpTapeRecorder& recorder) {
  tape.Clear();
  recorder.Clear();
  auto totals = TapedFuzzyRollout(batch, seq, graph, protocol, policy, tape, recorder);
  Var comm = CommunicationRate(totals.comm_sum, graph.n_agents(), batch.step(), batch.horizon());
  Var rel = RelativeError(totals.mse, mse_fc);
  Var cost = TotalCost(rel, comm, lambda);
  tape.Gradient(cost);
  SequenceGradient out;
  out.cost = cost.value();
  out.rel_error = rel.value();
  out.comm_rate = comm.value();
  out.grad = recorder.gradient();
  return out;
}

// Plain-arithmetic J of the fuzzy rollout; used by finite-difference checks.
inline double FuzzyCost(const Mlp& net, const SignalBatch& batch, int seq,
                        const NetworkGraph& graph, const ProtocolConfig& protocol,
                        const TriggerPolicy& policy, double mse_fc, double lambda) {
  auto totals = Simulate<double>(batch, seq, graph, protocol, policy,
                                 Communication::kEventTriggered,
                                 [&](int, const std::array<double, kFeatureDim>& f) {
                                   return net.Forward(f);
                                 },
                                 nullptr);
  const double comm =
      CommunicationRate(totals.comm_sum, graph.n_agents(), batch.step(), batch.horizon());
  return TotalCost(RelativeError(totals.mse, mse_fc), comm, lambda);
}

// Pre-training: fit eta to a constant target on the features visited by
// hard-mode rollouts under the current weights.
inline PretrainReport Pretrain(Mlp& net, const SignalBatch& batch, const NetworkGraph& graph,
                               const ProtocolConfig& protocol, TriggerPolicy policy,
                               const TrainingConfig& cfg) {
  cfg.Validate();
  policy.mode = TriggerMode::kHard;
  policy.source = ThresholdSource::kLearned;
  PretrainReport report;
  AdamState state(net.size());
  const int stride = cfg.pretrain_stride;

  auto collect = [&]() {
    std::vector<std::vector<std::array<double, kFeatureDim>>> per_seq(batch.batch_size());
    detail::ParallelFor(batch.batch_size(), cfg.threads, [&](int, int s) {
      int calls = 0;
      auto& samples = per_seq[s];
      Simulate<double>(batch, s, graph, protocol, policy, Communication::kEventTriggered,
                       [&](int, const std::array<double, kFeatureDim>& f) {
                         if (calls++ % stride == 0) samples.push_back(f);
                         return net.Forward(f);
                       },
                       nullptr);
    });
    std::vector<std::array<double, kFeatureDim>> all;
    for (auto& v : per_seq) all.insert(all.end(), v.begin(), v.end());
    return all;
  };

  std::vector<double> cache(net.cache_size()), grad(net.size());
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const auto samples = collect();
    if (samples.empty()) throw ConfigError("pre-training batch produced no samples");
    std::fill(grad.begin(), grad.end(), 0.0);
    double cost = 0.0;
    const double inv = 1.0 / samples.size();
    for (const auto& f : samples) {
      const double eta = net.Forward(f, cache.data());
      const double diff = eta - cfg.pretrain_target;
      cost += diff * diff * inv;
      net.Backward(cache.data(), 2.0 * diff * inv, grad, {});
    }
    report.cost.push_back(cost);
    if (!std::isfinite(cost)) break;
    ClipGlobalNorm(grad, cfg.clip_norm);
    AdamStep(net, grad, state, cfg.adam);
  }

  const auto samples = collect();
  double dev = 0.0;
  for (const auto& f : samples) dev += std::abs(net.Forward(f) - cfg.pretrain_target);
  report.final_deviation = samples.empty() ? 0.0 : dev / samples.size();
  report.converged = report.final_deviation < 0.01;
  return report;
}

// Main training loop: per epoch, fuzzy rollouts of every sequence, J summed
// over the batch, one gradient step. `on_epoch(epoch, net)` runs after each
// completed update (checkpointing).
inline TrainReport Train(Mlp& net, const SignalBatch& batch, const NetworkGraph& graph,
                         const ProtocolConfig& protocol, TriggerPolicy policy,
                         const TrainingConfig& cfg,
                         const std::function<void(int, const Mlp&)>& on_epoch = {}) {
  cfg.Validate();
  policy.mode = TriggerMode::kFuzzy;
  policy.source = ThresholdSource::kLearned;
  TrainReport report;
  const auto baseline = BaselineErrors(batch, graph, protocol, cfg.threads);
  AdamState state(net.size());

  const int workers = std::max(1, std::min(cfg.threads, batch.batch_size()));
  std::vector<Tape> tapes(workers);
  std::vector<MlpTapeRecorder> recorders(workers, MlpTapeRecorder(net));
  std::vector<SequenceGradient> results(batch.batch_size());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    try {
      detail::ParallelFor(batch.batch_size(), workers, [&](int w, int s) {
        results[s] = FuzzyCostGradient(net, batch, s, graph, protocol, policy, baseline[s],
                                       cfg.lambda, tapes[w], recorders[w]);
      });
    } catch (const NumericError& e) {
      report.aborted = true;
      report.diagnostic = "numeric failure at epoch " + std::to_string(epoch) + ": " + e.what() +
                          "; parameters kept from the previous epoch";
      break;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    std::vector<double> grad(net.size(), 0.0);
    for (const auto& r : results) {  // fixed sequence order
      rec.cost += r.cost;
      rec.mean_rel_error += r.rel_error / batch.batch_size();
      rec.mean_comm_rate += r.comm_rate / batch.batch_size();
      for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += r.grad[p];
    }
    bool finite = std::isfinite(rec.cost);
    for (double g : grad) finite = finite && std::isfinite(g);
    if (!finite) {
      report.aborted = true;
      report.diagnostic = "non-finite cost or gradient at epoch " + std::to_string(epoch) +
                          "; parameters kept from the previous epoch";
      break;
    }
    rec.grad_norm = ClipGlobalNorm(grad, cfg.clip_norm);
    AdamStep(net, grad, state, cfg.adam);
    report.trace.push_back(rec);
    if (on_epoch) on_epoch(epoch, net);
  }
  return report;
}

// Mean and standard deviation of the features seen by fixed-threshold
// hard-mode rollouts; used for optional input standardization.
inline void FitInputScaling(Mlp& net, const SignalBatch& batch, const NetworkGraph& graph,
                            const ProtocolConfig& protocol, TriggerPolicy policy) {
  policy.mode = TriggerMode::kHard;
  policy.source = ThresholdSource::kLearned;
  std::array<double, kFeatureDim> sum{}, sq{};
  double count = 0.0;
  for (int s = 0; s < batch.batch_size(); ++s) {
    Simulate<double>(batch, s, graph, protocol, policy, Communication::kEventTriggered,
                     [&](int, const std::array<double, kFeatureDim>& f) {
                       for (int d = 0; d < kFeatureDim; ++d) {
                         sum[d] += f[d];
                         sq[d] += f[d] * f[d];
                       }
                       count += 1.0;
                       return 0.5;
                     },
                     nullptr);
  }
  std::vector<double> mean(kFeatureDim), scale(kFeatureDim);
  for (int d = 0; d < kFeatureDim; ++d) {
    mean[d] = sum[d] / count;
    const double var = std::max(sq[d] / count - mean[d] * mean[d], 0.0);
    scale[d] = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
  }
  net.SetInputScaling(mean, scale);
}

}  // namespace nnetm

#endif  // NNETM_TRAINING_HPP_
