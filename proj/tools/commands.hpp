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

#ifndef NNETM_TOOLS_COMMANDS_HPP_
#define NNETM_TOOLS_COMMANDS_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nnetm/nnetm.hpp"

namespace nnetm::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNumericFailure = 3,
  kBoundViolation = 4,
};

namespace fs = std::filesystem;

inline std::string LambdaTag(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", lambda);
  return buf;
}

inline fs::path WeightsPath(const fs::path& dir, double lambda) {
  return dir / ("weights_lambda_" + LambdaTag(lambda) + ".csv");
}

inline void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw ConfigError("cannot create directory " + dir.string());
}

// --- generate --------------------------------------------------------------

struct GenerateOptions {
  bool test_set = false;
  std::string out;  // defaults to <output_dir>/signals_{train,test}
};

inline int CmdGenerate(const RunConfig& cfg, const GenerateOptions& opt) {
  cfg.Validate();
  const auto& spec = opt.test_set ? cfg.test_signals : cfg.signals;
  const int n = opt.test_set ? cfg.test_graph.n_agents : cfg.graph.n_agents;
  SignalSpec gen = spec;
  gen.dir.clear();
  const auto batch = MakeSignals(gen, n);
  const fs::path out = opt.out.empty()
                           ? fs::path(cfg.output_dir) / (opt.test_set ? "signals_test" : "signals_train")
                           : fs::path(opt.out);
  EnsureDir(out);
  WriteSignalCsv(batch, out);
  std::cout << "wrote " << batch.batch_size() << " sequences (" << batch.n_steps() + 1
            << " rows, " << n << " agents) to " << out.string() << "\n";
  return kOk;
}

// --- pretrain / train ------------------------------------------------------

inline void WritePretrainTrace(const PretrainReport& rep, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "epoch,cost\n";
  char buf[64];
  for (std::size_t e = 0; e < rep.cost.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", e, rep.cost[e]);
    out << buf;
  }
}

inline void WriteCostTrace(const TrainReport& rep, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "epoch,cost,mean_rel_error,mean_comm_rate,grad_norm\n";
  char buf[160];
  for (const auto& r : rep.trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g\n", r.epoch, r.cost,
                  r.mean_rel_error, r.mean_comm_rate, r.grad_norm);
    out << buf;
  }
}

// Pre-trains from the configured initialization and saves pretrained.csv.
inline Mlp RunPretrain(const RunConfig& cfg, const SignalBatch& batch, const NetworkGraph& graph,
                       const fs::path& out_dir) {
  Mlp net = MakeNetwork(cfg.network);
  if (cfg.network.zscore_features)
    FitInputScaling(net, batch, graph, cfg.protocol, cfg.trigger);
  const auto rep = Pretrain(net, batch, graph, cfg.protocol, cfg.trigger, cfg.training);
  WritePretrainTrace(rep, out_dir / "pretrain_trace.csv");
  SaveMlp(net, out_dir / "pretrained.csv");
  std::cout << "pre-training: " << rep.cost.size() << " epochs, mean |eta - "
            << cfg.training.pretrain_target << "| = " << rep.final_deviation
            << (rep.converged ? "" : " (not converged)") << "\n";
  return net;
}

struct PretrainOptions {
  std::string out;
};

inline int CmdPretrain(const RunConfig& cfg, const PretrainOptions& opt) {
  cfg.Validate();
  const auto graph = cfg.graph.Build();
  const auto batch = MakeSignals(cfg.signals, graph.n_agents());
  const fs::path out = opt.out.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out);
  EnsureDir(out);
  RunPretrain(cfg, batch, graph, out);
  return kOk;
}

struct TrainOptions {
  std::optional<double> lambda;
  bool sweep = false;
  std::string init_weights;  // skip pre-training when set
  std::string out;
};

inline int CmdTrain(const RunConfig& cfg, const TrainOptions& opt) {
  cfg.Validate();
  const auto graph = cfg.graph.Build();
  const auto batch = MakeSignals(cfg.signals, graph.n_agents());
  const fs::path out = opt.out.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out);
  EnsureDir(out);

  Mlp start = opt.init_weights.empty() ? RunPretrain(cfg, batch, graph, out)
                                       : LoadMlp(opt.init_weights);
  if (start.layer_dims() != cfg.network.layers)
    throw ConfigError("initial weights do not match network.layers");

  std::vector<double> lambdas;
  if (opt.sweep) lambdas = cfg.sweep_lambdas;
  else lambdas.push_back(opt.lambda.value_or(cfg.training.lambda));

  int code = kOk;
  for (double lambda : lambdas) {
    TrainingConfig tc = cfg.training;
    tc.lambda = lambda;
    Mlp net = start;
    const std::string tag = LambdaTag(lambda);
    auto checkpoint = [&](int epoch, const Mlp& m) {
      if (tc.checkpoint_interval > 0 && (epoch + 1) % tc.checkpoint_interval == 0)
        SaveMlp(m, out / "checkpoints" /
                       ("lambda_" + tag + "_epoch_" + std::to_string(epoch + 1) + ".csv"));
    };
    const auto rep = Train(net, batch, graph, cfg.protocol, cfg.trigger, tc, checkpoint);
    WriteCostTrace(rep, out / ("cost_trace_lambda_" + tag + ".csv"));
    SaveMlp(net, WeightsPath(out, lambda));
    if (rep.aborted) {
      std::cerr << "lambda " << tag << ": " << rep.diagnostic << "\n";
      code = kNumericFailure;
      continue;
    }
    std::cout << "lambda " << tag << ": " << rep.trace.size() << " epochs";
    if (!rep.trace.empty())
      std::cout << ", final J = " << rep.trace.back().cost
                << ", mean E_r = " << rep.trace.back().mean_rel_error
                << ", mean C (fuzzy) = " << rep.trace.back().mean_comm_rate;
    std::cout << " -> " << WeightsPath(out, lambda).string() << "\n";
  }
  return code;
}

// --- evaluation -------------------------------------------------------------

struct SequenceEval {
  CostBreakdown cost;
  bool bound_checked = false;
  double bound_max_violation = 0.0;
  bool bound_violated = false;
  bool corollary_checked = false;
  Corollary1Report corollary;
};

struct PolicyEval {
  std::string label;
  std::vector<SequenceEval> rows;
  int bound_violations = 0;
  int corollary_violations = 0;

  double MeanCommRate() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.cost.comm_rate;
    return rows.empty() ? 0.0 : s / rows.size();
  }
  double MeanRelError() const {
    double s = 0.0;
    for (const auto& r : rows) s += r.cost.rel_error;
    return rows.empty() ? 0.0 : s / rows.size();
  }
};

// Hard-mode rollouts of every sequence with bound and threshold checks.
// `net` may be null for fixed-eta or full-communication evaluation.
inline PolicyEval EvaluatePolicy(const RunConfig& cfg, const NetworkGraph& graph,
                                 const SignalBatch& batch, TriggerPolicy policy, const Mlp* net,
                                 bool full_communication, double lambda, int threads,
                                 std::vector<RolloutResult>* keep = nullptr,
                                 int count = -1) {
  policy.mode = TriggerMode::kHard;
  const int n_seq = count < 0 ? batch.batch_size() : std::min(count, batch.batch_size());
  PolicyEval eval;
  eval.rows.resize(n_seq);
  if (keep) keep->assign(n_seq, {});
  detail::ParallelFor(n_seq, threads, [&](int, int s) {
    const auto base = FullCommunicationRollout(batch, s, graph, cfg.protocol);
    RolloutResult roll = full_communication
                             ? base
                             : EventTriggeredRollout(batch, s, graph, cfg.protocol, policy, net);
    SequenceEval& row = eval.rows[s];
    row.cost = ComputeCost(roll, base, lambda);
    if (cfg.protocol.kind == ProtocolKind::kLinear) {
      const auto b = CheckTheorem2Bound(roll, graph, cfg.protocol.kappa, policy.sigma,
                                        policy.epsilon, batch.rate_bound());
      row.bound_checked = true;
      row.bound_max_violation = b.max_violation;
      row.bound_violated = b.violated || !b.bound_monotone;
    }
    if (!full_communication) {
      row.corollary_checked = true;
      row.corollary = CheckCorollary1(roll, policy);
    }
    if (keep) (*keep)[s] = std::move(roll);
  });
  for (const auto& r : eval.rows) {
    eval.bound_violations += r.bound_violated;
    eval.corollary_violations += r.corollary_checked && !r.corollary.ok();
  }
  return eval;
}

inline void WriteMetricsCsv(const PolicyEval& eval, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "seq,mse,mse_fc,rel_error,comm_rate,total,lambda,bound_max_violation,bound_violated,"
         "delta_in_range,held_error_ok,min_gap,gap_ok\n";
  char buf[320];
  for (std::size_t s = 0; s < eval.rows.size(); ++s) {
    const auto& r = eval.rows[s];
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g,%.12g,%.12g,%g,%.6g,%d,%d,%d,%.6g,%d\n",
                  s, r.cost.mse, r.cost.mse_fc, r.cost.rel_error, r.cost.comm_rate,
                  r.cost.total, r.cost.lambda,
                  r.bound_checked ? r.bound_max_violation : 0.0, r.bound_violated ? 1 : 0,
                  r.corollary_checked ? r.corollary.delta_in_range : 1,
                  r.corollary_checked ? r.corollary.held_error_ok : 1,
                  r.corollary_checked ? r.corollary.min_gap : 0.0,
                  r.corollary_checked ? r.corollary.gap_ok : 1);
    out << buf;
  }
}

inline std::string SummaryLine(const PolicyEval& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-22s sequences=%zu mean_E_r=%.6g mean_C=%.6g bound_violations=%d "
                "threshold_violations=%d",
                e.label.c_str(), e.rows.size(), e.MeanRelError(), e.MeanCommRate(),
                e.bound_violations, e.corollary_violations);
  return buf;
}

inline void WriteSummary(const std::vector<PolicyEval>& evals, const RunConfig& cfg,
                         const NetworkGraph& graph, const SignalBatch& batch,
                         const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "agents=" << graph.n_agents() << " lambda2=" << graph.lambda2()
      << " lambda_max=" << graph.lambda_max() << " sequences=" << batch.batch_size()
      << " T=" << batch.horizon() << " h=" << batch.step() << " R=" << batch.rate_bound()
      << "\n";
  out << "sigma=" << cfg.trigger.sigma << " epsilon=" << cfg.trigger.epsilon
      << " kappa=" << cfg.protocol.kappa << "\n";
  if (cfg.protocol.kind == ProtocolKind::kLinear) {
    out << "asymptotic bound = "
        << Theorem2Bound(1e300, 0.0, graph, cfg.protocol.kappa, cfg.trigger.sigma,
                         cfg.trigger.epsilon, batch.rate_bound())
        << "\n";
  }
  for (const auto& e : evals) out << SummaryLine(e) << "\n";
}

struct EvaluateOptions {
  std::string weights;
  std::optional<double> fixed_eta;
  bool full_communication = false;
  std::optional<double> lambda;
  std::string signals;  // overrides test_signals.dir
  std::string out;
  int trace_seq = -1;  // also write the rollout trace of this sequence
};

inline int CmdEvaluate(const RunConfig& cfg_in, const EvaluateOptions& opt) {
  RunConfig cfg = cfg_in;
  if (!opt.signals.empty()) cfg.test_signals.dir = opt.signals;
  cfg.Validate();
  const auto graph = cfg.test_graph.Build();
  const auto batch = MakeSignals(cfg.test_signals, graph.n_agents());
  const fs::path out = opt.out.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out);
  EnsureDir(out);

  TriggerPolicy policy = cfg.trigger;
  std::optional<Mlp> net;
  std::string label;
  if (opt.full_communication) {
    label = "full-communication";
  } else if (opt.fixed_eta) {
    policy.source = ThresholdSource::kFixed;
    policy.fixed_eta = *opt.fixed_eta;
    policy.Validate();
    label = "fixed-eta-" + LambdaTag(*opt.fixed_eta);
  } else {
    if (opt.weights.empty()) throw ConfigError("evaluate needs --weights, --fixed-eta or --full");
    net = LoadMlp(opt.weights);
    if (net->layer_dims() != cfg.network.layers)
      throw ConfigError("weight file dims do not match network.layers");
    policy.source = ThresholdSource::kLearned;
    label = fs::path(opt.weights).stem().string();
  }
  const double lambda = opt.lambda.value_or(cfg.training.lambda);
  std::vector<RolloutResult> kept;
  auto eval = EvaluatePolicy(cfg, graph, batch, policy, net ? &*net : nullptr,
                             opt.full_communication, lambda, cfg.training.threads,
                             opt.trace_seq >= 0 ? &kept : nullptr);
  eval.label = label;
  WriteMetricsCsv(eval, out / ("metrics_" + label + ".csv"));
  WriteSummary({eval}, cfg, graph, batch, out / ("summary_" + label + ".txt"));
  if (opt.trace_seq >= 0) {
    if (opt.trace_seq >= static_cast<int>(kept.size()))
      throw ConfigError("trace sequence index out of range");
    WriteRolloutCsv(kept[opt.trace_seq], out / ("trace_" + label + "_seq" +
                                                 std::to_string(opt.trace_seq) + ".csv"));
  }
  std::cout << SummaryLine(eval) << "\n";
  return eval.bound_violations + eval.corollary_violations > 0 ? kBoundViolation : kOk;
}

struct SweepOptions {
  std::string weights_dir;  // defaults to output_dir
  std::string signals;
  std::string out;
  int bins = 20;
};

inline int CmdSweep(const RunConfig& cfg_in, const SweepOptions& opt) {
  RunConfig cfg = cfg_in;
  if (!opt.signals.empty()) cfg.test_signals.dir = opt.signals;
  cfg.Validate();
  const auto graph = cfg.test_graph.Build();
  const auto batch = MakeSignals(cfg.test_signals, graph.n_agents());
  const fs::path out = opt.out.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out);
  const fs::path wdir = opt.weights_dir.empty() ? fs::path(cfg.output_dir) : fs::path(opt.weights_dir);
  EnsureDir(out);

  std::vector<PolicyEval> evals;
  std::vector<std::pair<double, std::vector<CostBreakdown>>> results;
  for (double lambda : cfg.sweep_lambdas) {
    const Mlp net = LoadMlp(WeightsPath(wdir, lambda));
    TriggerPolicy policy = cfg.trigger;
    policy.source = ThresholdSource::kLearned;
    auto eval = EvaluatePolicy(cfg, graph, batch, policy, &net, false, lambda,
                               cfg.training.threads);
    eval.label = "lambda=" + LambdaTag(lambda);
    WriteMetricsCsv(eval, out / ("metrics_lambda_" + LambdaTag(lambda) + ".csv"));
    std::vector<CostBreakdown> costs;
    for (const auto& r : eval.rows) costs.push_back(r.cost);
    results.emplace_back(lambda, std::move(costs));
    std::cout << SummaryLine(eval) << "\n";
    evals.push_back(std::move(eval));
  }
  const auto summary = LambdaSweepSummary(results, opt.bins);
  WriteHistogramCsv(summary, out / "sweep_histogram.csv");
  WriteSweepStatsCsv(summary, out / "sweep_stats.csv");
  WriteSummary(evals, cfg, graph, batch, out / "sweep_summary.txt");
  int violations = 0;
  for (const auto& e : evals) violations += e.bound_violations + e.corollary_violations;
  return violations > 0 ? kBoundViolation : kOk;
}

struct CheckBoundsOptions {
  std::string weights;  // optional trained policy
  int seeds = 100;
  std::string out;
};

// Adversarial fixed thresholds (eta = 0 and eta = 1) plus an optional trained
// policy over the first `seeds` test sequences.
inline int CmdCheckBounds(const RunConfig& cfg, const CheckBoundsOptions& opt) {
  cfg.Validate();
  if (cfg.protocol.kind != ProtocolKind::kLinear)
    throw ConfigError("check-bounds needs the linear protocol");
  if (opt.seeds < 1) throw ConfigError("--seeds must be >= 1");
  const auto graph = cfg.test_graph.Build();
  SignalSpec spec = cfg.test_signals;
  if (spec.dir.empty()) spec.batch_size = std::max(spec.batch_size, opt.seeds);
  const auto batch = MakeSignals(spec, graph.n_agents());
  const fs::path out = opt.out.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out);
  EnsureDir(out);

  std::vector<PolicyEval> evals;
  for (double eta : {0.0, 1.0}) {
    TriggerPolicy p = cfg.trigger;
    p.source = ThresholdSource::kFixed;
    p.fixed_eta = eta;
    auto e = EvaluatePolicy(cfg, graph, batch, p, nullptr, false, cfg.training.lambda,
                            cfg.training.threads, nullptr, opt.seeds);
    e.label = "fixed-eta-" + LambdaTag(eta);
    evals.push_back(std::move(e));
  }
  if (!opt.weights.empty()) {
    const Mlp net = LoadMlp(opt.weights);
    TriggerPolicy p = cfg.trigger;
    p.source = ThresholdSource::kLearned;
    auto e = EvaluatePolicy(cfg, graph, batch, p, &net, false, cfg.training.lambda,
                            cfg.training.threads, nullptr, opt.seeds);
    e.label = fs::path(opt.weights).stem().string();
    evals.push_back(std::move(e));
  }
  int violations = 0;
  for (const auto& e : evals) {
    WriteMetricsCsv(e, out / ("bounds_" + e.label + ".csv"));
    std::cout << SummaryLine(e) << "\n";
    violations += e.bound_violations + e.corollary_violations;
  }
  WriteSummary(evals, cfg, graph, batch, out / "bounds_summary.txt");
  return violations > 0 ? kBoundViolation : kOk;
}

}  // namespace nnetm::cli

#endif  // NNETM_TOOLS_COMMANDS_HPP_
