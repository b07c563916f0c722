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

#ifndef NNETM_CONFIG_HPP_
#define NNETM_CONFIG_HPP_

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nnetm/errors.hpp"
#include "nnetm/etm.hpp"
#include "nnetm/graph.hpp"
#include "nnetm/mlp.hpp"
#include "nnetm/protocols.hpp"
#include "nnetm/signals.hpp"
#include "nnetm/training.hpp"

namespace nnetm {

struct GraphSpec {
  std::string kind = "complete";  // complete | path | ring | random-connected | edges
  int n_agents = 2;
  std::uint64_t seed = 0;
  std::vector<Edge> edges;  // kind == "edges"

  NetworkGraph Build() const {
    if (kind == "edges") return NetworkGraph(n_agents, edges);
    return MakeNamedGraph(kind, n_agents, seed);
  }
  bool operator==(const GraphSpec&) const = default;
};

struct SignalSpec {
  int batch_size = 10;
  double horizon = 10.0;
  double step = 1e-3;
  Range offset{1.0, 5.0};
  Range freq{0.0, 1.0};
  std::uint64_t seed = 1;
  std::string dir;  // when set, signals are read from CSV instead

  bool operator==(const SignalSpec&) const = default;
};

struct NetworkSpec {
  std::vector<int> layers{2, 16, 16, 1};
  std::uint64_t init_seed = 7;
  double init_bound = 0.5;
  bool zscore_features = false;
  bool operator==(const NetworkSpec&) const = default;
};

// Every experiment setting, serialized as INI sections.
struct RunConfig {
  GraphSpec graph;
  GraphSpec test_graph{"complete", 5, 0, {}};
  ProtocolConfig protocol;
  SignalSpec signals;
  SignalSpec test_signals{200, 10.0, 1e-3, {1.0, 5.0}, {0.0, 1.0}, 1001, ""};
  TriggerPolicy trigger;
  NetworkSpec network;
  TrainingConfig training;
  std::vector<double> sweep_lambdas{0.001, 0.1, 1.0};
  std::string output_dir = "out";

  // Rejects out-of-range values before any computation.
  void Validate() const {
    trigger.Validate();
    protocol.Validate();
    training.Validate();
    for (double l : sweep_lambdas)
      if (!(l >= 0.0)) throw ConfigError("sweep lambdas must be >= 0");
    for (const auto* s : {&signals, &test_signals}) {
      if (s->batch_size < 1) throw ConfigError("batch_size must be >= 1");
      if (!(s->step > 0.0)) throw ConfigError("signal step must be positive");
      if (s->offset.lo > s->offset.hi || s->freq.lo > s->freq.hi)
        throw ConfigError("signal ranges must satisfy min <= max");
    }
    if (network.layers.empty() || network.layers.front() != 2 || network.layers.back() != 1)
      throw ConfigError("network layers must start at 2 inputs and end at 1 output");
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

inline std::string Fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

template <class T>
std::string JoinList(const std::vector<T>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    if constexpr (std::is_floating_point_v<T>) out << Fmt(v[i]);
    else out << v[i];
  }
  return out.str();
}

template <class T>
std::vector<T> ParseList(const std::string& s, const std::string& key) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      if constexpr (std::is_floating_point_v<T>) out.push_back(std::stod(cell));
      else out.push_back(static_cast<T>(std::stoll(cell)));
    } catch (const std::exception&) {
      throw ConfigError("bad list entry '" + cell + "' for " + key);
    }
  }
  return out;
}

template <class T>
T Get(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
  if (!pt.get_child_optional(key)) return fallback;
  try {
    return pt.get<T>(key);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError("bad value for " + key + ": " + e.what());
  }
}

inline void PutGraph(boost::property_tree::ptree& pt, const std::string& sec,
                     const GraphSpec& g) {
  pt.put(sec + ".kind", g.kind);
  pt.put(sec + ".n_agents", g.n_agents);
  pt.put(sec + ".seed", g.seed);
  if (g.kind == "edges") {
    std::ostringstream e;
    for (std::size_t i = 0; i < g.edges.size(); ++i)
      e << (i ? "," : "") << g.edges[i].first << '-' << g.edges[i].second;
    pt.put(sec + ".edges", e.str());
  }
}

inline GraphSpec ReadGraph(const boost::property_tree::ptree& pt, const std::string& sec,
                           GraphSpec g) {
  g.kind = Get<std::string>(pt, sec + ".kind", g.kind);
  g.n_agents = Get<int>(pt, sec + ".n_agents", g.n_agents);
  g.seed = Get<std::uint64_t>(pt, sec + ".seed", g.seed);
  const auto edges = Get<std::string>(pt, sec + ".edges", "");
  if (!edges.empty()) {
    g.edges.clear();
    std::stringstream ss(edges);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto dash = cell.find('-');
      if (dash == std::string::npos) throw ConfigError("edge '" + cell + "' is not a-b");
      try {
        g.edges.emplace_back(std::stoi(cell.substr(0, dash)), std::stoi(cell.substr(dash + 1)));
      } catch (const std::exception&) {
        throw ConfigError("edge '" + cell + "' is not a-b");
      }
    }
  }
  return g;
}

inline void PutSignals(boost::property_tree::ptree& pt, const std::string& sec,
                       const SignalSpec& s) {
  pt.put(sec + ".batch_size", s.batch_size);
  pt.put(sec + ".horizon", Fmt(s.horizon));
  pt.put(sec + ".step", Fmt(s.step));
  pt.put(sec + ".offset_min", Fmt(s.offset.lo));
  pt.put(sec + ".offset_max", Fmt(s.offset.hi));
  pt.put(sec + ".freq_min", Fmt(s.freq.lo));
  pt.put(sec + ".freq_max", Fmt(s.freq.hi));
  pt.put(sec + ".seed", s.seed);
  if (!s.dir.empty()) pt.put(sec + ".dir", s.dir);
}

inline SignalSpec ReadSignals(const boost::property_tree::ptree& pt, const std::string& sec,
                              SignalSpec s) {
  s.batch_size = Get<int>(pt, sec + ".batch_size", s.batch_size);
  s.horizon = Get<double>(pt, sec + ".horizon", s.horizon);
  s.step = Get<double>(pt, sec + ".step", s.step);
  s.offset.lo = Get<double>(pt, sec + ".offset_min", s.offset.lo);
  s.offset.hi = Get<double>(pt, sec + ".offset_max", s.offset.hi);
  s.freq.lo = Get<double>(pt, sec + ".freq_min", s.freq.lo);
  s.freq.hi = Get<double>(pt, sec + ".freq_max", s.freq.hi);
  s.seed = Get<std::uint64_t>(pt, sec + ".seed", s.seed);
  s.dir = Get<std::string>(pt, sec + ".dir", s.dir);
  return s;
}

}  // namespace detail

inline boost::property_tree::ptree ToPtree(const RunConfig& c) {
  using detail::Fmt;
  boost::property_tree::ptree pt;
  detail::PutGraph(pt, "graph", c.graph);
  detail::PutGraph(pt, "test_graph", c.test_graph);

  pt.put("protocol.kind", c.protocol.kind == ProtocolKind::kLinear ? "linear" : "sliding_mode");
  pt.put("protocol.kappa", Fmt(c.protocol.kappa));
  pt.put("protocol.gains", detail::JoinList(c.protocol.gains));
  pt.put("protocol.order", c.protocol.order);
  pt.put("protocol.init", c.protocol.init == InitMode::kReference ? "reference" : "zero_sum");

  detail::PutSignals(pt, "signals", c.signals);
  detail::PutSignals(pt, "test_signals", c.test_signals);

  pt.put("trigger.sigma", Fmt(c.trigger.sigma));
  pt.put("trigger.epsilon", Fmt(c.trigger.epsilon));
  pt.put("trigger.alpha", Fmt(c.trigger.alpha));
  pt.put("trigger.mode", c.trigger.mode == TriggerMode::kHard ? "hard" : "fuzzy");
  pt.put("trigger.source", c.trigger.source == ThresholdSource::kLearned ? "learned" : "fixed");
  pt.put("trigger.fixed_eta", Fmt(c.trigger.fixed_eta));

  pt.put("network.layers", detail::JoinList(c.network.layers));
  pt.put("network.init_seed", c.network.init_seed);
  pt.put("network.init_bound", Fmt(c.network.init_bound));
  pt.put("network.feature_scaling", c.network.zscore_features ? "zscore" : "raw");

  pt.put("training.lambda", Fmt(c.training.lambda));
  pt.put("training.sweep_lambdas", detail::JoinList(c.sweep_lambdas));
  pt.put("training.learning_rate", Fmt(c.training.adam.learning_rate));
  pt.put("training.beta1", Fmt(c.training.adam.beta1));
  pt.put("training.beta2", Fmt(c.training.adam.beta2));
  pt.put("training.adam_epsilon", Fmt(c.training.adam.epsilon));
  pt.put("training.epochs", c.training.epochs);
  pt.put("training.pretrain_epochs", c.training.pretrain_epochs);
  pt.put("training.pretrain_target", Fmt(c.training.pretrain_target));
  pt.put("training.pretrain_stride", c.training.pretrain_stride);
  pt.put("training.clip_norm", Fmt(c.training.clip_norm));
  pt.put("training.checkpoint_interval", c.training.checkpoint_interval);
  pt.put("training.threads", c.training.threads);

  pt.put("output.dir", c.output_dir);
  return pt;
}

inline RunConfig FromPtree(const boost::property_tree::ptree& pt) {
  using detail::Get;
  RunConfig c;
  c.graph = detail::ReadGraph(pt, "graph", c.graph);
  c.test_graph = detail::ReadGraph(pt, "test_graph", c.test_graph);

  const auto kind = Get<std::string>(pt, "protocol.kind", "linear");
  if (kind == "linear") c.protocol.kind = ProtocolKind::kLinear;
  else if (kind == "sliding_mode") c.protocol.kind = ProtocolKind::kSlidingMode;
  else throw ConfigError("unknown protocol kind '" + kind + "'");
  c.protocol.kappa = Get<double>(pt, "protocol.kappa", c.protocol.kappa);
  const auto gains = Get<std::string>(pt, "protocol.gains", "");
  if (!gains.empty()) c.protocol.gains = detail::ParseList<double>(gains, "protocol.gains");
  c.protocol.order = Get<int>(pt, "protocol.order", c.protocol.order);
  const auto init = Get<std::string>(pt, "protocol.init", "reference");
  if (init == "reference") c.protocol.init = InitMode::kReference;
  else if (init == "zero_sum") c.protocol.init = InitMode::kZeroSum;
  else throw ConfigError("unknown protocol init '" + init + "'");

  c.signals = detail::ReadSignals(pt, "signals", c.signals);
  c.test_signals = detail::ReadSignals(pt, "test_signals", c.test_signals);

  c.trigger.sigma = Get<double>(pt, "trigger.sigma", c.trigger.sigma);
  c.trigger.epsilon = Get<double>(pt, "trigger.epsilon", c.trigger.epsilon);
  c.trigger.alpha = Get<double>(pt, "trigger.alpha", c.trigger.alpha);
  const auto mode = Get<std::string>(pt, "trigger.mode", "hard");
  if (mode == "hard") c.trigger.mode = TriggerMode::kHard;
  else if (mode == "fuzzy") c.trigger.mode = TriggerMode::kFuzzy;
  else throw ConfigError("unknown trigger mode '" + mode + "'");
  const auto source = Get<std::string>(pt, "trigger.source", "learned");
  if (source == "learned") c.trigger.source = ThresholdSource::kLearned;
  else if (source == "fixed") c.trigger.source = ThresholdSource::kFixed;
  else throw ConfigError("unknown threshold source '" + source + "'");
  c.trigger.fixed_eta = Get<double>(pt, "trigger.fixed_eta", c.trigger.fixed_eta);

  const auto layers = Get<std::string>(pt, "network.layers", "");
  if (!layers.empty()) c.network.layers = detail::ParseList<int>(layers, "network.layers");
  c.network.init_seed = Get<std::uint64_t>(pt, "network.init_seed", c.network.init_seed);
  c.network.init_bound = Get<double>(pt, "network.init_bound", c.network.init_bound);
  const auto scaling = Get<std::string>(pt, "network.feature_scaling", "raw");
  if (scaling != "raw" && scaling != "zscore")
    throw ConfigError("unknown feature scaling '" + scaling + "'");
  c.network.zscore_features = scaling == "zscore";

  auto& t = c.training;
  t.lambda = Get<double>(pt, "training.lambda", t.lambda);
  const auto lambdas = Get<std::string>(pt, "training.sweep_lambdas", "");
  if (!lambdas.empty()) c.sweep_lambdas = detail::ParseList<double>(lambdas, "training.sweep_lambdas");
  t.adam.learning_rate = Get<double>(pt, "training.learning_rate", t.adam.learning_rate);
  t.adam.beta1 = Get<double>(pt, "training.beta1", t.adam.beta1);
  t.adam.beta2 = Get<double>(pt, "training.beta2", t.adam.beta2);
  t.adam.epsilon = Get<double>(pt, "training.adam_epsilon", t.adam.epsilon);
  t.epochs = Get<int>(pt, "training.epochs", t.epochs);
  t.pretrain_epochs = Get<int>(pt, "training.pretrain_epochs", t.pretrain_epochs);
  t.pretrain_target = Get<double>(pt, "training.pretrain_target", t.pretrain_target);
  t.pretrain_stride = Get<int>(pt, "training.pretrain_stride", t.pretrain_stride);
  t.clip_norm = Get<double>(pt, "training.clip_norm", t.clip_norm);
  t.checkpoint_interval = Get<int>(pt, "training.checkpoint_interval", t.checkpoint_interval);
  t.threads = Get<int>(pt, "training.threads", t.threads);

  c.output_dir = Get<std::string>(pt, "output.dir", c.output_dir);
  return c;
}

inline std::string SerializeConfig(const RunConfig& c) {
  std::ostringstream out;
  boost::property_tree::write_ini(out, ToPtree(c));
  return out.str();
}

inline RunConfig ParseConfig(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ptree_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  RunConfig c = FromPtree(pt);
  c.Validate();
  return c;
}

inline RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str());
}

inline void SaveConfig(const RunConfig& c, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << SerializeConfig(c);
}

inline SignalBatch MakeSignals(const SignalSpec& s, int n_agents) {
  if (!s.dir.empty()) {
    SignalBatch b = ReadSignalCsv(s.dir);
    if (b.n_agents() != n_agents)
      throw ConfigError("signal files in " + s.dir + " have " + std::to_string(b.n_agents()) +
                        " agents, graph has " + std::to_string(n_agents));
    return b;
  }
  return GenerateSinusoidBatch(s.batch_size, n_agents, s.horizon, s.step, s.offset, s.freq,
                               s.seed);
}

inline Mlp MakeNetwork(const NetworkSpec& spec) {
  Mlp net(spec.layers);
  net.InitUniform(spec.init_seed, spec.init_bound);
  return net;
}

}  // namespace nnetm

#endif  // NNETM_CONFIG_HPP_
