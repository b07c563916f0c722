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

#ifndef NNETM_ANALYSIS_HPP_
#define NNETM_ANALYSIS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nnetm/cost.hpp"
#include "nnetm/errors.hpp"
#include "nnetm/etm.hpp"
#include "nnetm/graph.hpp"
#include "nnetm/rollout.hpp"

namespace nnetm {

// Disagreement bound for the linear protocol under a threshold
// delta(t) <= sigma + epsilon:
//   B(t) = exp(-kappa l2 t) ||x(0)|| + (lmax / l2)(sigma + epsilon)
//          + sqrt(N) R / (kappa l2)
struct BoundReport {
  std::vector<double> bound;
  std::vector<double> actual;
  double max_violation = -std::numeric_limits<double>::infinity();
  int worst_step = 0;
  double tolerance = 0.0;
  bool violated = false;
  bool bound_monotone = true;
};

// One explicit-Euler step of slack for the held-value overshoot between grid
// points.
inline double DefaultBoundTolerance(double kappa, double lambda_max, double sigma,
                                    double epsilon, double h) {
  return kappa * lambda_max * (sigma + epsilon) * h + 1e-9;
}

inline double Theorem2Bound(double t, double x0_norm, const NetworkGraph& graph,
                            double kappa, double sigma, double epsilon, double rate_bound) {
  const double l2 = graph.lambda2(), lmax = graph.lambda_max();
  return std::exp(-kappa * l2 * t) * x0_norm + (lmax / l2) * (sigma + epsilon) +
         std::sqrt(static_cast<double>(graph.n_agents())) * rate_bound / (kappa * l2);
}

// Evaluates the bound at every grid point. A negative tolerance selects
// DefaultBoundTolerance.
inline BoundReport CheckTheorem2Bound(const RolloutResult& rollout, const NetworkGraph& graph,
                                      double kappa, double sigma, double epsilon,
                                      double rate_bound, double tolerance = -1.0) {
  if (rollout.protocol != ProtocolKind::kLinear)
    throw ConfigError("the disagreement bound applies to the linear protocol only");
  if (rollout.n_agents != graph.n_agents()) throw DimensionError("rollout/graph agent count");
  BoundReport rep;
  rep.tolerance = tolerance >= 0.0
                      ? tolerance
                      : DefaultBoundTolerance(kappa, graph.lambda_max(), sigma, epsilon,
                                              rollout.step);
  const double x0 = rollout.disagreement_norm.at(0);
  rep.bound.resize(rollout.n_steps + 1);
  rep.actual.resize(rollout.n_steps + 1);
  for (int k = 0; k <= rollout.n_steps; ++k) {
    rep.bound[k] = Theorem2Bound(rollout.times[k], x0, graph, kappa, sigma, epsilon, rate_bound);
    rep.actual[k] = rollout.disagreement_norm[k];
    const double v = rep.actual[k] - rep.bound[k];
    if (v > rep.max_violation) {
      rep.max_violation = v;
      rep.worst_step = k;
    }
    if (k > 0 && rep.bound[k] > rep.bound[k - 1]) rep.bound_monotone = false;
  }
  rep.violated = rep.max_violation > rep.tolerance;
  return rep;
}

struct Corollary1Report {
  bool delta_in_range = true;
  bool gap_ok = true;
  bool held_error_ok = true;  // hard mode only
  double min_delta = std::numeric_limits<double>::infinity();
  double max_delta = -std::numeric_limits<double>::infinity();
  double min_gap = 0.0;

  bool ok() const { return delta_in_range && gap_ok && held_error_ok; }
};

// Checks eps <= delta(t) <= sigma + eps at every step, a minimum inter-event
// gap of one grid step, and (hard mode) that the held error is below the
// threshold after every evaluation that did not fire.
inline Corollary1Report CheckCorollary1(const RolloutResult& rollout,
                                        const TriggerPolicy& policy) {
  if (rollout.communication == Communication::kFull)
    throw ConfigError("threshold checks need an event-triggered rollout");
  Corollary1Report rep;
  const double upper = policy.sigma + policy.epsilon;
  for (int k = 0; k <= rollout.n_steps; ++k) {
    for (int i = 0; i < rollout.n_agents; ++i) {
      const double d = rollout.at(rollout.delta, k, i);
      rep.min_delta = std::min(rep.min_delta, d);
      rep.max_delta = std::max(rep.max_delta, d);
      if (d < policy.epsilon || d > upper) rep.delta_in_range = false;
      if (k > 0 && rollout.mode == TriggerMode::kHard) {
        const bool fired = rollout.at(rollout.nu, k, i) == 1.0;
        const double err = rollout.at(rollout.held_error, k, i);
        if (fired ? err != 0.0 : !(err < d)) rep.held_error_ok = false;
      }
    }
  }
  const auto stats = InterEventStatistics(rollout.events, rollout.horizon);
  rep.min_gap = stats.min_gap;
  // Event times are k * h in floating point; allow for their rounding.
  rep.gap_ok = stats.min_gap >= rollout.step * (1.0 - 1e-9);
  return rep;
}

struct DistributionStats {
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

struct LambdaSummary {
  double lambda = 0.0;
  DistributionStats rel_error;
  DistributionStats comm_rate;
  std::vector<HistogramBin> rel_error_hist;
  std::vector<HistogramBin> comm_rate_hist;
};

struct SweepSummary {
  std::vector<LambdaSummary> entries;
};

namespace detail {

inline double Quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

inline DistributionStats Describe(std::vector<double> v) {
  DistributionStats s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / v.size();
  s.median = Quantile(v, 0.5);
  s.q25 = Quantile(v, 0.25);
  s.q75 = Quantile(v, 0.75);
  s.min = v.front();
  s.max = v.back();
  return s;
}

inline std::vector<HistogramBin> Histogram(const std::vector<double>& v, double lo, double hi,
                                           int bins) {
  std::vector<HistogramBin> out(bins);
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  for (int b = 0; b < bins; ++b) {
    out[b].left = lo + b * width;
    out[b].right = lo + (b + 1) * width;
  }
  for (double x : v) {
    int b = static_cast<int>(std::floor((x - lo) / width));
    out[std::clamp(b, 0, bins - 1)].count++;
  }
  return out;
}

}  // namespace detail

// Per-lambda distributions of E_r and C. Bins are shared across lambda values
// for each metric so histograms are directly comparable.
inline SweepSummary LambdaSweepSummary(
    const std::vector<std::pair<double, std::vector<CostBreakdown>>>& results, int bins = 20) {
  if (results.size() < 2) throw ConfigError("a lambda sweep needs at least two lambda values");
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  double er_lo = std::numeric_limits<double>::infinity(), er_hi = -er_lo;
  double c_lo = er_lo, c_hi = -er_lo;
  for (const auto& [lambda, costs] : results) {
    if (costs.empty()) throw ConfigError("empty result list for a lambda value");
    for (const auto& c : costs) {
      er_lo = std::min(er_lo, c.rel_error);
      er_hi = std::max(er_hi, c.rel_error);
      c_lo = std::min(c_lo, c.comm_rate);
      c_hi = std::max(c_hi, c.comm_rate);
    }
  }
  SweepSummary out;
  for (const auto& [lambda, costs] : results) {
    std::vector<double> er, cr;
    for (const auto& c : costs) {
      er.push_back(c.rel_error);
      cr.push_back(c.comm_rate);
    }
    LambdaSummary s;
    s.lambda = lambda;
    s.rel_error = detail::Describe(er);
    s.comm_rate = detail::Describe(cr);
    s.rel_error_hist = detail::Histogram(er, er_lo, er_hi, bins);
    s.comm_rate_hist = detail::Histogram(cr, c_lo, c_hi, bins);
    out.entries.push_back(std::move(s));
  }
  return out;
}

inline void WriteHistogramCsv(const SweepSummary& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "lambda,bin_left,bin_right,count,metric\n";
  char buf[128];
  for (const auto& e : summary.entries) {
    for (const auto* hist : {&e.rel_error_hist, &e.comm_rate_hist}) {
      const char* metric = hist == &e.rel_error_hist ? "E_r" : "C";
      for (const auto& b : *hist) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%zu,%s\n", e.lambda, b.left,
                      b.right, b.count, metric);
        out << buf;
      }
    }
  }
}

inline void WriteSweepStatsCsv(const SweepSummary& summary, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "lambda,metric,mean,median,q25,q75,min,max,count\n";
  char buf[256];
  for (const auto& e : summary.entries) {
    for (const auto& [metric, s] :
         {std::pair{"E_r", e.rel_error}, std::pair{"C", e.comm_rate}}) {
      std::snprintf(buf, sizeof(buf), "%.10g,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%zu\n",
                    e.lambda, metric, s.mean, s.median, s.q25, s.q75, s.min, s.max, s.count);
      out << buf;
    }
  }
}

}  // namespace nnetm

#endif  // NNETM_ANALYSIS_HPP_
