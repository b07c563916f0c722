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

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nnetm/analysis.hpp"
#include "nnetm/graph.hpp"
#include "nnetm/rollout.hpp"

namespace nnetm {
namespace {

TriggerPolicy FixedPolicy(double eta) {
  TriggerPolicy p;
  p.source = ThresholdSource::kFixed;
  p.fixed_eta = eta;
  return p;
}

TEST(AnalysisTest, AsymptoticBoundOnCompleteFive) {
  const auto g = CompleteGraph(5);
  const double b = Theorem2Bound(1e9, 3.0, g, 5.0, 0.1, 0.001, 1.0);
  EXPECT_NEAR(b, 0.101 + std::sqrt(5.0) / 25.0, 1e-12);
  EXPECT_NEAR(b, 0.1904, 1e-4);
}

TEST(AnalysisTest, DefaultTolerance) {
  EXPECT_NEAR(DefaultBoundTolerance(5.0, 5.0, 0.1, 0.001, 1e-3), 25 * 0.101 * 1e-3 + 1e-9,
              1e-18);
}

TEST(AnalysisTest, DisagreementNormMatchesProjection) {
  const auto g = RandomConnectedGraph(5, 4);
  const auto sig = GenerateSinusoidBatch(1, 5, 0.5, 1e-3, {1, 5}, {0, 1}, 8);
  const auto roll = EventTriggeredRollout(sig, 0, g, ProtocolConfig{}, FixedPolicy(0.5), nullptr);
  // Oracle: ||(I - 11^T/N) z|| with Eigen.
  const Eigen::MatrixXd p =
      Eigen::MatrixXd::Identity(5, 5) - Eigen::MatrixXd::Constant(5, 5, 1.0 / 5);
  for (int k = 0; k <= roll.n_steps; k += 37) {
    Eigen::VectorXd z(5);
    for (int i = 0; i < 5; ++i) z(i) = roll.state(k, i);
    EXPECT_NEAR(roll.disagreement_norm[k], (p * z).norm(), 1e-12);
  }
}

TEST(AnalysisTest, ConsensusAtRestStaysAtRest) {
  // x(0) = 0, R = 0, threshold pinned at epsilon.
  const auto g = CompleteGraph(4);
  const auto sig = GenerateSinusoidBatch(1, 4, 1.0, 1e-3, {3, 3}, {0, 0}, 0);
  TriggerPolicy p = FixedPolicy(0.0);
  p.sigma = 0.0;
  p.epsilon = 1e-9;
  const auto roll = EventTriggeredRollout(sig, 0, g, ProtocolConfig{}, p, nullptr);
  const auto rep = CheckTheorem2Bound(roll, g, 5.0, p.sigma, p.epsilon, sig.rate_bound());
  EXPECT_FALSE(rep.violated);
  for (double a : rep.actual) EXPECT_LE(a, 1e-9 + rep.tolerance);
}

TEST(AnalysisTest, BoundHoldsForAdversarialFixedThresholds) {
  const auto g = CompleteGraph(5);
  const auto sig = GenerateSinusoidBatch(10, 5, 10.0, 1e-3, {1, 5}, {0, 1}, 77);
  for (double eta : {0.0, 1.0}) {
    const auto p = FixedPolicy(eta);
    for (int s = 0; s < sig.batch_size(); ++s) {
      const auto roll = EventTriggeredRollout(sig, s, g, ProtocolConfig{}, p, nullptr);
      const auto rep = CheckTheorem2Bound(roll, g, 5.0, p.sigma, p.epsilon, sig.rate_bound());
      EXPECT_FALSE(rep.violated) << "eta " << eta << " seq " << s << " excess "
                                 << rep.max_violation;
      EXPECT_TRUE(rep.bound_monotone);
      const auto c1 = CheckCorollary1(roll, p);
      EXPECT_TRUE(c1.ok());
      EXPECT_DOUBLE_EQ(c1.min_delta, p.Threshold(eta));
      EXPECT_DOUBLE_EQ(c1.max_delta, p.Threshold(eta));
    }
  }
}

TEST(AnalysisTest, ViolationIsDetected) {
  const auto g = CompleteGraph(3);
  const auto sig = GenerateSinusoidBatch(1, 3, 1.0, 1e-2, {1, 5}, {0, 1}, 1);
  auto roll = EventTriggeredRollout(sig, 0, g, ProtocolConfig{}, FixedPolicy(1.0), nullptr);
  roll.disagreement_norm[50] += 10.0;
  const auto rep = CheckTheorem2Bound(roll, g, 5.0, 0.1, 0.001, sig.rate_bound());
  EXPECT_TRUE(rep.violated);
  EXPECT_EQ(rep.worst_step, 50);
}

TEST(AnalysisTest, BoundRejectsSlidingMode) {
  const auto g = CompleteGraph(3);
  const auto sig = GenerateSinusoidBatch(1, 3, 0.1, 1e-2, {1, 5}, {0, 1}, 1);
  ProtocolConfig sm;
  sm.kind = ProtocolKind::kSlidingMode;
  const auto roll = FullCommunicationRollout(sig, 0, g, sm);
  EXPECT_THROW(CheckTheorem2Bound(roll, g, 5.0, 0.1, 0.001, 1.0), ConfigError);
}

TEST(AnalysisTest, CorollaryDetectsBadThresholdsAndGaps) {
  const auto g = CompleteGraph(3);
  const auto sig = GenerateSinusoidBatch(1, 3, 1.0, 1e-2, {1, 5}, {0, 1}, 1);
  const auto p = FixedPolicy(0.5);
  auto roll = EventTriggeredRollout(sig, 0, g, ProtocolConfig{}, p, nullptr);
  ASSERT_TRUE(CheckCorollary1(roll, p).ok());
  auto bad = roll;
  bad.delta[7] = 0.5;
  EXPECT_FALSE(CheckCorollary1(bad, p).delta_in_range);
  bad = roll;
  bad.events[0] = {0.0, 0.5, 0.5 + 0.004};
  EXPECT_FALSE(CheckCorollary1(bad, p).gap_ok);
  EXPECT_THROW(CheckCorollary1(FullCommunicationRollout(sig, 0, g, ProtocolConfig{}), p),
               ConfigError);
}

std::vector<CostBreakdown> Costs(std::vector<std::pair<double, double>> er_c) {
  std::vector<CostBreakdown> out;
  for (auto [er, c] : er_c) {
    CostBreakdown b;
    b.rel_error = er;
    b.comm_rate = c;
    out.push_back(b);
  }
  return out;
}

TEST(AnalysisTest, SweepSummaryStatistics) {
  const auto a = Costs({{0.1, 0.02}, {0.3, 0.04}, {0.2, 0.03}, {0.4, 0.05}});
  const auto b = Costs({{0.5, 0.01}, {0.7, 0.01}, {0.6, 0.01}, {0.8, 0.01}});
  const auto s = LambdaSweepSummary({{0.001, a}, {1.0, b}}, 4);
  ASSERT_EQ(s.entries.size(), 2u);
  EXPECT_NEAR(s.entries[0].rel_error.mean, 0.25, 1e-15);
  EXPECT_NEAR(s.entries[0].rel_error.median, 0.25, 1e-15);
  EXPECT_NEAR(s.entries[0].rel_error.q25, 0.175, 1e-15);
  EXPECT_NEAR(s.entries[0].comm_rate.max, 0.05, 1e-15);
  for (const auto& e : s.entries) {
    std::size_t mass = 0, cmass = 0;
    for (const auto& bin : e.rel_error_hist) mass += bin.count;
    for (const auto& bin : e.comm_rate_hist) cmass += bin.count;
    EXPECT_EQ(mass, 4u);
    EXPECT_EQ(cmass, 4u);
  }
  // Shared bins across lambda.
  EXPECT_EQ(s.entries[0].rel_error_hist.front().left, s.entries[1].rel_error_hist.front().left);
  EXPECT_EQ(s.entries[0].rel_error_hist.back().right, s.entries[1].rel_error_hist.back().right);
  EXPECT_GT(s.entries[0].comm_rate.mean, s.entries[1].comm_rate.mean);
}

TEST(AnalysisTest, IdenticalResultsGiveIdenticalDistributions) {
  const auto a = Costs({{0.1, 0.02}, {0.3, 0.04}, {0.2, 0.03}});
  const auto s = LambdaSweepSummary({{0.1, a}, {1.0, a}});
  EXPECT_EQ(s.entries[0].rel_error.mean, s.entries[1].rel_error.mean);
  EXPECT_EQ(s.entries[0].comm_rate.q75, s.entries[1].comm_rate.q75);
  for (std::size_t b = 0; b < s.entries[0].comm_rate_hist.size(); ++b)
    EXPECT_EQ(s.entries[0].comm_rate_hist[b].count, s.entries[1].comm_rate_hist[b].count);
}

TEST(AnalysisTest, SweepSummaryErrors) {
  const auto a = Costs({{0.1, 0.02}});
  EXPECT_THROW(LambdaSweepSummary({{0.1, a}}), ConfigError);
  EXPECT_THROW(LambdaSweepSummary({{0.1, a}, {1.0, {}}}), ConfigError);
}

TEST(AnalysisTest, HistogramCsvColumns) {
  const auto a = Costs({{0.1, 0.02}, {0.3, 0.04}});
  const auto s = LambdaSweepSummary({{0.1, a}, {1.0, a}}, 3);
  const auto path = std::filesystem::temp_directory_path() / "nnetm_hist.csv";
  WriteHistogramCsv(s, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "lambda,bin_left,bin_right,count,metric");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2 * 2 * 3);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace nnetm
