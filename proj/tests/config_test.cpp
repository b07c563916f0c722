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

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "nnetm/config.hpp"

namespace nnetm {
namespace {

TEST(ConfigTest, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_TRUE(ParseConfig(SerializeConfig(c)) == c);
}

TEST(ConfigTest, NonDefaultRoundTrip) {
  RunConfig c;
  c.graph = {"edges", 4, 0, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}};
  c.test_graph = {"random-connected", 7, 123, {}};
  c.protocol.kind = ProtocolKind::kSlidingMode;
  c.protocol.gains = {1.5, 3.25};
  c.protocol.init = InitMode::kZeroSum;
  c.signals.horizon = 2.5;
  c.signals.step = 0.005;
  c.signals.offset = {0.1, 0.30000000000000004};
  c.signals.seed = 18446744073709551615ull;
  c.test_signals.dir = "some/dir";
  c.trigger.sigma = 0.2;
  c.trigger.epsilon = 1e-7;
  c.trigger.alpha = 1e4;
  c.trigger.mode = TriggerMode::kFuzzy;
  c.trigger.source = ThresholdSource::kFixed;
  c.trigger.fixed_eta = 0.25;
  c.network.layers = {2, 8, 1};
  c.network.zscore_features = true;
  c.training.lambda = 1.0 / 3.0;
  c.training.epochs = 3;
  c.training.threads = 4;
  c.training.checkpoint_interval = 10;
  c.sweep_lambdas = {0.0, 0.5};
  c.output_dir = "elsewhere";
  const RunConfig back = ParseConfig(SerializeConfig(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.graph.Build().edges().size(), 4u);
}

TEST(ConfigTest, FileRoundTrip) {
  RunConfig c;
  c.training.lambda = 0.001;
  const auto path = std::filesystem::temp_directory_path() / "nnetm_cfg.ini";
  SaveConfig(c, path);
  EXPECT_TRUE(LoadConfig(path) == c);
  std::filesystem::remove(path);
  EXPECT_THROW(LoadConfig(path), ConfigError);
}

TEST(ConfigTest, RejectsInvalidTriggerParameters) {
  EXPECT_THROW(ParseConfig("[trigger]\nsigma = -0.1\n"), ConfigError);
  EXPECT_THROW(ParseConfig("[trigger]\nepsilon = 0\n"), ConfigError);
  EXPECT_THROW(ParseConfig("[trigger]\nepsilon = -1e-3\n"), ConfigError);
  EXPECT_NO_THROW(ParseConfig("[trigger]\nsigma = 0\n"));
}

TEST(ConfigTest, RejectsMalformedValues) {
  EXPECT_THROW(ParseConfig("[trigger]\nmode = soft\n"), ConfigError);
  EXPECT_THROW(ParseConfig("[protocol]\nkind = quadratic\n"), ConfigError);
  EXPECT_THROW(ParseConfig("[trigger]\nsigma = abc\n"), ConfigError);
  EXPECT_THROW(ParseConfig("[signals]\nbatch_size = 0\n"), ConfigError);
  EXPECT_THROW(ParseConfig("[network]\nlayers = 3,4,1\n"), ConfigError);
  EXPECT_THROW(ParseConfig("[graph]\nkind = edges\nn_agents = 3\nedges = 0-1,1_2\n"),
               ConfigError);
  EXPECT_THROW(ParseConfig("[training]\nsweep_lambdas = 0.1,x\n"), ConfigError);
  EXPECT_THROW(ParseConfig("not an ini [[\n"), ConfigError);
}

TEST(ConfigTest, MakeSignalsUsesGraphSize) {
  RunConfig c;
  c.signals.batch_size = 2;
  c.signals.horizon = 0.1;
  const auto b = MakeSignals(c.signals, 3);
  EXPECT_EQ(b.n_agents(), 3);
  EXPECT_EQ(b.batch_size(), 2);
  EXPECT_EQ(b.n_steps(), 100);
}

}  // namespace
}  // namespace nnetm
