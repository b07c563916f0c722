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

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using namespace nnetm;
using namespace nnetm::cli;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-triggered consensus with a learned send-on-delta threshold"};
  app.require_subcommand(1);
  std::string config_path;
  int threads = 0;
  app.add_option("-c,--config", config_path, "Run config (INI)")->required();
  app.add_option("--threads", threads, "Worker threads (1 = bit-reproducible)");

  auto* generate = app.add_subcommand("generate", "Write reference-signal batches as CSV");
  GenerateOptions gen;
  generate->add_flag("--test", gen.test_set, "Generate the test batch instead of training");
  generate->add_option("-o,--out", gen.out, "Output directory");

  auto* pretrain = app.add_subcommand("pretrain", "Fit the network to a constant eta");
  PretrainOptions pre;
  pretrain->add_option("-o,--out", pre.out, "Output directory");

  auto* train = app.add_subcommand("train", "Pre-train, then train with the fuzzy trigger");
  TrainOptions tr;
  double lambda_opt = 0.0;
  auto* lambda_flag = train->add_option("--lambda", lambda_opt, "Communication weight");
  train->add_flag("--sweep", tr.sweep, "Train once per training.sweep_lambdas value");
  train->add_option("--init-weights", tr.init_weights, "Start from these weights, skip pre-training");
  train->add_option("-o,--out", tr.out, "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "Hard-mode evaluation on the test batch");
  EvaluateOptions ev;
  double fixed_eta = 0.0, eval_lambda = 0.0;
  evaluate->add_option("-w,--weights", ev.weights, "Weight file");
  auto* fixed_flag = evaluate->add_option("--fixed-eta", fixed_eta, "Constant eta, no network");
  evaluate->add_flag("--full", ev.full_communication, "Full communication baseline");
  auto* eval_lambda_flag = evaluate->add_option("--lambda", eval_lambda, "Lambda used for J");
  evaluate->add_option("--signals", ev.signals, "Directory of test signal CSVs");
  evaluate->add_option("--trace-seq", ev.trace_seq, "Also export the trace of this sequence");
  evaluate->add_option("-o,--out", ev.out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Evaluate every sweep lambda and summarize");
  SweepOptions sw;
  sweep->add_option("--weights-dir", sw.weights_dir, "Directory with weights_lambda_*.csv");
  sweep->add_option("--signals", sw.signals, "Directory of test signal CSVs");
  sweep->add_option("--bins", sw.bins, "Histogram bins");
  sweep->add_option("-o,--out", sw.out, "Output directory");

  auto* bounds = app.add_subcommand("check-bounds", "Disagreement bound and threshold checks");
  CheckBoundsOptions cb;
  bounds->add_option("-w,--weights", cb.weights, "Optional trained weights");
  bounds->add_option("--seeds", cb.seeds, "Number of test sequences");
  bounds->add_option("-o,--out", cb.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    RunConfig cfg = LoadConfig(config_path);
    if (threads > 0) cfg.training.threads = threads;
    if (generate->parsed()) return CmdGenerate(cfg, gen);
    if (pretrain->parsed()) return CmdPretrain(cfg, pre);
    if (train->parsed()) {
      if (*lambda_flag) tr.lambda = lambda_opt;
      return CmdTrain(cfg, tr);
    }
    if (evaluate->parsed()) {
      if (*fixed_flag) ev.fixed_eta = fixed_eta;
      if (*eval_lambda_flag) ev.lambda = eval_lambda;
      return CmdEvaluate(cfg, ev);
    }
    if (sweep->parsed()) return CmdSweep(cfg, sw);
    if (bounds->parsed()) return CmdCheckBounds(cfg, cb);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericFailure;
  }
  return kConfigError;
}
