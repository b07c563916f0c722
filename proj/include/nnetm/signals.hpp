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

#ifndef NNETM_SIGNALS_HPP_
#define NNETM_SIGNALS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nnetm/errors.hpp"

namespace nnetm {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Range&) const = default;
};

// Reference signals r_i(kh) on the simulation grid for a batch of sequences,
// with analytic first and second derivatives. Immutable once generated.
class SignalBatch {
 public:
  SignalBatch() = default;
  SignalBatch(int batch_size, int n_agents, double horizon, double step)
      : batch_size_(batch_size),
        n_agents_(n_agents),
        horizon_(horizon),
        step_(step) {
    if (!(step > 0.0)) throw ConfigError("signal step must be positive");
    if (!(horizon > 0.0)) throw ConfigError("signal horizon must be positive");
    const double ratio = horizon / step;
    n_steps_ = static_cast<int>(std::llround(ratio));
    if (std::abs(ratio - n_steps_) > 1e-9 * std::max(1.0, ratio) || n_steps_ < 1)
      throw ConfigError("horizon must be an integer multiple of step");
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (n_agents < 1) throw ConfigError("signal batch needs at least 1 agent");
    const std::size_t total =
        static_cast<std::size_t>(batch_size) * (n_steps_ + 1) * n_agents;
    values_.assign(total, 0.0);
    first_.assign(total, 0.0);
    second_.assign(total, 0.0);
  }

  int batch_size() const { return batch_size_; }
  int n_agents() const { return n_agents_; }
  double horizon() const { return horizon_; }
  double step() const { return step_; }
  // K = T/h; grid points are k = 0..K.
  int n_steps() const { return n_steps_; }
  double time(int k) const { return k * step_; }
  // R = sup |dr_i/dt|
  double rate_bound() const { return rate_bound_; }
  // L = sup |d2r_i/dt2|
  double accel_bound() const { return accel_bound_; }
  std::uint64_t seed() const { return seed_; }

  double r(int seq, int agent, int k) const { return values_[Index(seq, agent, k)]; }
  double dr(int seq, int agent, int k) const { return first_[Index(seq, agent, k)]; }
  double ddr(int seq, int agent, int k) const { return second_[Index(seq, agent, k)]; }

  // Mutable access used by generators and importers.
  double& r(int seq, int agent, int k) { return values_[Index(seq, agent, k)]; }
  double& dr(int seq, int agent, int k) { return first_[Index(seq, agent, k)]; }
  double& ddr(int seq, int agent, int k) { return second_[Index(seq, agent, k)]; }

  void set_bounds(double rate, double accel) {
    rate_bound_ = rate;
    accel_bound_ = accel;
  }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  bool operator==(const SignalBatch&) const = default;

 private:
  std::size_t Index(int seq, int agent, int k) const {
    return (static_cast<std::size_t>(seq) * (n_steps_ + 1) + k) * n_agents_ +
           agent;
  }

  int batch_size_ = 0;
  int n_agents_ = 0;
  double horizon_ = 0.0;
  double step_ = 0.0;
  int n_steps_ = 0;
  double rate_bound_ = 0.0;
  double accel_bound_ = 0.0;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;
  std::vector<double> first_;
  std::vector<double> second_;
};

// r_i(t) = a_i + sin(w_i t) with a_i ~ U(offset), w_i ~ U(freq), drawn per
// agent per sequence.
inline SignalBatch GenerateSinusoidBatch(int batch_size, int n_agents,
                                         double horizon, double step,
                                         Range offset, Range freq,
                                         std::uint64_t seed) {
  if (offset.lo > offset.hi || freq.lo > freq.hi)
    throw ConfigError("signal ranges must satisfy lo <= hi");
  SignalBatch batch(batch_size, n_agents, horizon, step);
  batch.set_seed(seed);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset_dist(offset.lo, offset.hi);
  std::uniform_real_distribution<double> freq_dist(freq.lo, freq.hi);
  double max_freq = 0.0;
  for (int s = 0; s < batch_size; ++s) {
    for (int i = 0; i < n_agents; ++i) {
      const double a = offset.lo == offset.hi ? offset.lo : offset_dist(rng);
      const double w = freq.lo == freq.hi ? freq.lo : freq_dist(rng);
      max_freq = std::max(max_freq, std::abs(w));
      for (int k = 0; k <= batch.n_steps(); ++k) {
        const double t = batch.time(k);
        batch.r(s, i, k) = a + std::sin(w * t);
        batch.dr(s, i, k) = w * std::cos(w * t);
        batch.ddr(s, i, k) = -w * w * std::sin(w * t);
      }
    }
  }
  batch.set_bounds(max_freq, max_freq * max_freq);
  return batch;
}

namespace detail {

inline std::string FormatDouble(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace detail

inline std::string SequenceFileName(int seq) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seq_%05d.csv", seq);
  return buf;
}

// Writes one CSV per sequence: t, r_1..r_N, dr_1..dr_N.
inline void WriteSignalCsv(const SignalBatch& batch,
                           const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  for (int s = 0; s < batch.batch_size(); ++s) {
    const auto path = dir / SequenceFileName(s);
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "t";
    for (int i = 1; i <= batch.n_agents(); ++i) out << ",r_" << i;
    for (int i = 1; i <= batch.n_agents(); ++i) out << ",dr_" << i;
    out << "\n";
    for (int k = 0; k <= batch.n_steps(); ++k) {
      out << detail::FormatDouble(batch.time(k));
      for (int i = 0; i < batch.n_agents(); ++i)
        out << ',' << detail::FormatDouble(batch.r(s, i, k));
      for (int i = 0; i < batch.n_agents(); ++i)
        out << ',' << detail::FormatDouble(batch.dr(s, i, k));
      out << "\n";
    }
    if (!out) throw ConfigError("write failed for " + path.string());
  }
}

// Reads every seq_*.csv in `dir` (sorted by name). Second derivatives are not
// stored in the files and are rebuilt by central differences of dr.
inline SignalBatch ReadSignalCsv(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("signal directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("seq_", 0) == 0 && entry.path().extension() == ".csv")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("no seq_*.csv files in " + dir.string());

  std::vector<std::vector<std::vector<double>>> tables;
  int n_agents = -1;
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty file " + path.string());
    const auto header = detail::SplitCsv(line);
    const int cols = static_cast<int>(header.size());
    if (cols < 3 || (cols - 1) % 2 != 0 || header[0] != "t")
      throw ConfigError("bad signal header in " + path.string());
    const int n = (cols - 1) / 2;
    if (n_agents >= 0 && n != n_agents)
      throw ConfigError("agent count differs across signal files");
    n_agents = n;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = detail::SplitCsv(line);
      if (static_cast<int>(cells.size()) != cols)
        throw ConfigError("ragged row in " + path.string());
      std::vector<double> row(cols);
      for (int c = 0; c < cols; ++c) row[c] = std::stod(cells[c]);
      rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ConfigError("too few rows in " + path.string());
    if (!tables.empty() && rows.size() != tables.front().size())
      throw ConfigError("sequence lengths differ across signal files");
    tables.push_back(std::move(rows));
  }

  const auto& first = tables.front();
  const int n_steps = static_cast<int>(first.size()) - 1;
  const double horizon = first.back()[0];
  const double step = horizon / n_steps;
  SignalBatch batch(static_cast<int>(tables.size()), n_agents, horizon, step);
  double rate = 0.0, accel = 0.0;
  for (int s = 0; s < batch.batch_size(); ++s) {
    for (int k = 0; k <= n_steps; ++k) {
      for (int i = 0; i < n_agents; ++i) {
        batch.r(s, i, k) = tables[s][k][1 + i];
        batch.dr(s, i, k) = tables[s][k][1 + n_agents + i];
        rate = std::max(rate, std::abs(batch.dr(s, i, k)));
      }
    }
    for (int i = 0; i < n_agents; ++i) {
      for (int k = 0; k <= n_steps; ++k) {
        const int lo = std::max(k - 1, 0), hi = std::min(k + 1, n_steps);
        batch.ddr(s, i, k) =
            (batch.dr(s, i, hi) - batch.dr(s, i, lo)) / ((hi - lo) * step);
        accel = std::max(accel, std::abs(batch.ddr(s, i, k)));
      }
    }
  }
  batch.set_bounds(rate, accel);
  return batch;
}

}  // namespace nnetm

#endif  // NNETM_SIGNALS_HPP_
