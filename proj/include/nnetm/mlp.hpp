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

#ifndef NNETM_MLP_HPP_
#define NNETM_MLP_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nnetm/autodiff.hpp"
#include "nnetm/errors.hpp"

namespace nnetm {

// Multilayer perceptron eta = sigmoid(W_L relu(... relu(W_1 x + b_1)) + b_L)
// shared by every agent. All weights and biases live in one flat vector:
// layer 0 weights (row-major, out x in), layer 0 biases, layer 1 weights, ...
// Inputs are standardized as (f - input_mean) / input_scale before layer 0;
// the default is the identity map.
class Mlp {
 public:
  // Logits are clipped here so the output stays strictly inside (0, 1).
  static constexpr double kLogitClip = 30.0;

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
    if (dims_.size() < 2) throw ConfigError("network needs at least 2 layers");
    for (int d : dims_)
      if (d < 1) throw ConfigError("layer widths must be positive");
    if (dims_.back() != 1) throw ConfigError("network output layer must have width 1");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
      bias_offset_.push_back(offset);
      offset += dims_[l + 1];
    }
    params_.assign(offset, 0.0);
    input_mean_.assign(dims_[0], 0.0);
    input_scale_.assign(dims_[0], 1.0);
  }

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  std::size_t n_layers() const { return dims_.size() - 1; }
  std::size_t size() const { return params_.size(); }

  std::span<const double> params() const { return params_; }
  // Writable view. Any write through it must be followed by Touch().
  std::span<double> mutable_params() { return params_; }
  void Touch() { ++version_; }
  std::uint64_t version() const { return version_; }

  double weight(std::size_t l, int out, int in) const {
    return params_[weight_offset_[l] + static_cast<std::size_t>(out) * dims_[l] + in];
  }
  double bias(std::size_t l, int out) const { return params_[bias_offset_[l] + out]; }
  std::size_t weight_offset(std::size_t l) const { return weight_offset_[l]; }
  std::size_t bias_offset(std::size_t l) const { return bias_offset_[l]; }

  const std::vector<double>& input_mean() const { return input_mean_; }
  const std::vector<double>& input_scale() const { return input_scale_; }
  void SetInputScaling(std::vector<double> mean, std::vector<double> scale) {
    if (mean.size() != input_mean_.size() || scale.size() != input_scale_.size())
      throw DimensionError("input scaling size");
    for (double s : scale)
      if (!(s > 0.0)) throw ConfigError("input scale must be positive");
    input_mean_ = std::move(mean);
    input_scale_ = std::move(scale);
    Touch();
  }

  // Floats needed per recorded forward pass.
  std::size_t cache_size() const {
    std::size_t n = dims_[0];
    for (std::size_t l = 1; l < dims_.size(); ++l) n += dims_[l];
    return n;
  }

  // Forward pass. When `cache` is non-null it receives the scaled input and
  // every layer's pre-activation (cache_size() entries).
  double Forward(std::span<const double> features, double* cache = nullptr) const {
    if (features.size() != static_cast<std::size_t>(dims_[0]))
      throw DimensionError("feature vector has " + std::to_string(features.size()) +
                           " entries, network expects " + std::to_string(dims_[0]));
    for (double f : features)
      if (!std::isfinite(f)) throw NumericError("non-finite network input");

    thread_local std::vector<double> a, next;
    a.resize(dims_[0]);
    for (int i = 0; i < dims_[0]; ++i)
      a[i] = (features[i] - input_mean_[i]) / input_scale_[i];
    if (cache) std::copy(a.begin(), a.end(), cache), cache += dims_[0];

    double logit = 0.0;
    for (std::size_t l = 0; l < n_layers(); ++l) {
      const int in = dims_[l], out = dims_[l + 1];
      next.resize(out);
      const double* w = params_.data() + weight_offset_[l];
      const double* b = params_.data() + bias_offset_[l];
      for (int o = 0; o < out; ++o) {
        double acc = b[o];
        const double* row = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += row[i] * a[i];
        next[o] = acc;
      }
      if (cache) std::copy(next.begin(), next.end(), cache), cache += out;
      if (l + 1 == n_layers()) {
        logit = next[0];
      } else {
        for (double& v : next) v = std::max(v, 0.0);
        std::swap(a, next);
      }
    }
    return Sigmoid(std::clamp(logit, -kLogitClip, kLogitClip));
  }

  // Reverse pass for one recorded forward call. Accumulates dOut/dparams
  // scaled by `grad_output` into `param_grad` and writes dOut/dfeatures into
  // `input_grad` (may be empty).
  void Backward(const double* cache, double grad_output,
                std::span<double> param_grad, std::span<double> input_grad) const {
    if (param_grad.size() != params_.size())
      throw DimensionError("gradient buffer does not match parameter count");
    // Offsets of each layer's pre-activations inside the cache.
    thread_local std::vector<std::size_t> pre_offset;
    pre_offset.resize(dims_.size());
    pre_offset[0] = 0;  // scaled input
    for (std::size_t l = 1; l < dims_.size(); ++l)
      pre_offset[l] = pre_offset[l - 1] + dims_[l - 1];

    const double logit = cache[pre_offset.back()];
    thread_local std::vector<double> delta, prev;
    delta.assign(1, 0.0);
    if (std::abs(logit) < kLogitClip) {
      const double s = Sigmoid(logit);
      delta[0] = grad_output * s * (1.0 - s);
    }

    for (std::size_t l = n_layers(); l-- > 0;) {
      const int in = dims_[l], out = dims_[l + 1];
      const double* a_prev = cache + pre_offset[l];
      const bool hidden_input = l > 0;
      double* gw = param_grad.data() + weight_offset_[l];
      double* gb = param_grad.data() + bias_offset_[l];
      const double* w = params_.data() + weight_offset_[l];
      prev.assign(in, 0.0);
      for (int o = 0; o < out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        gb[o] += d;
        double* grow = gw + static_cast<std::size_t>(o) * in;
        const double* wrow = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) {
          const double act = hidden_input ? std::max(a_prev[i], 0.0) : a_prev[i];
          grow[i] += d * act;
          prev[i] += d * wrow[i];
        }
      }
      if (hidden_input)
        for (int i = 0; i < in; ++i)
          if (a_prev[i] <= 0.0) prev[i] = 0.0;
      std::swap(delta, prev);
    }
    if (!input_grad.empty()) {
      for (int i = 0; i < dims_[0]; ++i) input_grad[i] = delta[i] / input_scale_[i];
    }
  }

  // Uniform init in [-bound, bound], deterministic for a seed.
  void InitUniform(std::uint64_t seed, double bound = 0.5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& p : params_) p = dist(rng);
    Touch();
  }

  bool SameShape(const Mlp& other) const { return dims_ == other.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  std::vector<double> params_;
  std::vector<double> input_mean_;
  std::vector<double> input_scale_;
  std::uint64_t version_ = 0;
};

// Records network evaluations on a tape and accumulates the shared parameter
// gradient during the reverse sweep. One recorder per tape.
class MlpTapeRecorder : public TapeFunction {
 public:
  explicit MlpTapeRecorder(const Mlp& net)
      : net_(&net), grad_(net.size(), 0.0), version_(net.version()) {}

  Var Evaluate(Tape& tape, std::span<const Var> inputs) {
    if (net_->version() != version_)
      throw NumericError("network parameters changed during a recorded rollout");
    const std::size_t record = offsets_.size();
    offsets_.push_back(cache_.size());
    cache_.resize(cache_.size() + net_->cache_size());
    features_.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) features_[i] = inputs[i].value();
    const double eta = net_->Forward(features_, cache_.data() + offsets_.back());
    ++calls_;
    return tape.External(this, record, inputs, eta);
  }

  void Backward(std::size_t record, double grad_output,
                std::span<double> grad_inputs) override {
    net_->Backward(cache_.data() + offsets_[record], grad_output, grad_, grad_inputs);
  }

  const std::vector<double>& gradient() const { return grad_; }
  std::size_t calls() const { return calls_; }
  std::uint64_t version() const { return version_; }

  void Clear() {
    cache_.clear();
    offsets_.clear();
    std::fill(grad_.begin(), grad_.end(), 0.0);
    calls_ = 0;
    version_ = net_->version();
  }

 private:
  const Mlp* net_;
  std::vector<double> cache_;
  std::vector<std::size_t> offsets_;
  std::vector<double> grad_;
  std::vector<double> features_;
  std::size_t calls_ = 0;
  std::uint64_t version_;
};

// Weight file (text, CSV-style):
//   nnetm-mlp,1
//   dims,2,16,16,1
//   input_mean,<d0 values>
//   input_scale,<d0 values>
//   W,<layer>,<row>,<in values>        one line per output neuron
//   b,<layer>,<out values>
inline void SaveMlp(const Mlp& net, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write weight file " + path.string());
  auto fmt = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  out << "nnetm-mlp,1\ndims";
  for (int d : net.layer_dims()) out << ',' << d;
  out << "\ninput_mean";
  for (double m : net.input_mean()) out << ',' << fmt(m);
  out << "\ninput_scale";
  for (double s : net.input_scale()) out << ',' << fmt(s);
  out << "\n";
  const auto& dims = net.layer_dims();
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    for (int o = 0; o < dims[l + 1]; ++o) {
      out << "W," << l << ',' << o;
      for (int i = 0; i < dims[l]; ++i) out << ',' << fmt(net.weight(l, o, i));
      out << "\n";
    }
    out << "b," << l;
    for (int o = 0; o < dims[l + 1]; ++o) out << ',' << fmt(net.bias(l, o));
    out << "\n";
  }
  if (!out) throw ConfigError("write failed for " + path.string());
}

inline Mlp LoadMlp(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read weight file " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  std::string line;
  if (!std::getline(in, line) || line != "nnetm-mlp,1")
    throw ConfigError("unrecognized weight file header in " + path.string());
  if (!std::getline(in, line)) throw ConfigError("missing dims line");
  auto cells = split(line);
  if (cells.empty() || cells[0] != "dims") throw ConfigError("missing dims line");
  std::vector<int> dims;
  for (std::size_t i = 1; i < cells.size(); ++i) dims.push_back(std::stoi(cells[i]));
  Mlp net(dims);
  std::vector<double> mean, scale;
  std::vector<bool> filled(net.size(), false);
  auto params = net.mutable_params();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    cells = split(line);
    if (cells[0] == "input_mean" || cells[0] == "input_scale") {
      auto& dst = cells[0] == "input_mean" ? mean : scale;
      for (std::size_t i = 1; i < cells.size(); ++i) dst.push_back(std::stod(cells[i]));
    } else if (cells[0] == "W") {
      const std::size_t l = std::stoul(cells.at(1));
      const int o = std::stoi(cells.at(2));
      if (l >= net.n_layers() || o < 0 || o >= dims[l + 1] ||
          cells.size() != static_cast<std::size_t>(3 + dims[l]))
        throw ConfigError("weight row does not match dims in " + path.string());
      for (int i = 0; i < dims[l]; ++i) {
        const std::size_t idx = net.weight_offset(l) + static_cast<std::size_t>(o) * dims[l] + i;
        params[idx] = std::stod(cells[3 + i]);
        filled[idx] = true;
      }
    } else if (cells[0] == "b") {
      const std::size_t l = std::stoul(cells.at(1));
      if (l >= net.n_layers() || cells.size() != static_cast<std::size_t>(2 + dims[l + 1]))
        throw ConfigError("bias row does not match dims in " + path.string());
      for (int o = 0; o < dims[l + 1]; ++o) {
        params[net.bias_offset(l) + o] = std::stod(cells[2 + o]);
        filled[net.bias_offset(l) + o] = true;
      }
    } else {
      throw ConfigError("unknown weight file record '" + cells[0] + "'");
    }
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end())
    throw ConfigError("weight file " + path.string() + " is incomplete");
  if (!mean.empty() || !scale.empty()) net.SetInputScaling(mean, scale);
  net.Touch();
  return net;
}

}  // namespace nnetm

#endif  // NNETM_MLP_HPP_
