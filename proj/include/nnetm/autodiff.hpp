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

#ifndef NNETM_AUTODIFF_HPP_
#define NNETM_AUTODIFF_HPP_

#include <cmath>
#include <cstddef>
#include <concepts>
#include <span>
#include <vector>

#include "nnetm/errors.hpp"

namespace nnetm {

// Plain-arithmetic overloads accept any floating type so rollouts can also be
// evaluated in extended precision.
template <std::floating_point T>
T Sigmoid(T x) {
  if (x >= 0) return 1 / (1 + std::exp(-x));
  const T e = std::exp(x);
  return e / (1 + e);
}

template <std::floating_point T>
T Value(T x) {
  return x;
}

class Tape;

// An operation recorded on a tape whose local Jacobian is applied by the
// owner rather than stored per edge (used for fused network evaluations).
class TapeFunction {
 public:
  virtual ~TapeFunction() = default;
  // Propagate `grad_output` of the recorded call `record` into the adjoints
  // of its inputs.
  virtual void Backward(std::size_t record, double grad_output,
                        std::span<double> grad_inputs) = 0;
};

// Scalar variable: either a constant (id < 0) or a node on a tape.
class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: implicit constant
  Var(Tape* tape, int id, double value) : tape_(tape), id_(id), value_(value) {}

  double value() const { return value_; }
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool is_constant() const { return id_ < 0; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
  double value_ = 0.0;
};

inline double Value(const Var& x) { return x.value(); }

// Record-and-replay reverse-mode tape. Each node keeps at most two parents
// with their local partial derivatives; fused operations go through
// TapeFunction. Replay order is the reverse of recording order, so the
// gradient is deterministic.
class Tape {
 public:
  static constexpr int kNone = -1;

  void Clear() {
    nodes_.clear();
    externals_.clear();
    external_inputs_.clear();
  }

  std::size_t size() const { return nodes_.size(); }

  Var Input(double value) { return Push(kNone, 0.0, kNone, 0.0, value); }

  // Node with up to two parents. Constant parents are dropped.
  Var Push(int a, double wa, int b, double wb, double value) {
    nodes_.push_back({a, b, wa, wb, -1});
    return Var(this, static_cast<int>(nodes_.size()) - 1, value);
  }

  Var Unary(const Var& x, double dx, double value) {
    if (x.is_constant()) return Var(value);
    return Push(x.id(), dx, kNone, 0.0, value);
  }

  Var Binary(const Var& x, double dx, const Var& y, double dy, double value) {
    if (x.is_constant() && y.is_constant()) return Var(value);
    return Push(x.is_constant() ? kNone : x.id(), dx,
                y.is_constant() ? kNone : y.id(), dy, value);
  }

  // Output node of a fused operation.
  Var External(TapeFunction* fn, std::size_t record, std::span<const Var> inputs,
               double value) {
    ExternalCall call{fn, record, external_inputs_.size(), inputs.size()};
    for (const Var& in : inputs) external_inputs_.push_back(in.id());
    externals_.push_back(call);
    nodes_.push_back({kNone, kNone, 0.0, 0.0,
                      static_cast<int>(externals_.size()) - 1});
    return Var(this, static_cast<int>(nodes_.size()) - 1, value);
  }

  // Adjoints of every node with respect to `output`.
  std::vector<double> Gradient(const Var& output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (output.is_constant()) return adj;
    if (output.tape() != this) throw DimensionError("variable from another tape");
    adj[output.id()] = 1.0;
    std::vector<double> scratch;
    for (int i = output.id(); i >= 0; --i) {
      const double g = adj[i];
      if (g == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.external >= 0) {
        const ExternalCall& call = externals_[n.external];
        scratch.assign(call.count, 0.0);
        call.fn->Backward(call.record, g, scratch);
        for (std::size_t k = 0; k < call.count; ++k) {
          const int in = external_inputs_[call.first + k];
          if (in >= 0) adj[in] += scratch[k];
        }
        continue;
      }
      if (n.a >= 0) adj[n.a] += n.wa * g;
      if (n.b >= 0) adj[n.b] += n.wb * g;
    }
    return adj;
  }

 private:
  struct Node {
    int a;
    int b;
    double wa;
    double wb;
    int external;
  };
  struct ExternalCall {
    TapeFunction* fn;
    std::size_t record;
    std::size_t first;
    std::size_t count;
  };

  std::vector<Node> nodes_;
  std::vector<ExternalCall> externals_;
  std::vector<int> external_inputs_;
};

namespace detail {
inline Tape* TapeOf(const Var& x, const Var& y) {
  return x.tape() ? x.tape() : y.tape();
}
}  // namespace detail

inline Var operator+(const Var& x, const Var& y) {
  Tape* t = detail::TapeOf(x, y);
  const double v = x.value() + y.value();
  return t ? t->Binary(x, 1.0, y, 1.0, v) : Var(v);
}
inline Var operator-(const Var& x, const Var& y) {
  Tape* t = detail::TapeOf(x, y);
  const double v = x.value() - y.value();
  return t ? t->Binary(x, 1.0, y, -1.0, v) : Var(v);
}
inline Var operator*(const Var& x, const Var& y) {
  Tape* t = detail::TapeOf(x, y);
  const double v = x.value() * y.value();
  return t ? t->Binary(x, y.value(), y, x.value(), v) : Var(v);
}
inline Var operator/(const Var& x, const Var& y) {
  Tape* t = detail::TapeOf(x, y);
  const double inv = 1.0 / y.value();
  const double v = x.value() * inv;
  return t ? t->Binary(x, inv, y, -v * inv, v) : Var(v);
}
inline Var operator-(const Var& x) {
  return x.tape() ? x.tape()->Unary(x, -1.0, -x.value()) : Var(-x.value());
}
inline Var& operator+=(Var& x, const Var& y) { return x = x + y; }
inline Var& operator-=(Var& x, const Var& y) { return x = x - y; }
inline Var& operator*=(Var& x, const Var& y) { return x = x * y; }

inline Var Sigmoid(const Var& x) {
  const double s = Sigmoid(x.value());
  return x.tape() ? x.tape()->Unary(x, s * (1.0 - s), s) : Var(s);
}

// d|x|/dx taken as sign(x), 0 at the origin.
inline Var Abs(const Var& x) {
  const double v = x.value();
  const double d = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  return x.tape() ? x.tape()->Unary(x, d, std::abs(v)) : Var(std::abs(v));
}
template <std::floating_point T>
T Abs(T x) {
  return std::abs(x);
}

inline Var Square(const Var& x) {
  const double v = x.value();
  return x.tape() ? x.tape()->Unary(x, 2.0 * v, v * v) : Var(v * v);
}
template <std::floating_point T>
T Square(T x) {
  return x * x;
}

inline Var Exp(const Var& x) {
  const double e = std::exp(x.value());
  return x.tape() ? x.tape()->Unary(x, e, e) : Var(e);
}

// nu*event + (1-nu)*no_event
inline Var Blend(const Var& nu, const Var& event, const Var& no_event) {
  return no_event + nu * (event - no_event);
}
template <std::floating_point T>
T Blend(T nu, T event, T no_event) {
  return no_event + nu * (event - no_event);
}

}  // namespace nnetm

#endif  // NNETM_AUTODIFF_HPP_
