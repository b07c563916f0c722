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

#ifndef NNETM_GRAPH_HPP_
#define NNETM_GRAPH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nnetm/errors.hpp"
#include "nnetm/linalg.hpp"

namespace nnetm {

using Edge = std::pair<int, int>;

// Undirected connected communication topology with its Laplacian spectrum.
// Immutable after construction; safe to share across concurrent rollouts.
class NetworkGraph {
 public:
  NetworkGraph(int n_agents, std::vector<Edge> edges) : n_(n_agents) {
    if (n_agents < 2) throw ConfigError("graph needs at least 2 agents");
    std::set<Edge> seen;
    for (auto [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n_agents || b >= n_agents) {
        std::ostringstream msg;
        msg << "edge (" << a << "," << b << ") out of range for " << n_agents
            << " agents";
        throw ConfigError(msg.str());
      }
      if (a == b) {
        throw ConfigError("self-loop on agent " + std::to_string(a));
      }
      Edge e = std::minmax(a, b);
      if (!seen.insert(e).second) {
        throw ConfigError("duplicate edge (" + std::to_string(e.first) + "," +
                          std::to_string(e.second) + ")");
      }
    }
    edges_.assign(seen.begin(), seen.end());  // lexicographic order

    adjacency_ = Matrix(n_, n_);
    neighbors_.assign(n_, {});
    for (auto [a, b] : edges_) {
      adjacency_(a, b) = adjacency_(b, a) = 1.0;
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());

    CheckConnected();

    laplacian_ = Matrix(n_, n_);
    for (int i = 0; i < n_; ++i) {
      double degree = 0.0;
      for (int j = 0; j < n_; ++j) degree += adjacency_(i, j);
      for (int j = 0; j < n_; ++j) laplacian_(i, j) = -adjacency_(i, j);
      laplacian_(i, i) = degree;
    }

    // Smaller endpoint gets +1.
    incidence_ = Matrix(n_, edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      incidence_(edges_[e].first, e) = 1.0;
      incidence_(edges_[e].second, e) = -1.0;
    }

    spectrum_ = JacobiEigen(laplacian_, 1e-13);
    lambda2_ = spectrum_.values[1];
    lambda_max_ = spectrum_.values.back();
  }

  int n_agents() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  const Matrix& adjacency() const { return adjacency_; }
  const Matrix& laplacian() const { return laplacian_; }
  const Matrix& incidence() const { return incidence_; }
  double lambda2() const { return lambda2_; }
  double lambda_max() const { return lambda_max_; }
  const SymmetricEigen& spectrum() const { return spectrum_; }

  // H = I - (1/N) 1 1^T
  Matrix Projection() const {
    Matrix h = Matrix::Identity(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) h(i, j) -= 1.0 / n_;
    return h;
  }

  // (H kron I_n) z for z stacked agent-major with `dim` components per agent.
  std::vector<double> Disagreement(std::span<const double> z, int dim = 1) const {
    if (dim < 1 || z.size() != static_cast<std::size_t>(n_ * dim)) {
      throw DimensionError("disagreement: expected " +
                           std::to_string(n_ * std::max(dim, 1)) +
                           " entries, got " + std::to_string(z.size()));
    }
    std::vector<double> out(z.begin(), z.end());
    for (int c = 0; c < dim; ++c) {
      double mean = 0.0;
      for (int i = 0; i < n_; ++i) mean += z[i * dim + c];
      mean /= n_;
      for (int i = 0; i < n_; ++i) out[i * dim + c] -= mean;
    }
    return out;
  }

 private:
  void CheckConnected() const {
    std::vector<int> component(n_, -1);
    int count = 0;
    for (int start = 0; start < n_; ++start) {
      if (component[start] >= 0) continue;
      std::vector<int> stack{start};
      component[start] = count;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : neighbors_[v]) {
          if (component[w] < 0) {
            component[w] = count;
            stack.push_back(w);
          }
        }
      }
      ++count;
    }
    if (count == 1) return;
    std::ostringstream msg;
    msg << "graph is disconnected: " << count << " components";
    for (int c = 0; c < count; ++c) {
      msg << (c == 0 ? " " : " | ") << "{";
      bool first = true;
      for (int i = 0; i < n_; ++i) {
        if (component[i] != c) continue;
        msg << (first ? "" : ",") << i;
        first = false;
      }
      msg << "}";
    }
    throw ConfigError(msg.str());
  }

  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
  Matrix adjacency_;
  Matrix laplacian_;
  Matrix incidence_;
  SymmetricEigen spectrum_;
  double lambda2_ = 0.0;
  double lambda_max_ = 0.0;
};

inline NetworkGraph CompleteGraph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return NetworkGraph(n, std::move(edges));
}

inline NetworkGraph PathGraph(int n) {
  std::vector<Edge> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return NetworkGraph(n, std::move(edges));
}

inline NetworkGraph RingGraph(int n) {
  if (n < 3) return PathGraph(n);
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
  return NetworkGraph(n, std::move(edges));
}

// Random spanning tree plus each remaining pair with probability
// `extra_edge_probability`.
inline NetworkGraph RandomConnectedGraph(int n, std::uint64_t seed,
                                         double extra_edge_probability = 0.3) {
  if (n < 2) throw ConfigError("graph needs at least 2 agents");
  std::mt19937_64 rng(seed);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::set<Edge> edges;
  for (int k = 1; k < n; ++k) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    edges.insert(std::minmax(order[k], order[pick(rng)]));
  }
  std::bernoulli_distribution extra(extra_edge_probability);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!edges.count({i, j}) && extra(rng)) edges.insert({i, j});
  return NetworkGraph(n, {edges.begin(), edges.end()});
}

// Named generators: "complete", "path", "ring", "random-connected".
inline NetworkGraph MakeNamedGraph(const std::string& name, int n,
                                   std::uint64_t seed = 0) {
  if (name == "complete") return CompleteGraph(n);
  if (name == "path") return PathGraph(n);
  if (name == "ring") return RingGraph(n);
  if (name == "random-connected") return RandomConnectedGraph(n, seed);
  throw ConfigError("unknown graph generator '" + name + "'");
}

}  // namespace nnetm

#endif  // NNETM_GRAPH_HPP_
