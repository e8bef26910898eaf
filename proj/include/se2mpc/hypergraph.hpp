// Copyright 2026 The se2mpc Authors
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

#ifndef SE2MPC_HYPERGRAPH_HPP_
#define SE2MPC_HYPERGRAPH_HPP_

/**
 * @file
 * @brief Sparse NLP as a hypergraph: variable blocks are vertices, cost and
 * constraint terms are hyperedges over subsets of vertices.
 *
 * Conventions:
 *  - Objective edges contribute either the sum of their residual entries
 *    (Aggregation::Sum) or the squared norm (Aggregation::SquaredNorm).
 *  - Equality edges require residual == 0.
 *  - Inequality edges require residual <= 0 componentwise.
 */

#include <Eigen/Core>

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "se2mpc/manifold.hpp"

namespace se2mpc {

struct Vertex
{
  std::string name;
  Eigen::VectorXd values;
  TagList tags;
  /// Box bounds on Euclidean coordinates; Angular coordinates must stay unbounded.
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool fixed{false};

  Eigen::Index dim() const { return values.size(); }

  static Vertex make(std::string name, Eigen::VectorXd values, TagList tags, bool fixed = false);
};

enum class EdgeKind { Objective, Equality, Inequality };
enum class Aggregation { Sum, SquaredNorm };

/// Maximum number of vertices a single edge may connect.
inline constexpr std::size_t kMaxEdgeVertices = 6;

/// Values of an edge's vertices, in the edge's declared vertex order.
using EdgeInputs = std::span<const Eigen::VectorXd* const>;
using ResidualFn = std::function<void(EdgeInputs, Eigen::Ref<Eigen::VectorXd>)>;

struct Edge
{
  std::string family;
  EdgeKind kind{EdgeKind::Objective};
  Aggregation aggregation{Aggregation::SquaredNorm};
  int dim{0};
  std::vector<int> vertices;
  ResidualFn residual;
};

class HypergraphProblem
{
public:
  int add_vertex(Vertex v);
  /// Validates vertex references and residual dimension; throws std::invalid_argument.
  void add_edge(Edge e);

  std::vector<Vertex>& vertices() { return vertices_; }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  Vertex& vertex(int id) { return vertices_.at(static_cast<std::size_t>(id)); }
  const Vertex& vertex(int id) const { return vertices_.at(static_cast<std::size_t>(id)); }

  /// Evaluate an edge at the current vertex values.
  void evaluate(const Edge& e, Eigen::Ref<Eigen::VectorXd> out) const;
  /// Evaluate an edge with vertex slot `slot` replaced by `substitute`.
  void evaluate_with(const Edge& e, std::size_t slot, const Eigen::VectorXd& substitute,
                     Eigen::Ref<Eigen::VectorXd> out) const;

  /// Objective value at the current vertex values.
  double objective() const;
  /// max(|equality residual|, max(inequality residual, 0)) over all edges.
  double max_violation() const;
  /// Number of edges per family name.
  std::map<std::string, int> family_counts() const;
  /// Number of non-fixed vertices.
  int free_vertex_count() const;

private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
};

/// Aggregate an objective residual according to the edge's aggregation rule.
double aggregate(Aggregation agg, const Eigen::Ref<const Eigen::VectorXd>& r);

}  // namespace se2mpc

#endif  // SE2MPC_HYPERGRAPH_HPP_
