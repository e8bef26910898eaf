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

#include "se2mpc/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace se2mpc {

Vertex Vertex::make(std::string name, Eigen::VectorXd values, TagList tags, bool fixed)
{
  Vertex v;
  v.name   = std::move(name);
  v.lower  = Eigen::VectorXd::Constant(values.size(), -std::numeric_limits<double>::infinity());
  v.upper  = Eigen::VectorXd::Constant(values.size(), std::numeric_limits<double>::infinity());
  v.values = std::move(values);
  v.tags   = std::move(tags);
  v.fixed  = fixed;
  return v;
}

int HypergraphProblem::add_vertex(Vertex v)
{
  if (static_cast<std::size_t>(v.values.size()) != v.tags.size())
    throw std::invalid_argument("vertex '" + v.name + "': tag count does not match dimension");
  if (v.lower.size() != v.values.size() || v.upper.size() != v.values.size())
    throw std::invalid_argument("vertex '" + v.name + "': bound dimension mismatch");
  for (Eigen::Index i = 0; i < v.dim(); ++i)
  {
    if (v.tags[static_cast<std::size_t>(i)] == ManifoldTag::Angular &&
        (std::isfinite(v.lower(i)) || std::isfinite(v.upper(i))))
      throw std::invalid_argument("vertex '" + v.name + "': angular coordinates cannot be bounded");
  }
  vertices_.push_back(std::move(v));
  return static_cast<int>(vertices_.size()) - 1;
}

void HypergraphProblem::add_edge(Edge e)
{
  if (e.dim <= 0) throw std::invalid_argument("edge '" + e.family + "': residual dimension must be positive");
  if (e.vertices.empty() || e.vertices.size() > kMaxEdgeVertices)
    throw std::invalid_argument("edge '" + e.family + "': invalid vertex count");
  for (int id : e.vertices)
    if (id < 0 || id >= static_cast<int>(vertices_.size()))
      throw std::invalid_argument("edge '" + e.family + "': references unknown vertex " + std::to_string(id));
  if (!e.residual) throw std::invalid_argument("edge '" + e.family + "': missing residual function");
  edges_.push_back(std::move(e));
}

void HypergraphProblem::evaluate(const Edge& e, Eigen::Ref<Eigen::VectorXd> out) const
{
  std::array<const Eigen::VectorXd*, kMaxEdgeVertices> in{};
  for (std::size_t i = 0; i < e.vertices.size(); ++i) in[i] = &vertices_[static_cast<std::size_t>(e.vertices[i])].values;
  e.residual(EdgeInputs(in.data(), e.vertices.size()), out);
}

void HypergraphProblem::evaluate_with(const Edge& e, std::size_t slot, const Eigen::VectorXd& substitute,
                                      Eigen::Ref<Eigen::VectorXd> out) const
{
  std::array<const Eigen::VectorXd*, kMaxEdgeVertices> in{};
  for (std::size_t i = 0; i < e.vertices.size(); ++i) in[i] = &vertices_[static_cast<std::size_t>(e.vertices[i])].values;
  in[slot] = &substitute;
  e.residual(EdgeInputs(in.data(), e.vertices.size()), out);
}

double aggregate(Aggregation agg, const Eigen::Ref<const Eigen::VectorXd>& r)
{
  return agg == Aggregation::Sum ? r.sum() : r.squaredNorm();
}

double HypergraphProblem::objective() const
{
  double f = 0.0;
  Eigen::VectorXd r;
  for (const Edge& e : edges_)
  {
    if (e.kind != EdgeKind::Objective) continue;
    r.resize(e.dim);
    evaluate(e, r);
    f += aggregate(e.aggregation, r);
  }
  return f;
}

double HypergraphProblem::max_violation() const
{
  double v = 0.0;
  Eigen::VectorXd r;
  for (const Edge& e : edges_)
  {
    if (e.kind == EdgeKind::Objective) continue;
    r.resize(e.dim);
    evaluate(e, r);
    if (e.kind == EdgeKind::Equality)
      v = std::max(v, r.cwiseAbs().maxCoeff());
    else
      v = std::max(v, r.maxCoeff());
  }
  return v;
}

std::map<std::string, int> HypergraphProblem::family_counts() const
{
  std::map<std::string, int> counts;
  for (const Edge& e : edges_) ++counts[e.family];
  return counts;
}

int HypergraphProblem::free_vertex_count() const
{
  return static_cast<int>(std::count_if(vertices_.begin(), vertices_.end(), [](const Vertex& v) { return !v.fixed; }));
}

}  // namespace se2mpc
