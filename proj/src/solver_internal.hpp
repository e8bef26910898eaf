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

#ifndef SE2MPC_SRC_SOLVER_INTERNAL_HPP_
#define SE2MPC_SRC_SOLVER_INTERNAL_HPP_

// Finite-difference helpers shared by the solver backends.

#include <Eigen/Core>

#include <chrono>
#include <vector>

#include "se2mpc/hypergraph.hpp"
#include "se2mpc/solver.hpp"

namespace se2mpc::detail {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0);

/// Relative probe step h = rel * max(1, |v|).
double fd_h(double rel, double v);

// local column list of an edge: (slot, coordinate, global column)
struct LocalCol
{
  std::size_t slot;
  Eigen::Index coord;
  int global;
};

std::vector<LocalCol> local_columns(const HypergraphProblem& pb, const Edge& e, const std::vector<int>& offsets);

/// Central differences with ⊞ probes; throws std::runtime_error on a non-finite residual.
Eigen::MatrixXd local_jacobian(const HypergraphProblem& pb, const Edge& e, const std::vector<LocalCol>& cols,
                               double rel, int edge_id);

/// FD Hessian of wᵀ r over the edge's free coordinates; zero if any probe is non-finite.
Eigen::MatrixXd weighted_edge_hessian(const HypergraphProblem& pb, const Edge& e, const std::vector<LocalCol>& cols,
                                      double rel, const Eigen::VectorXd& w);

Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& H);

SolverResult solve_interior_point(HypergraphProblem& pb, const SolverConfig& cfg);

}  // namespace se2mpc::detail

#endif  // SE2MPC_SRC_SOLVER_INTERNAL_HPP_
