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

#ifndef SE2MPC_SOLVER_HPP_
#define SE2MPC_SOLVER_HPP_

/**
 * @file
 * @brief Augmented Lagrangian solver for hypergraph NLPs.
 *
 * Outer loop: PHR multiplier and penalty updates. Inner loop: box-projected
 * Levenberg-Marquardt on the augmented Lagrangian, with a sparse LDLT solve in
 * the stacked tangent space and per-vertex ⊞ updates. Derivatives are central
 * finite differences computed edge by edge.
 */

#include <Eigen/Core>

#include <iosfwd>
#include <string>
#include <vector>

#include "se2mpc/hypergraph.hpp"
#include "se2mpc/transcription.hpp"

namespace se2mpc {

enum class SolverMethod {
  InteriorPoint,        ///< primal-dual barrier method, slacks on inequality rows
  AugmentedLagrangian,  ///< PHR outer loop, box-projected Levenberg-Marquardt inner solves
};

struct SolverConfig
{
  SolverMethod method{SolverMethod::InteriorPoint};
  int max_iterations{200};    ///< interior point: Newton iterations
  double barrier_init{0.1};   ///< interior point: initial barrier parameter
  double barrier_init_warm{1e-3};  ///< initial barrier parameter the controller uses for warm-started solves
  int max_outer_iterations{25};
  int max_inner_iterations{40};
  double feasibility_tolerance{1e-6};
  double optimality_tolerance{1e-4};
  double penalty_init{10.0};
  double penalty_growth{10.0};
  double penalty_max{1e10};
  double fd_step{1e-6};          ///< relative central-difference step, h = fd_step * max(1, |v|)
  double fd_hessian_step{1e-4};  ///< step for curvature of Sum-aggregated objective edges
  double damping_init{1e-4};
  double damping_increase{2.0};
  double damping_decrease{3.0};
  double time_budget{0.5};  ///< seconds; <= 0 disables the budget
  /// Add the multiplier-weighted constraint Hessian (FD) to the Gauss-Newton blocks.
  bool constraint_curvature{true};
  /// Ending at maximum penalty with a larger violation than this reports Infeasible, else MaxIter.
  double infeasible_violation{1e-3};
  /// Optional iteration log, one CSV line per accepted step: outer,iteration,cost,violation,step_norm,merit
  std::ostream* log{nullptr};

  /// Throws std::invalid_argument on non-positive tolerances or growth <= 1.
  void validate() const;
};

enum class SolverStatus { Converged, MaxIter, TimeBudget, Infeasible };

std::string to_string(SolverStatus s);

struct SolverResult
{
  SolverStatus status{SolverStatus::MaxIter};
  double cost{0.0};
  double max_violation{0.0};
  double stationarity{0.0};
  int iterations{0};        ///< accepted inner steps
  int outer_iterations{0};
  double wall_time{0.0};    ///< seconds
  std::string message;
};

/// One structured non-zero of an edge Jacobian.
struct PatternEntry
{
  int row;    ///< residual row within the edge
  int vertex; ///< vertex id
  int col;    ///< tangent coordinate within the vertex
};

/// Structured non-zeros per edge; fixed vertices contribute no columns.
struct SparsePattern
{
  std::vector<std::vector<PatternEntry>> edges;
  std::size_t nonzeros() const;
};

SparsePattern build_sparse_pattern(const HypergraphProblem& problem);

/// Per-slot Jacobian blocks of an edge (dim x vertex dim); empty for fixed vertices.
struct EdgeJacobian
{
  std::vector<Eigen::MatrixXd> blocks;
};

/**
 * @brief Central finite differences with ⊞ probing, J = d r(v ⊞ δ)/dδ at δ = 0.
 *
 * Throws std::runtime_error naming the edge if a probe produces a non-finite residual.
 */
EdgeJacobian edge_jacobian(const HypergraphProblem& problem, int edge_id, double fd_step = 1e-6);

/// Column offset of each vertex in the stacked tangent space (-1 for fixed vertices).
std::vector<int> tangent_offsets(const HypergraphProblem& problem, int* total = nullptr);

/**
 * @brief Dense reference Jacobian of all edge residuals w.r.t. all free tangent
 * coordinates, probing the whole problem with z ⊞ (±h e_i). Rows follow edge order.
 */
Eigen::MatrixXd dense_jacobian(const HypergraphProblem& problem, double fd_step = 1e-6);

/// Solve in place; vertex values hold the final iterate. Fixed vertices never move.
SolverResult solve(HypergraphProblem& problem, const SolverConfig& config = {});

/// Warm-start policies for successive MPC steps.
enum class ShiftPolicy { Receding, Shrinking };

struct WarmStartReport
{
  bool fresh{false};  ///< dimensions incompatible, guess reset to the measured state
  int pruned{0};      ///< leading states dropped as already passed (shrinking)
};

/**
 * @brief Build the next initial guess from the previous solution.
 *
 * Receding: shift states/controls one interval forward, duplicate the last entry.
 * Shrinking: drop states already passed by the measured state, then resample
 * uniformly to `N_new` intervals keeping the horizon time. In both cases x_0 is
 * re-pinned to `x_measured` and Δt values are carried over.
 */
TrajectoryGrid warm_start(const TrajectoryGrid& previous, const Eigen::VectorXd& x_measured, int N_new,
                          ShiftPolicy policy, const TagList& tags, WarmStartReport* report = nullptr);

}  // namespace se2mpc

#endif  // SE2MPC_SOLVER_HPP_
