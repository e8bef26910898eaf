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

#ifndef SE2MPC_TRANSCRIPTION_HPP_
#define SE2MPC_TRANSCRIPTION_HPP_

/**
 * @file
 * @brief Direct transcription of the optimal control problem into a
 * hypergraph NLP via finite-difference collocation on a uniform grid.
 *
 * Decision variables are u_0..u_{N-1}, x_1..x_N and Δt_0..Δt_{N-1} (a single
 * Δt in global-uniform mode, none in fixed-dt mode). x_0 is a fixed vertex
 * pinned to the measured state.
 */

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "se2mpc/dynamics.hpp"
#include "se2mpc/geometry.hpp"
#include "se2mpc/hypergraph.hpp"

namespace se2mpc {

enum class Kernel { ForwardDiff, CrankNicolson };
enum class GridMode { LocalUniform, GlobalUniform };
enum class TerminalSet { Free, Pinned };
enum class CostKind { Quadratic, MinimumTime, Hybrid };

struct TrajectoryGrid
{
  std::vector<Eigen::VectorXd> states;    ///< x_0..x_N
  std::vector<Eigen::VectorXd> controls;  ///< u_0..u_{N-1}
  std::vector<double> dts;                ///< Δt_0..Δt_{N-1}

  int N() const { return static_cast<int>(controls.size()); }
  double final_time() const;
  /// Throws std::invalid_argument unless N >= 1, sizes agree and every Δt > 0.
  void validate() const;
};

struct BoundaryData
{
  Eigen::VectorXd u_prev;   ///< u_p
  double dt_prev{0.1};      ///< Δt_p
  Eigen::VectorXd u_final;  ///< u_N, not optimized
};

/// Running/terminal cost description.
struct CostSpec
{
  CostKind kind{CostKind::Quadratic};
  Eigen::MatrixXd Q;   ///< state weight (quadratic)
  Eigen::MatrixXd R;   ///< control weight (quadratic, hybrid)
  Eigen::MatrixXd Qf;  ///< terminal weight (quadratic)
};

/// Everything needed to transcribe one OCP instance.
struct OcpDefinition
{
  ModelPtr model;
  Kernel kernel{Kernel::ForwardDiff};
  GridMode grid_mode{GridMode::LocalUniform};

  bool fixed_dt{false};  ///< quadratic-form mode: Δt excluded from the decision variables
  double dt_min{1e-3};
  double dt_max{std::numeric_limits<double>::infinity()};

  ControlBounds bounds;
  std::optional<Eigen::VectorXd> state_lower;  ///< internal state set X_i (Euclidean dims only)
  std::optional<Eigen::VectorXd> state_upper;
  BoundaryData boundary;

  CostSpec cost;
  Eigen::VectorXd x_goal;
  TerminalSet terminal{TerminalSet::Free};

  Footprint footprint{DiscFootprint{0.0}};
  std::vector<Obstacle> obstacles;
  double d_min{0.0};
  double time_offset{0.0};  ///< absolute time of x_0, used for moving obstacles
  double association_cutoff{5.0};
  int association_k_max{10};

  /// Throws std::invalid_argument on inconsistent dimensions.
  void validate() const;
};

/// Vertex ids of the transcribed grid inside the hypergraph.
struct GridLayout
{
  std::vector<int> state_ids;
  std::vector<int> control_ids;
  std::vector<int> dt_ids;  ///< per interval (all equal in global mode, empty when fixed)
  double fixed_dt{0.0};
};

struct TranscribedProblem
{
  HypergraphProblem problem;
  GridLayout layout;
  /// Obstacle indices associated with each state x_0..x_N.
  std::vector<std::vector<int>> association;
};

/**
 * @brief Collocation defect (x_{k+1} ⊟ x_k)/Δt − ξ for one grid interval.
 *
 * Throws std::invalid_argument for dt <= 0.
 */
Eigen::VectorXd defect(Kernel kernel, const SystemModel& model, const Eigen::Ref<const Eigen::VectorXd>& x_k,
                       const Eigen::Ref<const Eigen::VectorXd>& x_next, const Eigen::Ref<const Eigen::VectorXd>& u_k,
                       double dt);

/// Prediction time k·Δt_k of grid state k relative to x_0.
double time_of_state(int k, const TrajectoryGrid& grid);

/**
 * @brief Straight-line (or waypoint polyline) initialization.
 *
 * States are resampled uniformly over the polyline parameter x_s → w_1 → … → x_f
 * (each polyline segment receives an equal share of the grid, so repeated
 * waypoints encode dwelling). Angular coordinates follow the shortest arc.
 */
TrajectoryGrid initialize_guess(const Eigen::VectorXd& x_start, const Eigen::VectorXd& x_goal, int N, double dt_init,
                                Eigen::Index control_dim, const TagList& tags,
                                const std::vector<Eigen::VectorXd>& waypoints = {});

/**
 * @brief Assemble the hypergraph NLP for the given OCP and initial guess.
 *
 * Edge families: "running_cost", "terminal_cost", "defect", "control_deviation",
 * "dt_uniformity", "terminal_equality", "obstacle". Box bounds are set on the
 * vertices. Throws std::invalid_argument on inconsistent dimensions.
 */
TranscribedProblem assemble_nlp(const OcpDefinition& ocp, const TrajectoryGrid& guess);

/// Read the current vertex values back into a grid.
TrajectoryGrid extract_grid(const TranscribedProblem& tp);

/// Symmetric PSD square root L with L^T L = M (negative eigenvalues clipped to zero).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& M);

}  // namespace se2mpc

#endif  // SE2MPC_TRANSCRIPTION_HPP_
