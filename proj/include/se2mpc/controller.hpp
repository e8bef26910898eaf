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

#ifndef SE2MPC_CONTROLLER_HPP_
#define SE2MPC_CONTROLLER_HPP_

/**
 * @file
 * @brief Sampled MPC feedback laws built on the transcription and the solver:
 * quadratic-form receding horizon and time-optimal shrinking horizon with
 * grid adaptation.
 */

#include <Eigen/Core>

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "se2mpc/dynamics.hpp"
#include "se2mpc/geometry.hpp"
#include "se2mpc/solver.hpp"
#include "se2mpc/transcription.hpp"

namespace se2mpc {

enum class ControllerVariant { Quadratic, TimeOptimal, Hybrid };

std::string to_string(ControllerVariant v);
/// Accepts "quad", "to", "hybrid". Throws std::invalid_argument otherwise.
ControllerVariant parse_variant(const std::string& name);

struct QuadraticFormConfig
{
  Eigen::MatrixXd Q;
  Eigen::MatrixXd Qf;
  Eigen::MatrixXd R;
  int N{30};
  double dt_s{0.3};
  Eigen::VectorXd x_f;
  TerminalSet terminal{TerminalSet::Free};

  /// Throws std::invalid_argument on non-PSD weights, dt_s <= 0 or N < 1.
  void validate(Eigen::Index state_dim, Eigen::Index control_dim) const;
};

struct TimeOptimalConfig
{
  int N_init{50};
  int N_min{2};
  double dt_s{0.1};
  double dt_eps{0.01};
  double dt_min{1e-3};
  double dt_max{std::numeric_limits<double>::infinity()};
  Eigen::VectorXd x_f;
  Eigen::MatrixXd R_hybrid;  ///< empty or zero: pure minimum time
  double dt_init{0.0};       ///< initial Δt guess for fresh starts, 0 picks one from the path length

  void validate(Eigen::Index control_dim) const;
};

struct GoalTolerance
{
  double position{0.1};
  double angle{0.05};
};

/// One multi-start initialization: intermediate poses between start and goal.
struct Initialization
{
  std::string name;
  std::vector<Eigen::VectorXd> waypoints;
  double duration{0.0};  ///< initial horizon guess [s] for time-optimal fresh starts, 0 derives one
};

/// Problem data shared by both controller variants.
struct MpcSetup
{
  ModelPtr model;
  Kernel kernel{Kernel::ForwardDiff};
  GridMode grid_mode{GridMode::LocalUniform};
  ControlBounds bounds;
  Footprint footprint{DiscFootprint{0.0}};
  std::vector<Obstacle> obstacles;
  double d_min{0.0};
  double association_cutoff{5.0};
  int association_k_max{10};
  SolverConfig solver;
  /// Multi-start initializations; empty means one straight-line guess. Used on fresh starts only.
  std::vector<Initialization> initializations;
  GoalTolerance tolerance;
  double sample_time{0.1};  ///< closed-loop period, used as Δt_p of the next step
  int max_threads{0};       ///< 0: planner_threads()
  double decay{0.5};        ///< fallback control decay per step
};

struct ControllerState
{
  int N{0};
  Eigen::VectorXd u_prev;
  double dt_prev{0.1};
  std::optional<TrajectoryGrid> warm;
  Eigen::VectorXd x_f;
};

enum class StepStatus { Solved, Fallback, Finished };

std::string to_string(StepStatus s);

struct StepDiagnostics
{
  StepStatus status{StepStatus::Solved};
  SolverStatus solver_status{SolverStatus::Converged};
  double cost{0.0};
  double max_violation{0.0};
  double tf_star{0.0};
  double dt_star{0.0};
  double solve_time{0.0};  ///< wall seconds, including all multi-start candidates
  int N{0};                ///< grid size used in this step
  int N_next{0};
  int iterations{0};
  int candidates{0};
  bool fresh{false};
  std::string message;
};

struct StepResult
{
  Eigen::VectorXd u;
  StepDiagnostics diag;
  TrajectoryGrid plan;
};

/// (x ⊟ x_f)ᵀ Q (x ⊟ x_f) + uᵀ R u.
double quadratic_cost_terms(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& x_f,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, const TagList& tags = se2_tags());
/// (x_N ⊟ x_f)ᵀ Q_f (x_N ⊟ x_f).
double terminal_cost(const Eigen::VectorXd& x_N, const Eigen::VectorXd& x_f, const Eigen::MatrixXd& Qf,
                     const TagList& tags = se2_tags());

/// Hysteresis rule for the next grid size.
int grid_adapt(int N, double dt_star, double dt_s, double dt_eps, int N_min);

/// True if x ⊟ x_f is within the position and angle tolerance.
bool goal_reached(const Eigen::VectorXd& x, const Eigen::VectorXd& x_f, const GoalTolerance& tol, const TagList& tags);

/// Worker count for multi-start solves: MPC_PLANNER_THREADS if set and positive, else the hardware concurrency.
int planner_threads();

/// Fresh controller state at rest: u_p = 0, Δt_p = sample time.
ControllerState initial_state(const MpcSetup& setup, int N, const Eigen::VectorXd& x_f);

/**
 * @brief One receding-horizon step with fixed Δt = dt_s.
 *
 * Updates u_p, Δt_p and the warm start in `state`. On solver failure the previous
 * control is decayed toward zero within the rate bounds.
 */
StepResult mpc_step_quadratic(const QuadraticFormConfig& cfg, const MpcSetup& setup, ControllerState& state,
                              const Eigen::VectorXd& x, double t_now = 0.0);

/**
 * @brief One shrinking-horizon step with variable Δt and terminal equality.
 *
 * A non-zero R_hybrid gives the hybrid cost Σ(1 + uᵀRu)Δt. The grid size for the
 * next step follows grid_adapt.
 */
StepResult mpc_step_time_optimal(const TimeOptimalConfig& cfg, const MpcSetup& setup, ControllerState& state,
                                 const Eigen::VectorXd& x, double t_now = 0.0);

/// Variant-agnostic wrapper holding configuration and state.
class MpcController
{
public:
  MpcController(ControllerVariant variant, MpcSetup setup, QuadraticFormConfig quad, TimeOptimalConfig to);

  StepResult step(const Eigen::VectorXd& x, double t_now);
  /// Switch goal; drops the warm start and resets N, keeps u_p.
  void set_goal(const Eigen::VectorXd& x_f);

  ControllerVariant variant() const { return variant_; }
  const MpcSetup& setup() const { return setup_; }
  MpcSetup& setup() { return setup_; }
  const ControllerState& state() const { return state_; }
  ControllerState& state() { return state_; }
  const QuadraticFormConfig& quadratic_config() const { return quad_; }
  const TimeOptimalConfig& time_optimal_config() const { return to_; }

private:
  ControllerVariant variant_;
  MpcSetup setup_;
  QuadraticFormConfig quad_;
  TimeOptimalConfig to_;
  ControllerState state_;
};

}  // namespace se2mpc

#endif  // SE2MPC_CONTROLLER_HPP_
