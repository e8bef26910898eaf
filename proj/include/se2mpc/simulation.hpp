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

#ifndef SE2MPC_SIMULATION_HPP_
#define SE2MPC_SIMULATION_HPP_

/**
 * @file
 * @brief Closed-loop simulation with an ideal plant, trace recording and metrics.
 */

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "se2mpc/controller.hpp"
#include "se2mpc/scenarios.hpp"

namespace se2mpc {

enum class Outcome { Finished, Collision, TimedOut, Error };

std::string to_string(Outcome o);

struct TraceRow
{
  double t{0.0};            ///< sim time [s]
  Eigen::VectorXd x;        ///< measured plant state at t
  Eigen::VectorXd u;        ///< control held over [t, t + 1/rate)
  double solve_time{0.0};   ///< wall seconds spent in the controller this tick
  StepStatus status{StepStatus::Solved};
  SolverStatus solver_status{SolverStatus::Converged};
  int iterations{0};
  bool collision{false};
  int N{0};
  double tf_star{0.0};
  double min_dist{0.0};     ///< smallest signed separation to any obstacle at t, +inf without obstacles
  int goal_index{0};
};

struct ClosedLoopTrace
{
  std::vector<TraceRow> rows;
  Outcome outcome{Outcome::TimedOut};
  double rate{10.0};
  int goals_reached{0};
  int overruns{0};  ///< ticks whose solve time exceeded 1/rate
  std::string message;
};

struct Metrics
{
  double travel_time{0.0};
  double path_length{0.0};
  double control_effort{0.0};
  double cpu_median{0.0};  ///< [s]
  double cpu_q05{0.0};
  double cpu_q95{0.0};
};

/// Called after each recorded row; useful for progress output.
using TraceCallback = std::function<void(const TraceRow&)>;

/**
 * @brief Runs the feedback loop from s.start through every approach pose and goal of s.
 *
 * Each tick: measure the distance to all obstacles at t_n, stop on penetration, step
 * the controller (switching to the next target within the same tick once one is reached),
 * then advance the plant by 1/rate under the held control.
 * Throws std::invalid_argument for rate <= 0.
 */
ClosedLoopTrace run_closed_loop(const Scenario& s, MpcController& controller, double rate, double max_sim_time,
                                const TraceCallback& on_row = {});

/// Uses make_controller(s) and the scenario's rate and time limit.
ClosedLoopTrace run_closed_loop(const Scenario& s, const TraceCallback& on_row = {});

/// Throws std::invalid_argument on an empty trace.
Metrics compute_metrics(const ClosedLoopTrace& trace);

/// Linear-interpolation quantile, q in [0, 1]; 0 for an empty sample.
double quantile(std::vector<double> values, double q);

/// Header plus one line per row. With wall_clock false the solve_ms column is written as 0.
std::string trace_to_csv(const ClosedLoopTrace& trace, bool wall_clock = true);

}  // namespace se2mpc

#endif  // SE2MPC_SIMULATION_HPP_
