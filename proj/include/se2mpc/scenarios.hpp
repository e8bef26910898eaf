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

#ifndef SE2MPC_SCENARIOS_HPP_
#define SE2MPC_SCENARIOS_HPP_

/**
 * @file
 * @brief Declarative experiment descriptions, the two built-in scenarios, occupancy
 * maps and the JSON scenario format.
 */

#include <Eigen/Core>

#include <string>
#include <vector>

#include "se2mpc/controller.hpp"
#include "se2mpc/dynamics.hpp"
#include "se2mpc/geometry.hpp"
#include "se2mpc/solver.hpp"

namespace se2mpc {

struct ControllerSpec
{
  ControllerVariant variant{ControllerVariant::Quadratic};
  Kernel kernel{Kernel::ForwardDiff};
  GridMode grid{GridMode::LocalUniform};
  double rate{10.0};          ///< closed-loop frequency [Hz]
  double max_sim_time{60.0};  ///< [s]
  Eigen::VectorXd u_prev;     ///< applied control before the first step
  GoalTolerance tolerance;
  double association_cutoff{5.0};
  int association_k_max{10};
  double decay{0.5};
  /// Goal fields (x_f) are ignored; the scenario goal list drives them.
  QuadraticFormConfig quadratic;
  TimeOptimalConfig time_optimal;
  std::vector<Initialization> initializations;
};

struct Scenario
{
  std::string name;
  std::string model{"diff_drive"};
  ModelParams model_params;
  Footprint footprint{DiscFootprint{0.0}};
  double d_min{0.0};
  std::vector<Obstacle> obstacles;  ///< explicit obstacles, serialized as items
  std::string map_file;             ///< optional occupancy map, as written in the scenario
  std::vector<Obstacle> map_obstacles;
  ControlBounds bounds;
  Eigen::VectorXd start;
  std::vector<Eigen::VectorXd> goals;
  /// Optional per-goal initialization waypoints, a stand-in for a global planner's path.
  /// When present and non-empty for a goal they replace the controller initializations on that leg.
  std::vector<std::vector<Eigen::VectorXd>> guides;
  /// Optional per-goal intermediate poses, driven to in order as x_f before the goal itself.
  /// They stand in for a global planner's intermediate goals and do not count as goals reached.
  std::vector<std::vector<Eigen::VectorXd>> approaches;
  ControllerSpec controller;
  SolverConfig solver;

  /// Explicit obstacles followed by the map cells.
  std::vector<Obstacle> all_obstacles() const;
};

/// ASCII occupancy grid; rows[0] is the top row (highest y).
struct OccupancyMap
{
  int width{0};
  int height{0};
  double resolution{0.1};
  std::vector<std::string> rows;

  int occupied_cells() const;
  /// One point obstacle per occupied cell, at the cell center.
  std::vector<Obstacle> point_obstacles() const;
};

/// Reads "width height resolution" then `height` rows of '#'/'.'; lines starting with ';' before the header are skipped.
/// Throws std::runtime_error when the file is missing or malformed.
OccupancyMap load_occupancy_map(const std::string& path);
OccupancyMap parse_occupancy_map(const std::string& text);

/// Directory holding maps/ and scenarios/ of the source tree.
std::string data_dir();

/// Six segments: the two road edges and the three walls of the lot, in that order.
std::vector<Obstacle> parking_road_segments();
/// Lot interior, x in [-5.5, -2.5], y in [-8.85, -4.1].
bool inside_parking_lot(const Eigen::Vector2d& p);

Scenario parking_scenario();
/// Controller variant selects which set of controller parameters is active.
Scenario diff_drive_scenario(ControllerVariant variant = ControllerVariant::Quadratic);

/// "parking" or "diffdrive"; throws std::invalid_argument for other names.
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_names();

/// Throws std::invalid_argument on hard errors; returns warnings (empty for a clean scenario).
std::vector<std::string> validate_scenario(const Scenario& s);

std::string scenario_to_json(const Scenario& s);
/// `base_dir` resolves a relative map path (falls back to data_dir()).
Scenario scenario_from_json(const std::string& text, const std::string& base_dir = "");
Scenario load_scenario(const std::string& path);

/// Controller setup for the scenario's first goal.
MpcSetup make_setup(const Scenario& s);
MpcController make_controller(const Scenario& s);

}  // namespace se2mpc

#endif  // SE2MPC_SCENARIOS_HPP_
