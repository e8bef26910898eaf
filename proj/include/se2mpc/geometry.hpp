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

#ifndef SE2MPC_GEOMETRY_HPP_
#define SE2MPC_GEOMETRY_HPP_

/**
 * @file
 * @brief Robot footprints, obstacles and closed-form minimum distances.
 *
 * Every supported shape is a line segment (possibly degenerate) inflated by a
 * radius, so all distance queries reduce to segment-segment distances.
 */

#include <Eigen/Core>

#include <span>
#include <variant>
#include <vector>

namespace se2mpc {

using Vec2 = Eigen::Vector2d;

struct DiscFootprint
{
  double radius{0.0};
};

/// Pill shape: axis from -rear_offset to (length - rear_offset) along the heading, inflated by radius.
struct StadiumFootprint
{
  double rear_offset{0.0};
  double length{0.0};
  double radius{0.0};
};

using Footprint = std::variant<DiscFootprint, StadiumFootprint>;

struct PointObstacle
{
  Vec2 p{Vec2::Zero()};
};

struct SegmentObstacle
{
  Vec2 a{Vec2::Zero()};
  Vec2 b{Vec2::Zero()};
};

/// Stadium translating along +x: axis from origin + (v t, 0) to origin + (length + v t, 0).
struct MovingStadiumObstacle
{
  Vec2 origin{Vec2::Zero()};
  double length{0.0};
  double radius{0.0};
  double velocity{0.0};
};

using Obstacle = std::variant<PointObstacle, SegmentObstacle, MovingStadiumObstacle>;

struct SeparationSpec
{
  double d_min{0.0};
};

/// Inflated segment: the set of points within `radius` of segment [a, b].
struct Capsule
{
  Vec2 a;
  Vec2 b;
  double radius;
};

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b);
double dist_segment_segment(const Vec2& a1, const Vec2& b1, const Vec2& a2, const Vec2& b2);

/// Occupancy R(x) of the footprint at pose (x, y, theta).
Capsule footprint_capsule(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose);
/// Occupancy O(t) of an obstacle at time t.
Capsule obstacle_capsule(const Obstacle& obs, double t);

bool is_dynamic(const Obstacle& obs);

/**
 * @brief Axis distance minus both radii. Negative on penetration (bounded below by
 * -(r_robot + r_obstacle)); this is the quantity used in constraint edges.
 */
double separation(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose, const Obstacle& obs, double t);

/// Minimum Euclidean distance between R(x) and O(t), clamped at zero.
double min_distance(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose, const Obstacle& obs, double t);

struct CollisionCheck
{
  bool collision_free{true};
  std::vector<double> distances;
};

/// d_l(x, t) >= d_min for all l (closed inequality).
CollisionCheck in_collision_free_set(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose,
                                     std::span<const Obstacle> obstacles, double t, const SeparationSpec& spec);

/**
 * @brief For every state, the indices of at most k_max nearest obstacles within cutoff.
 *
 * Distances are evaluated at each state's scheduled time `times[i]`. Ties keep the
 * lower obstacle index first.
 */
std::vector<std::vector<int>> associate_obstacles(const Footprint& fp, std::span<const Eigen::Vector3d> states,
                                                  std::span<const double> times, std::span<const Obstacle> obstacles,
                                                  double cutoff, int k_max);

}  // namespace se2mpc

#endif  // SE2MPC_GEOMETRY_HPP_
