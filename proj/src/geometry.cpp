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

#include "se2mpc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace se2mpc {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Proper or touching intersection of two non-degenerate segments.
bool segments_intersect(const Vec2& a1, const Vec2& b1, const Vec2& a2, const Vec2& b2)
{
  const Vec2 r  = b1 - a1;
  const Vec2 s  = b2 - a2;
  const double d1 = cross(r, a2 - a1);
  const double d2 = cross(r, b2 - a1);
  const double d3 = cross(s, a1 - a2);
  const double d4 = cross(s, b1 - a2);
  return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

}  // namespace

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b)
{
  const Vec2 ab   = b - a;
  const double l2 = ab.squaredNorm();
  if (l2 <= 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / l2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double dist_segment_segment(const Vec2& a1, const Vec2& b1, const Vec2& a2, const Vec2& b2)
{
  if (segments_intersect(a1, b1, a2, b2)) return 0.0;
  // non-intersecting: the minimum is attained at an endpoint of one of the segments
  return std::min({dist_point_segment(a1, a2, b2), dist_point_segment(b1, a2, b2), dist_point_segment(a2, a1, b1),
                   dist_point_segment(b2, a1, b1)});
}

Capsule footprint_capsule(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose)
{
  const Vec2 c = pose.head<2>();
  return std::visit(overloaded{[&](const DiscFootprint& d) { return Capsule{c, c, d.radius}; },
                               [&](const StadiumFootprint& s) {
                                 const Vec2 dir(std::cos(pose(2)), std::sin(pose(2)));
                                 return Capsule{c - s.rear_offset * dir, c + (s.length - s.rear_offset) * dir,
                                                s.radius};
                               }},
                    fp);
}

Capsule obstacle_capsule(const Obstacle& obs, double t)
{
  return std::visit(overloaded{[](const PointObstacle& o) { return Capsule{o.p, o.p, 0.0}; },
                               [](const SegmentObstacle& o) { return Capsule{o.a, o.b, 0.0}; },
                               [t](const MovingStadiumObstacle& o) {
                                 const Vec2 a = o.origin + Vec2(o.velocity * t, 0.0);
                                 return Capsule{a, a + Vec2(o.length, 0.0), o.radius};
                               }},
                    obs);
}

bool is_dynamic(const Obstacle& obs) { return std::holds_alternative<MovingStadiumObstacle>(obs); }

double separation(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose, const Obstacle& obs, double t)
{
  const Capsule r = footprint_capsule(fp, pose);
  const Capsule o = obstacle_capsule(obs, t);
  return dist_segment_segment(r.a, r.b, o.a, o.b) - r.radius - o.radius;
}

double min_distance(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose, const Obstacle& obs, double t)
{
  return std::max(0.0, separation(fp, pose, obs, t));
}

CollisionCheck in_collision_free_set(const Footprint& fp, const Eigen::Ref<const Eigen::Vector3d>& pose,
                                     std::span<const Obstacle> obstacles, double t, const SeparationSpec& spec)
{
  CollisionCheck out;
  out.distances.reserve(obstacles.size());
  for (const Obstacle& o : obstacles)
  {
    const double d = min_distance(fp, pose, o, t);
    out.distances.push_back(d);
    if (d < spec.d_min) out.collision_free = false;
  }
  return out;
}

std::vector<std::vector<int>> associate_obstacles(const Footprint& fp, std::span<const Eigen::Vector3d> states,
                                                  std::span<const double> times, std::span<const Obstacle> obstacles,
                                                  double cutoff, int k_max)
{
  if (!(cutoff > 0.0) || k_max < 1) throw std::invalid_argument("associate_obstacles: need cutoff > 0, k_max >= 1");
  if (times.size() != states.size()) throw std::invalid_argument("associate_obstacles: times/states size mismatch");

  std::vector<std::vector<int>> out(states.size());
  std::vector<std::pair<double, int>> candidates;
  for (std::size_t i = 0; i < states.size(); ++i)
  {
    candidates.clear();
    for (std::size_t l = 0; l < obstacles.size(); ++l)
    {
      const double d = min_distance(fp, states[i], obstacles[l], times[i]);
      if (d <= cutoff) candidates.emplace_back(d, static_cast<int>(l));
    }
    const std::size_t keep = std::min(candidates.size(), static_cast<std::size_t>(k_max));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end());
    out[i].reserve(keep);
    for (std::size_t j = 0; j < keep; ++j) out[i].push_back(candidates[j].second);
  }
  return out;
}

}  // namespace se2mpc
