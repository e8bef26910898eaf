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

#include "se2mpc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace se2mpc {

std::string to_string(Outcome o)
{
  switch (o)
  {
    case Outcome::Finished: return "finished";
    case Outcome::Collision: return "collision";
    case Outcome::TimedOut: return "timed_out";
    case Outcome::Error: return "error";
  }
  return "unknown";
}

namespace {

double obstacle_clearance(const Footprint& fp, const Eigen::VectorXd& x, const std::vector<Obstacle>& obstacles,
                          double t)
{
  double d = std::numeric_limits<double>::infinity();
  const Eigen::Vector3d pose = x.head<3>();
  for (const auto& o : obstacles) d = std::min(d, separation(fp, pose, o, t));
  return d;
}

}  // namespace

ClosedLoopTrace run_closed_loop(const Scenario& s, MpcController& controller, double rate, double max_sim_time,
                                const TraceCallback& on_row)
{
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("run_closed_loop: rate must be positive");
  if (s.goals.empty()) throw std::invalid_argument("run_closed_loop: scenario has no goals");

  ClosedLoopTrace trace;
  trace.rate          = rate;
  const double period = 1.0 / rate;
  const auto obstacles = s.all_obstacles();
  const SystemModel& plant = *controller.setup().model;
  controller.setup().sample_time = period;

  // Flattened x_f sequence: each goal's approach poses, then the goal itself.
  struct Target
  {
    Eigen::VectorXd pose;
    std::size_t goal;
    bool first;  ///< first target of its leg, where the leg's guide applies
    bool last;   ///< the goal itself
  };
  std::vector<Target> targets;
  for (std::size_t i = 0; i < s.goals.size(); ++i)
  {
    const std::size_t k = i < s.approaches.size() ? s.approaches[i].size() : 0;
    for (std::size_t a = 0; a < k; ++a) targets.push_back({s.approaches[i][a], i, a == 0, false});
    targets.push_back({s.goals[i], i, k == 0, true});
  }

  const std::vector<Initialization> base_inits = controller.setup().initializations;
  auto switch_target = [&](std::size_t j) {
    const Target& tg = targets[j];
    if (tg.first && tg.goal < s.guides.size() && !s.guides[tg.goal].empty())
      controller.setup().initializations = {Initialization{"guide", s.guides[tg.goal], 0.0}};
    else
      controller.setup().initializations = base_inits;
    controller.set_goal(tg.pose);
  };

  std::size_t target = 0;
  switch_target(target);
  Eigen::VectorXd x = s.start;

  for (long n = 0;; ++n)
  {
    const double t = static_cast<double>(n) * period;
    if (t > max_sim_time + 1e-9)
    {
      trace.outcome = Outcome::TimedOut;
      break;
    }
    TraceRow row;
    row.t          = t;
    row.x          = x;
    row.min_dist   = obstacle_clearance(s.footprint, x, obstacles, t);
    row.goal_index = static_cast<int>(targets[target].goal);
    if (row.min_dist < 0.0)
    {
      row.collision = true;
      row.u         = Eigen::VectorXd::Zero(plant.control_dim());
      trace.rows.push_back(row);
      if (on_row) on_row(trace.rows.back());
      trace.outcome = Outcome::Collision;
      break;
    }

    StepResult res;
    try
    {
      const Eigen::VectorXd applied = controller.state().u_prev;
      res            = controller.step(x, t);
      row.solve_time = res.diag.solve_time;
      while (res.diag.status == StepStatus::Finished && target + 1 < targets.size())
      {
        if (targets[target].last) ++trace.goals_reached;
        switch_target(++target);
        controller.state().u_prev = applied;
        res = controller.step(x, t);
        row.solve_time += res.diag.solve_time;
      }
    }
    catch (const std::exception& e)
    {
      trace.outcome = Outcome::Error;
      trace.message = e.what();
      break;
    }
    row.u          = res.u;
    row.status        = res.diag.status;
    row.solver_status = res.diag.solver_status;
    row.iterations    = res.diag.iterations;
    row.N          = res.diag.N;
    row.tf_star    = res.diag.tf_star;
    row.goal_index = static_cast<int>(targets[target].goal);
    if (row.solve_time > period) ++trace.overruns;
    trace.rows.push_back(row);
    if (on_row) on_row(trace.rows.back());

    if (res.diag.status == StepStatus::Finished)
    {
      ++trace.goals_reached;
      trace.outcome = Outcome::Finished;
      break;
    }
    try
    {
      x = plant_integrate(plant, x, res.u, period);
    }
    catch (const std::exception& e)
    {
      trace.outcome = Outcome::Error;
      trace.message = e.what();
      break;
    }
  }
  return trace;
}

ClosedLoopTrace run_closed_loop(const Scenario& s, const TraceCallback& on_row)
{
  MpcController c = make_controller(s);
  return run_closed_loop(s, c, s.controller.rate, s.controller.max_sim_time, on_row);
}

double quantile(std::vector<double> values, double q)
{
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo    = static_cast<std::size_t>(std::floor(pos));
  const auto hi    = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Metrics compute_metrics(const ClosedLoopTrace& trace)
{
  if (trace.rows.empty()) throw std::invalid_argument("compute_metrics: empty trace");
  Metrics m;
  const double period = 1.0 / trace.rate;
  m.travel_time       = trace.rows.back().t;
  std::vector<double> solve;
  solve.reserve(trace.rows.size());
  for (std::size_t i = 0; i < trace.rows.size(); ++i)
  {
    const TraceRow& r = trace.rows[i];
    if (i > 0) m.path_length += (r.x.head<2>() - trace.rows[i - 1].x.head<2>()).norm();
    m.control_effort += r.u.squaredNorm() * period;
    solve.push_back(r.solve_time);
  }
  m.cpu_median = quantile(solve, 0.5);
  m.cpu_q05    = quantile(solve, 0.05);
  m.cpu_q95    = quantile(solve, 0.95);
  return m;
}

std::string trace_to_csv(const ClosedLoopTrace& trace, bool wall_clock)
{
  std::ostringstream out;
  out << "t,x,y,theta,u1,u2,solve_ms,status,N,tf_star,min_dist\n";
  char buf[512];
  for (const auto& r : trace.rows)
  {
    const double u1 = r.u.size() > 0 ? r.u(0) : 0.0;
    const double u2 = r.u.size() > 1 ? r.u(1) : 0.0;
    const std::string status = r.collision ? "collision" : to_string(r.status);
    std::snprintf(buf, sizeof(buf), "%.3f,%.9g,%.9g,%.9g,%.9g,%.9g,%.3f,%s,%d,%.9g,%.9g\n", r.t, r.x(0), r.x(1),
                  r.x(2), u1, u2, wall_clock ? r.solve_time * 1e3 : 0.0, status.c_str(), r.N, r.tf_star, r.min_dist);
    out << buf;
  }
  return out.str();
}

}  // namespace se2mpc
