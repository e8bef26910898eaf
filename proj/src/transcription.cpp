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

#include "se2mpc/transcription.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace se2mpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool cond, const std::string& msg)
{
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace

double TrajectoryGrid::final_time() const
{
  double t = 0.0;
  for (double dt : dts) t += dt;
  return t;
}

void TrajectoryGrid::validate() const
{
  require(!controls.empty(), "TrajectoryGrid: N must be >= 1");
  require(states.size() == controls.size() + 1, "TrajectoryGrid: need N+1 states");
  require(dts.size() == controls.size(), "TrajectoryGrid: need N time intervals");
  for (double dt : dts) require(dt > 0.0, "TrajectoryGrid: time intervals must be positive");
}

void OcpDefinition::validate() const
{
  require(model != nullptr, "OcpDefinition: model missing");
  const Eigen::Index p = model->state_dim();
  const Eigen::Index q = model->control_dim();
  bounds.validate();
  require(bounds.dim() == q, "OcpDefinition: control bound dimension mismatch");
  require(boundary.u_prev.size() == q, "OcpDefinition: u_prev dimension mismatch");
  require(boundary.u_final.size() == q, "OcpDefinition: u_final dimension mismatch");
  require(boundary.dt_prev > 0.0, "OcpDefinition: dt_prev must be positive");
  require(x_goal.size() == p, "OcpDefinition: goal dimension mismatch");
  require(dt_min > 0.0 && dt_max >= dt_min, "OcpDefinition: need 0 < dt_min <= dt_max");
  if (cost.kind == CostKind::Quadratic)
  {
    require(cost.Q.rows() == p && cost.Q.cols() == p, "OcpDefinition: Q must be p x p");
    require(cost.Qf.rows() == p && cost.Qf.cols() == p, "OcpDefinition: Qf must be p x p");
  }
  if (cost.kind != CostKind::MinimumTime)
    require(cost.R.rows() == q && cost.R.cols() == q, "OcpDefinition: R must be q x q");
  if (state_lower) require(state_lower->size() == p, "OcpDefinition: state bound dimension mismatch");
  if (state_upper) require(state_upper->size() == p, "OcpDefinition: state bound dimension mismatch");
  require(d_min >= 0.0, "OcpDefinition: d_min must be non-negative");
}

Eigen::VectorXd defect(Kernel kernel, const SystemModel& model, const Eigen::Ref<const Eigen::VectorXd>& x_k,
                       const Eigen::Ref<const Eigen::VectorXd>& x_next, const Eigen::Ref<const Eigen::VectorXd>& u_k,
                       double dt)
{
  if (!(dt > 0.0)) throw std::invalid_argument("defect: dt must be positive");
  const TagList tags  = model.state_tags();
  Eigen::VectorXd phi = generic_boxminus(x_next, x_k, tags) / dt;
  if (kernel == Kernel::ForwardDiff)
    phi -= model(x_k, u_k);
  else
    phi -= 0.5 * (model(x_k, u_k) + model(x_next, u_k));
  return phi;
}

double time_of_state(int k, const TrajectoryGrid& grid)
{
  if (k < 0 || k > grid.N()) throw std::out_of_range("time_of_state: k outside [0, N]");
  if (k == 0) return 0.0;
  const int interval = std::min(k, grid.N() - 1);
  return k * grid.dts[static_cast<std::size_t>(interval)];
}

TrajectoryGrid initialize_guess(const Eigen::VectorXd& x_start, const Eigen::VectorXd& x_goal, int N, double dt_init,
                                Eigen::Index control_dim, const TagList& tags,
                                const std::vector<Eigen::VectorXd>& waypoints)
{
  require(N >= 1, "initialize_guess: N must be >= 1");
  require(dt_init > 0.0, "initialize_guess: dt_init must be positive");

  std::vector<Eigen::VectorXd> knots;
  knots.push_back(x_start);
  for (const auto& w : waypoints) knots.push_back(w);
  knots.push_back(x_goal);
  const int segments = static_cast<int>(knots.size()) - 1;

  TrajectoryGrid g;
  g.states.reserve(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k)
  {
    const double s   = static_cast<double>(k) * segments / N;
    const int seg    = std::min(static_cast<int>(std::floor(s)), segments - 1);
    const double tau = s - seg;
    const auto& a    = knots[static_cast<std::size_t>(seg)];
    const auto& b    = knots[static_cast<std::size_t>(seg) + 1];
    g.states.push_back(generic_boxplus(a, tau * generic_boxminus(b, a, tags), tags));
  }
  g.controls.assign(static_cast<std::size_t>(N), Eigen::VectorXd::Zero(control_dim));
  g.dts.assign(static_cast<std::size_t>(N), dt_init);
  return g;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& M)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  const Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

TranscribedProblem assemble_nlp(const OcpDefinition& ocp, const TrajectoryGrid& guess)
{
  ocp.validate();
  guess.validate();

  const SystemModel& model = *ocp.model;
  const ModelPtr model_ptr = ocp.model;
  const Eigen::Index p     = model.state_dim();
  const Eigen::Index q     = model.control_dim();
  const int N              = guess.N();
  const TagList tags       = model.state_tags();

  for (const auto& x : guess.states) require(x.size() == p, "assemble_nlp: guess state dimension mismatch");
  for (const auto& u : guess.controls) require(u.size() == q, "assemble_nlp: guess control dimension mismatch");

  TranscribedProblem tp;
  HypergraphProblem& pb = tp.problem;
  GridLayout& lay       = tp.layout;
  const bool var_dt     = !ocp.fixed_dt;
  const bool global_dt  = var_dt && ocp.grid_mode == GridMode::GlobalUniform;
  lay.fixed_dt          = guess.dts.front();

  // (c) box bounds: U on every control, intersected with the rate box around u_p for u_0.
  auto control_vertex = [&](int k) {
    Vertex v = Vertex::make("u" + std::to_string(k), guess.controls[static_cast<std::size_t>(k)], euclidean_tags(q));
    v.lower  = ocp.bounds.lower;
    v.upper  = ocp.bounds.upper;
    if (k == 0)
    {
      const Eigen::VectorXd lo = ocp.boundary.u_prev + ocp.bounds.rate_lower * ocp.boundary.dt_prev;
      const Eigen::VectorXd hi = ocp.boundary.u_prev + ocp.bounds.rate_upper * ocp.boundary.dt_prev;
      const Eigen::VectorXd l  = v.lower.cwiseMax(lo);
      const Eigen::VectorXd h  = v.upper.cwiseMin(hi);
      if ((l.array() <= h.array()).all())
      {
        v.lower = l;
        v.upper = h;
      }
    }
    v.values = v.values.cwiseMax(v.lower).cwiseMin(v.upper);
    return v;
  };
  auto state_vertex = [&](int k) {
    Vertex v = Vertex::make("x" + std::to_string(k), guess.states[static_cast<std::size_t>(k)], tags, k == 0);
    normalize_inplace(v.values, tags);
    for (Eigen::Index i = 0; i < p; ++i)
    {
      if (tags[static_cast<std::size_t>(i)] == ManifoldTag::Angular) continue;
      if (ocp.state_lower) v.lower(i) = (*ocp.state_lower)(i);
      if (ocp.state_upper) v.upper(i) = (*ocp.state_upper)(i);
    }
    return v;
  };
  auto dt_vertex = [&](int k, double value) {
    Vertex v = Vertex::make("dt" + std::to_string(k), Eigen::VectorXd::Constant(1, value), euclidean_tags(1));
    v.lower(0) = ocp.dt_min;
    v.upper(0) = ocp.dt_max;
    v.values(0) = std::clamp(value, ocp.dt_min, ocp.dt_max);
    return v;
  };

  // z = (u_0, x_0, Δt_0, ..., u_{N-1}, x_{N-1}, Δt_{N-1}, x_N)
  for (int k = 0; k < N; ++k)
  {
    lay.control_ids.push_back(pb.add_vertex(control_vertex(k)));
    lay.state_ids.push_back(pb.add_vertex(state_vertex(k)));
    if (var_dt && !global_dt) lay.dt_ids.push_back(pb.add_vertex(dt_vertex(k, guess.dts[static_cast<std::size_t>(k)])));
  }
  lay.state_ids.push_back(pb.add_vertex(state_vertex(N)));
  if (global_dt)
  {
    double mean_dt = guess.final_time() / N;
    const int id   = pb.add_vertex(dt_vertex(0, mean_dt));
    lay.dt_ids.assign(static_cast<std::size_t>(N), id);
  }

  const double fixed_dt = lay.fixed_dt;
  auto dt_of            = [var_dt, fixed_dt](EdgeInputs in, std::size_t slot) {
    return var_dt ? (*in[slot])(0) : fixed_dt;
  };

  // (a) objective
  const Eigen::VectorXd x_goal = ocp.x_goal;
  switch (ocp.cost.kind)
  {
    case CostKind::Quadratic:
    {
      const Eigen::MatrixXd Lq  = psd_sqrt(ocp.cost.Q);
      const Eigen::MatrixXd Lr  = psd_sqrt(ocp.cost.R);
      const Eigen::MatrixXd Lqf = psd_sqrt(ocp.cost.Qf);
      const Eigen::MatrixXd Q   = ocp.cost.Q;
      const Eigen::MatrixXd R   = ocp.cost.R;
      for (int k = 0; k < N; ++k)
      {
        Edge e;
        e.family = "running_cost";
        e.kind   = EdgeKind::Objective;
        if (!var_dt)
        {
          // ℓ·Δt as a squared norm: sqrt(Δt)·[Lq (x ⊟ x_f); Lr u]
          e.aggregation = Aggregation::SquaredNorm;
          e.dim         = static_cast<int>(p + q);
          e.vertices    = {lay.state_ids[k], lay.control_ids[k]};
          e.residual    = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
            const double s = std::sqrt(fixed_dt);
            r.head(p)      = s * (Lq * generic_boxminus(*in[0], x_goal, tags));
            r.tail(q)      = s * (Lr * *in[1]);
          };
        }
        else
        {
          e.aggregation = Aggregation::Sum;
          e.dim         = 1;
          e.vertices    = {lay.state_ids[k], lay.control_ids[k], lay.dt_ids[k]};
          e.residual    = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
            const Eigen::VectorXd dx = generic_boxminus(*in[0], x_goal, tags);
            const Eigen::VectorXd& u = *in[1];
            r(0) = (dx.dot(Q * dx) + u.dot(R * u)) * (*in[2])(0);
          };
        }
        pb.add_edge(std::move(e));
      }
      Edge t;
      t.family      = "terminal_cost";
      t.kind        = EdgeKind::Objective;
      t.aggregation = Aggregation::SquaredNorm;
      t.dim         = static_cast<int>(p);
      t.vertices    = {lay.state_ids[N]};
      t.residual    = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
        r = Lqf * generic_boxminus(*in[0], x_goal, tags);
      };
      pb.add_edge(std::move(t));
      break;
    }
    case CostKind::MinimumTime:
    case CostKind::Hybrid:
    {
      const bool hybrid       = ocp.cost.kind == CostKind::Hybrid;
      const Eigen::MatrixXd R = hybrid ? ocp.cost.R : Eigen::MatrixXd::Zero(q, q);
      for (int k = 0; k < N; ++k)
      {
        Edge e;
        e.family      = "running_cost";
        e.kind        = EdgeKind::Objective;
        e.aggregation = Aggregation::Sum;
        e.dim         = 1;
        if (var_dt)
        {
          if (hybrid)
          {
            e.vertices = {lay.control_ids[k], lay.dt_ids[k]};
            e.residual = [R](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
              const Eigen::VectorXd& u = *in[0];
              r(0)                     = (1.0 + u.dot(R * u)) * (*in[1])(0);
            };
          }
          else
          {
            e.vertices = {lay.dt_ids[k]};
            e.residual = [](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) { r(0) = (*in[0])(0); };
          }
        }
        else
        {
          e.vertices = {lay.control_ids[k]};
          e.residual = [R, fixed_dt](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
            const Eigen::VectorXd& u = *in[0];
            r(0)                     = (1.0 + u.dot(R * u)) * fixed_dt;
          };
        }
        pb.add_edge(std::move(e));
      }
      break;
    }
  }

  // (b) collocation defects
  const Kernel kernel = ocp.kernel;
  for (int k = 0; k < N; ++k)
  {
    Edge e;
    e.family   = "defect";
    e.kind     = EdgeKind::Equality;
    e.dim      = static_cast<int>(p);
    e.vertices = {lay.state_ids[k], lay.state_ids[k + 1], lay.control_ids[k]};
    if (var_dt) e.vertices.push_back(lay.dt_ids[k]);
    e.residual = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
      const double dt = dt_of(in, 3);
      r               = generic_boxminus(*in[1], *in[0], tags) / dt;
      if (kernel == Kernel::ForwardDiff)
        r -= (*model_ptr)(*in[0], *in[2]);
      else
        r -= 0.5 * ((*model_ptr)(*in[0], *in[2]) + (*model_ptr)(*in[1], *in[2]));
    };
    pb.add_edge(std::move(e));
  }

  // (d) control deviation (u_{k+1} - u_k)/Δt_k ∈ U̇, including both boundary terms
  std::vector<Eigen::Index> rate_hi, rate_lo;
  for (Eigen::Index i = 0; i < q; ++i)
  {
    if (std::isfinite(ocp.bounds.rate_upper(i))) rate_hi.push_back(i);
    if (std::isfinite(ocp.bounds.rate_lower(i))) rate_lo.push_back(i);
  }
  const int rate_rows = static_cast<int>(rate_hi.size() + rate_lo.size());
  if (rate_rows > 0)
  {
    const Eigen::VectorXd rate_u = ocp.bounds.rate_upper;
    const Eigen::VectorXd rate_l = ocp.bounds.rate_lower;
    auto fill                    = [=](const Eigen::VectorXd& du, double dt, Eigen::Ref<Eigen::VectorXd> r) {
      Eigen::Index row = 0;
      for (Eigen::Index i : rate_hi) r(row++) = du(i) / dt - rate_u(i);
      for (Eigen::Index i : rate_lo) r(row++) = rate_l(i) - du(i) / dt;
    };

    {
      Edge e;
      e.family                    = "control_deviation";
      e.kind                      = EdgeKind::Inequality;
      e.dim                       = rate_rows;
      e.vertices                  = {lay.control_ids[0]};
      const Eigen::VectorXd u_prev = ocp.boundary.u_prev;
      const double dt_prev         = ocp.boundary.dt_prev;
      e.residual = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) { fill(*in[0] - u_prev, dt_prev, r); };
      pb.add_edge(std::move(e));
    }
    for (int k = 0; k + 1 < N; ++k)
    {
      Edge e;
      e.family   = "control_deviation";
      e.kind     = EdgeKind::Inequality;
      e.dim      = rate_rows;
      e.vertices = {lay.control_ids[k], lay.control_ids[k + 1]};
      if (var_dt) e.vertices.push_back(lay.dt_ids[k]);
      e.residual = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) { fill(*in[1] - *in[0], dt_of(in, 2), r); };
      pb.add_edge(std::move(e));
    }
    {
      Edge e;
      e.family                     = "control_deviation";
      e.kind                       = EdgeKind::Inequality;
      e.dim                        = rate_rows;
      e.vertices                   = {lay.control_ids[N - 1]};
      if (var_dt) e.vertices.push_back(lay.dt_ids[N - 1]);
      const Eigen::VectorXd u_final = ocp.boundary.u_final;
      e.residual = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) { fill(u_final - *in[0], dt_of(in, 1), r); };
      pb.add_edge(std::move(e));
    }
  }

  // (e) local uniform grid: Δt_k = Δt_{k+1}
  if (var_dt && !global_dt)
  {
    for (int k = 0; k + 1 < N; ++k)
    {
      Edge e;
      e.family   = "dt_uniformity";
      e.kind     = EdgeKind::Equality;
      e.dim      = 1;
      e.vertices = {lay.dt_ids[k], lay.dt_ids[k + 1]};
      e.residual = [](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) { r(0) = (*in[0])(0) - (*in[1])(0); };
      pb.add_edge(std::move(e));
    }
  }

  // (f) terminal condition x_N ⊟ x_f = 0
  if (ocp.terminal == TerminalSet::Pinned)
  {
    Edge e;
    e.family   = "terminal_equality";
    e.kind     = EdgeKind::Equality;
    e.dim      = static_cast<int>(p);
    e.vertices = {lay.state_ids[N]};
    e.residual = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) { r = generic_boxminus(*in[0], x_goal, tags); };
    pb.add_edge(std::move(e));
  }

  // (g) obstacles: d_min - d_l(x_k, t_0 + kΔt_k) <= 0 for associated pairs
  tp.association.assign(static_cast<std::size_t>(N) + 1, {});
  if (!ocp.obstacles.empty())
  {
    std::vector<Eigen::Vector3d> poses;
    std::vector<double> times;
    for (int k = 0; k <= N; ++k)
    {
      poses.emplace_back(guess.states[static_cast<std::size_t>(k)].head<3>());
      times.push_back(ocp.time_offset + time_of_state(k, guess));
    }
    tp.association = associate_obstacles(ocp.footprint, poses, times, ocp.obstacles, ocp.association_cutoff,
                                         ocp.association_k_max);
    const double t0   = ocp.time_offset;
    const double dmin = ocp.d_min;
    for (int k = 1; k <= N; ++k)
    {
      for (int l : tp.association[static_cast<std::size_t>(k)])
      {
        const Obstacle obs  = ocp.obstacles[static_cast<std::size_t>(l)];
        const Footprint fp  = ocp.footprint;
        const bool timed    = is_dynamic(obs) && var_dt;
        const int interval  = std::min(k, N - 1);
        Edge e;
        e.family   = "obstacle";
        e.kind     = EdgeKind::Inequality;
        e.dim      = 1;
        e.vertices = {lay.state_ids[k]};
        if (timed)
        {
          e.vertices.push_back(lay.dt_ids[interval]);
          e.residual = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
            r(0) = dmin - separation(fp, in[0]->head<3>(), obs, t0 + k * (*in[1])(0));
          };
        }
        else
        {
          const double t = t0 + k * fixed_dt;
          e.residual     = [=](EdgeInputs in, Eigen::Ref<Eigen::VectorXd> r) {
            r(0) = dmin - separation(fp, in[0]->head<3>(), obs, t);
          };
        }
        pb.add_edge(std::move(e));
      }
    }
  }
  return tp;
}

TrajectoryGrid extract_grid(const TranscribedProblem& tp)
{
  const HypergraphProblem& pb = tp.problem;
  const GridLayout& lay       = tp.layout;
  TrajectoryGrid g;
  for (int id : lay.state_ids) g.states.push_back(pb.vertex(id).values);
  for (int id : lay.control_ids) g.controls.push_back(pb.vertex(id).values);
  if (lay.dt_ids.empty())
    g.dts.assign(lay.control_ids.size(), lay.fixed_dt);
  else
    for (int id : lay.dt_ids) g.dts.push_back(pb.vertex(id).values(0));
  return g;
}

}  // namespace se2mpc
