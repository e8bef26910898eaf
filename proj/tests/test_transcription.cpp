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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "se2mpc/transcription.hpp"

namespace se2mpc {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector3d unicycle_arc(double v, double w, double t)
{
  return {v / w * std::sin(w * t), v / w * (1.0 - std::cos(w * t)), norm_angle(w * t)};
}

OcpDefinition diff_drive_ocp(CostKind kind, bool fixed_dt)
{
  OcpDefinition ocp;
  ocp.model    = std::make_shared<DiffDriveModel>();
  ocp.fixed_dt = fixed_dt;
  ocp.bounds   = {Eigen::Vector2d(-0.2, -0.4), Eigen::Vector2d(0.4, 0.4), Eigen::Vector2d(-0.25, -0.25),
                  Eigen::Vector2d(0.25, 0.25)};
  ocp.boundary = {Eigen::Vector2d::Zero(), 0.1, Eigen::Vector2d::Zero()};
  ocp.cost.kind = kind;
  ocp.cost.Q    = Eigen::Vector3d(1, 1, 0.25).asDiagonal();
  ocp.cost.Qf   = ocp.cost.Q;
  ocp.cost.R    = Eigen::Matrix2d::Identity() * 2.0;
  ocp.x_goal    = Eigen::Vector3d(1, 0.5, 1.0);
  return ocp;
}

OcpDefinition parking_ocp()
{
  OcpDefinition ocp;
  ocp.model     = std::make_shared<BicycleModel>(BicycleParams{1.1, 1.7});
  ocp.kernel    = Kernel::CrankNicolson;
  ocp.bounds    = {Eigen::Vector2d(-4, -0.65), Eigen::Vector2d(4, 0.65), Eigen::Vector2d(-3, -0.31),
                   Eigen::Vector2d(1.5, 0.31)};
  ocp.boundary  = {Eigen::Vector2d::Zero(), 0.1, Eigen::Vector2d::Zero()};
  ocp.cost.kind = CostKind::Hybrid;
  ocp.cost.R    = Eigen::Vector2d(0.01, 0.0).asDiagonal();
  ocp.x_goal    = Eigen::Vector3d(-4, -6, 1.57);
  ocp.terminal  = TerminalSet::Pinned;
  ocp.footprint = StadiumFootprint{1.7, 2.8, 0.9};
  ocp.d_min     = 0.2;
  ocp.obstacles = {SegmentObstacle{{-20, 3.25}, {10, 3.25}}, MovingStadiumObstacle{{-13, -1.25}, 2.5, 0.9, 1.0}};
  return ocp;
}

TEST(Defect, Examples)
{
  const DiffDriveModel m;
  const Eigen::VectorXd a =
      defect(Kernel::ForwardDiff, m, Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 0, 0), Eigen::Vector2d(1, 0), 1.0);
  EXPECT_LT(a.norm(), 1e-15);
  for (Kernel k : {Kernel::ForwardDiff, Kernel::CrankNicolson})
  {
    const Eigen::VectorXd b = defect(k, m, Eigen::Vector3d(0, 0, 3.1), Eigen::Vector3d(0, 0, norm_angle(3.2)),
                                     Eigen::Vector2d(0, 0.1), 1.0);
    EXPECT_NEAR(b.norm(), 0.0, 1e-12);
  }
  EXPECT_THROW(defect(Kernel::ForwardDiff, m, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), Eigen::Vector2d::Zero(),
                      0.0),
               std::invalid_argument);
}

TEST(Defect, CrankNicolsonSmallerAndHigherOrderOnArc)
{
  const DiffDriveModel m;
  const double dt = 0.1;
  const Eigen::VectorXd fd =
      defect(Kernel::ForwardDiff, m, Eigen::Vector3d::Zero(), unicycle_arc(1, 1, dt), Eigen::Vector2d(1, 1), dt);
  const Eigen::VectorXd cn =
      defect(Kernel::CrankNicolson, m, Eigen::Vector3d::Zero(), unicycle_arc(1, 1, dt), Eigen::Vector2d(1, 1), dt);
  // oracle: the arc endpoint gives (sin(dt)/dt - 1, (1 - cos dt)/dt, 0)
  EXPECT_NEAR(fd(0), std::sin(dt) / dt - 1.0, 1e-12);
  EXPECT_NEAR(fd(1), (1.0 - std::cos(dt)) / dt, 1e-12);
  EXPECT_NEAR(fd(2), 0.0, 1e-12);
  EXPECT_LT(cn.norm(), fd.norm());
}

TEST(TimeOfState, Examples)
{
  TrajectoryGrid g;
  g.states.assign(11, Eigen::Vector3d::Zero());
  g.controls.assign(10, Eigen::Vector2d::Zero());
  g.dts.assign(10, 0.1);
  EXPECT_EQ(time_of_state(0, g), 0.0);
  EXPECT_NEAR(time_of_state(10, g), 1.0, 1e-15);
  g.dts.assign(10, 0.2);
  EXPECT_NEAR(time_of_state(5, g), 1.0, 1e-15);
  EXPECT_THROW(time_of_state(11, g), std::out_of_range);
}

TEST(InitializeGuess, Examples)
{
  const TrajectoryGrid a =
      initialize_guess(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(2, 0, 0), 2, 0.1, 2, se2_tags());
  EXPECT_TRUE(a.states[1].isApprox(Eigen::Vector3d(1, 0, 0)));
  EXPECT_EQ(a.controls.size(), 2u);
  EXPECT_EQ(a.controls[0], Eigen::Vector2d::Zero());
  EXPECT_EQ(a.dts, (std::vector<double>{0.1, 0.1}));

  const TrajectoryGrid b =
      initialize_guess(Eigen::Vector3d(0, 0, -3.1), Eigen::Vector3d(0, 0, 1.57), 2, 0.1, 2, se2_tags());
  const double expect = norm_angle(-3.1 + 0.5 * angle_diff(1.57, -3.1));
  EXPECT_NEAR(b.states[1](2), expect, 1e-12);
  EXPECT_NEAR(b.states[1](2), 2.3766, 1e-4);

  const std::vector<Eigen::VectorXd> wps{Eigen::Vector3d(1, 1, 0), Eigen::Vector3d(2, 1, 0)};
  const TrajectoryGrid c =
      initialize_guess(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(3, 0, 0), 3, 0.1, 2, se2_tags(), wps);
  EXPECT_TRUE(c.states[1].isApprox(wps[0]));
  EXPECT_TRUE(c.states[2].isApprox(wps[1]));
  EXPECT_TRUE(c.states[3].isApprox(Eigen::Vector3d(3, 0, 0)));

  EXPECT_THROW(initialize_guess(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 0, 0.1, 2, se2_tags()),
               std::invalid_argument);
  EXPECT_THROW(initialize_guess(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 2, 0.0, 2, se2_tags()),
               std::invalid_argument);
}

TEST(AssembleNlp, GlobalUniformTwoIntervals)
{
  OcpDefinition ocp = diff_drive_ocp(CostKind::MinimumTime, false);
  ocp.grid_mode     = GridMode::GlobalUniform;
  ocp.terminal      = TerminalSet::Pinned;
  const TrajectoryGrid g = initialize_guess(Eigen::Vector3d::Zero(), ocp.x_goal, 2, 0.5, 2, se2_tags());
  const TranscribedProblem tp = assemble_nlp(ocp, g);
  const auto& pb = tp.problem;
  EXPECT_EQ(pb.free_vertex_count(), 5);  // u_0, u_1, x_1, x_2, Δt
  EXPECT_EQ(pb.vertices().size(), 6u);
  EXPECT_EQ(tp.layout.dt_ids.size(), 2u);
  EXPECT_EQ(tp.layout.dt_ids[0], tp.layout.dt_ids[1]);
  const auto fam = pb.family_counts();
  EXPECT_EQ(fam.at("running_cost"), 2);
  EXPECT_EQ(fam.at("defect"), 2);
  EXPECT_EQ(fam.at("control_deviation"), 3);
  EXPECT_EQ(fam.at("terminal_equality"), 1);
  EXPECT_EQ(fam.count("dt_uniformity"), 0u);
  EXPECT_EQ(fam.count("obstacle"), 0u);
  // box bounds on Δt and controls
  const Vertex& dt = pb.vertex(tp.layout.dt_ids[0]);
  EXPECT_EQ(dt.lower(0), ocp.dt_min);
  EXPECT_TRUE(std::isinf(dt.upper(0)));
  EXPECT_EQ(pb.vertex(tp.layout.control_ids[1]).upper, ocp.bounds.upper);
  EXPECT_TRUE(pb.vertex(tp.layout.state_ids[0]).fixed);
}

TEST(AssembleNlp, LocalUniformAddsUniformityEdges)
{
  OcpDefinition ocp = diff_drive_ocp(CostKind::MinimumTime, false);
  const TrajectoryGrid g = initialize_guess(Eigen::Vector3d::Zero(), ocp.x_goal, 5, 0.5, 2, se2_tags());
  const TranscribedProblem tp = assemble_nlp(ocp, g);
  EXPECT_EQ(tp.problem.family_counts().at("dt_uniformity"), 4);
  EXPECT_EQ(tp.layout.dt_ids.size(), 5u);
  EXPECT_EQ(tp.problem.family_counts().count("terminal_equality"), 0u);
}

TEST(AssembleNlp, FixedDtHasNoTemporalVertices)
{
  OcpDefinition ocp = diff_drive_ocp(CostKind::Quadratic, true);
  const TrajectoryGrid g = initialize_guess(Eigen::Vector3d::Zero(), ocp.x_goal, 4, 0.3, 2, se2_tags());
  const TranscribedProblem tp = assemble_nlp(ocp, g);
  EXPECT_TRUE(tp.layout.dt_ids.empty());
  EXPECT_EQ(tp.problem.family_counts().count("dt_uniformity"), 0u);
  for (const Vertex& v : tp.problem.vertices()) EXPECT_EQ(v.name.rfind("dt", 0), std::string::npos);
  EXPECT_EQ(tp.problem.family_counts().at("terminal_cost"), 1);
  EXPECT_DOUBLE_EQ(extract_grid(tp).dts.back(), 0.3);
}

TEST(AssembleNlp, ParkingCounts)
{
  const OcpDefinition ocp = parking_ocp();
  const TrajectoryGrid g = initialize_guess(Eigen::Vector3d(1, 1.75, -3.1), ocp.x_goal, 50, 0.1, 2, se2_tags());
  const TranscribedProblem tp = assemble_nlp(ocp, g);
  const auto fam = tp.problem.family_counts();
  EXPECT_EQ(fam.at("defect"), 50);
  EXPECT_EQ(fam.at("control_deviation"), 51);
  for (const Edge& e : tp.problem.edges())
    if (e.family == "defect") EXPECT_EQ(e.dim, 3);
}

TEST(AssembleNlp, DefectEdgeLocality)
{
  const OcpDefinition ocp = parking_ocp();
  const TrajectoryGrid g = initialize_guess(Eigen::Vector3d(1, 1.75, -3.1), ocp.x_goal, 10, 0.1, 2, se2_tags());
  const TranscribedProblem tp = assemble_nlp(ocp, g);
  int k = 0;
  for (const Edge& e : tp.problem.edges())
  {
    if (e.family != "defect") continue;
    const std::vector<int> expect{tp.layout.state_ids[k], tp.layout.state_ids[k + 1], tp.layout.control_ids[k],
                                  tp.layout.dt_ids[k]};
    EXPECT_EQ(e.vertices, expect);
    ++k;
  }
  EXPECT_EQ(k, 10);
}

TEST(AssembleNlp, FirstControlBoxIncludesRateFromPrevious)
{
  OcpDefinition ocp            = diff_drive_ocp(CostKind::Quadratic, true);
  ocp.boundary.u_prev          = Eigen::Vector2d(0.1, 0.0);
  ocp.boundary.dt_prev         = 0.3;
  const TrajectoryGrid g       = initialize_guess(Eigen::Vector3d::Zero(), ocp.x_goal, 4, 0.3, 2, se2_tags());
  const TranscribedProblem tp  = assemble_nlp(ocp, g);
  const Vertex& u0             = tp.problem.vertex(tp.layout.control_ids[0]);
  EXPECT_NEAR(u0.upper(0), 0.1 + 0.25 * 0.3, 1e-15);
  EXPECT_NEAR(u0.lower(0), 0.1 - 0.25 * 0.3, 1e-15);
  EXPECT_NEAR(u0.upper(1), 0.075, 1e-15);
}

TEST(AssembleNlp, RejectsInconsistentDimensions)
{
  OcpDefinition ocp = diff_drive_ocp(CostKind::Quadratic, true);
  TrajectoryGrid g  = initialize_guess(Eigen::Vector3d::Zero(), ocp.x_goal, 3, 0.3, 2, se2_tags());
  g.controls[1]     = Eigen::Vector3d::Zero();
  EXPECT_THROW(assemble_nlp(ocp, g), std::invalid_argument);
  OcpDefinition bad = diff_drive_ocp(CostKind::Quadratic, true);
  bad.x_goal        = Eigen::Vector2d::Zero();
  EXPECT_THROW(assemble_nlp(bad, initialize_guess(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero(), 3, 0.3, 2,
                                                  se2_tags())),
               std::invalid_argument);
}

TEST(AssembleNlp, ObstacleEdgesSkipPinnedState)
{
  OcpDefinition ocp = diff_drive_ocp(CostKind::MinimumTime, false);
  ocp.footprint     = DiscFootprint{0.17};
  ocp.d_min         = 0.1;
  ocp.obstacles     = {PointObstacle{{0.5, 0.0}}};
  const TrajectoryGrid g = initialize_guess(Eigen::Vector3d::Zero(), Eigen::Vector3d(1, 0, 0), 4, 0.5, 2, se2_tags());
  const TranscribedProblem tp = assemble_nlp(ocp, g);
  EXPECT_EQ(tp.problem.family_counts().at("obstacle"), 4);
  for (const Edge& e : tp.problem.edges())
    if (e.family == "obstacle") EXPECT_NE(e.vertices[0], tp.layout.state_ids[0]);
}

TEST(AssembleNlp, RunningCostIsRightRiemannSum)
{
  OcpDefinition ocp = diff_drive_ocp(CostKind::Quadratic, false);
  ocp.cost.Qf.setZero();
  TrajectoryGrid g = initialize_guess(Eigen::Vector3d(0, 0, 0.2), ocp.x_goal, 3, 0.25, 2, se2_tags());
  g.controls[1]    = Eigen::Vector2d(0.1, -0.2);
  const TranscribedProblem tp = assemble_nlp(ocp, g);
  double expect = 0.0;
  for (int k = 0; k < 3; ++k)
  {
    const Eigen::VectorXd dx = generic_boxminus(g.states[k], ocp.x_goal, se2_tags());
    expect += (dx.dot(ocp.cost.Q * dx) + g.controls[k].dot(ocp.cost.R * g.controls[k])) * 0.25;
  }
  EXPECT_NEAR(tp.problem.objective(), expect, 1e-12);

  // the fixed-dt squared-norm form evaluates to the same value
  OcpDefinition fixed = ocp;
  fixed.fixed_dt      = true;
  EXPECT_NEAR(assemble_nlp(fixed, g).problem.objective(), expect, 1e-12);
}

TEST(AssembleNlp, SeamContinuityUnderWorldRotation)
{
  // rotate the whole world so headings cross ±π; residual norms must not change
  OcpDefinition ocp = parking_ocp();
  ocp.obstacles     = {SegmentObstacle{{-20, 3.25}, {10, 3.25}}, PointObstacle{{-2, 0.5}}};
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> n(-0.3, 0.3);
  TrajectoryGrid g = initialize_guess(Eigen::Vector3d(1, 1.75, -3.1), Eigen::Vector3d(-4, 1.0, 3.0), 8, 0.4, 2,
                                      se2_tags());
  for (auto& u : g.controls) u = Eigen::Vector2d(n(rng), n(rng));
  ocp.x_goal = g.states.back();

  for (double c : {0.3, 2.5, -1.7})
  {
    const Eigen::Rotation2Dd R(c);
    OcpDefinition rot = ocp;
    TrajectoryGrid rg = g;
    for (auto& x : rg.states)
    {
      const Eigen::Vector2d p = R * x.head<2>();
      x                       = Eigen::Vector3d(p(0), p(1), norm_angle(x(2) + c));
    }
    const Eigen::Vector2d gp = R * ocp.x_goal.head<2>();
    rot.x_goal               = Eigen::Vector3d(gp(0), gp(1), norm_angle(ocp.x_goal(2) + c));
    const auto seg           = std::get<SegmentObstacle>(ocp.obstacles[0]);
    const Vec2 pt            = R * std::get<PointObstacle>(ocp.obstacles[1]).p;
    rot.obstacles            = {SegmentObstacle{R * seg.a, R * seg.b}, PointObstacle{pt}};

    const TranscribedProblem a = assemble_nlp(ocp, g);
    const TranscribedProblem b = assemble_nlp(rot, rg);
    ASSERT_EQ(a.problem.edges().size(), b.problem.edges().size());
    for (std::size_t i = 0; i < a.problem.edges().size(); ++i)
    {
      const Edge& ea = a.problem.edges()[i];
      Eigen::VectorXd ra(ea.dim), rb(ea.dim);
      a.problem.evaluate(ea, ra);
      b.problem.evaluate(b.problem.edges()[i], rb);
      EXPECT_NEAR(ra.norm(), rb.norm(), 1e-10) << ea.family;
      if (ea.family == "defect" || ea.family == "terminal_equality") EXPECT_NEAR(ra(2), rb(2), 1e-10);
    }
  }
}

TEST(PsdSqrt, ReconstructsMatrix)
{
  const Eigen::Matrix3d Q = Eigen::Vector3d(1, 1, 0.25).asDiagonal();
  const Eigen::MatrixXd L = psd_sqrt(Q);
  EXPECT_TRUE((L.transpose() * L).isApprox(Q, 1e-12));
  const Eigen::Matrix2d Z = Eigen::Matrix2d::Zero();
  EXPECT_EQ(psd_sqrt(Z), Eigen::MatrixXd::Zero(2, 2));
}

}  // namespace
}  // namespace se2mpc
