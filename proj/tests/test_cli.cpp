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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "se2mpc/scenarios.hpp"

namespace se2mpc {
namespace {

namespace fs = std::filesystem;

struct Result
{
  int code{-1};
  std::string out;
};

/// Runs the CLI with stderr folded into the captured output.
Result cli(const std::string& args)
{
  const std::string cmd = std::string(SE2MPC_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code           = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name)
{
  const fs::path dir = fs::temp_directory_path() / ("se2mpc_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool has_temp_files(const fs::path& dir)
{
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".tmp") return true;
  return false;
}

/// Obstacle-free diff-drive regulation written to a scenario file.
fs::path regulation_file(const fs::path& dir, const Eigen::Vector3d& goal, bool pinned)
{
  Scenario s = diff_drive_scenario(ControllerVariant::Quadratic);
  s.name     = "regulation";
  s.map_file.clear();
  s.map_obstacles.clear();
  s.guides.clear();
  s.approaches.clear();
  s.start = Eigen::Vector3d::Zero();
  s.goals = {goal};
  if (pinned) s.controller.quadratic.terminal = TerminalSet::Pinned;
  const fs::path p = dir / "regulation.json";
  std::ofstream(p) << scenario_to_json(s);
  return p;
}

/// Trace CSV with the wall-clock column blanked.
std::string without_solve_time(const std::string& csv)
{
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line))
  {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (cells.size() > 6) cells[6] = "";
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  }
  return out;
}

TEST(Cli, ParkingClosedLoopWritesArtifacts)
{
  const fs::path dir = scratch("parking");
  const Result r     = cli("run --builtin parking --mode closed-loop --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "metrics.json"));
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  EXPECT_FALSE(has_temp_files(dir));
  EXPECT_NE(read_file(dir / "metrics.json").find("\"outcome\": \"finished\""), std::string::npos);
  EXPECT_EQ(read_file(dir / "trace.csv").rfind("t,x,y,theta,u1,u2,solve_ms,status,N,tf_star,min_dist\n", 0), 0u);
  fs::remove_all(dir);
}

TEST(Cli, DiffDriveQuadUsesNavigationWeights)
{
  const fs::path dir = scratch("quad");
  const Result r = cli("run --builtin diffdrive --controller quad --mode open-loop --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  const Scenario snap = scenario_from_json(
      nlohmann::json::parse(read_file(dir / "config.json")).at("scenario").dump());
  EXPECT_EQ(snap.controller.variant, ControllerVariant::Quadratic);
  EXPECT_TRUE(snap.controller.quadratic.Q.isApprox(Eigen::Vector3d(1, 1, 0.25).asDiagonal().toDenseMatrix()));
  EXPECT_TRUE(snap.controller.quadratic.Qf.isApprox(snap.controller.quadratic.Q));
  EXPECT_TRUE(snap.controller.quadratic.R.isApprox(2.0 * Eigen::Matrix2d::Identity()));
  EXPECT_TRUE(fs::exists(dir / "plan.csv"));
  fs::remove_all(dir);
}

TEST(Cli, OverridesReachTheSnapshot)
{
  const fs::path dir = scratch("overrides");
  const Result r     = cli("run --builtin diffdrive --controller to --kernel cn --grid global --N 12 --dt-s 0.25 "
                               "--rate 5 --max-sim-time 9 --seed 42 --mode open-loop --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(read_file(dir / "config.json"));
  EXPECT_EQ(j.at("run").at("seed").get<int>(), 42);
  const Scenario snap = scenario_from_json(j.at("scenario").dump());
  EXPECT_EQ(snap.controller.variant, ControllerVariant::TimeOptimal);
  EXPECT_EQ(snap.controller.kernel, Kernel::CrankNicolson);
  EXPECT_EQ(snap.controller.grid, GridMode::GlobalUniform);
  EXPECT_EQ(snap.controller.time_optimal.N_init, 12);
  EXPECT_DOUBLE_EQ(snap.controller.time_optimal.dt_s, 0.25);
  EXPECT_DOUBLE_EQ(snap.controller.rate, 5.0);
  EXPECT_DOUBLE_EQ(snap.controller.max_sim_time, 9.0);
  fs::remove_all(dir);
}

TEST(Cli, UsageErrorsExitTwo)
{
  const fs::path dir = scratch("usage");
  EXPECT_EQ(cli("run --builtin nowhere").code, 2);
  EXPECT_EQ(cli("run").code, 2);
  EXPECT_EQ(cli("run --builtin parking --scenario x.json").code, 2);
  EXPECT_EQ(cli("run --builtin parking --controller pid").code, 2);
  EXPECT_EQ(cli("run --builtin parking --rate -3").code, 2);
  EXPECT_EQ(cli("fly").code, 2);
  EXPECT_EQ(cli("").code, 2);

  std::ofstream(dir / "broken.json") << "{\"model\": ";
  const Result bad = cli("run --scenario " + (dir / "broken.json").string() + " --out " + dir.string());
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("malformed JSON"), std::string::npos) << bad.out;
  EXPECT_EQ(cli("run --scenario " + (dir / "missing.json").string()).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, HelpExitsZero)
{
  const Result r = cli("--help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("bench"), std::string::npos);
}

TEST(Cli, CollisionExitsOne)
{
  const fs::path dir = scratch("collision");
  Scenario s         = diff_drive_scenario();
  s.map_file.clear();
  s.map_obstacles.clear();
  s.obstacles = {PointObstacle{s.start.head<2>() + Eigen::Vector2d(0.05, 0.0)}};
  std::ofstream(dir / "hit.json") << scenario_to_json(s);
  const Result r = cli("run --scenario " + (dir / "hit.json").string() + " --out " + dir.string());
  EXPECT_EQ(r.code, 1) << r.out;
  EXPECT_NE(read_file(dir / "trace.csv").find("collision"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, SolverFailureExitsThree)
{
  const fs::path dir = scratch("failure");
  const fs::path sc  = regulation_file(dir, Eigen::Vector3d(7, 0, 0), true);
  const Result r     = cli("run --scenario " + sc.string() + " --max-sim-time 0.5 --out " + dir.string());
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(read_file(dir / "metrics.json").find("timed_out"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, RepeatedRunsGiveIdenticalTraces)
{
  const fs::path dir = scratch("determinism");
  const fs::path sc  = regulation_file(dir, Eigen::Vector3d(1.5, 0.5, 0.4), false);
  ASSERT_EQ(cli("run --scenario " + sc.string() + " --seed 3 --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(cli("run --scenario " + sc.string() + " --seed 3 --out " + (dir / "b").string()).code, 0);
  EXPECT_EQ(without_solve_time(read_file(dir / "a" / "trace.csv")),
            without_solve_time(read_file(dir / "b" / "trace.csv")));
  fs::remove_all(dir);
}

TEST(Cli, BenchPrintsThreeRowTable)
{
  const fs::path dir = scratch("bench");
  const Result r     = cli("bench --jobs 3 --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  for (const char* col : {"CPU Time [ms]", "Travel Time [s]", "Path Length [m]", "Control Effort"})
    EXPECT_NE(r.out.find(col), std::string::npos) << col;
  for (const char* row : {"| To ", "| Quad ", "| Hybrid "}) EXPECT_NE(r.out.find(row), std::string::npos) << row;
  EXPECT_EQ(r.out.find("failed"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "bench.json"));
  EXPECT_TRUE(fs::exists(dir / "bench_quad_trace.csv"));
  EXPECT_FALSE(has_temp_files(dir));
  fs::remove_all(dir);
}

TEST(Cli, ExportMatchesBuiltin)
{
  const Result r = cli("export --builtin diffdrive --controller hybrid");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, scenario_to_json(diff_drive_scenario(ControllerVariant::Hybrid)));
}

TEST(Cli, PlotEmitsGnuplotScript)
{
  const Result r = cli("plot --builtin parking --trace trace.csv");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("set datafile separator ','"), std::string::npos);
  EXPECT_NE(r.out.find("'trace.csv' using 2:3"), std::string::npos);
  EXPECT_NE(r.out.find("nohead"), std::string::npos);
}

}  // namespace
}  // namespace se2mpc
