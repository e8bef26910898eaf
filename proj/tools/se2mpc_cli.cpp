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

// se2mpc: closed-loop and open-loop runs, the three-variant benchmark, scenario
// export and gnuplot overlays.
//
// Exit codes: 0 finished, 1 collision, 2 usage or configuration error, 3 solver failure.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "se2mpc/scenarios.hpp"
#include "se2mpc/simulation.hpp"

namespace fs = std::filesystem;
using Json   = nlohmann::ordered_json;

namespace se2mpc {
namespace {

constexpr int kExitFinished  = 0;
constexpr int kExitCollision = 1;
constexpr int kExitUsage     = 2;
constexpr int kExitSolver    = 3;

struct RunOptions
{
  std::string builtin;
  std::string scenario_path;
  std::string mode{"closed-loop"};
  std::string controller;
  std::string kernel;
  std::string grid;
  std::optional<int> N;
  std::optional<double> dt_s;
  std::optional<double> rate;
  std::optional<double> max_sim_time;
  std::string out{"results"};
  unsigned seed{0};
  int jobs{1};
};

/// Temp file plus rename, so readers never see a partial artifact.
void write_atomic(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

Kernel parse_kernel(const std::string& s)
{
  if (s == "fwd") return Kernel::ForwardDiff;
  if (s == "cn") return Kernel::CrankNicolson;
  throw std::invalid_argument("unknown kernel '" + s + "' (expected fwd or cn)");
}

GridMode parse_grid(const std::string& s)
{
  if (s == "local") return GridMode::LocalUniform;
  if (s == "global") return GridMode::GlobalUniform;
  throw std::invalid_argument("unknown grid '" + s + "' (expected local or global)");
}

/// Builtin or file scenario with command-line overrides applied.
Scenario resolve_scenario(const RunOptions& o)
{
  Scenario s;
  if (!o.builtin.empty())
  {
    const auto names = builtin_names();
    if (std::find(names.begin(), names.end(), o.builtin) == names.end())
      throw std::invalid_argument("unknown builtin scenario '" + o.builtin + "'");
    if (o.builtin == "diffdrive" && !o.controller.empty())
      s = diff_drive_scenario(parse_variant(o.controller));
    else
      s = builtin_scenario(o.builtin);
  }
  else
  {
    try
    {
      s = load_scenario(o.scenario_path);
    }
    catch (const std::runtime_error& err)
    {
      throw std::invalid_argument(err.what());  // unreadable map: a configuration error
    }
  }

  if (!o.controller.empty()) s.controller.variant = parse_variant(o.controller);
  if (!o.kernel.empty()) s.controller.kernel = parse_kernel(o.kernel);
  if (!o.grid.empty()) s.controller.grid = parse_grid(o.grid);
  if (o.N)
  {
    s.controller.quadratic.N        = *o.N;
    s.controller.time_optimal.N_init = *o.N;
  }
  if (o.dt_s)
  {
    s.controller.quadratic.dt_s    = *o.dt_s;
    s.controller.time_optimal.dt_s = *o.dt_s;
  }
  if (o.rate) s.controller.rate = *o.rate;
  if (o.max_sim_time) s.controller.max_sim_time = *o.max_sim_time;
  for (const auto& w : validate_scenario(s)) spdlog::warn("{}", w);
  return s;
}

Json metrics_json(const ClosedLoopTrace& tr, const Metrics& m)
{
  Json j;
  j["outcome"]        = to_string(tr.outcome);
  j["goals_reached"]  = tr.goals_reached;
  j["steps"]          = tr.rows.size();
  j["travel_time"]    = m.travel_time;
  j["path_length"]    = m.path_length;
  j["control_effort"] = m.control_effort;
  j["cpu_ms"]         = {{"median", 1e3 * m.cpu_median}, {"q05", 1e3 * m.cpu_q05}, {"q95", 1e3 * m.cpu_q95}};
  j["overruns"]       = tr.overruns;
  if (!tr.message.empty()) j["message"] = tr.message;
  return j;
}

std::string config_snapshot(const Scenario& s, const RunOptions& o)
{
  Json run;
  run["mode"] = o.mode;
  run["seed"] = o.seed;
  if (!o.builtin.empty()) run["builtin"] = o.builtin;
  if (!o.scenario_path.empty()) run["scenario"] = o.scenario_path;
  Json j;
  j["run"]      = run;
  j["scenario"] = Json::parse(scenario_to_json(s));
  return j.dump(2) + "\n";
}

int exit_code(Outcome oc)
{
  switch (oc)
  {
    case Outcome::Finished: return kExitFinished;
    case Outcome::Collision: return kExitCollision;
    default: return kExitSolver;
  }
}

ClosedLoopTrace simulate(const Scenario& s, const std::string& tag)
{
  int last_goal = -1;
  return run_closed_loop(s, [&](const TraceRow& r) {
    if (r.goal_index != last_goal)
    {
      last_goal = r.goal_index;
      spdlog::info("[{}] t={:.1f}s heading for goal {}", tag, r.t, r.goal_index + 1);
    }
    spdlog::debug("[{}] t={:.1f} x=({:.3f}, {:.3f}, {:.3f}) u=({:.3f}, {:.3f}) {} N={} {:.1f} ms", tag, r.t, r.x(0),
                  r.x(1), r.x(2), r.u(0), r.u(1), to_string(r.status), r.N, 1e3 * r.solve_time);
  });
}

int run_closed(const Scenario& s, const RunOptions& o)
{
  const ClosedLoopTrace tr = simulate(s, s.name);
  const Metrics m          = compute_metrics(tr);
  const fs::path out(o.out);
  write_atomic(out / "trace.csv", trace_to_csv(tr));
  write_atomic(out / "metrics.json", metrics_json(tr, m).dump(2) + "\n");
  write_atomic(out / "config.json", config_snapshot(s, o));
  std::printf("%s: %s, %d/%zu goals, T=%.2f s, L=%.2f m, effort=%.3f, CPU median %.1f ms\n", s.name.c_str(),
              to_string(tr.outcome).c_str(), tr.goals_reached, s.goals.size(), m.travel_time, m.path_length,
              m.control_effort, 1e3 * m.cpu_median);
  if (!tr.message.empty()) spdlog::error("{}", tr.message);
  return exit_code(tr.outcome);
}

int run_open(const Scenario& s, const RunOptions& o)
{
  MpcController c    = make_controller(s);
  const StepResult r = c.step(s.start, 0.0);
  std::ostringstream csv;
  csv << "k,t,x,y,theta,u1,u2,dt\n";
  double t = 0.0;
  char buf[256];
  for (std::size_t k = 0; k < r.plan.states.size(); ++k)
  {
    const auto& x = r.plan.states[k];
    const bool has_u = k < r.plan.controls.size();
    std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", k, t, x(0), x(1), x(2),
                  has_u ? r.plan.controls[k](0) : 0.0, has_u ? r.plan.controls[k](1) : 0.0,
                  has_u ? r.plan.dts[k] : 0.0);
    csv << buf;
    if (has_u) t += r.plan.dts[k];
  }
  Json j;
  j["status"]        = to_string(r.diag.status);
  j["solver_status"] = to_string(r.diag.solver_status);
  j["cost"]          = r.diag.cost;
  j["tf_star"]       = r.diag.tf_star;
  j["N"]             = r.diag.N;
  j["iterations"]    = r.diag.iterations;
  j["max_violation"] = r.diag.max_violation;
  j["solve_ms"]      = 1e3 * r.diag.solve_time;
  const fs::path out(o.out);
  write_atomic(out / "plan.csv", csv.str());
  write_atomic(out / "metrics.json", j.dump(2) + "\n");
  write_atomic(out / "config.json", config_snapshot(s, o));
  std::printf("%s open loop: %s, t_f=%.3f s, cost=%.4f, %d iterations\n", s.name.c_str(),
              to_string(r.diag.status).c_str(), r.diag.tf_star, r.diag.cost, r.diag.iterations);
  return r.diag.status == StepStatus::Fallback ? kExitSolver : kExitFinished;
}

int run_bench(RunOptions o)
{
  const std::vector<std::string> variants = {"to", "quad", "hybrid"};
  const std::vector<std::string> labels   = {"To", "Quad", "Hybrid"};
  std::vector<Scenario> scenarios;
  for (const auto& v : variants)
  {
    RunOptions ov  = o;
    ov.builtin     = "diffdrive";
    ov.controller  = v;
    ov.scenario_path.clear();
    scenarios.push_back(resolve_scenario(ov));
  }

  std::vector<ClosedLoopTrace> traces(variants.size());
  if (o.jobs > 1)
  {
    std::vector<std::future<ClosedLoopTrace>> futures;
    for (std::size_t i = 0; i < variants.size(); ++i)
      futures.push_back(std::async(std::launch::async, [&, i] { return simulate(scenarios[i], labels[i]); }));
    for (std::size_t i = 0; i < variants.size(); ++i) traces[i] = futures[i].get();
  }
  else
    for (std::size_t i = 0; i < variants.size(); ++i) traces[i] = simulate(scenarios[i], labels[i]);

  const fs::path out(o.out);
  Json summary = Json::object();
  std::ostringstream table;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "| %-8s | %-26s | %-15s | %-15s | %-14s |\n", "Planner", "CPU Time [ms]",
                "Travel Time [s]", "Path Length [m]", "Control Effort");
  table << buf << "|----------|----------------------------|-----------------|-----------------|----------------|\n";
  bool all_ok = true;
  for (std::size_t i = 0; i < variants.size(); ++i)
  {
    const ClosedLoopTrace& tr = traces[i];
    const Metrics m           = compute_metrics(tr);
    const bool ok = tr.outcome == Outcome::Finished && tr.goals_reached == static_cast<int>(scenarios[i].goals.size());
    all_ok        = all_ok && ok;
    write_atomic(out / ("bench_" + variants[i] + "_trace.csv"), trace_to_csv(tr));
    summary[labels[i]] = metrics_json(tr, m);
    if (ok)
    {
      char cpu[64];
      std::snprintf(cpu, sizeof(cpu), "%.1f [%.1f, %.1f]", 1e3 * m.cpu_median, 1e3 * m.cpu_q05, 1e3 * m.cpu_q95);
      std::snprintf(buf, sizeof(buf), "| %-8s | %-26s | %-15.1f | %-15.2f | %-14.2f |\n", labels[i].c_str(), cpu,
                    m.travel_time, m.path_length, m.control_effort);
    }
    else
    {
      const std::string why = "failed (" + to_string(tr.outcome) + ")";
      std::snprintf(buf, sizeof(buf), "| %-8s | %-26s | %-15s | %-15s | %-14s |\n", labels[i].c_str(), why.c_str(), "-",
                    "-", "-");
    }
    table << buf;
  }
  write_atomic(out / "bench.json", summary.dump(2) + "\n");
  write_atomic(out / "bench.md", table.str());
  std::cout << table.str();
  return all_ok ? kExitFinished : kExitSolver;
}

/// Gnuplot script overlaying obstacles, goals and the driven path of a trace CSV.
std::string gnuplot_script(const Scenario& s, const std::string& trace_path, const std::string& png)
{
  std::ostringstream g;
  g << "set datafile separator ','\nset size ratio -1\nset key outside\nset grid\n";
  if (!png.empty()) g << "set terminal pngcairo size 1000,800\nset output '" << png << "'\n";
  g << "set title '" << s.name << "'\nset xlabel 'x [m]'\nset ylabel 'y [m]'\n";
  int id = 1;
  for (const auto& o : s.obstacles)
  {
    if (const auto* seg = std::get_if<SegmentObstacle>(&o))
      g << "set arrow " << id++ << " from " << seg->a.x() << "," << seg->a.y() << " to " << seg->b.x() << ","
        << seg->b.y() << " nohead lw 2 lc rgb 'black'\n";
    else if (const auto* st = std::get_if<MovingStadiumObstacle>(&o))
      g << "set arrow " << id++ << " from " << st->origin.x() << "," << st->origin.y() << " to "
        << st->origin.x() + st->length << "," << st->origin.y() << " nohead lw 2 dt 2 lc rgb 'red'\n";
  }
  g << "$points << EOD\n";
  for (const auto& o : s.all_obstacles())
    if (const auto* p = std::get_if<PointObstacle>(&o)) g << p->p.x() << "," << p->p.y() << "\n";
  g << "EOD\n$goals << EOD\n";
  for (const auto& x : s.goals) g << x(0) << "," << x(1) << "," << std::cos(x(2)) * 0.4 << "," << std::sin(x(2)) * 0.4 << "\n";
  g << "EOD\n";
  g << "plot $points using 1:2 with points pt 5 ps 0.5 lc rgb 'gray40' title 'obstacles', \\\n"
    << "     $goals using 1:2:3:4 with vectors lw 2 lc rgb 'dark-green' title 'goals', \\\n"
    << "     '" << trace_path << "' using 2:3 every ::1 with lines lw 2 lc rgb 'blue' title 'path'\n";
  return g.str();
}

void add_scenario_flags(CLI::App* cmd, RunOptions& o, bool required)
{
  auto* group = cmd->add_option_group("scenario");
  group->add_option("--builtin", o.builtin, "Built-in scenario: parking or diffdrive");
  group->add_option("--scenario", o.scenario_path, "Scenario JSON file");
  if (required) group->require_option(1);
  else group->require_option(0, 1);
}

}  // namespace
}  // namespace se2mpc

int main(int argc, char** argv)
{
  using namespace se2mpc;
  CLI::App app{"Manifold-aware model predictive planning on SE(2)"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  RunOptions o;
  auto* run = app.add_subcommand("run", "Run a scenario");
  add_scenario_flags(run, o, true);
  run->add_option("--mode", o.mode, "open-loop, closed-loop or benchmark")
      ->check(CLI::IsMember({"open-loop", "closed-loop", "benchmark"}));
  run->add_option("--controller", o.controller, "quad, to or hybrid")->check(CLI::IsMember({"quad", "to", "hybrid"}));
  run->add_option("--kernel", o.kernel, "fwd or cn")->check(CLI::IsMember({"fwd", "cn"}));
  run->add_option("--grid", o.grid, "local or global")->check(CLI::IsMember({"local", "global"}));
  run->add_option("--N", o.N, "Grid size (initial size for time-optimal variants)")->check(CLI::PositiveNumber);
  run->add_option("--dt-s", o.dt_s, "Reference interval [s]")->check(CLI::PositiveNumber);
  run->add_option("--rate", o.rate, "Closed-loop rate [Hz]")->check(CLI::PositiveNumber);
  run->add_option("--max-sim-time", o.max_sim_time, "Simulation time limit [s]")->check(CLI::PositiveNumber);
  run->add_option("--out", o.out, "Output directory");
  run->add_option("--seed", o.seed, "Recorded in the config snapshot; runs are deterministic");
  run->add_option("--jobs", o.jobs, "Parallel runs in benchmark mode")->check(CLI::PositiveNumber);

  RunOptions b;
  auto* bench = app.add_subcommand("bench", "Run the diff-drive benchmark under To, Quad and Hybrid");
  bench->add_option("--max-sim-time", b.max_sim_time, "Simulation time limit [s]")->check(CLI::PositiveNumber);
  bench->add_option("--out", b.out, "Output directory");
  bench->add_option("--seed", b.seed, "Recorded only; runs are deterministic");
  bench->add_option("--jobs", b.jobs, "Parallel runs")->check(CLI::PositiveNumber);

  RunOptions e;
  std::string export_path;
  auto* exp = app.add_subcommand("export", "Write a scenario as JSON");
  add_scenario_flags(exp, e, true);
  exp->add_option("--controller", e.controller, "quad, to or hybrid")->check(CLI::IsMember({"quad", "to", "hybrid"}));
  exp->add_option("--out", export_path, "Output file (default: stdout)");

  RunOptions p;
  std::string trace_path, plot_out, png;
  auto* plot = app.add_subcommand("plot", "Emit a gnuplot script overlaying a trace on its scenario");
  add_scenario_flags(plot, p, true);
  plot->add_option("--trace", trace_path, "Trace CSV")->required();
  plot->add_option("--png", png, "Render to this PNG instead of an interactive terminal");
  plot->add_option("--out", plot_out, "Script file (default: stdout)");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& err)
  {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));
  spdlog::set_pattern("[%l] %v");

  try
  {
    if (*run)
    {
      if (o.mode == "benchmark") return run_bench(o);
      const Scenario s = resolve_scenario(o);
      return o.mode == "open-loop" ? run_open(s, o) : run_closed(s, o);
    }
    if (*bench) return run_bench(b);
    if (*exp)
    {
      const std::string text = scenario_to_json(resolve_scenario(e));
      if (export_path.empty()) std::cout << text;
      else write_atomic(export_path, text);
      return kExitFinished;
    }
    if (*plot)
    {
      const std::string text = gnuplot_script(resolve_scenario(p), trace_path, png);
      if (plot_out.empty()) std::cout << text;
      else write_atomic(plot_out, text);
      return kExitFinished;
    }
  }
  catch (const std::invalid_argument& err)
  {
    spdlog::error("{}", err.what());
    return kExitUsage;
  }
  catch (const std::exception& err)
  {
    spdlog::error("{}", err.what());
    return kExitSolver;
  }
  return kExitUsage;
}
