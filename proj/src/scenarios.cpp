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

#include "se2mpc/scenarios.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace se2mpc {

namespace {

using Json     = nlohmann::ordered_json;
namespace fs   = std::filesystem;
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd vec(std::initializer_list<double> v)
{
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Eigen::MatrixXd diag(std::initializer_list<double> v) { return vec(v).asDiagonal(); }

// --- JSON helpers -----------------------------------------------------------

Json num(double x)
{
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double get_num(const Json& j)
{
  if (j.is_string())
  {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw std::invalid_argument("expected a number, got '" + s + "'");
  }
  if (!j.is_number()) throw std::invalid_argument("expected a number");
  return j.get<double>();
}

Json vec_json(const Eigen::VectorXd& v)
{
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Eigen::VectorXd get_vec(const Json& j)
{
  if (!j.is_array()) throw std::invalid_argument("expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = get_num(j[i]);
  return v;
}

Json mat_json(const Eigen::MatrixXd& m)
{
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

Eigen::MatrixXd get_mat(const Json& j)
{
  if (!j.is_array()) throw std::invalid_argument("expected a matrix (array of rows)");
  if (j.empty()) return Eigen::MatrixXd(0, 0);
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r)
  {
    const Eigen::VectorXd row = get_vec(j[r]);
    if (static_cast<std::size_t>(row.size()) != cols) throw std::invalid_argument("ragged matrix rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Json legs_json(const std::vector<std::vector<Eigen::VectorXd>>& legs)
{
  Json a = Json::array();
  for (const auto& leg : legs)
  {
    Json w = Json::array();
    for (const auto& p : leg) w.push_back(vec_json(p));
    a.push_back(w);
  }
  return a;
}

std::vector<std::vector<Eigen::VectorXd>> get_legs(const Json& j)
{
  if (!j.is_array()) throw std::invalid_argument("expected an array of pose lists");
  std::vector<std::vector<Eigen::VectorXd>> legs;
  for (const Json& leg : j)
  {
    if (!leg.is_array()) throw std::invalid_argument("expected a pose list");
    std::vector<Eigen::VectorXd> w;
    for (const Json& p : leg) w.push_back(get_vec(p));
    legs.push_back(std::move(w));
  }
  return legs;
}

const Json& at(const Json& j, const char* key)
{
  if (!j.is_object() || !j.contains(key)) throw std::invalid_argument(std::string("missing key '") + key + "'");
  return j.at(key);
}

std::string kernel_name(Kernel k) { return k == Kernel::ForwardDiff ? "fwd" : "cn"; }
Kernel parse_kernel(const std::string& s)
{
  if (s == "fwd") return Kernel::ForwardDiff;
  if (s == "cn") return Kernel::CrankNicolson;
  throw std::invalid_argument("unknown kernel '" + s + "' (expected fwd or cn)");
}

std::string grid_name(GridMode g) { return g == GridMode::LocalUniform ? "local" : "global"; }
GridMode parse_grid(const std::string& s)
{
  if (s == "local") return GridMode::LocalUniform;
  if (s == "global") return GridMode::GlobalUniform;
  throw std::invalid_argument("unknown grid mode '" + s + "' (expected local or global)");
}

std::string method_name(SolverMethod m)
{
  return m == SolverMethod::InteriorPoint ? "interior_point" : "augmented_lagrangian";
}
SolverMethod parse_method(const std::string& s)
{
  if (s == "interior_point") return SolverMethod::InteriorPoint;
  if (s == "augmented_lagrangian") return SolverMethod::AugmentedLagrangian;
  throw std::invalid_argument("unknown solver method '" + s + "'");
}

Json footprint_json(const Footprint& fp)
{
  Json j;
  if (const auto* d = std::get_if<DiscFootprint>(&fp))
  {
    j["type"]   = "disc";
    j["radius"] = d->radius;
  }
  else
  {
    const auto& s      = std::get<StadiumFootprint>(fp);
    j["type"]          = "stadium";
    j["rear_offset"]   = s.rear_offset;
    j["length"]        = s.length;
    j["radius"]        = s.radius;
  }
  return j;
}

Footprint parse_footprint(const Json& j)
{
  const auto type = at(j, "type").get<std::string>();
  if (type == "disc") return DiscFootprint{get_num(at(j, "radius"))};
  if (type == "stadium")
    return StadiumFootprint{get_num(at(j, "rear_offset")), get_num(at(j, "length")), get_num(at(j, "radius"))};
  throw std::invalid_argument("unknown footprint type '" + type + "'");
}

Json obstacle_json(const Obstacle& o)
{
  Json j;
  if (const auto* p = std::get_if<PointObstacle>(&o))
  {
    j["type"] = "point";
    j["p"]    = vec_json(p->p);
  }
  else if (const auto* s = std::get_if<SegmentObstacle>(&o))
  {
    j["type"] = "segment";
    j["a"]    = vec_json(s->a);
    j["b"]    = vec_json(s->b);
  }
  else
  {
    const auto& m   = std::get<MovingStadiumObstacle>(o);
    j["type"]       = "moving_stadium";
    j["origin"]     = vec_json(m.origin);
    j["length"]     = m.length;
    j["radius"]     = m.radius;
    j["velocity"]   = m.velocity;
  }
  return j;
}

Vec2 get_vec2(const Json& j)
{
  const Eigen::VectorXd v = get_vec(j);
  if (v.size() != 2) throw std::invalid_argument("expected a 2-vector");
  return v;
}

Obstacle parse_obstacle(const Json& j)
{
  const auto type = at(j, "type").get<std::string>();
  if (type == "point") return PointObstacle{get_vec2(at(j, "p"))};
  if (type == "segment") return SegmentObstacle{get_vec2(at(j, "a")), get_vec2(at(j, "b"))};
  if (type == "moving_stadium")
    return MovingStadiumObstacle{get_vec2(at(j, "origin")), get_num(at(j, "length")), get_num(at(j, "radius")),
                                 get_num(at(j, "velocity"))};
  throw std::invalid_argument("unknown obstacle type '" + type + "'");
}

Json solver_json(const SolverConfig& c)
{
  Json j;
  j["method"]                = method_name(c.method);
  j["max_iterations"]        = c.max_iterations;
  j["barrier_init"]          = c.barrier_init;
  j["barrier_init_warm"]     = c.barrier_init_warm;
  j["max_outer_iterations"]  = c.max_outer_iterations;
  j["max_inner_iterations"]  = c.max_inner_iterations;
  j["feasibility_tolerance"] = c.feasibility_tolerance;
  j["optimality_tolerance"]  = c.optimality_tolerance;
  j["penalty_init"]          = c.penalty_init;
  j["penalty_growth"]        = c.penalty_growth;
  j["penalty_max"]           = num(c.penalty_max);
  j["fd_step"]               = c.fd_step;
  j["fd_hessian_step"]       = c.fd_hessian_step;
  j["damping_init"]          = c.damping_init;
  j["time_budget"]           = c.time_budget;
  j["constraint_curvature"]  = c.constraint_curvature;
  j["infeasible_violation"]  = c.infeasible_violation;
  return j;
}

SolverConfig parse_solver(const Json& j)
{
  SolverConfig c;
  if (!j.is_object()) throw std::invalid_argument("solver must be an object");
  auto opt_num = [&](const char* key, double& out) {
    if (j.contains(key)) out = get_num(j.at(key));
  };
  auto opt_int = [&](const char* key, int& out) {
    if (j.contains(key)) out = j.at(key).get<int>();
  };
  if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
  opt_int("max_iterations", c.max_iterations);
  opt_num("barrier_init", c.barrier_init);
  opt_num("barrier_init_warm", c.barrier_init_warm);
  opt_int("max_outer_iterations", c.max_outer_iterations);
  opt_int("max_inner_iterations", c.max_inner_iterations);
  opt_num("feasibility_tolerance", c.feasibility_tolerance);
  opt_num("optimality_tolerance", c.optimality_tolerance);
  opt_num("penalty_init", c.penalty_init);
  opt_num("penalty_growth", c.penalty_growth);
  opt_num("penalty_max", c.penalty_max);
  opt_num("fd_step", c.fd_step);
  opt_num("fd_hessian_step", c.fd_hessian_step);
  opt_num("damping_init", c.damping_init);
  opt_num("time_budget", c.time_budget);
  if (j.contains("constraint_curvature")) c.constraint_curvature = j.at("constraint_curvature").get<bool>();
  opt_num("infeasible_violation", c.infeasible_violation);
  return c;
}

Json controller_json(const ControllerSpec& c)
{
  Json j;
  j["variant"]      = to_string(c.variant);
  j["kernel"]       = kernel_name(c.kernel);
  j["grid"]         = grid_name(c.grid);
  j["rate"]         = c.rate;
  j["max_sim_time"] = c.max_sim_time;
  j["u_prev"]       = vec_json(c.u_prev);
  j["tolerance"]    = Json{{"position", c.tolerance.position}, {"angle", c.tolerance.angle}};
  j["association"]  = Json{{"cutoff", c.association_cutoff}, {"k_max", c.association_k_max}};
  j["decay"]        = c.decay;
  Json q;
  q["Q"]        = mat_json(c.quadratic.Q);
  q["Qf"]       = mat_json(c.quadratic.Qf);
  q["R"]        = mat_json(c.quadratic.R);
  q["N"]        = c.quadratic.N;
  q["dt_s"]     = c.quadratic.dt_s;
  q["terminal"] = c.quadratic.terminal == TerminalSet::Free ? "free" : "pinned";
  j["quadratic"] = q;
  Json t;
  t["N_init"]   = c.time_optimal.N_init;
  t["N_min"]    = c.time_optimal.N_min;
  t["dt_s"]     = c.time_optimal.dt_s;
  t["dt_eps"]   = c.time_optimal.dt_eps;
  t["dt_min"]   = c.time_optimal.dt_min;
  t["dt_max"]   = num(c.time_optimal.dt_max);
  t["dt_init"]  = c.time_optimal.dt_init;
  t["R_hybrid"] = mat_json(c.time_optimal.R_hybrid);
  j["time_optimal"] = t;
  Json inits = Json::array();
  for (const auto& init : c.initializations)
  {
    Json w = Json::array();
    for (const auto& p : init.waypoints) w.push_back(vec_json(p));
    inits.push_back(Json{{"name", init.name}, {"duration", init.duration}, {"waypoints", w}});
  }
  j["initializations"] = inits;
  return j;
}

ControllerSpec parse_controller(const Json& j)
{
  ControllerSpec c;
  c.variant      = parse_variant(at(j, "variant").get<std::string>());
  c.kernel       = parse_kernel(at(j, "kernel").get<std::string>());
  c.grid         = parse_grid(at(j, "grid").get<std::string>());
  c.rate         = get_num(at(j, "rate"));
  c.max_sim_time = get_num(at(j, "max_sim_time"));
  c.u_prev       = get_vec(at(j, "u_prev"));
  const Json& tol = at(j, "tolerance");
  c.tolerance     = {get_num(at(tol, "position")), get_num(at(tol, "angle"))};
  const Json& as  = at(j, "association");
  c.association_cutoff = get_num(at(as, "cutoff"));
  c.association_k_max  = at(as, "k_max").get<int>();
  c.decay              = get_num(at(j, "decay"));
  const Json& q        = at(j, "quadratic");
  c.quadratic.Q        = get_mat(at(q, "Q"));
  c.quadratic.Qf       = get_mat(at(q, "Qf"));
  c.quadratic.R        = get_mat(at(q, "R"));
  c.quadratic.N        = at(q, "N").get<int>();
  c.quadratic.dt_s     = get_num(at(q, "dt_s"));
  const auto term      = at(q, "terminal").get<std::string>();
  if (term != "free" && term != "pinned") throw std::invalid_argument("terminal must be free or pinned");
  c.quadratic.terminal  = term == "free" ? TerminalSet::Free : TerminalSet::Pinned;
  const Json& t         = at(j, "time_optimal");
  c.time_optimal.N_init = at(t, "N_init").get<int>();
  c.time_optimal.N_min  = at(t, "N_min").get<int>();
  c.time_optimal.dt_s   = get_num(at(t, "dt_s"));
  c.time_optimal.dt_eps = get_num(at(t, "dt_eps"));
  c.time_optimal.dt_min = get_num(at(t, "dt_min"));
  c.time_optimal.dt_max = get_num(at(t, "dt_max"));
  c.time_optimal.dt_init  = get_num(at(t, "dt_init"));
  c.time_optimal.R_hybrid = get_mat(at(t, "R_hybrid"));
  for (const Json& init : at(j, "initializations"))
  {
    Initialization in;
    in.name     = at(init, "name").get<std::string>();
    in.duration = get_num(at(init, "duration"));
    for (const Json& w : at(init, "waypoints")) in.waypoints.push_back(get_vec(w));
    c.initializations.push_back(std::move(in));
  }
  return c;
}

std::string resolve_path(const std::string& file, const std::string& base_dir)
{
  const fs::path p(file);
  if (p.is_absolute()) return file;
  if (!base_dir.empty() && fs::exists(fs::path(base_dir) / p)) return (fs::path(base_dir) / p).string();
  return (fs::path(data_dir()) / p).string();
}

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Obstacle> Scenario::all_obstacles() const
{
  std::vector<Obstacle> out = obstacles;
  out.insert(out.end(), map_obstacles.begin(), map_obstacles.end());
  return out;
}

int OccupancyMap::occupied_cells() const
{
  int n = 0;
  for (const auto& r : rows)
    for (char c : r) n += c == '#';
  return n;
}

std::vector<Obstacle> OccupancyMap::point_obstacles() const
{
  std::vector<Obstacle> out;
  for (int r = 0; r < height; ++r)
  {
    const int j = height - 1 - r;
    for (int i = 0; i < width; ++i)
      if (rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)] == '#')
        out.push_back(PointObstacle{Vec2((i + 0.5) * resolution, (j + 0.5) * resolution)});
  }
  return out;
}

OccupancyMap parse_occupancy_map(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  OccupancyMap m;
  bool header = false;
  while (std::getline(in, line))
  {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header)
    {
      if (line.empty() || line[0] == ';') continue;
      std::istringstream hs(line);
      if (!(hs >> m.width >> m.height >> m.resolution) || m.width <= 0 || m.height <= 0 || !(m.resolution > 0.0))
        throw std::runtime_error("occupancy map: bad header '" + line + "' (expected: width height resolution)");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    if (static_cast<int>(line.size()) != m.width)
      throw std::runtime_error("occupancy map: row " + std::to_string(m.rows.size()) + " has " +
                               std::to_string(line.size()) + " cells, expected " + std::to_string(m.width));
    if (line.find_first_not_of("#.") != std::string::npos)
      throw std::runtime_error("occupancy map: cells must be '#' or '.'");
    m.rows.push_back(line);
  }
  if (!header) throw std::runtime_error("occupancy map: missing header");
  if (static_cast<int>(m.rows.size()) != m.height)
    throw std::runtime_error("occupancy map: expected " + std::to_string(m.height) + " rows, got " +
                             std::to_string(m.rows.size()));
  return m;
}

OccupancyMap load_occupancy_map(const std::string& path)
{
  return parse_occupancy_map(read_file(path));
}

std::string data_dir()
{
  if (const char* env = std::getenv("SE2MPC_DATA_DIR")) return env;
#ifdef SE2MPC_DATA_DIR
  return SE2MPC_DATA_DIR;
#else
  return "data";
#endif
}

std::vector<Obstacle> parking_road_segments()
{
  // road between y = -4.1 and y = 3.25; lot opening at x in [-5.5, -2.5]
  return {
      SegmentObstacle{{-20.0, 3.25}, {10.0, 3.25}},
      SegmentObstacle{{-20.0, -4.1}, {-5.5, -4.1}},
      SegmentObstacle{{-5.5, -4.1}, {-5.5, -8.85}},
      SegmentObstacle{{-5.5, -8.85}, {-2.5, -8.85}},
      SegmentObstacle{{-2.5, -8.85}, {-2.5, -4.1}},
      SegmentObstacle{{-2.5, -4.1}, {10.0, -4.1}},
  };
}

bool inside_parking_lot(const Eigen::Vector2d& p)
{
  return p.x() > -5.5 && p.x() < -2.5 && p.y() > -8.85 && p.y() < -4.1;
}

Scenario parking_scenario()
{
  Scenario s;
  s.name         = "parking";
  s.model        = "bicycle";
  s.model_params = {{"lf", 1.1}, {"lr", 1.7}};
  s.footprint    = StadiumFootprint{1.7, 2.8, 0.9};
  s.d_min        = 0.2;
  s.obstacles    = parking_road_segments();
  s.obstacles.push_back(MovingStadiumObstacle{{-13.0, -1.25}, 2.5, 0.9, 1.0});
  s.bounds = {vec({-4.0, -0.65}), vec({4.0, 0.65}), vec({-3.0, -0.31}), vec({1.5, 0.31})};
  s.start  = vec({1.0, 1.75, -3.1});
  s.goals  = {vec({-4.0, -6.0, 1.57})};

  ControllerSpec& c = s.controller;
  c.variant         = ControllerVariant::Hybrid;
  c.kernel          = Kernel::CrankNicolson;
  c.rate            = 10.0;
  c.max_sim_time    = 60.0;
  c.u_prev          = Eigen::VectorXd::Zero(2);
  c.quadratic.Q     = diag({1.0, 1.0, 0.25});
  c.quadratic.Qf    = diag({1.0, 1.0, 0.25});
  c.quadratic.R     = diag({0.01, 0.01});
  c.quadratic.N     = 50;
  c.quadratic.dt_s  = 0.1;
  c.quadratic.terminal  = TerminalSet::Pinned;
  c.time_optimal.N_init = 50;
  c.time_optimal.N_min  = 2;
  c.time_optimal.dt_s   = 0.1;
  c.time_optimal.dt_eps = 0.01;
  c.time_optimal.dt_min = 0.001;
  c.time_optimal.dt_max = kInf;
  c.time_optimal.R_hybrid = diag({0.01, 0.0});
  // HC1 lets the oncoming car pass before backing into the lot, HC2 backs in ahead of it
  c.initializations = {
      {"HC1", {vec({-7.5, 1.2, -3.1}), vec({-5.0, -1.5, 2.3}), vec({-4.0, -3.8, 1.6})}, 20.0},
      {"HC2", {vec({-7.0, 1.2, -3.1}), vec({-5.0, -1.5, 2.3}), vec({-4.0, -3.8, 1.6})}, 8.0},
  };

  s.solver.time_budget          = 0.0;
  s.solver.max_iterations       = 150;
  s.solver.infeasible_violation = 1e-2;
  return s;
}

Scenario diff_drive_scenario(ControllerVariant variant)
{
  Scenario s;
  s.name      = "diffdrive";
  s.model     = "diff_drive";
  s.footprint = DiscFootprint{0.17};
  s.d_min     = 0.1;
  s.map_file  = "maps/diffdrive_corridor.txt";
  s.map_obstacles = load_occupancy_map(resolve_path(s.map_file, "")).point_obstacles();
  s.bounds    = {vec({-0.2, -0.4}), vec({0.4, 0.4}), vec({-0.25, -0.25}), vec({0.25, 0.25})};
  s.start     = vec({2.0, 2.0, 0.0});
  s.goals     = {vec({1.0, 7.5, std::numbers::pi / 2}), vec({1.2, 9.1, 3.14}), vec({4.3, 2.0, -3.14})};
  s.guides    = {{}, {}, {vec({2.0, 5.0, -1.2})}};
  if (variant == ControllerVariant::Quadratic)
    s.approaches = {{}, {vec({1.2, 9.1, std::numbers::pi / 2})}, {vec({4.3, 2.0, -std::numbers::pi / 2})}};

  ControllerSpec& c = s.controller;
  c.variant         = variant;
  c.kernel          = Kernel::ForwardDiff;
  c.rate            = 10.0;
  c.max_sim_time    = 200.0;
  c.u_prev          = Eigen::VectorXd::Zero(2);
  c.quadratic.Q     = diag({1.0, 1.0, 0.25});
  c.quadratic.Qf    = diag({1.0, 1.0, 0.25});
  c.quadratic.R     = diag({2.0, 2.0});
  c.quadratic.N     = 30;
  c.quadratic.dt_s  = 0.3;
  c.quadratic.terminal  = TerminalSet::Free;
  c.time_optimal.N_init = 30;
  c.time_optimal.N_min  = 2;
  c.time_optimal.dt_s   = 0.3;
  c.time_optimal.dt_eps = 0.03;
  c.time_optimal.dt_min = 0.001;
  c.time_optimal.dt_max = kInf;
  if (variant == ControllerVariant::Hybrid) c.time_optimal.R_hybrid = diag({2.0, 2.0});

  s.solver.time_budget    = 0.0;
  s.solver.max_iterations = 150;
  return s;
}

Scenario builtin_scenario(const std::string& name)
{
  if (name == "parking") return parking_scenario();
  if (name == "diffdrive") return diff_drive_scenario();
  throw std::invalid_argument("unknown builtin scenario '" + name + "' (expected parking or diffdrive)");
}

std::vector<std::string> builtin_names() { return {"parking", "diffdrive"}; }

std::vector<std::string> validate_scenario(const Scenario& s)
{
  std::vector<std::string> warnings;
  if (!is_known_model(s.model)) throw std::invalid_argument("scenario: unknown model '" + s.model + "'");
  const ModelPtr model = make_model(s.model, s.model_params);
  s.bounds.validate();
  if (s.bounds.dim() != model->control_dim())
    throw std::invalid_argument("scenario: bounds dimension does not match the model");
  if (s.start.size() != model->state_dim() || !s.start.allFinite())
    throw std::invalid_argument("scenario: start must be a finite state");
  if (s.goals.empty()) throw std::invalid_argument("scenario: at least one goal is required");
  for (const auto& g : s.goals)
    if (g.size() != model->state_dim() || !g.allFinite()) throw std::invalid_argument("scenario: malformed goal");
  if (s.guides.size() > s.goals.size()) throw std::invalid_argument("scenario: more guide legs than goals");
  for (const auto& leg : s.guides)
    for (const auto& w : leg)
      if (w.size() != model->state_dim() || !w.allFinite()) throw std::invalid_argument("scenario: malformed guide");
  if (s.approaches.size() > s.goals.size()) throw std::invalid_argument("scenario: more approach legs than goals");
  for (const auto& leg : s.approaches)
    for (const auto& w : leg)
      if (w.size() != model->state_dim() || !w.allFinite()) throw std::invalid_argument("scenario: malformed approach");
  if (!(s.d_min >= 0.0)) throw std::invalid_argument("scenario: d_min must be >= 0");
  const ControllerSpec& c = s.controller;
  if (!(c.rate > 0.0) || !std::isfinite(c.rate)) throw std::invalid_argument("scenario: rate must be positive");
  if (!(c.max_sim_time > 0.0)) throw std::invalid_argument("scenario: max_sim_time must be positive");
  if (c.u_prev.size() != 0 && c.u_prev.size() != model->control_dim())
    throw std::invalid_argument("scenario: u_prev dimension mismatch");
  if (!(c.decay >= 0.0 && c.decay <= 1.0)) throw std::invalid_argument("scenario: decay must be in [0, 1]");
  QuadraticFormConfig q = c.quadratic;
  q.x_f                 = s.goals.front();
  q.validate(model->state_dim(), model->control_dim());
  c.time_optimal.validate(model->control_dim());
  s.solver.validate();
  for (const auto& init : c.initializations)
    for (const auto& w : init.waypoints)
      if (w.size() != model->state_dim()) throw std::invalid_argument("scenario: waypoint dimension mismatch");

  if (c.u_prev.size() != 0 &&
      ((c.u_prev.array() < s.bounds.lower.array()).any() || (c.u_prev.array() > s.bounds.upper.array()).any()))
    warnings.push_back("initial control u_prev lies outside the control bounds");
  if (model->state_dim() == 3)
  {
    const auto obstacles = s.all_obstacles();
    const CollisionCheck chk =
        in_collision_free_set(s.footprint, s.start, obstacles, 0.0, SeparationSpec{s.d_min});
    if (!chk.collision_free) warnings.push_back("start pose is closer than d_min to an obstacle");
  }
  return warnings;
}

std::string scenario_to_json(const Scenario& s)
{
  Json j;
  j["name"]  = s.name;
  Json params = Json::object();
  for (const auto& [k, v] : s.model_params) params[k] = v;
  j["model"]     = Json{{"name", s.model}, {"params", params}};
  j["footprint"] = footprint_json(s.footprint);
  Json obs;
  obs["d_min"] = s.d_min;
  if (!s.map_file.empty()) obs["map"] = s.map_file;
  Json items = Json::array();
  for (const auto& o : s.obstacles) items.push_back(obstacle_json(o));
  obs["items"]    = items;
  j["obstacles"]  = obs;
  j["bounds"]     = Json{{"lower", vec_json(s.bounds.lower)},
                         {"upper", vec_json(s.bounds.upper)},
                         {"rate_lower", vec_json(s.bounds.rate_lower)},
                         {"rate_upper", vec_json(s.bounds.rate_upper)}};
  j["start"] = vec_json(s.start);
  Json goals = Json::array();
  for (const auto& g : s.goals) goals.push_back(vec_json(g));
  j["goals"]      = goals;
  if (!s.guides.empty()) j["guides"] = legs_json(s.guides);
  if (!s.approaches.empty()) j["approaches"] = legs_json(s.approaches);
  j["controller"] = controller_json(s.controller);
  j["solver"]     = solver_json(s.solver);
  return j.dump(2) + "\n";
}

Scenario scenario_from_json(const std::string& text, const std::string& base_dir)
{
  Json j;
  try
  {
    j = Json::parse(text);
  }
  catch (const nlohmann::json::exception& e)
  {
    throw std::invalid_argument(std::string("scenario: malformed JSON: ") + e.what());
  }
  try
  {
    Scenario s;
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    const Json& m = at(j, "model");
    s.model       = at(m, "name").get<std::string>();
    if (m.contains("params"))
      for (const auto& [k, v] : m.at("params").items()) s.model_params[k] = get_num(v);
    s.footprint      = parse_footprint(at(j, "footprint"));
    const Json& obs  = at(j, "obstacles");
    s.d_min          = get_num(at(obs, "d_min"));
    if (obs.contains("map"))
    {
      s.map_file      = obs.at("map").get<std::string>();
      s.map_obstacles = load_occupancy_map(resolve_path(s.map_file, base_dir)).point_obstacles();
    }
    for (const Json& o : at(obs, "items")) s.obstacles.push_back(parse_obstacle(o));
    const Json& b = at(j, "bounds");
    s.bounds      = {get_vec(at(b, "lower")), get_vec(at(b, "upper")), get_vec(at(b, "rate_lower")),
                     get_vec(at(b, "rate_upper"))};
    s.start       = get_vec(at(j, "start"));
    for (const Json& g : at(j, "goals")) s.goals.push_back(get_vec(g));
    if (j.contains("guides")) s.guides = get_legs(j.at("guides"));
    if (j.contains("approaches")) s.approaches = get_legs(j.at("approaches"));
    s.controller = parse_controller(at(j, "controller"));
    s.solver     = parse_solver(at(j, "solver"));
    return s;
  }
  catch (const nlohmann::json::exception& e)
  {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path)
{
  std::string text;
  try
  {
    text = read_file(path);
  }
  catch (const std::runtime_error& e)
  {
    throw std::invalid_argument(e.what());
  }
  return scenario_from_json(text, fs::path(path).parent_path().string());
}

MpcSetup make_setup(const Scenario& s)
{
  MpcSetup setup;
  setup.model              = make_model(s.model, s.model_params);
  setup.kernel             = s.controller.kernel;
  setup.grid_mode          = s.controller.grid;
  setup.bounds             = s.bounds;
  setup.footprint          = s.footprint;
  setup.obstacles          = s.all_obstacles();
  setup.d_min              = s.d_min;
  setup.association_cutoff = s.controller.association_cutoff;
  setup.association_k_max  = s.controller.association_k_max;
  setup.solver             = s.solver;
  setup.initializations    = s.controller.initializations;
  setup.tolerance          = s.controller.tolerance;
  setup.sample_time        = 1.0 / s.controller.rate;
  setup.decay              = s.controller.decay;
  return setup;
}

MpcController make_controller(const Scenario& s)
{
  validate_scenario(s);
  QuadraticFormConfig q = s.controller.quadratic;
  TimeOptimalConfig t   = s.controller.time_optimal;
  q.x_f                 = s.goals.front();
  t.x_f                 = s.goals.front();
  MpcController c(s.controller.variant, make_setup(s), q, t);
  if (s.controller.u_prev.size() != 0) c.state().u_prev = s.controller.u_prev;
  return c;
}

}  // namespace se2mpc
