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

#include "se2mpc/controller.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <thread>

namespace se2mpc {

namespace {

// A candidate whose violation is above this is only used when nothing better exists.
constexpr double kAcceptViolation = 1e-3;

void require(bool ok, const char* msg)
{
  if (!ok) throw std::invalid_argument(msg);
}

bool is_psd(const Eigen::MatrixXd& M)
{
  if (M.rows() != M.cols()) return false;
  if (M.size() == 0) return true;
  if (!M.allFinite() || !M.isApprox(M.transpose(), 1e-12)) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-10;
}

struct Candidate
{
  SolverResult result;
  TrajectoryGrid grid;
  bool ok{false};
  std::string error;
};

// Solve every guess on its own problem copy, at most `threads` at a time.
std::vector<Candidate> solve_candidates(const OcpDefinition& ocp, const std::vector<TrajectoryGrid>& guesses,
                                        const SolverConfig& cfg, int threads)
{
  std::vector<Candidate> out(guesses.size());
  auto work = [&](std::size_t i) {
    try
    {
      TranscribedProblem tp = assemble_nlp(ocp, guesses[i]);
      out[i].result         = solve(tp.problem, cfg);
      out[i].grid           = extract_grid(tp);
      out[i].ok             = out[i].result.status != SolverStatus::Infeasible;
      if (!out[i].ok) out[i].error = out[i].result.message;
    }
    catch (const std::exception& e)
    {
      out[i].ok    = false;
      out[i].error = e.what();
    }
  };
  const std::size_t width = std::max<std::size_t>(1, static_cast<std::size_t>(threads));
  if (width == 1 || guesses.size() == 1)
  {
    for (std::size_t i = 0; i < guesses.size(); ++i) work(i);
    return out;
  }
  for (std::size_t begin = 0; begin < guesses.size(); begin += width)
  {
    std::vector<std::thread> pool;
    for (std::size_t i = begin; i < std::min(guesses.size(), begin + width); ++i) pool.emplace_back(work, i);
    for (auto& t : pool) t.join();
  }
  return out;
}

// Lowest cost among candidates with small violation, else the least violated one; -1 if none usable.
int select_candidate(const std::vector<Candidate>& cands)
{
  int best = -1;
  for (std::size_t i = 0; i < cands.size(); ++i)
  {
    const auto& c = cands[i];
    if (!c.ok || c.result.max_violation > kAcceptViolation) continue;
    if (best < 0 || c.result.cost < cands[static_cast<std::size_t>(best)].result.cost) best = static_cast<int>(i);
  }
  if (best >= 0) return best;
  for (std::size_t i = 0; i < cands.size(); ++i)
  {
    const auto& c = cands[i];
    if (!c.ok) continue;
    if (best < 0 || c.result.max_violation < cands[static_cast<std::size_t>(best)].result.max_violation)
      best = static_cast<int>(i);
  }
  return best;
}

// Previous control shrunk by `decay`, kept inside U and inside the rate box around u_p.
Eigen::VectorXd fallback_control(const MpcSetup& setup, const ControllerState& state)
{
  const ControlBounds& b = setup.bounds;
  Eigen::VectorXd u      = setup.decay * state.u_prev;
  u = u.cwiseMax(state.u_prev + b.rate_lower * state.dt_prev).cwiseMin(state.u_prev + b.rate_upper * state.dt_prev);
  return u.cwiseMax(b.lower).cwiseMin(b.upper);
}

double polyline_length(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& waypoints,
                       const Eigen::VectorXd& x_f)
{
  double len            = 0.0;
  Eigen::Vector2d prev  = x.head<2>();
  auto add              = [&](const Eigen::VectorXd& p) {
    len += (p.head<2>() - prev).norm();
    prev = p.head<2>();
  };
  for (const auto& w : waypoints) add(w);
  add(x_f);
  return len;
}

OcpDefinition base_ocp(const MpcSetup& setup, const ControllerState& state, const Eigen::VectorXd& x_f, double t_now)
{
  OcpDefinition ocp;
  ocp.model              = setup.model;
  ocp.kernel             = setup.kernel;
  ocp.grid_mode          = setup.grid_mode;
  ocp.bounds             = setup.bounds;
  ocp.boundary.u_prev    = state.u_prev;
  ocp.boundary.dt_prev   = state.dt_prev;
  ocp.boundary.u_final   = Eigen::VectorXd::Zero(setup.model->control_dim());
  ocp.x_goal             = x_f;
  ocp.footprint          = setup.footprint;
  ocp.obstacles          = setup.obstacles;
  ocp.d_min              = setup.d_min;
  ocp.time_offset        = t_now;
  ocp.association_cutoff = setup.association_cutoff;
  ocp.association_k_max  = setup.association_k_max;
  return ocp;
}

// One guess per initialization; dt is used unless the initialization carries its own duration.
std::vector<TrajectoryGrid> fresh_guesses(const MpcSetup& setup, const Eigen::VectorXd& x, const Eigen::VectorXd& x_f,
                                          int N, double dt, double dt_lo = 0.0, double dt_hi = 0.0)
{
  const TagList tags = setup.model->state_tags();
  const auto q       = setup.model->control_dim();
  std::vector<TrajectoryGrid> out;
  if (setup.initializations.empty()) out.push_back(initialize_guess(x, x_f, N, dt, q, tags));
  for (const auto& init : setup.initializations)
  {
    double h = dt;
    if (init.duration > 0.0 && dt_hi > 0.0) h = std::clamp(init.duration / N, dt_lo, dt_hi);
    out.push_back(initialize_guess(x, x_f, N, h, q, tags, init.waypoints));
  }
  return out;
}

// Common tail of both variants: solve, select, apply or fall back.
StepResult finish_step(const OcpDefinition& ocp, const std::vector<TrajectoryGrid>& guesses, const MpcSetup& setup,
                       ControllerState& state, StepDiagnostics diag)
{
  const auto t0   = std::chrono::steady_clock::now();
  const int width = setup.max_threads > 0 ? setup.max_threads : planner_threads();
  SolverConfig cfg = setup.solver;
  if (!diag.fresh) cfg.barrier_init = cfg.barrier_init_warm;
  const std::vector<Candidate> cands = solve_candidates(ocp, guesses, cfg, std::min(width, planner_threads()));
  diag.solve_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  diag.candidates = static_cast<int>(cands.size());

  StepResult out;
  const int best = select_candidate(cands);
  if (best < 0)
  {
    out.u              = fallback_control(setup, state);
    diag.status        = StepStatus::Fallback;
    diag.solver_status = SolverStatus::Infeasible;
    diag.message       = cands.empty() ? "no candidates" : cands.front().error;
    state.warm.reset();
  }
  else
  {
    const Candidate& c = cands[static_cast<std::size_t>(best)];
    out.plan           = c.grid;
    out.u              = c.grid.controls.front();
    diag.status        = StepStatus::Solved;
    diag.solver_status = c.result.status;
    diag.cost          = c.result.cost;
    diag.max_violation = c.result.max_violation;
    diag.iterations    = c.result.iterations;
    diag.tf_star       = c.grid.final_time();
    diag.dt_star       = diag.tf_star / c.grid.N();
    diag.message       = c.result.message;
    state.warm         = c.grid;
  }
  state.u_prev  = out.u;
  state.dt_prev = setup.sample_time;
  out.diag      = diag;
  return out;
}

StepResult finished_step(const MpcSetup& setup, ControllerState& state)
{
  StepResult out;
  out.u              = Eigen::VectorXd::Zero(setup.model->control_dim());
  out.diag.status    = StepStatus::Finished;
  out.diag.N         = state.N;
  out.diag.N_next    = state.N;
  state.u_prev       = out.u;
  state.dt_prev      = setup.sample_time;
  state.warm.reset();
  return out;
}

}  // namespace

std::string to_string(ControllerVariant v)
{
  switch (v)
  {
    case ControllerVariant::Quadratic: return "quad";
    case ControllerVariant::TimeOptimal: return "to";
    case ControllerVariant::Hybrid: return "hybrid";
  }
  return "unknown";
}

ControllerVariant parse_variant(const std::string& name)
{
  if (name == "quad") return ControllerVariant::Quadratic;
  if (name == "to") return ControllerVariant::TimeOptimal;
  if (name == "hybrid") return ControllerVariant::Hybrid;
  throw std::invalid_argument("unknown controller variant '" + name + "' (expected quad, to or hybrid)");
}

std::string to_string(StepStatus s)
{
  switch (s)
  {
    case StepStatus::Solved: return "solved";
    case StepStatus::Fallback: return "fallback";
    case StepStatus::Finished: return "finished";
  }
  return "unknown";
}

void QuadraticFormConfig::validate(Eigen::Index state_dim, Eigen::Index control_dim) const
{
  require(N >= 1, "QuadraticFormConfig: N must be >= 1");
  require(dt_s > 0.0 && std::isfinite(dt_s), "QuadraticFormConfig: dt_s must be positive");
  require(Q.rows() == state_dim && Qf.rows() == state_dim, "QuadraticFormConfig: Q/Qf dimension mismatch");
  require(R.rows() == control_dim, "QuadraticFormConfig: R dimension mismatch");
  require(is_psd(Q) && is_psd(Qf) && is_psd(R), "QuadraticFormConfig: weights must be symmetric PSD");
  require(x_f.size() == state_dim, "QuadraticFormConfig: goal dimension mismatch");
}

void TimeOptimalConfig::validate(Eigen::Index control_dim) const
{
  require(N_min >= 2, "TimeOptimalConfig: N_min must be >= 2");
  require(N_init >= N_min, "TimeOptimalConfig: N_init must be >= N_min");
  require(dt_s > 0.0, "TimeOptimalConfig: dt_s must be positive");
  require(dt_eps > 0.0, "TimeOptimalConfig: dt_eps must be positive");
  require(dt_min > 0.0 && dt_max > dt_min, "TimeOptimalConfig: need 0 < dt_min < dt_max");
  require(dt_init >= 0.0, "TimeOptimalConfig: dt_init must be >= 0");
  require(R_hybrid.size() == 0 || (R_hybrid.rows() == control_dim && is_psd(R_hybrid)),
          "TimeOptimalConfig: R_hybrid must be empty or a PSD control weight");
}

double quadratic_cost_terms(const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& x_f,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R, const TagList& tags)
{
  const Eigen::VectorXd dx = generic_boxminus(x, x_f, tags);
  return dx.dot(Q * dx) + u.dot(R * u);
}

double terminal_cost(const Eigen::VectorXd& x_N, const Eigen::VectorXd& x_f, const Eigen::MatrixXd& Qf,
                     const TagList& tags)
{
  const Eigen::VectorXd dx = generic_boxminus(x_N, x_f, tags);
  return dx.dot(Qf * dx);
}

int grid_adapt(int N, double dt_star, double dt_s, double dt_eps, int N_min)
{
  if (dt_star > dt_s + dt_eps) return N + 1;
  if (dt_star < dt_s - dt_eps) return std::max(N - 1, N_min);
  return N;
}

bool goal_reached(const Eigen::VectorXd& x, const Eigen::VectorXd& x_f, const GoalTolerance& tol, const TagList& tags)
{
  // states are poses (x, y, θ); the tags decide whether θ is compared on the circle
  if (x.size() != 3 || x_f.size() != 3) throw std::invalid_argument("goal_reached: expected pose states");
  const Eigen::VectorXd d = generic_boxminus(x, x_f, tags);
  return d.head<2>().norm() <= tol.position && std::abs(d(2)) <= tol.angle;
}

int planner_threads()
{
  if (const char* env = std::getenv("MPC_PLANNER_THREADS"))
  {
    char* end    = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(std::min<long>(n, 256));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ControllerState initial_state(const MpcSetup& setup, int N, const Eigen::VectorXd& x_f)
{
  ControllerState s;
  s.N       = N;
  s.u_prev  = Eigen::VectorXd::Zero(setup.model->control_dim());
  s.dt_prev = setup.sample_time;
  s.x_f     = x_f;
  return s;
}

StepResult mpc_step_quadratic(const QuadraticFormConfig& cfg, const MpcSetup& setup, ControllerState& state,
                              const Eigen::VectorXd& x, double t_now)
{
  if (!x.allFinite()) throw std::invalid_argument("mpc_step_quadratic: measured state is not finite");
  const TagList tags = setup.model->state_tags();
  cfg.validate(setup.model->state_dim(), setup.model->control_dim());
  if (goal_reached(x, cfg.x_f, setup.tolerance, tags)) return finished_step(setup, state);

  OcpDefinition ocp = base_ocp(setup, state, cfg.x_f, t_now);
  ocp.fixed_dt      = true;
  ocp.cost.kind     = CostKind::Quadratic;
  ocp.cost.Q        = cfg.Q;
  ocp.cost.Qf       = cfg.Qf;
  ocp.cost.R        = cfg.R;
  ocp.terminal      = cfg.terminal;

  StepDiagnostics diag;
  diag.N = diag.N_next = cfg.N;
  state.N              = cfg.N;
  std::vector<TrajectoryGrid> guesses;
  if (state.warm && state.warm->N() == cfg.N)
  {
    // shift by one interval only once a full interval has elapsed
    if (setup.sample_time >= 0.5 * cfg.dt_s)
      guesses.push_back(warm_start(*state.warm, x, cfg.N, ShiftPolicy::Receding, tags));
    else
    {
      TrajectoryGrid g  = *state.warm;
      g.states.front()  = x;
      guesses.push_back(std::move(g));
    }
    guesses.back().dts.assign(static_cast<std::size_t>(cfg.N), cfg.dt_s);
  }
  else
  {
    diag.fresh = true;
    guesses    = fresh_guesses(setup, x, cfg.x_f, cfg.N, cfg.dt_s);
  }
  return finish_step(ocp, guesses, setup, state, diag);
}

StepResult mpc_step_time_optimal(const TimeOptimalConfig& cfg, const MpcSetup& setup, ControllerState& state,
                                 const Eigen::VectorXd& x, double t_now)
{
  if (!x.allFinite()) throw std::invalid_argument("mpc_step_time_optimal: measured state is not finite");
  const TagList tags = setup.model->state_tags();
  cfg.validate(setup.model->control_dim());
  if (state.N < cfg.N_min) state.N = cfg.N_init;
  if (goal_reached(x, cfg.x_f, setup.tolerance, tags)) return finished_step(setup, state);

  OcpDefinition ocp = base_ocp(setup, state, cfg.x_f, t_now);
  ocp.fixed_dt      = false;
  ocp.dt_min        = cfg.dt_min;
  ocp.dt_max        = cfg.dt_max;
  ocp.terminal      = TerminalSet::Pinned;
  const bool hybrid = cfg.R_hybrid.size() > 0 && cfg.R_hybrid.norm() > 0.0;
  ocp.cost.kind     = hybrid ? CostKind::Hybrid : CostKind::MinimumTime;
  if (hybrid) ocp.cost.R = cfg.R_hybrid;

  StepDiagnostics diag;
  diag.N = state.N;
  std::vector<TrajectoryGrid> guesses;
  if (state.warm)
  {
    WarmStartReport rep;
    guesses.push_back(warm_start(*state.warm, x, state.N, ShiftPolicy::Shrinking, tags, &rep));
    diag.fresh = rep.fresh;
    for (double& dt : guesses.back().dts) dt = std::clamp(dt, cfg.dt_min, cfg.dt_max);
  }
  else
  {
    diag.fresh = true;
    double dt  = cfg.dt_init;
    if (dt <= 0.0)
    {
      const double vmax = std::max(std::abs(setup.bounds.lower(0)), std::abs(setup.bounds.upper(0)));
      double len        = 0.0;
      if (setup.initializations.empty())
        len = polyline_length(x, {}, cfg.x_f);
      else
        for (const auto& init : setup.initializations)
          len = std::max(len, polyline_length(x, init.waypoints, cfg.x_f));
      dt = std::max(cfg.dt_s, vmax > 0.0 ? len / (0.5 * vmax) / state.N : cfg.dt_s);
    }
    guesses = fresh_guesses(setup, x, cfg.x_f, state.N, std::clamp(dt, cfg.dt_min, cfg.dt_max), cfg.dt_min, cfg.dt_max);
  }

  StepResult out = finish_step(ocp, guesses, setup, state, diag);
  if (out.diag.status == StepStatus::Solved)
    state.N = grid_adapt(state.N, out.diag.dt_star, cfg.dt_s, cfg.dt_eps, cfg.N_min);
  out.diag.N_next = state.N;
  return out;
}

MpcController::MpcController(ControllerVariant variant, MpcSetup setup, QuadraticFormConfig quad,
                             TimeOptimalConfig to)
    : variant_(variant), setup_(std::move(setup)), quad_(std::move(quad)), to_(std::move(to))
{
  if (!setup_.model) throw std::invalid_argument("MpcController: model is null");
  setup_.bounds.validate();
  if (variant_ == ControllerVariant::Quadratic)
  {
    quad_.validate(setup_.model->state_dim(), setup_.model->control_dim());
    state_ = initial_state(setup_, quad_.N, quad_.x_f);
  }
  else
  {
    if (variant_ == ControllerVariant::TimeOptimal) to_.R_hybrid.resize(0, 0);
    to_.validate(setup_.model->control_dim());
    state_ = initial_state(setup_, to_.N_init, to_.x_f);
  }
}

StepResult MpcController::step(const Eigen::VectorXd& x, double t_now)
{
  if (variant_ == ControllerVariant::Quadratic) return mpc_step_quadratic(quad_, setup_, state_, x, t_now);
  return mpc_step_time_optimal(to_, setup_, state_, x, t_now);
}

void MpcController::set_goal(const Eigen::VectorXd& x_f)
{
  quad_.x_f = x_f;
  to_.x_f   = x_f;
  state_.x_f = x_f;
  state_.warm.reset();
  state_.N = variant_ == ControllerVariant::Quadratic ? quad_.N : to_.N_init;
}

}  // namespace se2mpc
