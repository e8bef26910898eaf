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

// Primal-dual barrier method on the hypergraph NLP.
//
// Inequality rows get slacks, c_I + s = 0 with s > 0, and finite vertex bounds get
// log barriers. Each iteration solves the reduced KKT system
//
//   [ W + Σ_z + δ_w I     Jᵀ  ] [dz]     [ ∇φ_μ + Jᵀy ]
//   [ J               -D      ] [dy] = - [ r_p        ]
//
// with one sparse LDLᵀ, raising δ_w until the inertia is (n, m). Steps are
// globalized with an ℓ1 merit function and a fraction-to-boundary rule.

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <utility>
#include <vector>

#include "se2mpc/solver.hpp"
#include "solver_internal.hpp"

namespace se2mpc::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// constants of the barrier update and line search
constexpr double kKappaEps   = 10.0;
constexpr double kKappaMu    = 0.2;
constexpr double kThetaMu    = 1.5;
constexpr double kTauMin     = 0.99;
constexpr double kGammaTheta = 1e-5;
constexpr double kGammaPhi   = 1e-8;
constexpr double kGammaAlpha = 0.05;
constexpr double kDelta      = 1.0;
constexpr double kSTheta     = 1.1;
constexpr double kSPhi       = 2.3;
constexpr double kEtaPhi     = 1e-8;
constexpr double kDeltaC     = 1e-8;
constexpr double kKappaSigma = 1e10;
constexpr double kScaleMax   = 100.0;
constexpr int kMaxBacktracks = 40;
constexpr int kMaxLineSearchFailures = 8;
constexpr int kMaxSoc = 4;
constexpr double kKappaSoc = 0.99;

class InteriorPoint
{
public:
  InteriorPoint(HypergraphProblem& pb, const SolverConfig& cfg) : pb_(pb), cfg_(cfg)
  {
    offsets_ = tangent_offsets(pb_, &n_);
    lo_      = Eigen::VectorXd::Constant(n_, -kInf);
    hi_      = Eigen::VectorXd::Constant(n_, kInf);
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
    {
      if (offsets_[id] < 0) continue;
      const Vertex& v = pb_.vertices()[id];
      lo_.segment(offsets_[id], v.dim()) = v.lower;
      hi_.segment(offsets_[id], v.dim()) = v.upper;
    }
    const auto& edges = pb_.edges();
    row_.assign(edges.size(), -1);
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      const Edge& e = edges[k];
      cols_.push_back(local_columns(pb_, e, offsets_));
      if (e.kind == EdgeKind::Objective) continue;
      row_[k] = m_;
      for (int i = 0; i < e.dim; ++i) slack_of_row_.push_back(e.kind == EdgeKind::Inequality ? mi_++ : -1);
      m_ += e.dim;
    }
    jac_.resize(edges.size());
    hess_.resize(edges.size());
  }

  SolverResult run()
  {
    const auto t0 = Clock::now();
    SolverResult res;
    push_interior();

    double f = pb_.objective();
    Eigen::VectorXd c(m_);
    if (!std::isfinite(f) || !constraints(c))
    {
      res.status  = SolverStatus::Infeasible;
      res.message = "non-finite cost at the initial point";
      finish(res, t0);
      return res;
    }

    mu_ = cfg_.barrier_init;
    init_slacks_and_duals(c);
    const double mu_min = 0.1 * std::min(cfg_.feasibility_tolerance, cfg_.optimality_tolerance);
    analyze_pattern();

    double theta     = primal_l1(c, s_);
    const double th0 = std::max(1.0, theta);
    theta_max_       = 1e1 * th0;
    theta_min_       = 1e-4 * th0;
    filter_.clear();
    double phi = barrier_value(f, s_);

    int stage          = 1;
    int ls_failures    = 0;
    double delta_floor = 0.0;

    for (int it = 0; it < cfg_.max_iterations; ++it)
    {
      if (cfg_.time_budget > 0.0 && seconds_since(t0) > cfg_.time_budget)
      {
        res.status = SolverStatus::TimeBudget;
        finish(res, t0);
        return res;
      }

      linearize(c);
      Errors err = errors(c);
      res.stationarity = err.dual;
      if (err.dual <= cfg_.optimality_tolerance && err.primal <= cfg_.feasibility_tolerance &&
          err.compl0 <= cfg_.optimality_tolerance && pb_.max_violation() <= cfg_.feasibility_tolerance)
      {
        res.status = SolverStatus::Converged;
        finish(res, t0);
        return res;
      }
      // barrier subproblem solved: shrink μ
      bool mu_changed = false;
      while (mu_ > mu_min && errors_mu(err) <= kKappaEps * mu_)
      {
        mu_        = std::max(mu_min, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
        mu_changed = true;
        recompute_complementarity(err);
      }
      if (mu_changed)
      {
        filter_.clear();
        phi = barrier_value(f, s_);
        ++stage;
      }

      if (!direction(delta_floor))
      {
        res.status  = pb_.max_violation() > cfg_.infeasible_violation ? SolverStatus::Infeasible : SolverStatus::MaxIter;
        res.message = "KKT system could not be regularized";
        finish(res, t0);
        return res;
      }

      // tiny step: the barrier problem cannot be improved further at this μ
      const double dz_max = n_ > 0 ? dz_.cwiseAbs().maxCoeff() : 0.0;
      const double ds_max = mi_ > 0 ? ds_.cwiseAbs().maxCoeff() : 0.0;
      if (std::max(dz_max, ds_max) <= 1e-14 * (1.0 + current_norm()))
      {
        if (mu_ <= mu_min) break;
        mu_ = std::max(mu_min, std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
        filter_.clear();
        phi = barrier_value(f, s_);
        ++stage;
        continue;
      }

      const double tau     = std::max(kTauMin, 1.0 - mu_);
      const double gd      = barrier_directional();
      const double alpha_0 = primal_step_bound(tau);
      double alpha_dual    = dual_step_bound(tau);
      double alpha_min     = kGammaTheta;
      if (gd < 0.0)
        alpha_min = std::min({kGammaTheta, kGammaPhi * theta / -gd,
                              kDelta * std::pow(theta, kSTheta) / std::pow(-gd, kSPhi)});
      alpha_min *= kGammaAlpha;

      std::vector<Eigen::VectorXd> backup;
      backup.reserve(pb_.vertices().size());
      for (const Vertex& v : pb_.vertices()) backup.push_back(v.values);
      const Eigen::VectorXd s0 = s_;
      const Trial current{f, phi, theta};

      double alpha = alpha_0;
      Trial trial;
      Eigen::VectorXd c_trial(m_);
      bool accepted = false;
      bool f_type   = false;
      for (int bt = 0; bt < kMaxBacktracks && alpha >= alpha_min; ++bt, alpha *= 0.5)
      {
        apply(backup, alpha);
        const Eigen::VectorXd s_trial = s0 + alpha * ds_;
        if (!evaluate_trial(s_trial, c_trial, trial)) continue;
        if (acceptable(current, trial, alpha, gd, f_type))
        {
          s_       = s_trial;
          accepted = true;
          break;
        }
        if (bt == 0 && trial.theta >= theta &&
            second_order_correction(backup, s0, c, c_trial, s_trial, tau, current, alpha, gd, alpha_dual, trial,
                                    f_type))
        {
          accepted = true;
          break;
        }
      }
      if (!accepted)
      {
        restore(backup);
        s_ = s0;
        if (++ls_failures > kMaxLineSearchFailures) break;
        // lean the next direction toward steepest descent
        delta_floor = std::max(1e-4, 10.0 * std::max(delta_floor, last_delta_));
        continue;
      }
      ls_failures = 0;
      delta_floor = 0.0;
      if (!f_type) filter_.push_back({(1.0 - kGammaTheta) * theta, phi - kGammaPhi * theta});

      f     = trial.f;
      phi   = trial.phi;
      theta = trial.theta;
      c     = c_trial;
      y_ += alpha * dy_;
      v_ += alpha_dual * dv_;
      zl_ += alpha_dual * dzl_;
      zu_ += alpha_dual * dzu_;
      safeguard_duals();
      ++res.iterations;
      res.outer_iterations = stage;
      const double step_norm = alpha * dz_.norm();
      if (cfg_.log)
        *cfg_.log << stage << ',' << res.iterations << ',' << f << ',' << pb_.max_violation() << ',' << step_norm
                  << ',' << phi << '\n';
    }

    const double violation = pb_.max_violation();
    res.status = violation > cfg_.infeasible_violation ? SolverStatus::Infeasible : SolverStatus::MaxIter;
    if (res.status == SolverStatus::Infeasible) res.message = "constraint violation did not decrease";
    finish(res, t0);
    return res;
  }

private:
  struct Trial
  {
    double f{0.0};
    double phi{0.0};  // barrier objective
    double theta{0.0};  // ‖c + s‖₁
  };
  struct Errors
  {
    double dual{0.0};     // scaled
    double primal{0.0};
    double compl_mu{0.0};  // scaled, against the current μ
    double compl0{0.0};    // scaled, against zero
    double sc{1.0};
  };

  void finish(SolverResult& res, Clock::time_point t0) const
  {
    res.cost          = pb_.objective();
    res.max_violation = pb_.max_violation();
    res.wall_time     = seconds_since(t0);
  }

  Eigen::VectorXd stacked_values() const
  {
    Eigen::VectorXd z(n_);
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
      if (offsets_[id] >= 0) z.segment(offsets_[id], pb_.vertices()[id].dim()) = pb_.vertices()[id].values;
    return z;
  }

  double current_norm() const { return stacked_values().norm(); }

  // Moves free coordinates strictly inside their bounds.
  void push_interior()
  {
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
    {
      if (offsets_[id] < 0) continue;
      Vertex& v = pb_.vertices()[id];
      for (Eigen::Index i = 0; i < v.dim(); ++i)
      {
        const double lo = v.lower(i), hi = v.upper(i);
        double x        = v.values(i);
        const double range = hi - lo;
        if (std::isfinite(lo))
        {
          const double p = std::min(1e-2 * std::max(1.0, std::abs(lo)), std::isfinite(range) ? 1e-2 * range : kInf);
          x              = std::max(x, lo + p);
        }
        if (std::isfinite(hi))
        {
          const double p = std::min(1e-2 * std::max(1.0, std::abs(hi)), std::isfinite(range) ? 1e-2 * range : kInf);
          x              = std::min(x, hi - p);
        }
        if (std::isfinite(range) && range <= 0.0) x = 0.5 * (lo + hi);
        v.values(i) = x;
      }
      normalize_inplace(v.values, v.tags);
    }
  }

  bool constraints(Eigen::VectorXd& c) const
  {
    const auto& edges = pb_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      if (row_[k] < 0) continue;
      pb_.evaluate(edges[k], c.segment(row_[k], edges[k].dim));
    }
    return c.allFinite();
  }

  void init_slacks_and_duals(const Eigen::VectorXd& c)
  {
    s_.resize(mi_);
    v_.resize(mi_);
    y_ = Eigen::VectorXd::Zero(m_);
    for (int r = 0; r < m_; ++r)
    {
      const int j = slack_of_row_[static_cast<std::size_t>(r)];
      if (j < 0) continue;
      s_(j)  = std::max(-c(r), std::max(1e-2, mu_));
      v_(j)  = mu_ / s_(j);
      y_(r)  = v_(j);
    }
    const Eigen::VectorXd z = stacked_values();
    zl_ = Eigen::VectorXd::Zero(n_);
    zu_ = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(lo_(i))) zl_(i) = mu_ / (z(i) - lo_(i));
      if (std::isfinite(hi_(i))) zu_(i) = mu_ / (hi_(i) - z(i));
    }
  }

  void analyze_pattern()
  {
    for (auto& H : hess_) H.resize(0, 0);
    for (std::size_t k = 0; k < cols_.size(); ++k)
      if (row_[k] >= 0)
        jac_[k] = Eigen::MatrixXd::Zero(pb_.edges()[k].dim, static_cast<Eigen::Index>(cols_[k].size()));
    sigma_z_ = Eigen::VectorXd::Zero(n_);
    assemble(0.0);
    ldlt_.analyzePattern(K_);
  }

  // objective gradient, constraint Jacobians and Lagrangian Hessian blocks
  void linearize(const Eigen::VectorXd& c)
  {
    gf_.setZero(n_);
    const auto& edges = pb_.edges();
    Eigen::VectorXd r;
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      const Edge& e    = edges[k];
      const auto& cols = cols_[k];
      hess_[k].resize(0, 0);
      if (cols.empty()) continue;
      const Eigen::MatrixXd J = local_jacobian(pb_, e, cols, cfg_.fd_step, static_cast<int>(k));
      if (e.kind == EdgeKind::Objective)
      {
        r.resize(e.dim);
        pb_.evaluate(e, r);
        Eigen::VectorXd w;
        if (e.aggregation == Aggregation::SquaredNorm)
        {
          w        = 2.0 * r;
          hess_[k] = 2.0 * J.transpose() * J;
        }
        else
        {
          w        = Eigen::VectorXd::Ones(e.dim);
          hess_[k] = weighted_edge_hessian(pb_, e, cols, cfg_.fd_hessian_step, w);
        }
        const Eigen::VectorXd ge = J.transpose() * w;
        for (std::size_t a = 0; a < cols.size(); ++a) gf_(cols[a].global) += ge(static_cast<Eigen::Index>(a));
      }
      else
      {
        jac_[k]                  = J;
        const Eigen::VectorXd yk = y_.segment(row_[k], e.dim);
        if (cfg_.constraint_curvature && yk.squaredNorm() > 0.0)
          hess_[k] = weighted_edge_hessian(pb_, e, cols, cfg_.fd_hessian_step, yk);
      }
    }
    (void)c;
    jty_ = jacobian_transpose_times(y_);

    const Eigen::VectorXd z = stacked_values();
    dl_ = Eigen::VectorXd::Constant(n_, kInf);
    du_ = Eigen::VectorXd::Constant(n_, kInf);
    sigma_z_.setZero(n_);
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(lo_(i)))
      {
        dl_(i) = std::max(z(i) - lo_(i), 1e-300);
        sigma_z_(i) += zl_(i) / dl_(i);
      }
      if (std::isfinite(hi_(i)))
      {
        du_(i) = std::max(hi_(i) - z(i), 1e-300);
        sigma_z_(i) += zu_(i) / du_(i);
      }
    }
  }

  Eigen::VectorXd jacobian_transpose_times(const Eigen::VectorXd& w) const
  {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    for (std::size_t k = 0; k < cols_.size(); ++k)
    {
      if (row_[k] < 0 || cols_[k].empty()) continue;
      const Eigen::VectorXd t = jac_[k].transpose() * w.segment(row_[k], jac_[k].rows());
      for (std::size_t a = 0; a < cols_[k].size(); ++a) out(cols_[k][a].global) += t(static_cast<Eigen::Index>(a));
    }
    return out;
  }

  Errors errors(const Eigen::VectorXd& c) const
  {
    Errors e;
    Eigen::VectorXd rd = gf_ + jty_ - zl_ + zu_;
    double dual        = n_ > 0 ? rd.cwiseAbs().maxCoeff() : 0.0;
    double primal      = 0.0;
    for (int r = 0; r < m_; ++r)
    {
      const int j = slack_of_row_[static_cast<std::size_t>(r)];
      primal      = std::max(primal, std::abs(c(r) + (j >= 0 ? s_(j) : 0.0)));
      if (j >= 0) dual = std::max(dual, std::abs(y_(r) - v_(j)));
    }
    const double nb  = static_cast<double>(m_ + mi_ + 2 * n_);
    const double sum = y_.lpNorm<1>() + v_.lpNorm<1>() + zl_.lpNorm<1>() + zu_.lpNorm<1>();
    const double sd  = nb > 0 ? std::max(kScaleMax, sum / nb) / kScaleMax : 1.0;
    const double nbz = static_cast<double>(mi_ + 2 * n_);
    const double sc  = nbz > 0 ? std::max(kScaleMax, (v_.lpNorm<1>() + zl_.lpNorm<1>() + zu_.lpNorm<1>()) / nbz) / kScaleMax
                               : 1.0;
    e.dual   = dual / sd;
    e.primal = primal;
    e.sc     = sc;
    double cm = 0.0, c0 = 0.0;
    complementarity(cm, c0);
    e.compl_mu = cm / sc;
    e.compl0   = c0 / sc;
    return e;
  }

  void complementarity(double& against_mu, double& against_zero) const
  {
    against_mu = against_zero = 0.0;
    for (int j = 0; j < mi_; ++j)
    {
      against_mu   = std::max(against_mu, std::abs(s_(j) * v_(j) - mu_));
      against_zero = std::max(against_zero, std::abs(s_(j) * v_(j)));
    }
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(dl_(i)))
      {
        against_mu   = std::max(against_mu, std::abs(dl_(i) * zl_(i) - mu_));
        against_zero = std::max(against_zero, std::abs(dl_(i) * zl_(i)));
      }
      if (std::isfinite(du_(i)))
      {
        against_mu   = std::max(against_mu, std::abs(du_(i) * zu_(i) - mu_));
        against_zero = std::max(against_zero, std::abs(du_(i) * zu_(i)));
      }
    }
  }

  double errors_mu(const Errors& e) const { return std::max({e.dual, e.primal, e.compl_mu}); }

  void recompute_complementarity(Errors& e) const
  {
    double cm = 0.0, c0 = 0.0;
    complementarity(cm, c0);
    e.compl_mu = cm / e.sc;
  }

  void assemble(double delta_w)
  {
    triplets_.clear();
    for (std::size_t k = 0; k < cols_.size(); ++k)
    {
      const auto& cols = cols_[k];
      const bool have  = hess_[k].size() > 0;
      for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
        {
          const int ra = cols[a].global, cb = cols[b].global;
          if (ra < cb) continue;
          triplets_.emplace_back(ra, cb,
                                 have ? hess_[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) : 0.0);
        }
      if (row_[k] < 0) continue;
      for (Eigen::Index i = 0; i < jac_[k].rows(); ++i)
        for (std::size_t a = 0; a < cols.size(); ++a)
          triplets_.emplace_back(n_ + row_[k] + static_cast<int>(i), cols[a].global,
                                 jac_[k](i, static_cast<Eigen::Index>(a)));
    }
    for (int i = 0; i < n_; ++i) triplets_.emplace_back(i, i, sigma_z_(i) + delta_w);
    for (int r = 0; r < m_; ++r)
    {
      const int j = slack_of_row_[static_cast<std::size_t>(r)];
      double d    = kDeltaC;
      if (j >= 0) d += s_(j) / v_(j);
      triplets_.emplace_back(n_ + r, n_ + r, -d);
    }
    K_.resize(n_ + m_, n_ + m_);
    K_.setFromTriplets(triplets_.begin(), triplets_.end());
  }

  bool factor_with_inertia(double delta_w)
  {
    assemble(delta_w);
    ldlt_.factorize(K_);
    if (ldlt_.info() != Eigen::Success) return false;
    const Eigen::VectorXd& D = ldlt_.vectorD();
    if (!D.allFinite()) return false;
    const auto pos = (D.array() > 0.0).count();
    const auto neg = (D.array() < 0.0).count();
    return pos == n_ && neg == m_;
  }

  // Newton direction for the barrier problem; fills dz_, dy_, ds_, dv_, dzl_, dzu_.
  bool direction(double delta_floor)
  {
    double delta = delta_floor;
    bool ok      = factor_with_inertia(delta);
    if (!ok)
    {
      delta = delta_floor > 0.0 ? 8.0 * delta_floor : (last_delta_ > 0.0 ? std::max(1e-20, last_delta_ / 3.0) : 1e-4);
      const double grow = last_delta_ > 0.0 ? 8.0 : 100.0;
      while (!(ok = factor_with_inertia(delta)))
      {
        delta *= grow;
        if (delta > 1e40) return false;
      }
    }
    last_delta_ = delta;

    delta_used_ = delta;
    Eigen::VectorXd c(m_);
    constraints(c);
    return solve_step(primal_residual(c, s_));
  }

  // Corrects the rejected full step for constraint curvature, reusing the factorization.
  // On success the iterate, slacks and direction hold the corrected step.
  bool second_order_correction(const std::vector<Eigen::VectorXd>& backup, const Eigen::VectorXd& s0,
                               const Eigen::VectorXd& c0, Eigen::VectorXd& c_trial, const Eigen::VectorXd& s_first,
                               double tau, const Trial& current, double& alpha, double gd, double& alpha_dual,
                               Trial& trial, bool& f_type)
  {
    const Eigen::VectorXd dz = dz_, dy = dy_, ds = ds_, dv = dv_, dzl = dzl_, dzu = dzu_;
    const double alpha_0     = alpha;
    Eigen::VectorXd p_soc    = alpha * primal_residual(c0, s0) + primal_residual(c_trial, s_first);
    double theta_prev        = trial.theta;
    for (int k = 0; k < kMaxSoc; ++k)
    {
      restore(backup);
      if (!solve_step(p_soc)) break;
      const double a = primal_step_bound(tau);
      apply(backup, a);
      const Eigen::VectorXd s_trial = s0 + a * ds_;
      if (!evaluate_trial(s_trial, c_trial, trial)) break;
      if (acceptable(current, trial, alpha_0, gd, f_type))
      {
        s_         = s_trial;
        alpha      = a;
        alpha_dual = dual_step_bound(tau);
        return true;
      }
      if (trial.theta > kKappaSoc * theta_prev) break;
      theta_prev = trial.theta;
      p_soc      = a * p_soc + primal_residual(c_trial, s_trial);
    }
    restore(backup);
    dz_  = dz;
    dy_  = dy;
    ds_  = ds;
    dv_  = dv;
    dzl_ = dzl;
    dzu_ = dzu;
    return false;
  }

  // objective, barrier objective and infeasibility at the applied trial point
  bool evaluate_trial(const Eigen::VectorXd& s_trial, Eigen::VectorXd& c_trial, Trial& t) const
  {
    t.f = pb_.objective();
    if (!std::isfinite(t.f) || !constraints(c_trial)) return false;
    t.phi   = barrier_value(t.f, s_trial);
    t.theta = primal_l1(c_trial, s_trial);
    return std::isfinite(t.phi);
  }

  // filter acceptance; f_type reports an Armijo step on the barrier objective
  bool acceptable(const Trial& cur, const Trial& t, double alpha, double gd, bool& f_type) const
  {
    f_type = false;
    if (t.theta >= theta_max_) return false;
    for (const auto& [th, ph] : filter_)
      if (t.theta >= th && t.phi >= ph) return false;
    const bool switching =
        gd < 0.0 && alpha * std::pow(-gd, kSPhi) > kDelta * std::pow(cur.theta, kSTheta);
    if (cur.theta <= theta_min_ && switching)
    {
      f_type = true;
      return t.phi <= cur.phi + kEtaPhi * alpha * gd;
    }
    return t.theta <= (1.0 - kGammaTheta) * cur.theta || t.phi <= cur.phi - kGammaPhi * cur.theta;
  }

  Eigen::VectorXd primal_residual(const Eigen::VectorXd& c, const Eigen::VectorXd& s) const
  {
    Eigen::VectorXd p = c;
    for (int r = 0; r < m_; ++r)
    {
      const int j = slack_of_row_[static_cast<std::size_t>(r)];
      if (j >= 0) p(r) += s(j);
    }
    return p;
  }

  // solves the factorized system for primal residual p (c + s on the current iterate)
  bool solve_step(const Eigen::VectorXd& p)
  {
    Eigen::VectorXd rhs(n_ + m_);
    Eigen::VectorXd grad_barrier = gf_;
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(dl_(i))) grad_barrier(i) -= mu_ / dl_(i);
      if (std::isfinite(du_(i))) grad_barrier(i) += mu_ / du_(i);
    }
    rhs.head(n_) = -(grad_barrier + jty_);
    for (int r = 0; r < m_; ++r)
    {
      const int j = slack_of_row_[static_cast<std::size_t>(r)];
      double rp   = p(r);
      if (j >= 0)
      {
        const double sig = v_(j) / s_(j);
        rp -= (y_(r) - mu_ / s_(j)) / sig;
      }
      rhs(n_ + r) = -rp;
    }
    const Eigen::VectorXd sol = ldlt_.solve(rhs);
    if (!sol.allFinite()) return false;
    dz_ = sol.head(n_);
    dy_ = sol.tail(m_);

    ds_.resize(mi_);
    dv_.resize(mi_);
    for (int r = 0; r < m_; ++r)
    {
      const int j = slack_of_row_[static_cast<std::size_t>(r)];
      if (j < 0) continue;
      const double sig = v_(j) / s_(j);
      ds_(j)           = (mu_ / s_(j) - y_(r) - dy_(r)) / sig;
      dv_(j)           = mu_ / s_(j) - v_(j) - sig * ds_(j);
    }
    dzl_ = Eigen::VectorXd::Zero(n_);
    dzu_ = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(dl_(i))) dzl_(i) = mu_ / dl_(i) - zl_(i) - zl_(i) / dl_(i) * dz_(i);
      if (std::isfinite(du_(i))) dzu_(i) = mu_ / du_(i) - zu_(i) + zu_(i) / du_(i) * dz_(i);
    }
    return true;
  }

  double primal_l1(const Eigen::VectorXd& c, const Eigen::VectorXd& s) const
  {
    double sum = 0.0;
    for (int r = 0; r < m_; ++r)
    {
      const int j = slack_of_row_[static_cast<std::size_t>(r)];
      sum += std::abs(c(r) + (j >= 0 ? s(j) : 0.0));
    }
    return sum;
  }

  // φ_μ: objective plus log barriers on slacks and finite bounds
  double barrier_value(double f, const Eigen::VectorXd& s) const
  {
    double phi = f;
    for (int j = 0; j < mi_; ++j)
    {
      if (!(s(j) > 0.0)) return kInf;
      phi -= mu_ * std::log(s(j));
    }
    const Eigen::VectorXd z = stacked_values();
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(lo_(i)))
      {
        if (!(z(i) > lo_(i))) return kInf;
        phi -= mu_ * std::log(z(i) - lo_(i));
      }
      if (std::isfinite(hi_(i)))
      {
        if (!(hi_(i) > z(i))) return kInf;
        phi -= mu_ * std::log(hi_(i) - z(i));
      }
    }
    return phi;
  }

  // ∇φ_μᵀ (dz, ds)
  double barrier_directional() const
  {
    double d = gf_.dot(dz_);
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(dl_(i))) d -= mu_ * dz_(i) / dl_(i);
      if (std::isfinite(du_(i))) d += mu_ * dz_(i) / du_(i);
    }
    for (int j = 0; j < mi_; ++j) d -= mu_ * ds_(j) / s_(j);
    return d;
  }

  double primal_step_bound(double tau) const
  {
    double a = 1.0;
    for (int j = 0; j < mi_; ++j)
      if (ds_(j) < 0.0) a = std::min(a, -tau * s_(j) / ds_(j));
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(dl_(i)) && dz_(i) < 0.0) a = std::min(a, -tau * dl_(i) / dz_(i));
      if (std::isfinite(du_(i)) && dz_(i) > 0.0) a = std::min(a, tau * du_(i) / dz_(i));
    }
    return a;
  }

  double dual_step_bound(double tau) const
  {
    double a = 1.0;
    for (int j = 0; j < mi_; ++j)
      if (dv_(j) < 0.0) a = std::min(a, -tau * v_(j) / dv_(j));
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(dl_(i)) && dzl_(i) < 0.0) a = std::min(a, -tau * zl_(i) / dzl_(i));
      if (std::isfinite(du_(i)) && dzu_(i) < 0.0) a = std::min(a, -tau * zu_(i) / dzu_(i));
    }
    return a;
  }

  void apply(const std::vector<Eigen::VectorXd>& base, double alpha)
  {
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
    {
      if (offsets_[id] < 0) continue;
      Vertex& v = pb_.vertices()[id];
      v.values  = generic_boxplus(base[id], alpha * dz_.segment(offsets_[id], v.dim()), v.tags);
    }
  }

  void restore(const std::vector<Eigen::VectorXd>& base)
  {
    for (std::size_t id = 0; id < base.size(); ++id) pb_.vertices()[id].values = base[id];
  }

  // keep bound duals within a factor of their primal-dual estimate
  void safeguard_duals()
  {
    for (int j = 0; j < mi_; ++j)
      v_(j) = std::clamp(v_(j), mu_ / (kKappaSigma * s_(j)), kKappaSigma * mu_ / s_(j));
    const Eigen::VectorXd z = stacked_values();
    for (int i = 0; i < n_; ++i)
    {
      if (std::isfinite(lo_(i)))
      {
        const double d = z(i) - lo_(i);
        zl_(i)         = std::clamp(zl_(i), mu_ / (kKappaSigma * d), kKappaSigma * mu_ / d);
      }
      if (std::isfinite(hi_(i)))
      {
        const double d = hi_(i) - z(i);
        zu_(i)         = std::clamp(zu_(i), mu_ / (kKappaSigma * d), kKappaSigma * mu_ / d);
      }
    }
  }

  HypergraphProblem& pb_;
  const SolverConfig& cfg_;
  std::vector<int> offsets_;
  int n_{0};
  int m_{0};
  int mi_{0};
  Eigen::VectorXd lo_, hi_;
  std::vector<std::vector<LocalCol>> cols_;
  std::vector<int> row_;
  std::vector<int> slack_of_row_;

  double mu_{0.1};
  double theta_max_{kInf};
  double theta_min_{0.0};
  std::vector<std::pair<double, double>> filter_;  // (θ, φ) corners
  Eigen::VectorXd s_, y_, v_, zl_, zu_;

  Eigen::VectorXd gf_, jty_, dl_, du_, sigma_z_;
  std::vector<Eigen::MatrixXd> jac_, hess_;
  Eigen::VectorXd dz_, dy_, ds_, dv_, dzl_, dzu_;
  double last_delta_{0.0};
  double delta_used_{0.0};

  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::SparseMatrix<double> K_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

}  // namespace

SolverResult solve_interior_point(HypergraphProblem& pb, const SolverConfig& cfg)
{
  InteriorPoint ip(pb, cfg);
  return ip.run();
}

}  // namespace se2mpc::detail
