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

#include "se2mpc/solver.hpp"

#include "solver_internal.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace se2mpc {

namespace detail {

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double fd_h(double rel, double v) { return rel * std::max(1.0, std::abs(v)); }

namespace {

// Local copies of an edge's vertex values so probes can perturb several slots.
class EdgeProbe
{
public:
  EdgeProbe(const HypergraphProblem& pb, const Edge& e) : edge_(e)
  {
    for (std::size_t s = 0; s < e.vertices.size(); ++s)
    {
      const Vertex& v = pb.vertex(e.vertices[s]);
      values_[s]      = v.values;
      tags_[s]        = &v.tags;
      ptrs_[s]        = &values_[s];
    }
  }

  Eigen::VectorXd& value(std::size_t slot) { return values_[slot]; }
  const TagList& tags(std::size_t slot) const { return *tags_[slot]; }

  void eval(Eigen::Ref<Eigen::VectorXd> out) const
  {
    edge_.residual(EdgeInputs(ptrs_.data(), edge_.vertices.size()), out);
  }

  double eval_sum()
  {
    buf_.resize(edge_.dim);
    eval(buf_);
    return buf_.sum();
  }

  // v ⊞ (delta e_i) written into slot, returns previous value for restore
  void perturb(std::size_t slot, Eigen::Index i, double delta)
  {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(values_[slot].size());
    d(i)              = delta;
    boxplus_inplace(values_[slot], d, *tags_[slot]);
  }

private:
  const Edge& edge_;
  std::array<Eigen::VectorXd, kMaxEdgeVertices> values_;
  std::array<const TagList*, kMaxEdgeVertices> tags_{};
  std::array<const Eigen::VectorXd*, kMaxEdgeVertices> ptrs_{};
  Eigen::VectorXd buf_;
};

bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.allFinite(); }

}  // namespace

std::vector<LocalCol> local_columns(const HypergraphProblem& pb, const Edge& e, const std::vector<int>& offsets)
{
  std::vector<LocalCol> cols;
  for (std::size_t s = 0; s < e.vertices.size(); ++s)
  {
    const int id = e.vertices[s];
    if (offsets[static_cast<std::size_t>(id)] < 0) continue;
    for (Eigen::Index i = 0; i < pb.vertex(id).dim(); ++i)
      cols.push_back({s, i, offsets[static_cast<std::size_t>(id)] + static_cast<int>(i)});
  }
  return cols;
}

Eigen::MatrixXd local_jacobian(const HypergraphProblem& pb, const Edge& e, const std::vector<LocalCol>& cols,
                               double rel, int edge_id)
{
  EdgeProbe probe(pb, e);
  Eigen::MatrixXd J(e.dim, static_cast<Eigen::Index>(cols.size()));
  Eigen::VectorXd rp(e.dim), rm(e.dim);
  for (std::size_t c = 0; c < cols.size(); ++c)
  {
    const auto& lc         = cols[c];
    const Eigen::VectorXd v = probe.value(lc.slot);
    const double h         = fd_h(rel, v(lc.coord));
    probe.perturb(lc.slot, lc.coord, h);
    probe.eval(rp);
    probe.value(lc.slot) = v;
    probe.perturb(lc.slot, lc.coord, -h);
    probe.eval(rm);
    probe.value(lc.slot) = v;
    if (!all_finite(rp) || !all_finite(rm))
      throw std::runtime_error("edge " + std::to_string(edge_id) + " ('" + e.family +
                               "'): non-finite residual during finite differencing");
    J.col(static_cast<Eigen::Index>(c)) = (rp - rm) / (2.0 * h);
  }
  return J;
}

// FD Hessian of the scalar s = wᵀ r over the edge's free coordinates.
Eigen::MatrixXd weighted_edge_hessian(const HypergraphProblem& pb, const Edge& e, const std::vector<LocalCol>& cols,
                                      double rel, const Eigen::VectorXd& w)
{
  const auto n = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd H(n, n);
  EdgeProbe probe(pb, e);
  std::vector<double> h(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) h[c] = fd_h(rel, probe.value(cols[c].slot)(cols[c].coord));

  Eigen::VectorXd r(e.dim);
  auto eval_at = [&](std::size_t a, double da, std::size_t b, double db) {
    const Eigen::VectorXd va = probe.value(cols[a].slot);
    const Eigen::VectorXd vb = probe.value(cols[b].slot);
    probe.perturb(cols[a].slot, cols[a].coord, da);
    probe.perturb(cols[b].slot, cols[b].coord, db);
    probe.eval(r);
    probe.value(cols[b].slot) = vb;
    probe.value(cols[a].slot) = va;
    return w.dot(r);
  };

  probe.eval(r);
  const double s0 = w.dot(r);
  for (std::size_t a = 0; a < cols.size(); ++a)
  {
    const double ha = h[a];
    const double sp = eval_at(a, ha, a, ha);
    const double sm = eval_at(a, -ha, a, -ha);
    H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = (sp - 2.0 * s0 + sm) / (4.0 * ha * ha);
    for (std::size_t b = a + 1; b < cols.size(); ++b)
    {
      const double hb  = h[b];
      const double spp = eval_at(a, ha, b, hb);
      const double spm = eval_at(a, ha, b, -hb);
      const double smp = eval_at(a, -ha, b, hb);
      const double smm = eval_at(a, -ha, b, -hb);
      const double v   = (spp - spm - smp + smm) / (4.0 * ha * hb);
      H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      H(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  if (!H.allFinite()) return Eigen::MatrixXd::Zero(n, n);
  return H;
}

Eigen::MatrixXd psd_clip(const Eigen::MatrixXd& H)
{
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

namespace {

using namespace detail;

class AugmentedLagrangian
{
public:
  AugmentedLagrangian(HypergraphProblem& pb, const SolverConfig& cfg) : pb_(pb), cfg_(cfg)
  {
    offsets_ = tangent_offsets(pb_, &n_);
    lo_      = Eigen::VectorXd::Constant(n_, -std::numeric_limits<double>::infinity());
    hi_      = Eigen::VectorXd::Constant(n_, std::numeric_limits<double>::infinity());
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
    {
      if (offsets_[id] < 0) continue;
      const Vertex& v = pb_.vertices()[id];
      lo_.segment(offsets_[id], v.dim()) = v.lower;
      hi_.segment(offsets_[id], v.dim()) = v.upper;
    }
    const auto& edges = pb_.edges();
    cols_.reserve(edges.size());
    mult_.resize(edges.size());
    for (const Edge& e : edges)
    {
      cols_.push_back(local_columns(pb_, e, offsets_));
      if (e.kind != EdgeKind::Objective) mult_[cols_.size() - 1] = Eigen::VectorXd::Zero(e.dim);
    }
    rho_ = cfg_.penalty_init;
  }

  SolverResult run()
  {
    const auto t0 = Clock::now();
    SolverResult res;
    project_values();

    double merit = merit_value();
    if (!std::isfinite(merit))
    {
      res.status  = SolverStatus::Infeasible;
      res.message = "non-finite cost at the initial point";
      finish(res, t0);
      return res;
    }

    analyze_pattern();
    double prev_violation = pb_.max_violation();
    double inner_tol      = std::max(cfg_.optimality_tolerance, 1e-1);

    for (int outer = 0; outer < cfg_.max_outer_iterations; ++outer)
    {
      res.outer_iterations = outer + 1;
      bool out_of_time     = false;
      bool singular        = false;
      int steps_taken      = 0;
      double damping       = cfg_.damping_init;
      double stationarity  = 0.0;

      for (int inner = 0; inner < cfg_.max_inner_iterations; ++inner)
      {
        if (cfg_.time_budget > 0.0 && seconds_since(t0) > cfg_.time_budget)
        {
          out_of_time = true;
          break;
        }
        linearize();
        stationarity = projected_gradient_norm();
        if (stationarity <= inner_tol) break;

        double step_norm = 0.0;
        const int accepted = lm_step(merit, damping, step_norm);
        if (accepted < 0)
        {
          singular = true;
          break;
        }
        ++res.iterations;
        ++steps_taken;
        if (cfg_.log)
          *cfg_.log << outer << ',' << res.iterations << ',' << pb_.objective() << ',' << pb_.max_violation() << ','
                    << step_norm << ',' << merit << '\n';
        if (step_norm <= 1e-12 * (1.0 + current_norm())) break;
      }

      res.stationarity       = stationarity;
      const double violation = pb_.max_violation();
      if (out_of_time)
      {
        res.status = SolverStatus::TimeBudget;
        finish(res, t0);
        return res;
      }
      if (violation <= cfg_.feasibility_tolerance && stationarity <= std::max(inner_tol, cfg_.optimality_tolerance) &&
          inner_tol <= cfg_.optimality_tolerance)
      {
        res.status = SolverStatus::Converged;
        finish(res, t0);
        return res;
      }
      if (singular && violation > cfg_.infeasible_violation && rho_ >= cfg_.penalty_max)
      {
        res.status  = SolverStatus::Infeasible;
        res.message = "singular subproblem at maximum penalty";
        finish(res, t0);
        return res;
      }

      update_multipliers();
      if (steps_taken > 0 && violation > cfg_.feasibility_tolerance && violation > 0.25 * prev_violation)
        rho_ = std::min(rho_ * cfg_.penalty_growth, cfg_.penalty_max);
      inner_tol = std::max(cfg_.optimality_tolerance, 0.1 * inner_tol);
      prev_violation = violation;
      merit          = merit_value();
    }

    const double violation = pb_.max_violation();
    res.status = (rho_ >= cfg_.penalty_max && violation > cfg_.infeasible_violation) ? SolverStatus::Infeasible
                                                                                      : SolverStatus::MaxIter;
    if (res.status == SolverStatus::Infeasible) res.message = "constraint violation stalled at maximum penalty";
    if (violation <= cfg_.feasibility_tolerance && res.stationarity <= cfg_.optimality_tolerance)
      res.status = SolverStatus::Converged;
    finish(res, t0);
    return res;
  }

private:
  void finish(SolverResult& res, Clock::time_point t0) const
  {
    res.cost          = pb_.objective();
    res.max_violation = pb_.max_violation();
    res.wall_time     = seconds_since(t0);
  }

  double current_norm() const
  {
    double s = 0.0;
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
      if (offsets_[id] >= 0) s += pb_.vertices()[id].values.squaredNorm();
    return std::sqrt(s);
  }

  void project_values()
  {
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
    {
      if (offsets_[id] < 0) continue;
      Vertex& v = pb_.vertices()[id];
      v.values  = v.values.cwiseMax(v.lower).cwiseMin(v.upper);
      normalize_inplace(v.values, v.tags);
    }
  }

  // f + Σ_eq (λᵀc + ρ/2‖c‖²) + Σ_ineq (‖max(0, μ + ρc)‖² − ‖μ‖²)/(2ρ)
  double merit_value() const
  {
    double m = 0.0;
    Eigen::VectorXd r;
    const auto& edges = pb_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      const Edge& e = edges[k];
      r.resize(e.dim);
      pb_.evaluate(e, r);
      if (!r.allFinite()) return std::numeric_limits<double>::infinity();
      switch (e.kind)
      {
        case EdgeKind::Objective: m += aggregate(e.aggregation, r); break;
        case EdgeKind::Equality: m += mult_[k].dot(r) + 0.5 * rho_ * r.squaredNorm(); break;
        case EdgeKind::Inequality:
          m += ((mult_[k] + rho_ * r).cwiseMax(0.0).squaredNorm() - mult_[k].squaredNorm()) / (2.0 * rho_);
          break;
      }
    }
    return m;
  }

  void analyze_pattern()
  {
    build_hessian(Eigen::VectorXd::Zero(n_), std::vector<bool>(static_cast<std::size_t>(n_), false), 0.0);
    ldlt_.analyzePattern(Hs_);
  }

  // Gradient g_ and per-edge Hessian blocks of the augmented Lagrangian model.
  void linearize()
  {
    g_.setZero(n_);
    blocks_.assign(pb_.edges().size(), Eigen::MatrixXd());
    const auto& edges = pb_.edges();
    Eigen::VectorXd r;
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      const Edge& e    = edges[k];
      const auto& cols = cols_[k];
      if (cols.empty()) continue;
      const Eigen::MatrixXd J = local_jacobian(pb_, e, cols, cfg_.fd_step, static_cast<int>(k));
      r.resize(e.dim);
      pb_.evaluate(e, r);
      Eigen::VectorXd w;
      Eigen::MatrixXd H;
      switch (e.kind)
      {
        case EdgeKind::Objective:
          if (e.aggregation == Aggregation::SquaredNorm)
          {
            w = 2.0 * r;
            H = 2.0 * J.transpose() * J;
          }
          else
          {
            w = Eigen::VectorXd::Ones(e.dim);
            H = psd_clip(weighted_edge_hessian(pb_, e, cols, cfg_.fd_hessian_step, w));
          }
          break;
        case EdgeKind::Equality:
          w = mult_[k] + rho_ * r;
          H = rho_ * J.transpose() * J;
          if (cfg_.constraint_curvature && w.squaredNorm() > 0.0)
            H += weighted_edge_hessian(pb_, e, cols, cfg_.fd_hessian_step, w);
          break;
        case EdgeKind::Inequality:
        {
          w = (mult_[k] + rho_ * r).cwiseMax(0.0);
          Eigen::MatrixXd Ja = J;
          for (Eigen::Index i = 0; i < e.dim; ++i)
            if (w(i) <= 0.0) Ja.row(i).setZero();
          H = rho_ * Ja.transpose() * Ja;
          if (cfg_.constraint_curvature && w.squaredNorm() > 0.0)
            H += weighted_edge_hessian(pb_, e, cols, cfg_.fd_hessian_step, w);
          break;
        }
      }
      const Eigen::VectorXd ge = J.transpose() * w;
      for (std::size_t c = 0; c < cols.size(); ++c) g_(cols[c].global) += ge(static_cast<Eigen::Index>(c));
      blocks_[k] = std::move(H);
    }
  }

  bool at_lower(Eigen::Index i, double v) const { return std::isfinite(lo_(i)) && v <= lo_(i) + 1e-12 * (1 + std::abs(lo_(i))); }
  bool at_upper(Eigen::Index i, double v) const { return std::isfinite(hi_(i)) && v >= hi_(i) - 1e-12 * (1 + std::abs(hi_(i))); }

  Eigen::VectorXd stacked_values() const
  {
    Eigen::VectorXd z(n_);
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
      if (offsets_[id] >= 0) z.segment(offsets_[id], pb_.vertices()[id].dim()) = pb_.vertices()[id].values;
    return z;
  }

  double projected_gradient_norm() const
  {
    const Eigen::VectorXd z = stacked_values();
    const Eigen::VectorXd pg = (z - g_).cwiseMax(lo_).cwiseMin(hi_) - z;
    return n_ > 0 ? pg.cwiseAbs().maxCoeff() : 0.0;
  }

  void build_hessian(const Eigen::VectorXd& diag_scale, const std::vector<bool>& frozen, double damping)
  {
    triplets_.clear();
    const auto& edges = pb_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      const auto& cols = cols_[k];
      const bool have  = k < blocks_.size() && blocks_[k].size() > 0;
      for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
        {
          const int ra = cols[a].global;
          const int cb = cols[b].global;
          if (ra < cb) continue;
          double v = have ? blocks_[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) : 0.0;
          if (frozen[static_cast<std::size_t>(ra)] || frozen[static_cast<std::size_t>(cb)]) v = 0.0;
          triplets_.emplace_back(ra, cb, v);
        }
    }
    for (int i = 0; i < n_; ++i)
    {
      const double d = frozen[static_cast<std::size_t>(i)] ? 1.0 : damping * (std::abs(diag_scale(i)) + 1.0);
      triplets_.emplace_back(i, i, d);
    }
    Hs_.resize(n_, n_);
    Hs_.setFromTriplets(triplets_.begin(), triplets_.end());
  }

  Eigen::VectorXd model_hessian_diag() const
  {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n_);
    const auto& edges = pb_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      if (blocks_[k].size() == 0) continue;
      for (std::size_t a = 0; a < cols_[k].size(); ++a)
        d(cols_[k][a].global) += blocks_[k](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a));
    }
    return d;
  }

  // Hv using the per-edge blocks
  Eigen::VectorXd model_hessian_times(const Eigen::VectorXd& v) const
  {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
    const auto& edges   = pb_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      if (blocks_[k].size() == 0) continue;
      const auto& cols = cols_[k];
      Eigen::VectorXd vl(static_cast<Eigen::Index>(cols.size()));
      for (std::size_t c = 0; c < cols.size(); ++c) vl(static_cast<Eigen::Index>(c)) = v(cols[c].global);
      const Eigen::VectorXd hl = blocks_[k] * vl;
      for (std::size_t c = 0; c < cols.size(); ++c) out(cols[c].global) += hl(static_cast<Eigen::Index>(c));
    }
    return out;
  }

  void apply_step(const Eigen::VectorXd& dz)
  {
    for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
    {
      if (offsets_[id] < 0) continue;
      Vertex& v = pb_.vertices()[id];
      boxplus_inplace(v.values, dz.segment(offsets_[id], v.dim()), v.tags);
      v.values = v.values.cwiseMax(v.lower).cwiseMin(v.upper);
    }
  }

  // Returns 1 on an accepted step, -1 if no acceptable damping was found.
  int lm_step(double& merit, double& damping, double& step_norm)
  {
    const Eigen::VectorXd z = stacked_values();
    std::vector<bool> frozen(static_cast<std::size_t>(n_), false);
    for (Eigen::Index i = 0; i < n_; ++i)
      frozen[static_cast<std::size_t>(i)] = (at_lower(i, z(i)) && g_(i) > 0.0) || (at_upper(i, z(i)) && g_(i) < 0.0);

    const Eigen::VectorXd hdiag = model_hessian_diag();
    std::vector<Eigen::VectorXd> backup;
    backup.reserve(pb_.vertices().size());
    for (const Vertex& v : pb_.vertices()) backup.push_back(v.values);

    Eigen::VectorXd rhs = -g_;
    for (Eigen::Index i = 0; i < n_; ++i)
      if (frozen[static_cast<std::size_t>(i)]) rhs(i) = 0.0;

    for (int attempt = 0; attempt < 60; ++attempt)
    {
      build_hessian(hdiag, frozen, damping);
      ldlt_.factorize(Hs_);
      // an indefinite model gives no descent guarantee: damp until all pivots are positive
      if (ldlt_.info() != Eigen::Success || (ldlt_.vectorD().array() <= 0.0).any())
      {
        damping *= cfg_.damping_increase;
        if (damping > 1e16) break;
        continue;
      }
      Eigen::VectorXd dz = ldlt_.solve(rhs);
      if (!dz.allFinite())
      {
        damping *= cfg_.damping_increase;
        continue;
      }
      apply_step(dz);
      // actual (projected) step in tangent coordinates
      Eigen::VectorXd taken(n_);
      for (std::size_t id = 0; id < pb_.vertices().size(); ++id)
      {
        if (offsets_[id] < 0) continue;
        const Vertex& v = pb_.vertices()[id];
        taken.segment(offsets_[id], v.dim()) = generic_boxminus(v.values, backup[id], v.tags);
      }
      const double predicted = -(g_.dot(taken) + 0.5 * taken.dot(model_hessian_times(taken)));
      const double trial     = merit_value();
      const double actual    = merit - trial;
      if (std::isfinite(trial) && predicted > 0.0 && actual > 1e-4 * predicted)
      {
        merit     = trial;
        step_norm = taken.norm();
        damping   = std::max(damping / cfg_.damping_decrease, 1e-12);
        return 1;
      }
      if (std::isfinite(trial) && predicted <= 1e-300 && taken.norm() == 0.0)
      {
        // projection removed the whole step: nothing to do at this point
        step_norm = 0.0;
        return 1;
      }
      for (std::size_t id = 0; id < backup.size(); ++id) pb_.vertices()[id].values = backup[id];
      damping *= cfg_.damping_increase;
      if (damping > 1e16) break;
    }
    return -1;
  }

  void update_multipliers()
  {
    Eigen::VectorXd r;
    const auto& edges = pb_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k)
    {
      const Edge& e = edges[k];
      if (e.kind == EdgeKind::Objective) continue;
      r.resize(e.dim);
      pb_.evaluate(e, r);
      if (e.kind == EdgeKind::Equality)
        mult_[k] += rho_ * r;
      else
        mult_[k] = (mult_[k] + rho_ * r).cwiseMax(0.0);
    }
  }

  HypergraphProblem& pb_;
  const SolverConfig& cfg_;
  std::vector<int> offsets_;
  int n_{0};
  Eigen::VectorXd lo_, hi_, g_;
  std::vector<std::vector<LocalCol>> cols_;
  std::vector<Eigen::VectorXd> mult_;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Eigen::Triplet<double>> triplets_;
  Eigen::SparseMatrix<double> Hs_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  double rho_{10.0};
};

}  // namespace

void SolverConfig::validate() const
{
  if (!(feasibility_tolerance > 0.0) || !(optimality_tolerance > 0.0))
    throw std::invalid_argument("SolverConfig: tolerances must be positive");
  if (!(penalty_growth > 1.0)) throw std::invalid_argument("SolverConfig: penalty growth must exceed 1");
  if (!(penalty_init > 0.0) || !(fd_step > 0.0) || !(fd_hessian_step > 0.0) || !(damping_init > 0.0))
    throw std::invalid_argument("SolverConfig: penalty, damping and step sizes must be positive");
  if (max_outer_iterations < 1 || max_inner_iterations < 1 || max_iterations < 1)
    throw std::invalid_argument("SolverConfig: iteration limits must be >= 1");
  if (!(barrier_init > 0.0) || !(barrier_init_warm > 0.0)) throw std::invalid_argument("SolverConfig: barrier parameter must be positive");
  if (!(infeasible_violation >= 0.0)) throw std::invalid_argument("SolverConfig: infeasible_violation must be >= 0");
}

std::string to_string(SolverStatus s)
{
  switch (s)
  {
    case SolverStatus::Converged: return "Converged";
    case SolverStatus::MaxIter: return "MaxIter";
    case SolverStatus::TimeBudget: return "TimeBudget";
    case SolverStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

std::size_t SparsePattern::nonzeros() const
{
  std::size_t n = 0;
  for (const auto& e : edges) n += e.size();
  return n;
}

SparsePattern build_sparse_pattern(const HypergraphProblem& problem)
{
  SparsePattern p;
  for (const Edge& e : problem.edges())
  {
    std::vector<PatternEntry> entries;
    for (int row = 0; row < e.dim; ++row)
      for (int id : e.vertices)
      {
        const Vertex& v = problem.vertex(id);
        if (v.fixed) continue;
        for (Eigen::Index c = 0; c < v.dim(); ++c) entries.push_back({row, id, static_cast<int>(c)});
      }
    p.edges.push_back(std::move(entries));
  }
  return p;
}

std::vector<int> tangent_offsets(const HypergraphProblem& problem, int* total)
{
  std::vector<int> offsets;
  int n = 0;
  for (const Vertex& v : problem.vertices())
  {
    offsets.push_back(v.fixed ? -1 : n);
    if (!v.fixed) n += static_cast<int>(v.dim());
  }
  if (total) *total = n;
  return offsets;
}

EdgeJacobian edge_jacobian(const HypergraphProblem& problem, int edge_id, double fd_step)
{
  const Edge& e = problem.edges().at(static_cast<std::size_t>(edge_id));
  const std::vector<int> offsets = tangent_offsets(problem);
  const auto cols = detail::local_columns(problem, e, offsets);
  const Eigen::MatrixXd J = detail::local_jacobian(problem, e, cols, fd_step, edge_id);

  EdgeJacobian out;
  Eigen::Index c = 0;
  for (int id : e.vertices)
  {
    const Vertex& v = problem.vertex(id);
    if (v.fixed)
    {
      out.blocks.emplace_back();
      continue;
    }
    out.blocks.push_back(J.middleCols(c, v.dim()));
    c += v.dim();
  }
  return out;
}

Eigen::MatrixXd dense_jacobian(const HypergraphProblem& problem, double fd_step)
{
  int n = 0;
  const std::vector<int> offsets = tangent_offsets(problem, &n);
  int rows = 0;
  for (const Edge& e : problem.edges()) rows += e.dim;

  HypergraphProblem probe = problem;
  auto stack = [&](const HypergraphProblem& pb) {
    Eigen::VectorXd r(rows);
    int row = 0;
    for (const Edge& e : pb.edges())
    {
      pb.evaluate(e, r.segment(row, e.dim));
      row += e.dim;
    }
    return r;
  };

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows, n);
  for (std::size_t id = 0; id < problem.vertices().size(); ++id)
  {
    if (offsets[id] < 0) continue;
    const Vertex& v = problem.vertices()[id];
    for (Eigen::Index i = 0; i < v.dim(); ++i)
    {
      const double h    = detail::fd_h(fd_step, v.values(i));
      Eigen::VectorXd d = Eigen::VectorXd::Zero(v.dim());
      d(i)              = h;
      probe.vertices()[id].values = generic_boxplus(v.values, d, v.tags);
      const Eigen::VectorXd rp    = stack(probe);
      probe.vertices()[id].values = generic_boxplus(v.values, -d, v.tags);
      const Eigen::VectorXd rm    = stack(probe);
      probe.vertices()[id].values = v.values;
      J.col(offsets[id] + i)      = (rp - rm) / (2.0 * h);
    }
  }
  return J;
}

SolverResult solve(HypergraphProblem& problem, const SolverConfig& config)
{
  config.validate();
  try
  {
    if (config.method == SolverMethod::InteriorPoint) return detail::solve_interior_point(problem, config);
    AugmentedLagrangian al(problem, config);
    return al.run();
  }
  catch (const std::exception& ex)
  {
    SolverResult res;
    res.status  = SolverStatus::Infeasible;
    res.message = ex.what();
    return res;
  }
}

namespace {

// Uniform resampling to N intervals over the same horizon time.
TrajectoryGrid resample(const TrajectoryGrid& g, int N, const TagList& tags)
{
  const double T  = g.final_time();
  const double dt = T / N;
  std::vector<double> knots(g.dts.size() + 1, 0.0);
  for (std::size_t k = 0; k < g.dts.size(); ++k) knots[k + 1] = knots[k] + g.dts[k];

  auto interval_at = [&](double t) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t);
    const auto k  = static_cast<std::ptrdiff_t>(it - knots.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(g.dts.size()) - 1));
  };

  TrajectoryGrid out;
  for (int i = 0; i <= N; ++i)
  {
    const double t = i == N ? T : i * dt;
    const std::size_t k = interval_at(t);
    const double tau    = std::clamp((t - knots[k]) / g.dts[k], 0.0, 1.0);
    out.states.push_back(generic_boxplus(g.states[k], tau * generic_boxminus(g.states[k + 1], g.states[k], tags), tags));
  }
  for (int i = 0; i < N; ++i) out.controls.push_back(g.controls[interval_at((i + 0.5) * dt)]);
  out.dts.assign(static_cast<std::size_t>(N), dt);
  out.states.front() = g.states.front();
  out.states.back()  = g.states.back();
  return out;
}

}  // namespace

TrajectoryGrid warm_start(const TrajectoryGrid& previous, const Eigen::VectorXd& x_measured, int N_new,
                          ShiftPolicy policy, const TagList& tags, WarmStartReport* report)
{
  if (N_new < 1) throw std::invalid_argument("warm_start: N_new must be >= 1");
  WarmStartReport rep;

  bool compatible = !previous.controls.empty() && previous.states.size() == previous.controls.size() + 1 &&
                    previous.dts.size() == previous.controls.size() &&
                    static_cast<std::size_t>(x_measured.size()) == tags.size();
  if (compatible)
    for (const auto& x : previous.states) compatible = compatible && x.size() == x_measured.size();
  if (compatible)
    for (double dt : previous.dts) compatible = compatible && dt > 0.0;

  if (!compatible)
  {
    rep.fresh = true;
    TrajectoryGrid g;
    const Eigen::Index q = previous.controls.empty() ? 0 : previous.controls.front().size();
    const double dt      = previous.dts.empty() || !(previous.dts.front() > 0.0) ? 0.1 : previous.dts.front();
    g.states.assign(static_cast<std::size_t>(N_new) + 1, x_measured);
    g.controls.assign(static_cast<std::size_t>(N_new), Eigen::VectorXd::Zero(q));
    g.dts.assign(static_cast<std::size_t>(N_new), dt);
    if (report) *report = rep;
    return g;
  }

  TrajectoryGrid g = previous;
  const int N      = previous.N();
  if (policy == ShiftPolicy::Receding)
  {
    if (N >= 2)
    {
      g.states.erase(g.states.begin());
      g.states.push_back(g.states.back());
      g.controls.erase(g.controls.begin());
      g.controls.push_back(g.controls.back());
    }
  }
  else
  {
    // drop the leading states already passed: walk forward while the distance keeps decreasing
    int nearest  = 0;
    double best  = generic_boxminus(x_measured, g.states[0], tags).norm();
    for (int k = 1; k < N; ++k)
    {
      const double d = generic_boxminus(x_measured, g.states[static_cast<std::size_t>(k)], tags).norm();
      if (d >= best) break;
      best    = d;
      nearest = k;
    }
    if (nearest > 0)
    {
      g.states.erase(g.states.begin(), g.states.begin() + nearest);
      g.controls.erase(g.controls.begin(), g.controls.begin() + nearest);
      g.dts.erase(g.dts.begin(), g.dts.begin() + nearest);
    }
    rep.pruned = nearest;
  }
  g.states.front() = x_measured;
  if (g.N() != N_new) g = resample(g, N_new, tags);
  g.states.front() = x_measured;
  if (report) *report = rep;
  return g;
}

}  // namespace se2mpc

