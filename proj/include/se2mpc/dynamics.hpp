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

#ifndef SE2MPC_DYNAMICS_HPP_
#define SE2MPC_DYNAMICS_HPP_

#include <Eigen/Core>

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>

#include "se2mpc/manifold.hpp"

namespace se2mpc {

/// Front/rear axle distances measured from the center of mass [m].
struct BicycleParams
{
  double lf{1.1};
  double lr{1.7};
};

/// Box sets U (control) and U̇ (control rate).
struct ControlBounds
{
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd rate_lower;
  Eigen::VectorXd rate_upper;

  Eigen::Index dim() const { return lower.size(); }
  /// Throws std::invalid_argument if sizes differ or lower > upper anywhere.
  void validate() const;
};

/// Unicycle / differential drive: (v cos θ, v sin θ, ω).
template <typename Scalar, typename DerivedX, typename DerivedU>
Eigen::Matrix<Scalar, 3, 1> diff_drive_f(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedU>& u)
{
  using std::cos;
  using std::sin;
  return {u(0) * cos(x(2)), u(0) * sin(x(2)), u(1)};
}

/// Side-slip angle of the kinematic bicycle; throws std::domain_error if |δ| >= π/2.
template <typename Scalar>
Scalar bicycle_beta(Scalar delta, const BicycleParams& p)
{
  using std::abs;
  using std::atan;
  using std::tan;
  if (!(abs(delta) < std::numbers::pi_v<Scalar> / 2)) throw std::domain_error("bicycle_beta: |delta| >= pi/2");
  return atan(static_cast<Scalar>(p.lr / (p.lf + p.lr)) * tan(delta));
}

/// Kinematic bicycle with speed v and front steering δ as inputs.
template <typename Scalar, typename DerivedX, typename DerivedU>
Eigen::Matrix<Scalar, 3, 1> bicycle_f(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedU>& u,
                                      const BicycleParams& p)
{
  using std::cos;
  using std::sin;
  const Scalar beta = bicycle_beta<Scalar>(u(1), p);
  const Scalar v    = u(0);
  return {v * cos(x(2) + beta), v * sin(x(2) + beta), v / static_cast<Scalar>(p.lr) * sin(beta)};
}

/**
 * @brief Continuous-time, time-invariant model xdot = f(x, u).
 */
class SystemModel
{
public:
  virtual ~SystemModel() = default;

  virtual std::string name() const      = 0;
  virtual Eigen::Index state_dim() const   = 0;
  virtual Eigen::Index control_dim() const = 0;
  virtual TagList state_tags() const    = 0;

  virtual void dynamics(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                        Eigen::Ref<Eigen::VectorXd> xdot) const = 0;

  Eigen::VectorXd operator()(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::VectorXd>& u) const
  {
    Eigen::VectorXd xdot(state_dim());
    dynamics(x, u, xdot);
    return xdot;
  }
};

using ModelPtr = std::shared_ptr<const SystemModel>;

class DiffDriveModel final : public SystemModel
{
public:
  std::string name() const override { return "diff_drive"; }
  Eigen::Index state_dim() const override { return 3; }
  Eigen::Index control_dim() const override { return 2; }
  TagList state_tags() const override { return se2_tags(); }
  void dynamics(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                Eigen::Ref<Eigen::VectorXd> xdot) const override
  {
    xdot = diff_drive_f<double>(x, u);
  }
};

class BicycleModel final : public SystemModel
{
public:
  explicit BicycleModel(BicycleParams params);

  std::string name() const override { return "bicycle"; }
  Eigen::Index state_dim() const override { return 3; }
  Eigen::Index control_dim() const override { return 2; }
  TagList state_tags() const override { return se2_tags(); }
  void dynamics(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                Eigen::Ref<Eigen::VectorXd> xdot) const override
  {
    xdot = bicycle_f<double>(x, u, params_);
  }

  const BicycleParams& params() const { return params_; }

private:
  BicycleParams params_;
};

/**
 * @brief Wraps a model and reports all state dimensions as Euclidean.
 *
 * Used to reproduce plain vector-space optimization of angular states.
 */
class EuclideanAblatedModel final : public SystemModel
{
public:
  explicit EuclideanAblatedModel(ModelPtr inner) : inner_(std::move(inner)) {}

  std::string name() const override { return inner_->name(); }
  Eigen::Index state_dim() const override { return inner_->state_dim(); }
  Eigen::Index control_dim() const override { return inner_->control_dim(); }
  TagList state_tags() const override { return euclidean_tags(inner_->state_dim()); }
  void dynamics(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& u,
                Eigen::Ref<Eigen::VectorXd> xdot) const override
  {
    inner_->dynamics(x, u, xdot);
  }

private:
  ModelPtr inner_;
};

/// Named scalar parameters for the model registry, e.g. {"lf", 1.1}.
using ModelParams = std::map<std::string, double>;

/// Registry lookup: "diff_drive" or "bicycle". Throws std::invalid_argument for unknown names.
ModelPtr make_model(const std::string& name, const ModelParams& params = {});

/// True if the registry knows the model name.
bool is_known_model(const std::string& name);

/**
 * @brief Plant ground truth: RK4 under zero-order-held control.
 *
 * The interval is split into equal sub-steps of at most max_substep seconds.
 * Angular dimensions of the result are normalized. Throws std::invalid_argument
 * for dt <= 0 and std::runtime_error when the integration produces non-finite values.
 */
Eigen::VectorXd plant_integrate(const SystemModel& model, const Eigen::Ref<const Eigen::VectorXd>& x0,
                                const Eigen::Ref<const Eigen::VectorXd>& u, double dt, double max_substep = 0.01);

}  // namespace se2mpc

#endif  // SE2MPC_DYNAMICS_HPP_
