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

#include "se2mpc/dynamics.hpp"

#include <cmath>

namespace se2mpc {

void ControlBounds::validate() const
{
  const Eigen::Index q = lower.size();
  if (upper.size() != q || rate_lower.size() != q || rate_upper.size() != q)
    throw std::invalid_argument("ControlBounds: dimension mismatch");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("ControlBounds: lower > upper");
  if ((rate_lower.array() > rate_upper.array()).any())
    throw std::invalid_argument("ControlBounds: rate_lower > rate_upper");
}

BicycleModel::BicycleModel(BicycleParams params) : params_(params)
{
  if (!(params_.lf >= 0.0) || !(params_.lr > 0.0)) throw std::invalid_argument("BicycleModel: need lf >= 0, lr > 0");
}

bool is_known_model(const std::string& name) { return name == "diff_drive" || name == "bicycle"; }

ModelPtr make_model(const std::string& name, const ModelParams& params)
{
  if (name == "diff_drive") return std::make_shared<DiffDriveModel>();
  if (name == "bicycle")
  {
    BicycleParams p;
    if (auto it = params.find("lf"); it != params.end()) p.lf = it->second;
    if (auto it = params.find("lr"); it != params.end()) p.lr = it->second;
    return std::make_shared<BicycleModel>(p);
  }
  throw std::invalid_argument("unknown system model '" + name + "'");
}

Eigen::VectorXd plant_integrate(const SystemModel& model, const Eigen::Ref<const Eigen::VectorXd>& x0,
                                const Eigen::Ref<const Eigen::VectorXd>& u, double dt, double max_substep)
{
  if (!(dt > 0.0)) throw std::invalid_argument("plant_integrate: dt must be positive");
  if (!(max_substep > 0.0)) throw std::invalid_argument("plant_integrate: max_substep must be positive");

  const int steps = std::max(1, static_cast<int>(std::ceil(dt / max_substep - 1e-12)));
  const double h  = dt / steps;

  const Eigen::Index p = model.state_dim();
  Eigen::VectorXd x    = x0;
  Eigen::VectorXd k1(p), k2(p), k3(p), k4(p);
  for (int i = 0; i < steps; ++i)
  {
    model.dynamics(x, u, k1);
    model.dynamics(x + 0.5 * h * k1, u, k2);
    model.dynamics(x + 0.5 * h * k2, u, k3);
    model.dynamics(x + h * k3, u, k4);
    x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) throw std::runtime_error("plant_integrate: non-finite state");
  }
  normalize_inplace(x, model.state_tags());
  return x;
}

}  // namespace se2mpc
