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

#ifndef SE2MPC_MANIFOLD_HPP_
#define SE2MPC_MANIFOLD_HPP_

/**
 * @file
 * @brief Increment (boxplus) and difference (boxminus) operators for
 * Euclidean, SO(2) and SE(2) parameter blocks.
 *
 * Every variable block handled by the optimizer carries one ManifoldTag per
 * coordinate. Euclidean coordinates are updated by plain addition, Angular
 * coordinates by addition followed by normalization to [-pi, pi). The tangent
 * (increment) space is always the plain R^p.
 */

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace se2mpc {

enum class ManifoldTag : std::uint8_t { Euclidean, Angular };

using TagList = std::vector<ManifoldTag>;

/// Tag sequence of an SE(2) pose (x, y, theta).
inline TagList se2_tags() { return {ManifoldTag::Euclidean, ManifoldTag::Euclidean, ManifoldTag::Angular}; }

/// All-Euclidean tag sequence of length n.
inline TagList euclidean_tags(Eigen::Index n) { return TagList(static_cast<std::size_t>(n), ManifoldTag::Euclidean); }

/**
 * @brief Normalize an angle to the half-open interval [-pi, pi).
 *
 * Constant time for any finite input. Throws std::domain_error on NaN/inf.
 */
template <typename Scalar>
Scalar norm_angle(Scalar phi)
{
  using std::floor;
  if (!std::isfinite(static_cast<double>(phi))) throw std::domain_error("norm_angle: non-finite angle");
  constexpr Scalar kPi    = std::numbers::pi_v<Scalar>;
  constexpr Scalar kTwoPi = 2 * std::numbers::pi_v<Scalar>;
  Scalar r                = phi - kTwoPi * floor((phi + kPi) / kTwoPi);
  // round-off at the interval ends
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

/// Shortest signed angular distance a - b, in [-pi, pi).
template <typename Scalar>
Scalar angle_diff(Scalar a, Scalar b)
{
  return norm_angle<Scalar>(a - b);
}

/// Local tangent increment of an SE(2) pose; lives in R^3, never normalized.
template <typename Scalar>
using SE2Increment = Eigen::Matrix<Scalar, 3, 1>;

/**
 * @brief Planar pose (x, y, theta) with theta kept in [-pi, pi).
 */
template <typename Scalar>
class SE2State
{
public:
  using Coeffs = Eigen::Matrix<Scalar, 3, 1>;

  SE2State() : coeffs_(Coeffs::Zero()) {}
  SE2State(Scalar x, Scalar y, Scalar theta) : coeffs_(x, y, norm_angle(theta))
  {
    if (!std::isfinite(static_cast<double>(x)) || !std::isfinite(static_cast<double>(y)))
      throw std::domain_error("SE2State: non-finite translation");
  }
  template <typename Derived>
  explicit SE2State(const Eigen::MatrixBase<Derived>& v) : SE2State(v(0), v(1), v(2))
  {
  }

  Scalar x() const { return coeffs_(0); }
  Scalar y() const { return coeffs_(1); }
  Scalar theta() const { return coeffs_(2); }
  Eigen::Matrix<Scalar, 2, 1> position() const { return coeffs_.template head<2>(); }
  const Coeffs& coeffs() const { return coeffs_; }

private:
  Coeffs coeffs_;
};

using Pose2d = SE2State<double>;

/// x ⊞ d: translation added, angle added then normalized.
template <typename Scalar, typename Derived>
SE2State<Scalar> boxplus(const SE2State<Scalar>& x, const Eigen::MatrixBase<Derived>& d)
{
  return SE2State<Scalar>(x.x() + d(0), x.y() + d(1), x.theta() + d(2));
}

/// x2 ⊟ x1: translation difference and shortest signed angular distance.
template <typename Scalar>
SE2Increment<Scalar> boxminus(const SE2State<Scalar>& x2, const SE2State<Scalar>& x1)
{
  return SE2Increment<Scalar>(x2.x() - x1.x(), x2.y() - x1.y(), angle_diff(x2.theta(), x1.theta()));
}

namespace detail {
inline void check_tag_length(Eigen::Index a, Eigen::Index b, std::size_t tags, const char* what)
{
  if (a != b || static_cast<std::size_t>(a) != tags)
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(a) + ", " +
                                std::to_string(b) + ", " + std::to_string(tags) + " tags)");
}
}  // namespace detail

/**
 * @brief Tag-driven increment: Euclidean dims add, Angular dims add and normalize.
 */
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> generic_boxplus(const Eigen::MatrixBase<DerivedA>& values,
                                                                          const Eigen::MatrixBase<DerivedB>& increment,
                                                                          std::span<const ManifoldTag> tags)
{
  detail::check_tag_length(values.size(), increment.size(), tags.size(), "generic_boxplus");
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> out = values + increment;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (tags[static_cast<std::size_t>(i)] == ManifoldTag::Angular) out(i) = norm_angle(out(i));
  return out;
}

/**
 * @brief Tag-driven difference a ⊟ b; Angular dims yield the shortest signed distance.
 */
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> generic_boxminus(const Eigen::MatrixBase<DerivedA>& a,
                                                                           const Eigen::MatrixBase<DerivedB>& b,
                                                                           std::span<const ManifoldTag> tags)
{
  detail::check_tag_length(a.size(), b.size(), tags.size(), "generic_boxminus");
  Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> out = a - b;
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (tags[static_cast<std::size_t>(i)] == ManifoldTag::Angular) out(i) = norm_angle(out(i));
  return out;
}

/// In-place variant of generic_boxplus used on solver parameter blocks.
inline void boxplus_inplace(Eigen::Ref<Eigen::VectorXd> values, const Eigen::Ref<const Eigen::VectorXd>& increment,
                            std::span<const ManifoldTag> tags)
{
  detail::check_tag_length(values.size(), increment.size(), tags.size(), "boxplus_inplace");
  values += increment;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (tags[static_cast<std::size_t>(i)] == ManifoldTag::Angular) values(i) = norm_angle(values(i));
}

/// Normalize all Angular coordinates of a vector in place.
inline void normalize_inplace(Eigen::Ref<Eigen::VectorXd> values, std::span<const ManifoldTag> tags)
{
  for (Eigen::Index i = 0; i < values.size() && static_cast<std::size_t>(i) < tags.size(); ++i)
    if (tags[static_cast<std::size_t>(i)] == ManifoldTag::Angular) values(i) = norm_angle(values(i));
}

}  // namespace se2mpc

#endif  // SE2MPC_MANIFOLD_HPP_
