#include "amp/rotation.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "amp/error.hpp"

namespace amp {

AxisAngle exp_map_to_rotation(const Eigen::Vector3d& q) {
  if (!q.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, "exp_map_to_rotation: non-finite input");
  }
  const double theta = q.norm();
  if (theta < kExpMapIdentityThreshold) return {};
  return {q / theta, theta};
}

Eigen::Matrix3d rotation_matrix(const AxisAngle& rotation) {
  if (rotation.angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(rotation.angle, rotation.axis).toRotationMatrix();
}

Eigen::Vector3d rotation_matrix_to_exp_map(const Eigen::Matrix3d& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  if (aa.angle() < kExpMapIdentityThreshold) return Eigen::Vector3d::Zero();
  return aa.axis() * aa.angle();
}

NormalTangent2 rotation_to_normal_tangent(double angle) {
  if (!std::isfinite(angle)) {
    throw Error(ErrorKind::kInvalidInput, "rotation_to_normal_tangent: non-finite angle");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {Eigen::Vector2d(c, s), Eigen::Vector2d(-s, c)};
}

Eigen::Matrix<double, 6, 1> rotation_to_normal_tangent(const Eigen::Matrix3d& rotation) {
  Eigen::Matrix<double, 6, 1> out;
  out << rotation.col(0), rotation.col(1);
  return out;
}

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

}  // namespace amp
