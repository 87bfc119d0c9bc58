#pragma once

#include <Eigen/Core>

namespace amp {

// Below this angle the exponential map is treated as the identity rotation.
inline constexpr double kExpMapIdentityThreshold = 1e-8;

struct AxisAngle {
  Eigen::Vector3d axis = Eigen::Vector3d::Zero();  // zero for the identity
  double angle = 0.0;
};

/// Decodes a 3D exponential-map vector: axis = q / |q|, angle = |q|.
/// Throws Error(kInvalidInput) for non-finite input.
AxisAngle exp_map_to_rotation(const Eigen::Vector3d& q);

Eigen::Matrix3d rotation_matrix(const AxisAngle& rotation);

/// Inverse of exp_map_to_rotation composed with rotation_matrix, for angles in
/// [0, pi). Near pi the axis sign is ambiguous.
Eigen::Vector3d rotation_matrix_to_exp_map(const Eigen::Matrix3d& rotation);

// Planar rotation encoded as the two columns of its 2x2 matrix.
struct NormalTangent2 {
  Eigen::Vector2d normal;   // (cos, sin)
  Eigen::Vector2d tangent;  // (-sin, cos)
};

NormalTangent2 rotation_to_normal_tangent(double angle);

// 3D variant: first and second columns of the rotation matrix, stacked.
Eigen::Matrix<double, 6, 1> rotation_to_normal_tangent(const Eigen::Matrix3d& rotation);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

}  // namespace amp
