#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace amp {

struct Link {
  std::string name;
  double mass = 1.0;     // kg
  double inertia = 0.1;  // kg m^2 about the center of mass
  double length = 0.0;   // m, descriptive
  Eigen::Vector2d com = Eigen::Vector2d::Zero();  // in the link frame
};

enum class JointType {
  kRevolute,  // absolute PD target, angle limits enforced
  kRotor,     // continuous; the PD target is an offset from the current angle
};

struct Joint {
  std::string name;
  int parent = 0;
  int child = 1;
  Eigen::Vector2d attachment = Eigen::Vector2d::Zero();  // in the parent frame
  JointType type = JointType::kRevolute;
  double lower = -3.0;  // rad
  double upper = 3.0;   // rad
  double kp = 0.0;
  double kd = 0.0;
  double torque_limit = 1.0;  // N m
};

// A contact "point" is a disc of the given radius centered at the offset;
// radius 0 is a true point.
struct ContactPoint {
  std::string name;
  int link = 0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
  double radius = 0.0;
  bool is_foot = false;
};

struct EndEffector {
  std::string name;
  int link = 0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

/// Planar articulated character. Link 0 is the root; joint i drives the angle
/// of link joints[i].child relative to link joints[i].parent, and joints are
/// listed parent-before-child. Generalized coordinates are
/// (root_x, root_y, root_rot, joint angles...).
struct CharacterModel {
  std::string name;
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<ContactPoint> contact_points;
  std::vector<EndEffector> end_effectors;

  int num_joints() const { return static_cast<int>(joints.size()); }
  int num_links() const { return static_cast<int>(links.size()); }
  int dof() const { return 3 + num_joints(); }
  double total_mass() const;

  // Index of the joint whose child is `link`, or -1 for the root.
  int parent_joint(int link) const;
  int find_end_effector(const std::string& effector_name) const;  // -1 if absent
  int find_joint(const std::string& joint_name) const;

  // Default standing configuration (joint angles), used by clip generators.
  Eigen::VectorXd rest_pose() const;

  /// Throws Error(kInvalidInput) on cycles, bad indices, non-positive masses,
  /// negative gains or non-positive torque limits.
  void validate() const;

  std::string to_json() const;
  static CharacterModel from_json(const std::string& text, const std::string& source = "<memory>");
  static CharacterModel load(const std::string& path);
  void save(const std::string& path) const;

  /// Built-ins: "pointmass", "walker5", "walker5_arm".
  static CharacterModel builtin(const std::string& builtin_name);
  static std::vector<std::string> builtin_names();
  // Built-in name or path to a character JSON file.
  static CharacterModel resolve(const std::string& name_or_path);
};

}  // namespace amp
