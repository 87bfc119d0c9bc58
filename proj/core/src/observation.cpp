#include "amp/observation.hpp"

#include <algorithm>
#include <cmath>

#include "amp/error.hpp"
#include "amp/rotation.hpp"

namespace amp {

ObservationMap::ObservationMap(const CharacterModel& model, ObsOptions options)
    : model_(&model), options_(options), num_joints_(model.num_joints()) {
  dim_ = 4 * num_joints_ + 2 * static_cast<int>(model.end_effectors.size());
  if (options_.include_velocities) dim_ += velocity_block_size();
}

Eigen::VectorXd ObservationMap::operator()(const SimState& state) const {
  return (*this)(Kinematics(*model_, state.q, state.qdot));
}

Eigen::VectorXd ObservationMap::operator()(const Kinematics& kin) const {
  const CharacterModel& m = *model_;
  Eigen::VectorXd phi(dim_);
  int k = 0;
  // The planar character has no yaw, so the heading frame is a pure
  // translation of the world frame to the root.
  const Eigen::Vector2d root = kin.link_origin(0);
  if (options_.include_velocities) {
    phi.segment<2>(k) = kin.point_velocity_world(0, root);
    phi[k + 2] = kin.link_angular_velocity(0);
    k += 3;
  }
  for (int j = 0; j < num_joints_; ++j) {
    const double angle = kin.link_angle(m.joints[j].child) - kin.link_angle(m.joints[j].parent);
    const NormalTangent2 nt = rotation_to_normal_tangent(angle);
    phi.segment<2>(k) = nt.normal;
    phi.segment<2>(k + 2) = nt.tangent;
    k += 4;
  }
  if (options_.include_velocities) {
    for (int j = 0; j < num_joints_; ++j) {
      phi[k++] = kin.link_angular_velocity(m.joints[j].child) -
                 kin.link_angular_velocity(m.joints[j].parent);
    }
  }
  for (const EndEffector& e : m.end_effectors) {
    phi.segment<2>(k) = kin.point(e.link, e.offset) - root;
    k += 2;
  }
  return phi;
}

FeatureStats FeatureStats::identity(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

FeatureStats FeatureStats::compute(const std::vector<Eigen::VectorXd>& samples) {
  if (samples.empty()) throw Error(ErrorKind::kEmpty, "feature statistics need at least one sample");
  const Eigen::Index d = samples.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& s : samples) var += (s - mean).cwiseAbs2();
  var /= static_cast<double>(samples.size());
  Eigen::VectorXd sd = var.cwiseSqrt().cwiseMax(kStdFloor);
  return {mean, sd};
}

Eigen::VectorXd FeatureStats::normalize(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "feature vector does not match statistics");
  }
  return (x - mean).cwiseQuotient(std);
}

int policy_state_dim(const CharacterModel& model) { return 8 + 9 * model.num_joints(); }

Eigen::VectorXd policy_state_features(const SimState& state, const CharacterModel& model) {
  const Kinematics kin(model, state.q, state.qdot);
  Eigen::VectorXd s(policy_state_dim(model));
  const Eigen::Vector2d root = kin.link_origin(0);
  int k = 0;
  s[k++] = root.y();
  for (int link = 0; link < model.num_links(); ++link) {
    const Eigen::Vector2d origin = kin.link_origin(link);
    if (link != 0) {
      s.segment<2>(k) = origin - root;
      k += 2;
    }
    const NormalTangent2 nt = rotation_to_normal_tangent(kin.link_angle(link));
    s.segment<2>(k) = nt.normal;
    s.segment<2>(k + 2) = nt.tangent;
    s.segment<2>(k + 4) = kin.point_velocity_world(link, origin);
    s[k + 6] = kin.link_angular_velocity(link);
    k += 7;
  }
  return s;
}

}  // namespace amp
