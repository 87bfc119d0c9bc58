#pragma once

#include <vector>

#include <Eigen/Core>

#include "amp/character.hpp"
#include "amp/sim.hpp"

namespace amp {

struct ObsOptions {
  // When false the root and joint velocity blocks are dropped from the
  // discriminator observation.
  bool include_velocities = true;
};

/// The discriminator observation map. Features are expressed in the heading
/// frame: origin at the root, x along the facing direction, y up. Layout:
///   [root linear velocity (2), root angular velocity (1)]   (velocity block)
///   joint rotation encodings (4 per joint)
///   [joint velocities (1 per joint)]                         (velocity block)
///   end-effector positions (2 per end effector)
class ObservationMap {
 public:
  ObservationMap(const CharacterModel& model, ObsOptions options = {});

  int dim() const { return dim_; }
  // Number of entries removed when velocities are excluded.
  int velocity_block_size() const { return 3 + num_joints_; }
  const ObsOptions& options() const { return options_; }

  Eigen::VectorXd operator()(const SimState& state) const;
  Eigen::VectorXd operator()(const Kinematics& kin) const;

 private:
  const CharacterModel* model_;
  ObsOptions options_;
  int num_joints_;
  int dim_;
};

/// Fixed per-feature normalization statistics.
struct FeatureStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  static constexpr double kStdFloor = 0.05;

  static FeatureStats identity(int dim);
  // Population statistics over the samples; std is floored at kStdFloor.
  static FeatureStats compute(const std::vector<Eigen::VectorXd>& samples);
  int dim() const { return static_cast<int>(mean.size()); }
  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;
};

// Policy state features: root height, then for each link its position
// relative to the root, normal-tangent rotation encoding, linear velocity and
// angular velocity, all in the heading frame. The root omits its (zero)
// relative position.
int policy_state_dim(const CharacterModel& model);
Eigen::VectorXd policy_state_features(const SimState& state, const CharacterModel& model);

}  // namespace amp
