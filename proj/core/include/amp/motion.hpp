#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "amp/character.hpp"
#include "amp/observation.hpp"
#include "amp/rng.hpp"
#include "amp/sim.hpp"

namespace amp {

struct Pose {
  Eigen::Vector2d root_position = Eigen::Vector2d::Zero();  // x forward, y up
  double root_rotation = 0.0;
  Eigen::VectorXd joint_rotations;
  Eigen::Vector2d root_linear_velocity = Eigen::Vector2d::Zero();
  double root_angular_velocity = 0.0;
  Eigen::VectorXd joint_velocities;
  bool has_velocities = false;

  SimState to_state() const;
  static Pose from_state(const SimState& state);
};

struct MotionClip {
  std::string name;
  double frame_rate = 30.0;
  std::vector<Pose> frames;
  bool loopable = false;
  std::string subject_id;
  std::vector<std::string> joint_names;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int num_transitions() const { return num_frames() - 1; }
  double duration() const { return num_transitions() / frame_rate; }

  /// Throws Error(kInvalidInput) unless frame_rate > 0, there are at least two
  /// frames, every angle is finite and every frame has `num_joints` joints.
  void validate(int num_joints) const;

  // Clip file: {"name", "frame_rate", "loopable", "joints", "frames"}, each
  // frame [root_x, root_y, root_rot, j_1..j_n]. Velocities are not stored.
  std::string to_json() const;
  static MotionClip from_json(const std::string& text, const std::string& source = "<memory>");
  static MotionClip load(const std::string& path);
  void save(const std::string& path) const;
};

/// Forward differences times the frame rate, angles wrapped to (-pi, pi].
/// The last frame repeats the previous velocity. In a loopable clip the last
/// frame's angles instead difference onto frame 0, and its root linear
/// velocity is frame 0's.
MotionClip finite_difference_velocities(const MotionClip& clip);

struct ManifestEntry {
  std::string path;
  double weight = 1.0;
};

// Dataset manifest: JSON list of clip paths or {"path", "weight"} objects.
// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::string& path);

/// The reference motion dataset with precomputed observations. Immutable after
/// construction, so it can be shared by rollout workers.
class MotionDataset {
 public:
  MotionDataset(const CharacterModel& model, std::vector<MotionClip> clips,
                std::vector<double> weights = {}, ObsOptions options = {});

  // Loads clip files or, for a ".manifest.json"/list file, every clip it
  // names. Throws Error(kEmpty) for an empty list.
  static MotionDataset load(const CharacterModel& model, const std::vector<std::string>& paths,
                            ObsOptions options = {});

  const CharacterModel& model() const { return *model_; }
  const std::vector<MotionClip>& clips() const { return clips_; }
  const ObservationMap& observation_map() const { return obs_map_; }
  const FeatureStats& stats() const { return stats_; }
  double total_duration() const { return total_duration_; }
  int num_transitions() const { return num_transitions_; }
  int obs_dim() const { return obs_map_.dim(); }

  // Raw observation of frame `frame` of clip `clip`.
  const Eigen::VectorXd& observation(int clip, int frame) const { return obs_[clip][frame]; }

  /// K transitions, uniform over all transitions with clip weights applied.
  /// Each element is (Phi(s), Phi(s')), normalized when `normalized`.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> sample_transitions(
      int count, Rng& rng, bool normalized = true) const;

  // Index (clip, frame) of a uniformly drawn transition.
  std::pair<int, int> sample_transition_index(Rng& rng) const;

  /// Reference state initialization: a uniformly drawn frame converted to a
  /// simulator state, raised so that no contact point is below the ground.
  SimState sample_reference_state(Rng& rng) const;
  SimState reference_state(int clip, int frame) const;

 private:
  std::pair<int, int> locate(double u, const std::vector<double>& cumulative, bool frames) const;

  const CharacterModel* model_;
  std::vector<MotionClip> clips_;
  std::vector<double> weights_;
  ObservationMap obs_map_;
  std::vector<std::vector<Eigen::VectorXd>> obs_;
  FeatureStats stats_;
  std::vector<double> transition_cdf_;
  std::vector<double> frame_cdf_;
  double total_duration_ = 0.0;
  int num_transitions_ = 0;
};

}  // namespace amp
