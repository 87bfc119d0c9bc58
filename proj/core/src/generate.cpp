#include "amp/generate.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <numbers>
#include <sstream>

#include "amp/error.hpp"
#include "amp/rotation.hpp"
#include "amp/sim.hpp"

namespace amp {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool is_pointmass_like(const CharacterModel& model) {
  return model.num_joints() == 1 && model.joints[0].type == JointType::kRotor;
}

double wheel_radius(const CharacterModel& model) {
  for (const auto& c : model.contact_points) {
    if (c.link == model.joints[0].child && c.radius > 0.0) return c.radius;
  }
  throw Error(ErrorKind::kInvalidInput, "character '" + model.name + "' has no wheel contact disc");
}

void set_joint(const CharacterModel& model, Pose& p, const std::string& name, double angle) {
  const int j = model.find_joint(name);
  if (j < 0) return;
  const Joint& joint = model.joints[j];
  if (joint.type == JointType::kRevolute) angle = std::clamp(angle, joint.lower, joint.upper);
  p.joint_rotations[j] = angle;
}

// Places the root so that the lowest contact disc just touches the ground.
void rest_on_ground(const CharacterModel& model, Pose& p) {
  p.root_position.y() = 0.0;
  const double lowest = min_contact_height(p.to_state(), model);
  p.root_position.y() = -lowest;
}

Pose pointmass_pose(const CharacterModel& model, double wheel_angle) {
  const double r = wheel_radius(model);
  Pose p;
  p.joint_rotations = Eigen::VectorXd::Constant(1, wrap_angle(wheel_angle));
  // Rolling without slip: a counter-clockwise wheel turn moves the root back.
  p.root_position = {-r * wheel_angle, r};
  return p;
}

Pose walker_pose(const CharacterModel& model, double x, double hip_l, double knee_l, double hip_r,
                 double knee_r, double shoulder) {
  Pose p;
  p.joint_rotations = model.rest_pose();
  set_joint(model, p, "hip_l", hip_l);
  set_joint(model, p, "knee_l", knee_l);
  set_joint(model, p, "hip_r", hip_r);
  set_joint(model, p, "knee_r", knee_r);
  set_joint(model, p, "shoulder", shoulder);
  rest_on_ground(model, p);
  p.root_position.x() = x;
  return p;
}

Pose frame_at(const std::string& kind, const CharacterModel& model, const ClipParams& cp, double t) {
  const double phase = kTwoPi * cp.frequency * t;
  const double a = cp.amplitude;
  if (is_pointmass_like(model)) {
    if (kind == "oscillate") return pointmass_pose(model, a * std::sin(phase));
    if (kind == "gait") return pointmass_pose(model, -cp.speed * t / wheel_radius(model));
    throw Error(ErrorKind::kInvalidInput, "clip kind '" + kind + "' is not defined for '" + model.name + "'");
  }
  if (model.find_joint("hip_l") < 0 || model.find_joint("hip_r") < 0) {
    throw Error(ErrorKind::kInvalidInput, "character '" + model.name + "' has no legs to animate");
  }
  if (kind == "oscillate") {
    // Marching in place: alternating hip flexion with the knee following.
    const double s = std::sin(phase);
    return walker_pose(model, 0.0, 0.5 * a * std::max(0.0, s), -a * std::max(0.0, s),
                       0.5 * a * std::max(0.0, -s), -a * std::max(0.0, -s), 0.0);
  }
  if (kind == "gait") {
    const double s = std::sin(phase);
    const double swing_l = std::max(0.0, std::sin(phase + 0.5 * std::numbers::pi));
    const double swing_r = std::max(0.0, -std::sin(phase + 0.5 * std::numbers::pi));
    return walker_pose(model, cp.speed * t, 0.5 * a * s, -a * swing_l, -0.5 * a * s, -a * swing_r, 0.0);
  }
  if (kind == "reach") {
    if (model.find_joint("shoulder") < 0) {
      throw Error(ErrorKind::kInvalidInput, "clip kind 'reach' needs a 'shoulder' joint; '" + model.name +
                                                "' has none");
    }
    return walker_pose(model, 0.0, 0.0, 0.0, 0.0, 0.0, cp.reach_angle * 0.5 * (1.0 - std::cos(phase)));
  }
  throw Error(ErrorKind::kInvalidInput, "unknown clip kind '" + kind + "'");
}

}  // namespace

std::vector<std::string> clip_kinds() { return {"oscillate", "gait", "reach"}; }

MotionClip generate_clip(const std::string& kind, const CharacterModel& model, const ClipParams& params) {
  if (!(params.duration > 0.0) || !(params.frame_rate > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "clip duration and frame rate must be positive");
  }
  const int n = static_cast<int>(std::lround(params.duration * params.frame_rate));
  if (n < 2) throw Error(ErrorKind::kInvalidInput, "clip must have at least 2 frames");
  MotionClip clip;
  clip.name = model.name + "_" + kind;
  clip.frame_rate = params.frame_rate;
  clip.loopable = true;
  clip.subject_id = "synthetic";
  for (const auto& j : model.joints) clip.joint_names.push_back(j.name);
  for (int i = 0; i < n; ++i) clip.frames.push_back(frame_at(kind, model, params, i / params.frame_rate));
  clip.validate(model.num_joints());
  return clip;
}

MotionClip generate_clip_from_spec(const std::string& spec, const CharacterModel& model) {
  std::stringstream in(spec);
  std::string kind;
  std::getline(in, kind, ':');
  ClipParams p;
  const std::pair<const char*, double*> fields[] = {
      {"duration", &p.duration}, {"frame_rate", &p.frame_rate}, {"frequency", &p.frequency},
      {"amplitude", &p.amplitude}, {"speed", &p.speed},          {"reach_angle", &p.reach_angle}};
  for (std::string item; std::getline(in, item, ':');) {
    const auto eq = item.find('=');
    const std::string key = item.substr(0, eq);
    double* target = nullptr;
    for (const auto& [name, field] : fields) {
      if (key == name) target = field;
    }
    if (eq == std::string::npos || !target) {
      throw Error(ErrorKind::kInvalidInput, "clip spec '" + spec + "': expected <param>=<value>, got '" + item + "'");
    }
    const char* first = item.data() + eq + 1;
    const char* last = item.data() + item.size();
    const auto [end, ec] = std::from_chars(first, last, *target);
    if (ec != std::errc{} || end != last || first == last) {
      throw Error(ErrorKind::kInvalidInput, "clip spec '" + spec + "': bad value for '" + key + "'");
    }
  }
  return generate_clip(kind, model, p);
}

}  // namespace amp
