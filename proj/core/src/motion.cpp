#include "amp/motion.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "amp/error.hpp"
#include "amp/rotation.hpp"

namespace amp {
namespace {

using nlohmann::json;

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, std::string("cannot open ") + what + " '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }
}

bool finite_pose(const Pose& p) {
  return p.root_position.allFinite() && std::isfinite(p.root_rotation) &&
         p.joint_rotations.allFinite();
}

}  // namespace

SimState Pose::to_state() const {
  const int n = static_cast<int>(joint_rotations.size());
  SimState s;
  s.q.resize(3 + n);
  s.qdot = Eigen::VectorXd::Zero(3 + n);
  s.q << root_position, root_rotation, joint_rotations;
  if (has_velocities) s.qdot << root_linear_velocity, root_angular_velocity, joint_velocities;
  return s;
}

Pose Pose::from_state(const SimState& state) {
  const Eigen::Index n = state.q.size() - 3;
  Pose p;
  p.root_position = state.q.head<2>();
  p.root_rotation = state.q[2];
  p.joint_rotations = state.q.tail(n);
  p.root_linear_velocity = state.qdot.head<2>();
  p.root_angular_velocity = state.qdot[2];
  p.joint_velocities = state.qdot.tail(n);
  p.has_velocities = true;
  return p;
}

void MotionClip::validate(int num_joints) const {
  const std::string ctx = "clip '" + name + "': ";
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw Error(ErrorKind::kInvalidInput, ctx + "frame_rate must be positive");
  }
  if (frames.size() < 2) throw Error(ErrorKind::kInvalidInput, ctx + "needs at least 2 frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].joint_rotations.size() != num_joints) {
      throw Error(ErrorKind::kDimensionMismatch,
                  ctx + "frame " + std::to_string(i) + " has " +
                      std::to_string(frames[i].joint_rotations.size()) + " joints, character has " +
                      std::to_string(num_joints));
    }
    if (!finite_pose(frames[i])) {
      throw Error(ErrorKind::kInvalidInput, ctx + "frame " + std::to_string(i) + " is not finite");
    }
  }
}

std::string MotionClip::to_json() const {
  json j;
  j["name"] = name;
  j["frame_rate"] = frame_rate;
  j["loopable"] = loopable;
  if (!subject_id.empty()) j["subject_id"] = subject_id;
  j["joints"] = joint_names;
  j["frames"] = json::array();
  for (const Pose& p : frames) {
    json row = json::array({p.root_position.x(), p.root_position.y(), p.root_rotation});
    for (Eigen::Index i = 0; i < p.joint_rotations.size(); ++i) row.push_back(p.joint_rotations[i]);
    j["frames"].push_back(row);
  }
  // Shortest round-trip formatting keeps load(save(clip)) bit-exact.
  return j.dump();
}

MotionClip MotionClip::from_json(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  if (!j.is_object()) throw Error(ErrorKind::kParse, source + ": clip must be a JSON object");
  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw Error(ErrorKind::kParse, source + ": missing field '" + key + "'");
    return j.at(key);
  };
  MotionClip clip;
  try {
    clip.name = require("name").get<std::string>();
  } catch (const json::type_error&) {
    throw Error(ErrorKind::kParse, source + ": field 'name' must be a string");
  }
  const json& rate = require("frame_rate");
  if (!rate.is_number()) throw Error(ErrorKind::kParse, source + ": field 'frame_rate' must be a number");
  clip.frame_rate = rate.get<double>();
  clip.loopable = j.value("loopable", false);
  clip.subject_id = j.value("subject_id", std::string());
  if (j.contains("joints")) {
    if (!j["joints"].is_array()) throw Error(ErrorKind::kParse, source + ": field 'joints' must be a list");
    for (const auto& n : j["joints"]) clip.joint_names.push_back(n.get<std::string>());
  }
  const json& frames = require("frames");
  if (!frames.is_array()) throw Error(ErrorKind::kParse, source + ": field 'frames' must be a list");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const json& row = frames[i];
    const std::string where = source + ": field 'frames[" + std::to_string(i) + "]'";
    if (!row.is_array() || row.size() < 3) throw Error(ErrorKind::kParse, where + " needs >= 3 numbers");
    for (const auto& v : row) {
      if (!v.is_number()) throw Error(ErrorKind::kParse, where + " contains a non-number");
    }
    Pose p;
    p.root_position = {row[0].get<double>(), row[1].get<double>()};
    p.root_rotation = row[2].get<double>();
    p.joint_rotations.resize(static_cast<Eigen::Index>(row.size()) - 3);
    for (std::size_t k = 3; k < row.size(); ++k) p.joint_rotations[k - 3] = row[k].get<double>();
    clip.frames.push_back(std::move(p));
  }
  if (!clip.joint_names.empty() && !clip.frames.empty() &&
      clip.frames[0].joint_rotations.size() != static_cast<Eigen::Index>(clip.joint_names.size())) {
    throw Error(ErrorKind::kParse, source + ": field 'joints' disagrees with frame width");
  }
  return clip;
}

MotionClip MotionClip::load(const std::string& path) {
  return from_json(read_file(path, "clip file"), path);
}

void MotionClip::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write clip file '" + path + "'");
  out << to_json() << "\n";
}

MotionClip finite_difference_velocities(const MotionClip& clip) {
  if (clip.frames.size() < 2) {
    throw Error(ErrorKind::kInvalidInput, "clip '" + clip.name + "' needs at least 2 frames");
  }
  MotionClip out = clip;
  const int n = clip.num_frames();
  const double rate = clip.frame_rate;
  for (int t = 0; t + 1 < n; ++t) {
    const Pose& a = clip.frames[t];
    const Pose& b = clip.frames[t + 1];
    Pose& p = out.frames[t];
    p.root_linear_velocity = (b.root_position - a.root_position) * rate;
    p.root_angular_velocity = wrap_angle(b.root_rotation - a.root_rotation) * rate;
    p.joint_velocities.resize(a.joint_rotations.size());
    for (Eigen::Index j = 0; j < a.joint_rotations.size(); ++j) {
      p.joint_velocities[j] = wrap_angle(b.joint_rotations[j] - a.joint_rotations[j]) * rate;
    }
    p.has_velocities = true;
  }
  Pose& last = out.frames[n - 1];
  if (clip.loopable) {
    // Angles close the loop onto frame 0. Root positions need not repeat
    // (locomotion advances), so the root continues at frame 0's velocity.
    const Pose& a = clip.frames[n - 1];
    const Pose& b = clip.frames[0];
    last.root_linear_velocity = out.frames[0].root_linear_velocity;
    last.root_angular_velocity = wrap_angle(b.root_rotation - a.root_rotation) * rate;
    last.joint_velocities.resize(a.joint_rotations.size());
    for (Eigen::Index j = 0; j < a.joint_rotations.size(); ++j) {
      last.joint_velocities[j] = wrap_angle(b.joint_rotations[j] - a.joint_rotations[j]) * rate;
    }
  } else {
    const Pose& source = out.frames[n - 2];
    last.root_linear_velocity = source.root_linear_velocity;
    last.root_angular_velocity = source.root_angular_velocity;
    last.joint_velocities = source.joint_velocities;
  }
  last.has_velocities = true;
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  const json j = parse_json(read_file(path, "dataset manifest"), path);
  if (!j.is_array()) throw Error(ErrorKind::kParse, path + ": manifest must be a JSON list");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<ManifestEntry> entries;
  for (const auto& e : j) {
    ManifestEntry entry;
    if (e.is_string()) {
      entry.path = e.get<std::string>();
    } else if (e.is_object() && e.contains("path")) {
      entry.path = e["path"].get<std::string>();
      entry.weight = e.value("weight", 1.0);
    } else {
      throw Error(ErrorKind::kParse, path + ": manifest entries must be paths or {\"path\", \"weight\"}");
    }
    if (!(entry.weight > 0.0)) throw Error(ErrorKind::kParse, path + ": weight must be positive");
    if (std::filesystem::path(entry.path).is_relative()) entry.path = (base / entry.path).string();
    entries.push_back(entry);
  }
  return entries;
}

MotionDataset::MotionDataset(const CharacterModel& model, std::vector<MotionClip> clips,
                             std::vector<double> weights, ObsOptions options)
    : model_(&model), weights_(std::move(weights)), obs_map_(model, options) {
  if (clips.empty()) throw Error(ErrorKind::kEmpty, "motion dataset has no clips");
  if (weights_.empty()) weights_.assign(clips.size(), 1.0);
  if (weights_.size() != clips.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "one weight per clip required");
  }
  const double rate = clips.front().frame_rate;
  std::vector<Eigen::VectorXd> samples;
  double tcum = 0.0;
  double fcum = 0.0;
  for (std::size_t c = 0; c < clips.size(); ++c) {
    clips[c].validate(model.num_joints());
    if (clips[c].frame_rate != rate) {
      throw Error(ErrorKind::kInvalidInput, "clip '" + clips[c].name +
                                                "' has a different frame rate; a dataset uses a single rate");
    }
    clips_.push_back(finite_difference_velocities(clips[c]));
    const MotionClip& clip = clips_.back();
    std::vector<Eigen::VectorXd> obs;
    obs.reserve(clip.frames.size());
    for (const Pose& p : clip.frames) obs.push_back(obs_map_(p.to_state()));
    for (int t = 0; t < clip.num_transitions(); ++t) {
      samples.push_back(obs[t]);
      samples.push_back(obs[t + 1]);
    }
    obs_.push_back(std::move(obs));
    total_duration_ += clip.duration();
    num_transitions_ += clip.num_transitions();
    tcum += weights_[c] * clip.num_transitions();
    fcum += weights_[c] * clip.num_frames();
    transition_cdf_.push_back(tcum);
    frame_cdf_.push_back(fcum);
  }
  stats_ = FeatureStats::compute(samples);
}

MotionDataset MotionDataset::load(const CharacterModel& model, const std::vector<std::string>& paths,
                                  ObsOptions options) {
  if (paths.empty()) throw Error(ErrorKind::kEmpty, "no motion clip paths given");
  std::vector<MotionClip> clips;
  std::vector<double> weights;
  for (const std::string& path : paths) {
    const json j = parse_json(read_file(path, "motion file"), path);
    if (j.is_array()) {
      for (const ManifestEntry& e : load_manifest(path)) {
        clips.push_back(MotionClip::load(e.path));
        weights.push_back(e.weight);
      }
    } else {
      clips.push_back(MotionClip::from_json(j.dump(), path));
      weights.push_back(1.0);
    }
  }
  for (std::size_t i = 0; i < clips.size(); ++i) {
    if (clips[i].frames.empty() || clips[i].frames[0].joint_rotations.size() != model.num_joints()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "clip '" + clips[i].name + "' does not match character '" + model.name + "' (" +
                      std::to_string(model.num_joints()) + " joints)");
    }
  }
  return MotionDataset(model, std::move(clips), std::move(weights), options);
}

std::pair<int, int> MotionDataset::locate(double u, const std::vector<double>& cumulative,
                                          bool frames) const {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  int c = static_cast<int>(it - cumulative.begin());
  c = std::min(c, static_cast<int>(clips_.size()) - 1);
  return {c, frames ? clips_[c].num_frames() : clips_[c].num_transitions()};
}

std::pair<int, int> MotionDataset::sample_transition_index(Rng& rng) const {
  const auto [c, count] = locate(uniform(rng, 0.0, transition_cdf_.back()), transition_cdf_, false);
  return {c, static_cast<int>(uniform_index(rng, count))};
}

std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> MotionDataset::sample_transitions(
    int count, Rng& rng, bool normalized) const {
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const auto [c, t] = sample_transition_index(rng);
    if (normalized) {
      out.emplace_back(stats_.normalize(obs_[c][t]), stats_.normalize(obs_[c][t + 1]));
    } else {
      out.emplace_back(obs_[c][t], obs_[c][t + 1]);
    }
  }
  return out;
}

SimState MotionDataset::reference_state(int clip, int frame) const {
  SimState s = clips_.at(clip).frames.at(frame).to_state();
  const double lowest = min_contact_height(s, *model_);
  if (lowest < 0.0) s.q[1] -= lowest;
  return s;
}

SimState MotionDataset::sample_reference_state(Rng& rng) const {
  const auto [c, count] = locate(uniform(rng, 0.0, frame_cdf_.back()), frame_cdf_, true);
  return reference_state(c, static_cast<int>(uniform_index(rng, count)));
}

}  // namespace amp
