#include "amp/character.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "amp/error.hpp"

namespace amp {
namespace {

using nlohmann::json;

json vec_json(const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); }

Eigen::Vector2d vec_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorKind::kParse, "expected 2-vector for '" + what + "'");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T field(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) {
    throw Error(ErrorKind::kParse, context + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kParse, context + ": bad value for field '" + key + "'");
  }
}

Link make_link(std::string name, double mass, double length, Eigen::Vector2d com,
               double inertia = -1.0) {
  Link l;
  l.name = std::move(name);
  l.mass = mass;
  l.length = length;
  l.com = com;
  // Thin rod about its center unless given explicitly.
  l.inertia = inertia > 0.0 ? inertia : mass * length * length / 12.0;
  return l;
}

Joint make_joint(std::string name, int parent, int child, Eigen::Vector2d attach,
                 double lower, double upper, double kp, double kd, double limit) {
  Joint j;
  j.name = std::move(name);
  j.parent = parent;
  j.child = child;
  j.attachment = attach;
  j.lower = lower;
  j.upper = upper;
  j.kp = kp;
  j.kd = kd;
  j.torque_limit = limit;
  return j;
}

// Chassis (root) with a driven wheel; the chassis rides on two skids that
// only touch the ground when it tilts.
CharacterModel make_pointmass() {
  CharacterModel m;
  m.name = "pointmass";
  constexpr double kWheelRadius = 0.2;
  m.links.push_back(make_link("chassis", 4.0, 0.7, {0.0, -0.1}, 0.12));
  m.links.push_back(make_link("wheel", 1.0, kWheelRadius, {0.0, 0.0},
                              0.5 * 1.0 * kWheelRadius * kWheelRadius));
  Joint rotor = make_joint("rotor", 0, 1, {0.0, 0.0}, -1e9, 1e9, 20.0, 1.0, 20.0);
  rotor.type = JointType::kRotor;
  m.joints.push_back(rotor);
  m.contact_points.push_back({"wheel", 1, {0.0, 0.0}, kWheelRadius, true});
  m.contact_points.push_back({"skid_front", 0, {0.35, -0.19}, 0.0, true});
  m.contact_points.push_back({"skid_back", 0, {-0.35, -0.19}, 0.0, true});
  m.end_effectors.push_back({"marker", 1, {kWheelRadius, 0.0}});
  m.end_effectors.push_back({"nose", 0, {0.35, 0.0}});
  return m;
}

// Torso (root, origin at the pelvis) with two legs of thigh + shin.
CharacterModel make_walker5(bool with_arm) {
  CharacterModel m;
  m.name = with_arm ? "walker5_arm" : "walker5";
  constexpr double kTorso = 0.6;
  constexpr double kThigh = 0.45;
  constexpr double kShin = 0.45;
  constexpr double kKp = 200.0;
  constexpr double kKd = 20.0;
  constexpr double kLimit = 100.0;
  m.links.push_back(make_link("torso", 5.0, kTorso, {0.0, 0.5 * kTorso}));
  m.links.push_back(make_link("thigh_l", 1.5, kThigh, {0.0, -0.5 * kThigh}));
  m.links.push_back(make_link("shin_l", 1.0, kShin, {0.0, -0.5 * kShin}));
  m.links.push_back(make_link("thigh_r", 1.5, kThigh, {0.0, -0.5 * kThigh}));
  m.links.push_back(make_link("shin_r", 1.0, kShin, {0.0, -0.5 * kShin}));
  m.joints.push_back(make_joint("hip_l", 0, 1, {0.0, 0.0}, -1.8, 1.8, kKp, kKd, kLimit));
  m.joints.push_back(make_joint("knee_l", 1, 2, {0.0, -kThigh}, -2.4, 0.0, kKp, kKd, kLimit));
  m.joints.push_back(make_joint("hip_r", 0, 3, {0.0, 0.0}, -1.8, 1.8, kKp, kKd, kLimit));
  m.joints.push_back(make_joint("knee_r", 3, 4, {0.0, -kThigh}, -2.4, 0.0, kKp, kKd, kLimit));

  for (int shin : {2, 4}) {
    const std::string side = shin == 2 ? "_l" : "_r";
    m.contact_points.push_back({"heel" + side, shin, {-0.05, -kShin}, 0.02, true});
    m.contact_points.push_back({"toe" + side, shin, {0.10, -kShin}, 0.02, true});
    m.contact_points.push_back({"knee" + side, shin - 1, {0.0, -kThigh}, 0.04, false});
  }
  m.contact_points.push_back({"pelvis", 0, {0.0, 0.0}, 0.08, false});
  m.contact_points.push_back({"head", 0, {0.0, kTorso}, 0.1, false});

  m.end_effectors.push_back({"foot_l", 2, {0.0, -kShin}});
  m.end_effectors.push_back({"foot_r", 4, {0.0, -kShin}});
  m.end_effectors.push_back({"head", 0, {0.0, kTorso}});

  if (with_arm) {
    constexpr double kArm = 0.5;
    m.links.push_back(make_link("arm", 0.8, kArm, {0.0, -0.5 * kArm}));
    m.joints.push_back(make_joint("shoulder", 0, 5, {0.0, 0.5}, -3.1, 3.1, 60.0, 6.0, 40.0));
    m.contact_points.push_back({"hand", 5, {0.0, -kArm}, 0.03, false});
    m.end_effectors.push_back({"hand", 5, {0.0, -kArm}});
  }
  return m;
}

}  // namespace

double CharacterModel::total_mass() const {
  double total = 0.0;
  for (const auto& l : links) total += l.mass;
  return total;
}

int CharacterModel::parent_joint(int link) const {
  for (int j = 0; j < num_joints(); ++j) {
    if (joints[j].child == link) return j;
  }
  return -1;
}

int CharacterModel::find_end_effector(const std::string& effector_name) const {
  for (int i = 0; i < static_cast<int>(end_effectors.size()); ++i) {
    if (end_effectors[i].name == effector_name) return i;
  }
  return -1;
}

int CharacterModel::find_joint(const std::string& joint_name) const {
  for (int i = 0; i < num_joints(); ++i) {
    if (joints[i].name == joint_name) return i;
  }
  return -1;
}

Eigen::VectorXd CharacterModel::rest_pose() const {
  Eigen::VectorXd pose = Eigen::VectorXd::Zero(num_joints());
  for (int j = 0; j < num_joints(); ++j) {
    if (joints[j].type == JointType::kRevolute) {
      pose[j] = std::clamp(0.0, joints[j].lower, joints[j].upper);
    }
  }
  return pose;
}

void CharacterModel::validate() const {
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorKind::kInvalidInput, "character '" + name + "': " + msg);
  };
  if (links.empty()) fail("no links");
  if (num_joints() != num_links() - 1) fail("tree requires exactly links-1 joints");
  for (const auto& l : links) {
    if (!(l.mass > 0.0) || !(l.inertia > 0.0)) fail("link '" + l.name + "' needs positive mass and inertia");
  }
  std::vector<bool> reached(links.size(), false);
  reached[0] = true;
  for (const auto& j : joints) {
    if (j.parent < 0 || j.parent >= num_links() || j.child <= 0 || j.child >= num_links()) {
      fail("joint '" + j.name + "' has a bad link index");
    }
    if (!reached[j.parent]) fail("joint '" + j.name + "' listed before its parent link is attached");
    if (reached[j.child]) fail("joint '" + j.name + "' closes a cycle");
    reached[j.child] = true;
    if (j.kp < 0.0 || j.kd < 0.0) fail("joint '" + j.name + "' has negative gains");
    if (!(j.torque_limit > 0.0)) fail("joint '" + j.name + "' needs a positive torque limit");
    if (j.type == JointType::kRevolute && !(j.lower <= j.upper)) fail("joint '" + j.name + "' has inverted limits");
  }
  for (const auto& c : contact_points) {
    if (c.link < 0 || c.link >= num_links() || c.radius < 0.0) fail("contact point '" + c.name + "' is invalid");
  }
  for (const auto& e : end_effectors) {
    if (e.link < 0 || e.link >= num_links()) fail("end effector '" + e.name + "' is invalid");
  }
}

std::string CharacterModel::to_json() const {
  json j;
  j["name"] = name;
  for (const auto& l : links) {
    j["links"].push_back({{"name", l.name}, {"mass", l.mass}, {"inertia", l.inertia},
                          {"length", l.length}, {"com", vec_json(l.com)}});
  }
  for (const auto& jt : joints) {
    j["joints"].push_back({{"name", jt.name},
                           {"parent", jt.parent},
                           {"child", jt.child},
                           {"attachment", vec_json(jt.attachment)},
                           {"type", jt.type == JointType::kRotor ? "rotor" : "revolute"},
                           {"lower", jt.lower},
                           {"upper", jt.upper},
                           {"kp", jt.kp},
                           {"kd", jt.kd},
                           {"torque_limit", jt.torque_limit}});
  }
  for (const auto& c : contact_points) {
    j["contact_points"].push_back({{"name", c.name}, {"link", c.link}, {"offset", vec_json(c.offset)},
                                   {"radius", c.radius}, {"foot", c.is_foot}});
  }
  j["end_effectors"] = json::array();
  for (const auto& e : end_effectors) {
    j["end_effectors"].push_back({{"name", e.name}, {"link", e.link}, {"offset", vec_json(e.offset)}});
  }
  return j.dump(2);
}

CharacterModel CharacterModel::from_json(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, source + ": " + e.what());
  }
  CharacterModel m;
  m.name = field<std::string>(j, "name", source);
  for (const auto& l : field<json>(j, "links", source)) {
    const std::string ctx = source + " link";
    Link link;
    link.name = field<std::string>(l, "name", ctx);
    link.mass = field<double>(l, "mass", ctx);
    link.inertia = field<double>(l, "inertia", ctx);
    link.length = l.value("length", 0.0);
    link.com = vec_from(field<json>(l, "com", ctx), "com");
    m.links.push_back(link);
  }
  for (const auto& jt : j.value("joints", json::array())) {
    const std::string ctx = source + " joint";
    Joint joint;
    joint.name = field<std::string>(jt, "name", ctx);
    joint.parent = field<int>(jt, "parent", ctx);
    joint.child = field<int>(jt, "child", ctx);
    joint.attachment = vec_from(field<json>(jt, "attachment", ctx), "attachment");
    const std::string type = jt.value("type", std::string("revolute"));
    if (type == "rotor") {
      joint.type = JointType::kRotor;
    } else if (type != "revolute") {
      throw Error(ErrorKind::kParse, ctx + ": unknown joint type '" + type + "'");
    }
    joint.lower = jt.value("lower", -3.0);
    joint.upper = jt.value("upper", 3.0);
    joint.kp = field<double>(jt, "kp", ctx);
    joint.kd = field<double>(jt, "kd", ctx);
    joint.torque_limit = field<double>(jt, "torque_limit", ctx);
    m.joints.push_back(joint);
  }
  for (const auto& c : j.value("contact_points", json::array())) {
    const std::string ctx = source + " contact point";
    m.contact_points.push_back({field<std::string>(c, "name", ctx), field<int>(c, "link", ctx),
                                vec_from(field<json>(c, "offset", ctx), "offset"),
                                c.value("radius", 0.0), c.value("foot", false)});
  }
  for (const auto& e : j.value("end_effectors", json::array())) {
    const std::string ctx = source + " end effector";
    m.end_effectors.push_back({field<std::string>(e, "name", ctx), field<int>(e, "link", ctx),
                               vec_from(field<json>(e, "offset", ctx), "offset")});
  }
  m.validate();
  return m;
}

CharacterModel CharacterModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open character file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), path);
}

void CharacterModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write character file '" + path + "'");
  out << to_json() << "\n";
}

CharacterModel CharacterModel::builtin(const std::string& builtin_name) {
  if (builtin_name == "pointmass") return make_pointmass();
  if (builtin_name == "walker5") return make_walker5(false);
  if (builtin_name == "walker5_arm") return make_walker5(true);
  throw Error(ErrorKind::kInvalidInput, "unknown built-in character '" + builtin_name + "'");
}

std::vector<std::string> CharacterModel::builtin_names() {
  return {"pointmass", "walker5", "walker5_arm"};
}

CharacterModel CharacterModel::resolve(const std::string& name_or_path) {
  for (const auto& n : builtin_names()) {
    if (n == name_or_path) return builtin(n);
  }
  if (std::filesystem::exists(name_or_path)) return load(name_or_path);
  throw Error(ErrorKind::kInvalidInput,
              "character '" + name_or_path + "' is neither a built-in nor an existing file");
}

}  // namespace amp
