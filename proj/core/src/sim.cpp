#include "amp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

namespace amp {
namespace {

inline Eigen::Vector2d perp(const Eigen::Vector2d& v) { return {-v.y(), v.x()}; }

inline Eigen::Matrix2d rot(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

struct DynamicsTerms {
  Eigen::MatrixXd mass;
  Eigen::VectorXd bias;     // C(q, qdot)
  Eigen::VectorXd gravity;  // generalized gravity force
};

DynamicsTerms dynamics_terms(const Kinematics& kin, int dof, double g) {
  const CharacterModel& model = kin.model();
  DynamicsTerms t{Eigen::MatrixXd::Zero(dof, dof), Eigen::VectorXd::Zero(dof),
                  Eigen::VectorXd::Zero(dof)};
  for (int i = 0; i < model.num_links(); ++i) {
    const Link& link = model.links[i];
    const Eigen::Vector2d com = kin.link_com(i);
    const Eigen::MatrixXd j = kin.point_jacobian(i, com);
    t.mass.noalias() += link.mass * j.transpose() * j;
    for (int a : kin.angular_chain(i)) {
      for (int b : kin.angular_chain(i)) t.mass(a, b) += link.inertia;
    }
    t.bias.noalias() += link.mass * j.transpose() * kin.velocity_product_acceleration(i, com);
    t.gravity.noalias() += j.transpose() * Eigen::Vector2d(0.0, -link.mass * g);
  }
  return t;
}

Eigen::VectorXd solve_accelerations(const Kinematics& kin, const SimState& state,
                                    const Eigen::VectorXd& torques,
                                    const std::vector<PointForce>& external, double g, bool fixed_root,
                                    const Eigen::MatrixXd* implicit_damping = nullptr) {
  const CharacterModel& model = kin.model();
  const int dof = model.dof();
  if (torques.size() != model.num_joints()) {
    throw Error(ErrorKind::kDimensionMismatch, "forward_dynamics: torque vector has wrong size");
  }
  (void)state;
  DynamicsTerms t = dynamics_terms(kin, dof, g);
  if (implicit_damping) t.mass += *implicit_damping;
  Eigen::VectorXd rhs = t.gravity - t.bias;
  rhs.tail(model.num_joints()) += torques;
  for (const PointForce& f : external) {
    rhs.noalias() += kin.point_jacobian(f.link, f.world_point).transpose() * f.force;
  }
  if (fixed_root) {
    // Root rows drop out: the remaining joint block is solved with qddot_root = 0.
    const int n = model.num_joints();
    Eigen::VectorXd qdd = Eigen::VectorXd::Zero(dof);
    if (n == 0) return qdd;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(t.mass.bottomRightCorner(n, n));
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
      throw Error(ErrorKind::kInternal, "forward_dynamics: mass matrix is not positive definite");
    }
    qdd.tail(n) = ldlt.solve(rhs.tail(n));
    return qdd;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(t.mass);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw Error(ErrorKind::kInternal, "forward_dynamics: mass matrix is not positive definite");
  }
  return ldlt.solve(rhs);
}

struct BallForces {
  Eigen::Vector2d force = Eigen::Vector2d::Zero();
  double torque = 0.0;
};

// Disc-disc penalty contact between every character contact disc and the ball.
void ball_character_contacts(const Kinematics& kin, const BallState& ball, const BallParams& bp,
                             const ContactParams& cp, std::vector<PointForce>& on_character,
                             BallForces& on_ball) {
  const CharacterModel& model = kin.model();
  for (const ContactPoint& c : model.contact_points) {
    const Eigen::Vector2d center = kin.point(c.link, c.offset);
    const Eigen::Vector2d delta = ball.position - center;
    const double dist = delta.norm();
    const double depth = c.radius + bp.radius - dist;
    if (depth <= 0.0 || dist < 1e-12) continue;
    const Eigen::Vector2d n = delta / dist;
    const Eigen::Vector2d t = perp(n);
    const Eigen::Vector2d char_pt = center + c.radius * n;
    const Eigen::Vector2d ball_arm = -bp.radius * n;
    const Eigen::Vector2d v_ball = ball.velocity + ball.angular_velocity * perp(ball_arm);
    const Eigen::Vector2d v_rel = v_ball - kin.point_velocity_world(c.link, char_pt);
    const double normal = std::max(0.0, cp.stiffness * depth - cp.damping * v_rel.dot(n));
    const double vt = v_rel.dot(t);
    const double ft = -std::min(cp.friction * normal, cp.tangential_stiffness * std::abs(vt)) *
                      (vt > 0.0 ? 1.0 : (vt < 0.0 ? -1.0 : 0.0));
    const Eigen::Vector2d f = normal * n + ft * t;
    on_ball.force += f;
    on_ball.torque += ball_arm.x() * f.y() - ball_arm.y() * f.x();
    on_character.push_back({c.link, char_pt, -f});
  }
}

bool within_guard(const SimState& s, double max_velocity) {
  if (!s.all_finite()) return false;
  if (s.qdot.size() > 0 && s.qdot.cwiseAbs().maxCoeff() > max_velocity) return false;
  if (s.ball) {
    if (s.ball->velocity.cwiseAbs().maxCoeff() > max_velocity ||
        std::abs(s.ball->angular_velocity) > max_velocity) {
      return false;
    }
  }
  return true;
}

}  // namespace

bool SimState::all_finite() const {
  bool ok = q.allFinite() && qdot.allFinite() && std::isfinite(sim_time);
  if (ball) {
    ok = ok && ball->position.allFinite() && ball->velocity.allFinite() &&
         std::isfinite(ball->angle) && std::isfinite(ball->angular_velocity);
  }
  return ok;
}

SimState SimState::zero(const CharacterModel& model) {
  SimState s;
  s.q = Eigen::VectorXd::Zero(model.dof());
  s.qdot = Eigen::VectorXd::Zero(model.dof());
  return s;
}

int SimConfig::substeps() const {
  return std::max(1, static_cast<int>(std::lround(sim_hz / control_hz)));
}

Kinematics::Kinematics(const CharacterModel& model, const Eigen::VectorXd& q,
                       const Eigen::VectorXd& qdot)
    : model_(&model), qdot_(qdot) {
  const int n_links = model.num_links();
  if (q.size() != model.dof() || qdot.size() != model.dof()) {
    throw Error(ErrorKind::kDimensionMismatch, "state dimension does not match character '" +
                                                   model.name + "'");
  }
  angle_.resize(n_links);
  omega_.resize(n_links);
  origin_.resize(n_links);
  origin_velocity_.resize(n_links);
  chain_.resize(n_links);
  angle_[0] = q[2];
  omega_[0] = qdot[2];
  origin_[0] = q.head<2>();
  origin_velocity_[0] = qdot.head<2>();
  chain_[0] = {2};
  for (int j = 0; j < model.num_joints(); ++j) {
    const Joint& joint = model.joints[j];
    const int p = joint.parent;
    const int c = joint.child;
    angle_[c] = angle_[p] + q[3 + j];
    omega_[c] = omega_[p] + qdot[3 + j];
    origin_[c] = origin_[p] + rot(angle_[p]) * joint.attachment;
    origin_velocity_[c] = origin_velocity_[p] + omega_[p] * perp(origin_[c] - origin_[p]);
    chain_[c] = chain_[p];
    chain_[c].push_back(3 + j);
  }
}

Eigen::Vector2d Kinematics::point(int link, const Eigen::Vector2d& local) const {
  return origin_[link] + rot(angle_[link]) * local;
}

Eigen::Vector2d Kinematics::point_velocity_world(int link, const Eigen::Vector2d& world_point) const {
  return origin_velocity_[link] + omega_[link] * perp(world_point - origin_[link]);
}

Eigen::Vector2d Kinematics::link_com(int link) const {
  return point(link, model_->links[link].com);
}

Eigen::Vector2d Kinematics::pivot(int dof) const {
  return dof == 2 ? origin_[0] : origin_[model_->joints[dof - 3].child];
}

Eigen::Vector2d Kinematics::pivot_velocity(int dof) const {
  return dof == 2 ? origin_velocity_[0] : origin_velocity_[model_->joints[dof - 3].child];
}

Eigen::MatrixXd Kinematics::point_jacobian(int link, const Eigen::Vector2d& world_point) const {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, model_->dof());
  j(0, 0) = 1.0;
  j(1, 1) = 1.0;
  for (int dof : chain_[link]) j.col(dof) = perp(world_point - pivot(dof));
  return j;
}

Eigen::Vector2d Kinematics::velocity_product_acceleration(int link,
                                                          const Eigen::Vector2d& world_point) const {
  const Eigen::Vector2d v = point_velocity_world(link, world_point);
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  for (int dof : chain_[link]) a += qdot_[dof] * perp(v - pivot_velocity(dof));
  return a;
}

Eigen::Vector2d Kinematics::center_of_mass() const {
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int i = 0; i < model_->num_links(); ++i) sum += model_->links[i].mass * link_com(i);
  return sum / model_->total_mass();
}

Eigen::Vector2d Kinematics::center_of_mass_velocity() const {
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (int i = 0; i < model_->num_links(); ++i) {
    sum += model_->links[i].mass * point_velocity_world(i, link_com(i));
  }
  return sum / model_->total_mass();
}

Eigen::VectorXd pd_torques(const SimState& state, const Action& action, const CharacterModel& model) {
  const int n = model.num_joints();
  if (action.targets.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "pd_torques: action has " +
                                                   std::to_string(action.targets.size()) +
                                                   " targets, character has " + std::to_string(n) +
                                                   " joints");
  }
  Eigen::VectorXd tau(n);
  for (int j = 0; j < n; ++j) {
    const Joint& joint = model.joints[j];
    const double q = state.q[3 + j];
    const double qd = state.qdot[3 + j];
    const double error = joint.type == JointType::kRotor ? action.targets[j] : action.targets[j] - q;
    tau[j] = std::clamp(joint.kp * error - joint.kd * qd, -joint.torque_limit, joint.torque_limit);
  }
  return tau;
}

Eigen::VectorXd joint_limit_torques(const SimState& state, const CharacterModel& model,
                                    const SimConfig& cfg) {
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(model.num_joints());
  for (int j = 0; j < model.num_joints(); ++j) {
    const Joint& joint = model.joints[j];
    if (joint.type != JointType::kRevolute) continue;
    const double q = state.q[3 + j];
    const double qd = state.qdot[3 + j];
    if (q < joint.lower) {
      tau[j] = std::max(0.0, cfg.limit_stiffness * (joint.lower - q) - cfg.limit_damping * qd);
    } else if (q > joint.upper) {
      tau[j] = std::min(0.0, cfg.limit_stiffness * (joint.upper - q) - cfg.limit_damping * qd);
    }
  }
  return tau;
}

Eigen::MatrixXd mass_matrix(const CharacterModel& model, const Eigen::VectorXd& q) {
  const Kinematics kin(model, q, Eigen::VectorXd::Zero(model.dof()));
  return dynamics_terms(kin, model.dof(), 0.0).mass;
}

Eigen::VectorXd bias_forces(const CharacterModel& model, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qdot) {
  const Kinematics kin(model, q, qdot);
  return dynamics_terms(kin, model.dof(), 0.0).bias;
}

Eigen::VectorXd forward_dynamics(const SimState& state, const Eigen::VectorXd& torques,
                                 const std::vector<PointForce>& external_forces,
                                 const CharacterModel& model, double gravity, bool fixed_root) {
  const Kinematics kin(model, state.q, state.qdot);
  return solve_accelerations(kin, state, torques, external_forces, gravity, fixed_root);
}

Eigen::Vector2d ground_contact_force(double bottom_height, const Eigen::Vector2d& velocity,
                                     const ContactParams& params) {
  if (bottom_height >= 0.0) return Eigen::Vector2d::Zero();
  const double normal =
      std::max(0.0, params.stiffness * (-bottom_height) - params.damping * velocity.y());
  const double vx = velocity.x();
  const double sign = vx > 0.0 ? 1.0 : (vx < 0.0 ? -1.0 : 0.0);
  const double tangential =
      -std::min(params.friction * normal, params.tangential_stiffness * std::abs(vx)) * sign;
  return {tangential, normal};
}

std::vector<Eigen::Vector2d> contact_forces(const SimState& state, const CharacterModel& model,
                                            const ContactParams& params) {
  const Kinematics kin(model, state.q, state.qdot);
  std::vector<Eigen::Vector2d> forces;
  forces.reserve(model.contact_points.size());
  for (const ContactPoint& c : model.contact_points) {
    const Eigen::Vector2d bottom = kin.point(c.link, c.offset) - Eigen::Vector2d(0.0, c.radius);
    forces.push_back(ground_contact_force(bottom.y(), kin.point_velocity_world(c.link, bottom), params));
  }
  return forces;
}

SimState step_control(const SimState& state, const Action& action, const CharacterModel& model,
                      const SimConfig& cfg) {
  if (state.q.size() != model.dof() || state.qdot.size() != model.dof()) {
    throw Error(ErrorKind::kDimensionMismatch, "step_control: state does not match character");
  }
  if (!action.targets.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, "step_control: non-finite action");
  }
  if (cfg.ball && !state.ball) {
    throw Error(ErrorKind::kInvalidInput, "step_control: ball configured but state has none");
  }
  const int steps = cfg.substeps();
  const double dt = cfg.dt();
  const double total_mass = model.total_mass();
  SimState s = state;
  std::vector<PointForce> external;
  Eigen::MatrixXd damping(model.dof(), model.dof());
  std::vector<Eigen::RowVectorXd> sliding;  // horizontal Jacobian rows of implicit friction contacts
  for (int k = 0; k < steps; ++k) {
    const SimState previous = s;
    const Kinematics kin(model, s.q, s.qdot);
    const Eigen::VectorXd pd = pd_torques(s, action, model);
    const Eigen::VectorXd tau = pd + joint_limit_torques(s, model, cfg);
    // Velocity-proportional terms (unsaturated PD damping, sliding friction
    // below the Coulomb cap) act on the end-of-substep velocity. Explicit
    // treatment chatters on light links at this step size.
    damping.setZero();
    sliding.clear();
    for (int j = 0; j < model.num_joints(); ++j) {
      const Joint& joint = model.joints[j];
      if (std::abs(pd[j]) < joint.torque_limit) damping(3 + j, 3 + j) = dt * joint.kd;
    }

    external.clear();
    if (cfg.ground_contact) {
      for (const ContactPoint& c : model.contact_points) {
        const Eigen::Vector2d bottom = kin.point(c.link, c.offset) - Eigen::Vector2d(0.0, c.radius);
        if (bottom.y() >= 0.0) continue;
        const Eigen::Vector2d v = kin.point_velocity_world(c.link, bottom);
        const Eigen::Vector2d f = ground_contact_force(bottom.y(), v, cfg.contact);
        external.push_back({c.link, bottom, f});
        if (cfg.contact.tangential_stiffness * std::abs(v.x()) < cfg.contact.friction * f.y()) {
          const Eigen::RowVectorXd jx = kin.point_jacobian(c.link, bottom).row(0);
          damping.noalias() += (dt * cfg.contact.tangential_stiffness) * jx.transpose() * jx;
          sliding.push_back(jx);
        }
      }
    }

    BallForces on_ball;
    if (cfg.ball && s.ball) {
      const BallParams& bp = *cfg.ball;
      BallState& b = *s.ball;
      ball_character_contacts(kin, b, bp, cfg.contact, external, on_ball);
      const Eigen::Vector2d arm(0.0, -bp.radius);
      const Eigen::Vector2d v_bottom = b.velocity + b.angular_velocity * perp(arm);
      if (cfg.ground_contact) {
        const Eigen::Vector2d f = ground_contact_force(b.position.y() - bp.radius, v_bottom, cfg.contact);
        on_ball.force += f;
        on_ball.torque += arm.x() * f.y() - arm.y() * f.x();
      }
      on_ball.force.y() -= bp.mass * cfg.gravity;
    }

    const Eigen::VectorXd qdd = solve_accelerations(kin, s, tau, external, cfg.gravity, cfg.fixed_root, &damping);
    // Linear momentum after the substep follows exactly from the net external
    // force; the root velocity absorbs the O(dt^2) drift of the position update.
    Eigen::Vector2d momentum_target = Eigen::Vector2d::Zero();
    if (!cfg.fixed_root) {
      Eigen::Vector2d net = Eigen::Vector2d(0.0, -total_mass * cfg.gravity);
      for (const PointForce& f : external) net += f.force;
      for (const auto& jx : sliding) net.x() -= dt * cfg.contact.tangential_stiffness * jx.dot(qdd);
      momentum_target = total_mass * kin.center_of_mass_velocity() + dt * net;
    }
    s.qdot += dt * qdd;
    s.q += dt * s.qdot;
    if (!cfg.fixed_root) {
      const Kinematics after(model, s.q, s.qdot);
      s.qdot.head<2>() += momentum_target / total_mass - after.center_of_mass_velocity();
    }

    if (cfg.ball && s.ball) {
      const BallParams& bp = *cfg.ball;
      BallState& b = *s.ball;
      b.velocity += dt * on_ball.force / bp.mass;
      b.angular_velocity += dt * on_ball.torque / (0.5 * bp.mass * bp.radius * bp.radius);
      b.position += dt * b.velocity;
      b.angle += dt * b.angular_velocity;
    }

    s.sim_time = state.sim_time + (k + 1) * dt;
    if (!within_guard(s, cfg.divergence_velocity)) {
      throw SimulationDiverged("simulation diverged at t=" + std::to_string(s.sim_time), previous);
    }
  }
  s.sim_time = state.sim_time + steps / cfg.sim_hz;
  return s;
}

bool check_early_termination(const SimState& state, const CharacterModel& model,
                             bool termination_enabled) {
  if (!termination_enabled) return false;
  const Kinematics kin(model, state.q, state.qdot);
  for (const ContactPoint& c : model.contact_points) {
    if (c.is_foot) continue;
    if (kin.point(c.link, c.offset).y() - c.radius < 0.0) return true;
  }
  return false;
}

double min_contact_height(const SimState& state, const CharacterModel& model) {
  const Kinematics kin(model, state.q, state.qdot);
  double lowest = std::numeric_limits<double>::infinity();
  for (const ContactPoint& c : model.contact_points) {
    lowest = std::min(lowest, kin.point(c.link, c.offset).y() - c.radius);
  }
  return lowest;
}

double total_energy(const SimState& state, const CharacterModel& model, double gravity) {
  const Kinematics kin(model, state.q, state.qdot);
  const DynamicsTerms t = dynamics_terms(kin, model.dof(), gravity);
  double potential = 0.0;
  for (int i = 0; i < model.num_links(); ++i) {
    potential += model.links[i].mass * gravity * kin.link_com(i).y();
  }
  return 0.5 * state.qdot.dot(t.mass * state.qdot) + potential;
}

Eigen::Vector2d linear_momentum(const SimState& state, const CharacterModel& model) {
  const Kinematics kin(model, state.q, state.qdot);
  return model.total_mass() * kin.center_of_mass_velocity();
}

}  // namespace amp
