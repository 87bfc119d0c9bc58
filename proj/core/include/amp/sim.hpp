#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "amp/character.hpp"
#include "amp/error.hpp"

namespace amp {

// Passive disc used by the dribble task.
struct BallState {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double angle = 0.0;
  double angular_velocity = 0.0;
};

struct SimState {
  Eigen::VectorXd q;     // root_x, root_y, root_rot, joint angles
  Eigen::VectorXd qdot;  // matching generalized velocities
  double sim_time = 0.0;
  std::optional<BallState> ball;

  bool all_finite() const;
  static SimState zero(const CharacterModel& model);
};

// PD targets, one per joint (radians). Rotor joints read their entry as an
// offset from the current angle.
struct Action {
  Eigen::VectorXd targets;
};

struct ContactParams {
  double stiffness = 2.0e4;             // k_n, N/m
  double damping = 2.0e2;               // d_n, N s/m
  double friction = 0.8;                // mu
  double tangential_stiffness = 1.0e3;  // k_t, regularizes Coulomb friction
};

struct BallParams {
  double radius = 0.15;
  double mass = 0.45;
};

struct SimConfig {
  double sim_hz = 1200.0;
  double control_hz = 30.0;
  double gravity = 9.81;
  ContactParams contact;
  bool ground_contact = true;
  double limit_stiffness = 2000.0;  // N m / rad beyond joint limits
  double limit_damping = 20.0;
  double divergence_velocity = 1.0e3;
  bool fixed_root = false;  // pins the root in place, for test rigs such as pendulums
  std::optional<BallParams> ball;

  int substeps() const;
  double dt() const { return 1.0 / sim_hz; }
};

/// Thrown by step_control when a substep produces non-finite values or a
/// velocity above the divergence guard. Carries the last finite state.
class SimulationDiverged : public Error {
 public:
  SimulationDiverged(const std::string& message, SimState last_valid)
      : Error(ErrorKind::kSimulationDiverged, message), last_valid_(std::move(last_valid)) {}
  const SimState& last_valid() const { return last_valid_; }

 private:
  SimState last_valid_;
};

/// World-frame positions and velocities of every link for one configuration.
class Kinematics {
 public:
  Kinematics(const CharacterModel& model, const Eigen::VectorXd& q, const Eigen::VectorXd& qdot);

  const CharacterModel& model() const { return *model_; }
  double link_angle(int link) const { return angle_[link]; }
  double link_angular_velocity(int link) const { return omega_[link]; }
  const Eigen::Vector2d& link_origin(int link) const { return origin_[link]; }

  Eigen::Vector2d point(int link, const Eigen::Vector2d& local) const;
  Eigen::Vector2d point_velocity_world(int link, const Eigen::Vector2d& world_point) const;
  Eigen::Vector2d point_velocity(int link, const Eigen::Vector2d& local) const {
    return point_velocity_world(link, point(link, local));
  }
  Eigen::Vector2d link_com(int link) const;

  // d(point)/dq for a world point rigidly attached to `link` (2 x dof).
  Eigen::MatrixXd point_jacobian(int link, const Eigen::Vector2d& world_point) const;
  // Jdot * qdot for the same point: acceleration with zero qddot.
  Eigen::Vector2d velocity_product_acceleration(int link, const Eigen::Vector2d& world_point) const;

  Eigen::Vector2d center_of_mass() const;
  Eigen::Vector2d center_of_mass_velocity() const;

  // Generalized-coordinate indices of the angular DoFs between the root and
  // `link`, root rotation first.
  const std::vector<int>& angular_chain(int link) const { return chain_[link]; }

 private:
  Eigen::Vector2d pivot(int dof) const;
  Eigen::Vector2d pivot_velocity(int dof) const;

  const CharacterModel* model_;
  Eigen::VectorXd qdot_;
  std::vector<double> angle_;
  std::vector<double> omega_;
  std::vector<Eigen::Vector2d> origin_;
  std::vector<Eigen::Vector2d> origin_velocity_;
  std::vector<std::vector<int>> chain_;
};

struct PointForce {
  int link = 0;
  Eigen::Vector2d world_point = Eigen::Vector2d::Zero();
  Eigen::Vector2d force = Eigen::Vector2d::Zero();
};

/// tau_j = clamp(kp_j (q*_j - q_j) - kd_j qdot_j, +-limit_j). Rotor joints use
/// q*_j = q_j + target_j.
Eigen::VectorXd pd_torques(const SimState& state, const Action& action, const CharacterModel& model);

// Stiff spring-damper torques pushing revolute joints back inside their limits.
Eigen::VectorXd joint_limit_torques(const SimState& state, const CharacterModel& model,
                                    const SimConfig& cfg);

Eigen::MatrixXd mass_matrix(const CharacterModel& model, const Eigen::VectorXd& q);

// C(q, qdot): Coriolis and centripetal generalized forces.
Eigen::VectorXd bias_forces(const CharacterModel& model, const Eigen::VectorXd& q,
                            const Eigen::VectorXd& qdot);

/// Solves M(q) qddot = tau + J^T f_ext + gravity - C(q, qdot). `torques` has
/// one entry per joint. With `fixed_root` the root accelerations are zero and
/// only the joint rows are solved.
Eigen::VectorXd forward_dynamics(const SimState& state, const Eigen::VectorXd& torques,
                                 const std::vector<PointForce>& external_forces,
                                 const CharacterModel& model, double gravity = 9.81,
                                 bool fixed_root = false);

// Ground force on one disc-shaped contact whose lowest point is at `bottom`
// and moves with `velocity`.
Eigen::Vector2d ground_contact_force(double bottom_height, const Eigen::Vector2d& velocity,
                                     const ContactParams& params);

/// Per-contact-point world forces from the ground (zero when not penetrating).
/// Each force acts at the lowest point of its contact disc.
std::vector<Eigen::Vector2d> contact_forces(const SimState& state, const CharacterModel& model,
                                            const ContactParams& params = {});

/// Advances one control period: substeps() semi-implicit Euler steps at dt with
/// the PD targets held fixed. Throws SimulationDiverged.
SimState step_control(const SimState& state, const Action& action, const CharacterModel& model,
                      const SimConfig& cfg);

/// True iff any non-foot contact point is below the ground. Always false when
/// termination is disabled.
bool check_early_termination(const SimState& state, const CharacterModel& model,
                             bool termination_enabled = true);

// Lowest contact height over all contact points (disc bottoms).
double min_contact_height(const SimState& state, const CharacterModel& model);

double total_energy(const SimState& state, const CharacterModel& model, double gravity);
Eigen::Vector2d linear_momentum(const SimState& state, const CharacterModel& model);

}  // namespace amp
