#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ppoue/numerics.hpp"
#include "ppoue/rng.hpp"

namespace ppoue {

struct EnvSpec {
  std::string name;
  int obs_dim = 0;
  int action_dim = 0;
  Vec action_low;
  Vec action_high;
  std::size_t max_episode_steps = 0;
};

struct StepResult {
  Vec state;
  double reward = 0.0;
  bool done = false;
};

/*!
 * Episodic environment. Actions are clamped to the spec bounds before the
 * dynamics run; an episode ends at a terminal condition or after
 * max_episode_steps. Stepping a finished episode throws std::logic_error.
 */
class Environment {
 public:
  virtual ~Environment() = default;

  [[nodiscard]] const EnvSpec& spec() const { return spec_; }

  Vec reset(std::uint64_t seed);
  StepResult step(const Vec& action);

  [[nodiscard]] bool done() const { return done_; }
  [[nodiscard]] std::size_t elapsed() const { return elapsed_; }

 protected:
  explicit Environment(EnvSpec spec);

  virtual Vec do_reset(Rng& rng) = 0;
  virtual StepResult do_step(const Vec& clamped_action) = 0;

 private:
  EnvSpec spec_;
  bool done_ = true;
  std::size_t elapsed_ = 0;
};

/*
 * Pendulum swing-up. State (theta, omega) with theta = 0 upright.
 *   omega' = clip(omega + (3 g / (2 l) sin theta + 3 / (m l^2) u) dt, +-8)
 *   theta' = theta + omega' dt
 * Reward -(wrap(theta)^2 + 0.1 omega^2 + 0.001 u^2) on the pre-step state.
 * g = 10, m = 1, l = 1, dt = 0.05, |u| <= 2. Reset theta ~ U[-pi, pi], omega ~ U[-1, 1].
 * Observation (cos theta, sin theta, omega). No terminal state.
 */
class PendulumEnv final : public Environment {
 public:
  static constexpr double kGravity = 10.0;
  static constexpr double kMass = 1.0;
  static constexpr double kLength = 1.0;
  static constexpr double kDt = 0.05;
  static constexpr double kMaxSpeed = 8.0;
  static constexpr double kMaxTorque = 2.0;

  explicit PendulumEnv(std::size_t max_episode_steps);

  /// Sets the physical state directly (the episode must have been reset).
  void set_state(double theta, double omega);
  [[nodiscard]] double theta() const { return theta_; }
  [[nodiscard]] double omega() const { return omega_; }

 protected:
  Vec do_reset(Rng& rng) override;
  StepResult do_step(const Vec& u) override;

 private:
  [[nodiscard]] Vec observe() const;
  double theta_ = 0.0;
  double omega_ = 0.0;
};

/*
 * 2-D point mass driven towards a goal.
 *   v' = v + dt (u - c v),  p' = clip(p + dt v', +-2)  (velocity zeroed on a wall hit)
 * Reward -|p' - goal| - 0.01 |u|^2. dt = 0.1, c = 0.5, |u_i| <= 1.
 * Reset p, goal ~ U[-1, 1]^2, v = 0. Observation (p, v, goal).
 */
class PointMassEnv final : public Environment {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kDamping = 0.5;
  static constexpr double kArena = 2.0;

  explicit PointMassEnv(std::size_t max_episode_steps);

  void set_state(const Vec& position, const Vec& velocity, const Vec& goal);

 protected:
  Vec do_reset(Rng& rng) override;
  StepResult do_step(const Vec& u) override;

 private:
  [[nodiscard]] Vec observe() const;
  Eigen::Vector2d pos_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel_ = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal_ = Eigen::Vector2d::Zero();
};

struct LqrSystem {
  Mat a;
  Mat b;
  Mat q;
  Mat r;

  /// The 4-state / 2-input system used by the "lqr" environment.
  static LqrSystem standard();
};

/*
 * Linear-quadratic regulator: x' = A x + B u, reward -(x'Qx + u'Ru) on the
 * pre-step state. Reset x ~ N(0, I). |u_i| <= 5.
 */
class LqrEnv final : public Environment {
 public:
  static constexpr double kActionBound = 5.0;
  /// Natural episode length; shorter horizons cap it further.
  static constexpr std::size_t kEpisodeSteps = 100;

  LqrEnv(LqrSystem system, std::size_t max_episode_steps);

  [[nodiscard]] const LqrSystem& system() const { return system_; }
  void set_state(const Vec& x);

 protected:
  Vec do_reset(Rng& rng) override;
  StepResult do_step(const Vec& u) override;

 private:
  LqrSystem system_;
  Vec x_;
};

/// Infinite-horizon discrete LQR gain K (u* = -K x) from the Riccati fixed point.
Mat lqr_optimal_policy(const LqrSystem& system, double tol = 1e-10, std::size_t max_iter = 100'000);

/// Names accepted by make_environment.
const std::vector<std::string>& environment_names();

/*!
 * Builds an environment by name ("pendulum", "point-mass", "lqr"). The episode
 * limit is `horizon`, or the environment's own limit when that is shorter.
 */
std::unique_ptr<Environment> make_environment(const std::string& name, std::size_t horizon);

}  // namespace ppoue
