#include "ppoue/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ppoue {
namespace {

double wrap_angle(double x) {
  const double two_pi = 2.0 * std::numbers::pi;
  return std::fmod(std::fmod(x + std::numbers::pi, two_pi) + two_pi, two_pi) - std::numbers::pi;
}

EnvSpec make_spec(std::string name, int obs_dim, int action_dim, double bound, std::size_t steps) {
  if (steps == 0) throw std::invalid_argument("environment: episode length must be positive");
  return EnvSpec{std::move(name), obs_dim, action_dim, Vec::Constant(action_dim, -bound),
                 Vec::Constant(action_dim, bound), steps};
}

}  // namespace

Environment::Environment(EnvSpec spec) : spec_(std::move(spec)) {
  if (spec_.obs_dim <= 0 || spec_.action_dim <= 0) throw std::invalid_argument("EnvSpec: dimensions must be positive");
  for (int i = 0; i < spec_.action_dim; ++i)
    if (!(spec_.action_low[i] < spec_.action_high[i])) throw std::invalid_argument("EnvSpec: bounds need lo < hi");
}

Vec Environment::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  done_ = false;
  elapsed_ = 0;
  return do_reset(rng);
}

StepResult Environment::step(const Vec& action) {
  if (done_) throw std::logic_error("Environment::step called on a finished episode");
  if (action.size() != spec_.action_dim) throw std::invalid_argument("Environment::step: action dimension mismatch");
  if (!action.allFinite()) throw std::invalid_argument("Environment::step: non-finite action");
  const Vec clamped = action.cwiseMax(spec_.action_low).cwiseMin(spec_.action_high);
  StepResult r = do_step(clamped);
  ++elapsed_;
  if (elapsed_ >= spec_.max_episode_steps) r.done = true;
  done_ = r.done;
  return r;
}

// Pendulum

PendulumEnv::PendulumEnv(std::size_t max_episode_steps)
    : Environment(make_spec("pendulum", 3, 1, kMaxTorque, max_episode_steps)) {}

void PendulumEnv::set_state(double theta, double omega) {
  theta_ = theta;
  omega_ = omega;
}

Vec PendulumEnv::observe() const { return Eigen::Vector3d(std::cos(theta_), std::sin(theta_), omega_); }

Vec PendulumEnv::do_reset(Rng& rng) {
  theta_ = rng.uniform(-std::numbers::pi, std::numbers::pi);
  omega_ = rng.uniform(-1.0, 1.0);
  return observe();
}

StepResult PendulumEnv::do_step(const Vec& u) {
  const double torque = u[0];
  const double th = wrap_angle(theta_);
  const double cost = th * th + 0.1 * omega_ * omega_ + 0.001 * torque * torque;
  double new_omega = omega_ + (3.0 * kGravity / (2.0 * kLength) * std::sin(theta_) +
                               3.0 / (kMass * kLength * kLength) * torque) * kDt;
  new_omega = std::clamp(new_omega, -kMaxSpeed, kMaxSpeed);
  theta_ = theta_ + new_omega * kDt;
  omega_ = new_omega;
  return {observe(), -cost, false};
}

// Point mass

PointMassEnv::PointMassEnv(std::size_t max_episode_steps)
    : Environment(make_spec("point-mass", 6, 2, 1.0, max_episode_steps)) {}

void PointMassEnv::set_state(const Vec& position, const Vec& velocity, const Vec& goal) {
  if (position.size() != 2 || velocity.size() != 2 || goal.size() != 2)
    throw std::invalid_argument("PointMassEnv::set_state: expected 2-vectors");
  pos_ = position;
  vel_ = velocity;
  goal_ = goal;
}

Vec PointMassEnv::observe() const {
  Vec o(6);
  o << pos_, vel_, goal_;
  return o;
}

Vec PointMassEnv::do_reset(Rng& rng) {
  pos_ = Eigen::Vector2d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  vel_.setZero();
  goal_ = Eigen::Vector2d(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return observe();
}

StepResult PointMassEnv::do_step(const Vec& u) {
  for (int i = 0; i < 2; ++i) {
    vel_[i] = vel_[i] + kDt * (u[i] - kDamping * vel_[i]);
    pos_[i] = pos_[i] + kDt * vel_[i];
    if (std::abs(pos_[i]) > kArena) {
      pos_[i] = std::clamp(pos_[i], -kArena, kArena);
      vel_[i] = 0.0;
    }
  }
  const double dx = pos_[0] - goal_[0];
  const double dy = pos_[1] - goal_[1];
  const double reward = -std::sqrt(dx * dx + dy * dy) - 0.01 * (u[0] * u[0] + u[1] * u[1]);
  return {observe(), reward, false};
}

// LQR

LqrSystem LqrSystem::standard() {
  // Two lightly damped oscillators, each actuated through its velocity-like coordinate.
  auto rotation = [](double rho, double angle) {
    Eigen::Matrix2d m;
    m << std::cos(angle), std::sin(angle), -std::sin(angle), std::cos(angle);
    return Eigen::Matrix2d(rho * m);
  };
  LqrSystem s;
  s.a = Mat::Zero(4, 4);
  s.a.block<2, 2>(0, 0) = rotation(0.98, 0.2);
  s.a.block<2, 2>(2, 2) = rotation(0.98, 0.35);
  s.b = Mat::Zero(4, 2);
  s.b(1, 0) = 0.5;
  s.b(3, 1) = 0.5;
  s.q = Mat::Identity(4, 4);
  s.r = 0.1 * Mat::Identity(2, 2);
  return s;
}

LqrEnv::LqrEnv(LqrSystem system, std::size_t max_episode_steps)
    : Environment(make_spec("lqr", static_cast<int>(system.a.rows()), static_cast<int>(system.b.cols()),
                            kActionBound, max_episode_steps)),
      system_(std::move(system)),
      x_(Vec::Zero(system_.a.rows())) {
  const auto n = system_.a.rows();
  const auto m = system_.b.cols();
  if (system_.a.cols() != n || system_.b.rows() != n || system_.q.rows() != n || system_.q.cols() != n ||
      system_.r.rows() != m || system_.r.cols() != m)
    throw std::invalid_argument("LqrEnv: inconsistent system matrices");
}

void LqrEnv::set_state(const Vec& x) {
  if (x.size() != x_.size()) throw std::invalid_argument("LqrEnv::set_state: dimension mismatch");
  x_ = x;
}

Vec LqrEnv::do_reset(Rng& rng) {
  for (Eigen::Index i = 0; i < x_.size(); ++i) x_[i] = rng.normal();
  return x_;
}

namespace {

// x^T M x with a fixed summation order.
double quadratic_form(const Mat& m, const Vec& x) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) row += m(i, j) * x[j];
    acc += x[i] * row;
  }
  return acc;
}

}  // namespace

StepResult LqrEnv::do_step(const Vec& u) {
  const double cost = quadratic_form(system_.q, x_) + quadratic_form(system_.r, u);
  Vec next(x_.size());
  for (Eigen::Index i = 0; i < x_.size(); ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < x_.size(); ++j) acc += system_.a(i, j) * x_[j];
    for (Eigen::Index j = 0; j < u.size(); ++j) acc += system_.b(i, j) * u[j];
    next[i] = acc;
  }
  x_ = std::move(next);
  return {x_, -cost, false};
}

Mat lqr_optimal_policy(const LqrSystem& s, double tol, std::size_t max_iter) {
  Mat p = s.q;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const Mat btp = s.b.transpose() * p;
    const Mat gain = (s.r + btp * s.b).ldlt().solve(btp * s.a);
    Mat next = s.q + s.a.transpose() * p * s.a - s.a.transpose() * p * s.b * gain;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (change < tol) {
      const Mat bt = s.b.transpose() * p;
      return (s.r + bt * s.b).ldlt().solve(bt * s.a);
    }
  }
  throw std::runtime_error("lqr_optimal_policy: Riccati iteration did not converge");
}

const std::vector<std::string>& environment_names() {
  static const std::vector<std::string> names{"pendulum", "point-mass", "lqr"};
  return names;
}

std::unique_ptr<Environment> make_environment(const std::string& name, std::size_t horizon) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>(horizon);
  if (name == "point-mass") return std::make_unique<PointMassEnv>(horizon);
  if (name == "lqr") return std::make_unique<LqrEnv>(LqrSystem::standard(), std::min(horizon, LqrEnv::kEpisodeSteps));
  throw std::invalid_argument("unknown environment '" + name + "'");
}

}  // namespace ppoue
