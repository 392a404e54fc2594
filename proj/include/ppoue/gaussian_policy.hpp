#pragma once

#include <cstddef>
#include <cstdint>

#include "ppoue/numerics.hpp"
#include "ppoue/rng.hpp"

namespace ppoue {

/*!
 * Diagonal Gaussian N(mean, diag(variance)). Note that the second field is
 * the per-dimension variance, not the standard deviation.
 */
class DiagonalGaussian {
 public:
  DiagonalGaussian(Vec mean, Vec variance);

  /// Same log standard deviation on every dimension.
  static DiagonalGaussian with_log_std(Vec mean, double log_std);

  [[nodiscard]] const Vec& mean() const { return mean_; }
  [[nodiscard]] const Vec& variance() const { return variance_; }
  [[nodiscard]] int dim() const { return static_cast<int>(mean_.size()); }

 private:
  Vec mean_;
  Vec variance_;
};

/// Linear interpolation of log(std) from `start_log_std` to `end_log_std` over `total_steps`.
struct AnnealSchedule {
  double start_log_std = -0.1;
  double end_log_std = -1.6;
  std::uint64_t total_steps = 1'000'000;
};

/// Clamps `step` to [0, total_steps].
double log_std_at(const AnnealSchedule& sched, std::uint64_t step);

/// -1/2 (d log 2pi + sum_i log var_i + (a_i - mu_i)^2 / var_i)
double log_prob(const DiagonalGaussian& dist, const Vec& action);

/// d log_prob / d mean = (a - mu) / var
Vec log_prob_grad_mean(const DiagonalGaussian& dist, const Vec& action);

/// a_i = mu_i + sqrt(var_i) z_i; draws exactly dim() normals.
Vec sample(const DiagonalGaussian& dist, Rng& rng);

/// Deterministic policy mean.
Vec mean_action(const DenseNet& actor, const Vec& state);

/// Max relative error between the analytic mean-gradient of log_prob and central differences.
double log_prob_grad_check(const DiagonalGaussian& dist, const Vec& action, double step = 1e-5);

/// Frozen copy of the actor taken at update boundary `k`.
class PolicySnapshot {
 public:
  PolicySnapshot(DenseNet actor, std::size_t k) : actor_(std::move(actor)), k_(k) {}

  [[nodiscard]] const DenseNet& actor() const { return actor_; }
  [[nodiscard]] std::size_t update_index() const { return k_; }

 private:
  DenseNet actor_;
  std::size_t k_;
};

}  // namespace ppoue
