#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "ppoue/advantage.hpp"
#include "ppoue/numerics.hpp"
#include "ppoue/rng.hpp"

namespace ppoue {

struct PpoConfig {
  double clip = 0.2;
  int epochs = 80;
  std::size_t minibatch_size = 256;
  double value_loss_coeff = 0.5;
  std::optional<double> max_grad_norm = 0.5;
  /// Drop exploit-branch transitions from the surrogate.
  bool mask_exploit = false;
};

/// Full-buffer statistics evaluated after the last epoch.
struct UpdateStats {
  double surrogate = 0.0;
  double value_loss = 0.0;
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
};

/// min(rho A, clip(rho, 1 - eps, 1 + eps) A)
double clipped_surrogate(double rho, double advantage, double clip);

/// d clipped_surrogate / d rho (zero where the clipped branch is the minimum).
double clipped_surrogate_grad(double rho, double advantage, double clip);

/// Mean clipped surrogate of `actor` over `buf` for a fixed log std (no gradient).
double surrogate_objective(const DenseNet& actor, const RolloutBuffer& buf, const Vec& advantages,
                           double log_std, double clip);

/*!
 * Gradient of the mean clipped surrogate over `indices` with respect to the
 * actor parameters (ascent direction). Transitions with weight 0 contribute
 * nothing; the mean is over the included ones.
 */
Gradient surrogate_gradient(const DenseNet& actor, const RolloutBuffer& buf, const Vec& advantages,
                            std::span<const std::size_t> indices, double log_std, double clip,
                            bool mask_exploit = false, double* objective = nullptr);

/*!
 * K epochs of shuffled minibatch steps: the actor ascends the clipped
 * surrogate with rho = exp(log_prob_new - log_prob_old) under the given log
 * std, the critic descends value_loss_coeff * mean (V - return)^2. Each has
 * its own Adam state. Any non-finite loss or gradient restores both networks
 * and optimizers to their entry state and throws NumericalFault.
 */
UpdateStats ppo_update(DenseNet& actor, DenseNet& critic, AdamState& actor_opt, AdamState& critic_opt,
                       const RolloutBuffer& buf, const AdvantageResult& adv, double log_std,
                       const PpoConfig& cfg, Rng& rng);

}  // namespace ppoue
