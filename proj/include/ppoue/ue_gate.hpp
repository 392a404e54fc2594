#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ppoue/gaussian_policy.hpp"
#include "ppoue/numerics.hpp"

namespace ppoue {

/*
 * Uncertainty-aware exploration gate.
 *
 * Between two policy updates every visited state s gets an action distance
 * ratio r(s) = |mu_k(s) - mu_{k-1}(s)| / |mu_{k-1}(s)|, comparing the live
 * actor with the snapshot taken before the last update. At the next boundary
 * the ratios are ranked ascending and the one at 1-based rank
 * floor((1 - U) L) becomes the threshold for the following interval. States
 * whose ratio exceeds the threshold sample from the Gaussian, the rest take
 * the policy mean. U = 1 gives rank 0, threshold 0, and plain PPO.
 */

enum class GateDecision { kExplore, kExploit };

struct GateConfig {
  double uncertainty = 1.0;    // U in [0, 1]
  double denom_guard = 1e-8;   // floor on |mu_{k-1}(s)|
  /// Optional per-interval schedule U_k; `uncertainty` is used when unset.
  std::function<double(std::size_t k)> schedule;

  [[nodiscard]] double uncertainty_at(std::size_t k) const;
};

struct ThresholdState {
  std::size_t k = 0;
  double tau = 0.0;
  double uncertainty = 1.0;
  /// Set when the threshold rank is 0: every state explores regardless of its ratio.
  bool explore_all = true;
  /// Interval-k ratios, ascending; filled by close_interval.
  std::vector<double> ranking;
  /// Number of ranked ratios strictly below tau.
  std::size_t below = 0;
};

/// |a_cur - a_prev|
double action_distance(const Vec& a_prev, const Vec& a_cur);

/// |a_cur - a_prev| / max(|a_prev|, denom_guard)
double action_distance_ratio(const Vec& a_prev, const Vec& a_cur, double denom_guard = 1e-8);

/// floor((1 - U) L), the 1-based threshold rank; 0 means "no threshold".
std::size_t threshold_rank(std::size_t length, double uncertainty);

/// Ratio at rank floor((1 - U) L) of the ascending ranking, or 0 when that rank is 0.
double select_threshold(std::span<const double> ratios, double uncertainty);

/// Explore iff r > tau.
GateDecision gate(double ratio, double tau);

/// Decision under a full threshold state (honours explore_all).
GateDecision gate(double ratio, const ThresholdState& st);

/// Ratio of the live mean action against the snapshot's; +inf without a snapshot.
double compute_ratio(const std::optional<PolicySnapshot>& snapshot, const DenseNet& live_actor,
                     const Vec& state, double denom_guard = 1e-8);

/// Records the interval's ratios into `st.ranking` and counts those below st.tau.
ThresholdState close_interval(ThresholdState st, std::span<const double> ratios);

/// 1 - below / L over the closed interval.
double posterior_uncertainty(const ThresholdState& st);

/*!
 * Moves to interval k + 1 with a threshold picked from `collected` (non-finite
 * ratios are ignored). With nothing usable the previous threshold is kept and
 * a warning is logged, except at k = 0 where that is the expected case.
 */
ThresholdState advance_interval(const ThresholdState& st, const GateConfig& cfg,
                                std::span<const double> collected);

}  // namespace ppoue
