#include "ppoue/ue_gate.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace ppoue {

double GateConfig::uncertainty_at(std::size_t k) const {
  const double u = schedule ? schedule(k) : uncertainty;
  if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("GateConfig: uncertainty must lie in [0, 1]");
  return u;
}

double action_distance(const Vec& a_prev, const Vec& a_cur) {
  if (a_prev.size() != a_cur.size()) throw std::invalid_argument("action_distance: length mismatch");
  return (a_cur - a_prev).norm();
}

double action_distance_ratio(const Vec& a_prev, const Vec& a_cur, double denom_guard) {
  const double num = action_distance(a_prev, a_cur);
  if (num == 0.0) return 0.0;
  return num / std::max(a_prev.norm(), denom_guard);
}

std::size_t threshold_rank(std::size_t length, double uncertainty) {
  if (!(uncertainty >= 0.0 && uncertainty <= 1.0))
    throw std::invalid_argument("threshold_rank: uncertainty must lie in [0, 1]");
  // The slack absorbs representation error in 1 - U, e.g. (1 - 0.4) * 5.
  const double raw = (1.0 - uncertainty) * static_cast<double>(length);
  return static_cast<std::size_t>(std::floor(raw + 1e-9));
}

double select_threshold(std::span<const double> ratios, double uncertainty) {
  if (ratios.empty()) throw std::invalid_argument("select_threshold: empty ratio list");
  const std::size_t idx = threshold_rank(ratios.size(), uncertainty);
  if (idx == 0) return 0.0;
  std::vector<double> sorted(ratios.begin(), ratios.end());
  std::stable_sort(sorted.begin(), sorted.end());
  return sorted[std::min(idx, sorted.size()) - 1];
}

GateDecision gate(double ratio, double tau) {
  return ratio > tau ? GateDecision::kExplore : GateDecision::kExploit;
}

GateDecision gate(double ratio, const ThresholdState& st) {
  return st.explore_all ? GateDecision::kExplore : gate(ratio, st.tau);
}

double compute_ratio(const std::optional<PolicySnapshot>& snapshot, const DenseNet& live_actor,
                     const Vec& state, double denom_guard) {
  if (!snapshot) return std::numeric_limits<double>::infinity();
  return action_distance_ratio(mean_action(snapshot->actor(), state), mean_action(live_actor, state),
                               denom_guard);
}

ThresholdState close_interval(ThresholdState st, std::span<const double> ratios) {
  st.ranking.assign(ratios.begin(), ratios.end());
  std::stable_sort(st.ranking.begin(), st.ranking.end());
  st.below = static_cast<std::size_t>(
      std::lower_bound(st.ranking.begin(), st.ranking.end(), st.tau) - st.ranking.begin());
  return st;
}

double posterior_uncertainty(const ThresholdState& st) {
  if (st.ranking.empty()) throw std::invalid_argument("posterior_uncertainty: empty ranking");
  return 1.0 - static_cast<double>(st.below) / static_cast<double>(st.ranking.size());
}

ThresholdState advance_interval(const ThresholdState& st, const GateConfig& cfg,
                                std::span<const double> collected) {
  std::vector<double> finite;
  finite.reserve(collected.size());
  for (double r : collected)
    if (std::isfinite(r)) finite.push_back(r);

  ThresholdState next;
  next.k = st.k + 1;
  next.uncertainty = cfg.uncertainty_at(next.k);
  if (finite.empty()) {
    if (st.k > 0) std::cerr << "warning: interval " << st.k << " produced no usable ratios; keeping tau\n";
    next.tau = st.tau;
    next.explore_all = st.explore_all;
    return next;
  }
  next.explore_all = threshold_rank(finite.size(), next.uncertainty) == 0;
  next.tau = select_threshold(finite, next.uncertainty);
  return next;
}

}  // namespace ppoue
