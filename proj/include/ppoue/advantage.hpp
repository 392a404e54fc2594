#pragma once

#include <cstddef>
#include <vector>

#include "ppoue/numerics.hpp"

namespace ppoue {

struct Transition {
  Vec state;
  Vec action;
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value_estimate = 0.0;
  bool done = false;
  bool explored = true;
  double ratio = 0.0;  // action distance ratio at `state`; +inf before the first snapshot
};

/// Transitions of one update interval, in collection order. `done` marks episode ends.
class RolloutBuffer {
 public:
  RolloutBuffer() = default;
  explicit RolloutBuffer(std::size_t capacity) { items_.reserve(capacity); }

  void push(Transition t) { items_.push_back(std::move(t)); }
  void clear() { items_.clear(); }

  [[nodiscard]] std::size_t size() const { return items_.size(); }
  [[nodiscard]] bool empty() const { return items_.empty(); }
  [[nodiscard]] const Transition& operator[](std::size_t i) const { return items_[i]; }
  [[nodiscard]] const std::vector<Transition>& items() const { return items_; }

  [[nodiscard]] auto begin() const { return items_.begin(); }
  [[nodiscard]] auto end() const { return items_.end(); }

 private:
  std::vector<Transition> items_;
};

struct AdvantageConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  bool normalize = true;
};

struct AdvantageResult {
  Vec advantages;
  Vec returns;  // unnormalized advantage + value estimate
};

/*!
 * GAE(gamma, lambda) over the buffer. The last transition bootstraps with
 * `bootstrap_value` unless it ends an episode; no credit flows across `done`.
 */
AdvantageResult compute_advantages(const RolloutBuffer& buf, const AdvantageConfig& cfg,
                                   double bootstrap_value);

}  // namespace ppoue
