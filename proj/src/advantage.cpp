#include "ppoue/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace ppoue {

AdvantageResult compute_advantages(const RolloutBuffer& buf, const AdvantageConfig& cfg,
                                   double bootstrap_value) {
  if (buf.empty()) throw std::invalid_argument("compute_advantages: empty buffer");
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) throw std::invalid_argument("compute_advantages: gamma out of (0,1]");
  if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0)) throw std::invalid_argument("compute_advantages: lambda out of [0,1]");

  const std::size_t n = buf.size();
  AdvantageResult out{Vec(n), Vec(n)};
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const Transition& tr = buf[t];
    const double next_value = (t + 1 < n) ? buf[t + 1].value_estimate : bootstrap_value;
    const double not_done = tr.done ? 0.0 : 1.0;
    const double delta = tr.reward + cfg.gamma * next_value * not_done - tr.value_estimate;
    running = delta + cfg.gamma * cfg.lambda * not_done * running;
    out.advantages[static_cast<Eigen::Index>(t)] = running;
  }
  for (std::size_t t = 0; t < n; ++t)
    out.returns[static_cast<Eigen::Index>(t)] = out.advantages[static_cast<Eigen::Index>(t)] + buf[t].value_estimate;

  if (cfg.normalize && n > 1) {
    const double mean = out.advantages.mean();
    const double var = (out.advantages.array() - mean).square().mean();
    out.advantages = ((out.advantages.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();
  }
  return out;
}

}  // namespace ppoue
