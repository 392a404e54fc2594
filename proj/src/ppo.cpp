#include "ppoue/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ppoue {
namespace {

struct PackedBuffer {
  Mat states;   // obs_dim x N
  Mat actions;  // d x N
  Vec log_prob_old;
  std::vector<unsigned char> explored;
};

PackedBuffer pack(const RolloutBuffer& buf) {
  const auto n = static_cast<Eigen::Index>(buf.size());
  PackedBuffer p{Mat(buf[0].state.size(), n), Mat(buf[0].action.size(), n), Vec(n), {}};
  p.explored.reserve(buf.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = buf[static_cast<std::size_t>(i)];
    p.states.col(i) = t.state;
    p.actions.col(i) = t.action;
    p.log_prob_old[i] = t.log_prob_old;
    p.explored.push_back(t.explored ? 1 : 0);
  }
  return p;
}

Mat gather(const Mat& src, std::span<const std::size_t> idx) {
  Mat out(src.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = src.col(static_cast<Eigen::Index>(idx[j]));
  return out;
}

// log N(a; mu, exp(2 log_std) I) for each column.
Vec batch_log_prob(const Mat& mean, const Mat& actions, double log_std) {
  const double var = std::exp(2.0 * log_std);
  const double d = static_cast<double>(mean.rows());
  const double constant = d * std::log(2.0 * std::numbers::pi) + d * std::log(var);
  const Vec quad = (actions - mean).colwise().squaredNorm().transpose() / var;
  return (-0.5 * (quad.array() + constant)).matrix();
}

struct SurrogateEval {
  double objective = 0.0;
  double clipped = 0.0;
  double ratio_sum = 0.0;
  std::size_t count = 0;
};

// Fills `upstream` with d(mean objective)/d(mean output) for the minibatch.
SurrogateEval surrogate_upstream(const Mat& mean, const Mat& actions, const Vec& log_prob_old,
                                 const Vec& advantages, const std::vector<unsigned char>& include,
                                 double log_std, double clip, Mat* upstream) {
  const double var = std::exp(2.0 * log_std);
  const Vec logp = batch_log_prob(mean, actions, log_std);
  SurrogateEval ev;
  for (Eigen::Index j = 0; j < mean.cols(); ++j)
    if (include[static_cast<std::size_t>(j)]) ++ev.count;
  if (upstream) upstream->setZero(mean.rows(), mean.cols());
  if (ev.count == 0) return ev;

  const double inv_n = 1.0 / static_cast<double>(ev.count);
  for (Eigen::Index j = 0; j < mean.cols(); ++j) {
    if (!include[static_cast<std::size_t>(j)]) continue;
    const double rho = std::exp(logp[j] - log_prob_old[j]);
    const double a = advantages[j];
    ev.objective += clipped_surrogate(rho, a, clip);
    ev.ratio_sum += rho;
    if (std::abs(rho - 1.0) > clip) ev.clipped += 1.0;
    if (upstream) {
      const double g = clipped_surrogate_grad(rho, a, clip) * rho * inv_n / var;
      if (g != 0.0) upstream->col(j) = g * (actions.col(j) - mean.col(j));
    }
  }
  ev.objective *= inv_n;
  return ev;
}

}  // namespace

double clipped_surrogate(double rho, double advantage, double clip) {
  const double clipped = std::clamp(rho, 1.0 - clip, 1.0 + clip);
  return std::min(rho * advantage, clipped * advantage);
}

double clipped_surrogate_grad(double rho, double advantage, double clip) {
  const double clipped = std::clamp(rho, 1.0 - clip, 1.0 + clip);
  return rho * advantage <= clipped * advantage ? advantage : 0.0;
}

double surrogate_objective(const DenseNet& actor, const RolloutBuffer& buf, const Vec& advantages,
                           double log_std, double clip) {
  if (buf.empty()) throw std::invalid_argument("surrogate_objective: empty buffer");
  const PackedBuffer p = pack(buf);
  const std::vector<unsigned char> all(buf.size(), 1);
  return surrogate_upstream(actor.forward_batch(p.states), p.actions, p.log_prob_old, advantages, all,
                            log_std, clip, nullptr)
      .objective;
}

Gradient surrogate_gradient(const DenseNet& actor, const RolloutBuffer& buf, const Vec& advantages,
                            std::span<const std::size_t> indices, double log_std, double clip,
                            bool mask_exploit, double* objective) {
  const PackedBuffer p = pack(buf);
  const Mat states = gather(p.states, indices);
  const Mat actions = gather(p.actions, indices);
  Vec lp_old(static_cast<Eigen::Index>(indices.size()));
  Vec adv(static_cast<Eigen::Index>(indices.size()));
  std::vector<unsigned char> include(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    lp_old[static_cast<Eigen::Index>(j)] = p.log_prob_old[static_cast<Eigen::Index>(indices[j])];
    adv[static_cast<Eigen::Index>(j)] = advantages[static_cast<Eigen::Index>(indices[j])];
    include[j] = mask_exploit ? p.explored[indices[j]] : 1;
  }
  const ForwardTrace trace = forward_trace(actor, states);
  Mat upstream;
  const SurrogateEval ev = surrogate_upstream(trace.output, actions, lp_old, adv, include, log_std, clip, &upstream);
  if (objective) *objective = ev.objective;
  Gradient g = Gradient::zeros_like(actor);
  backward_batch(actor, trace, upstream, g);
  return g;
}

UpdateStats ppo_update(DenseNet& actor, DenseNet& critic, AdamState& actor_opt, AdamState& critic_opt,
                       const RolloutBuffer& buf, const AdvantageResult& adv, double log_std,
                       const PpoConfig& cfg, Rng& rng) {
  if (buf.empty()) throw std::invalid_argument("ppo_update: empty buffer");
  if (!(cfg.clip > 0.0) || cfg.epochs < 1 || cfg.minibatch_size == 0)
    throw std::invalid_argument("ppo_update: invalid PpoConfig");
  const auto n = buf.size();
  if (static_cast<std::size_t>(adv.advantages.size()) != n || static_cast<std::size_t>(adv.returns.size()) != n)
    throw std::invalid_argument("ppo_update: advantage length mismatch");

  const DenseNet actor_entry = actor;
  const DenseNet critic_entry = critic;
  const AdamState actor_opt_entry = actor_opt;
  const AdamState critic_opt_entry = critic_opt;
  auto restore = [&] {
    actor = actor_entry;
    critic = critic_entry;
    actor_opt = actor_opt_entry;
    critic_opt = critic_opt_entry;
  };
  auto fault = [](const char* what) { throw NumericalFault(what); };

  const PackedBuffer p = pack(buf);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Gradient actor_grad = Gradient::zeros_like(actor);
  Gradient critic_grad = Gradient::zeros_like(critic);

  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

      for (std::size_t start = 0; start < n; start += cfg.minibatch_size) {
        const std::size_t len = std::min(cfg.minibatch_size, n - start);
        const std::span<const std::size_t> idx(order.data() + start, len);
        const auto b = static_cast<Eigen::Index>(len);

        Mat states = gather(p.states, idx);
        Mat actions = gather(p.actions, idx);
        Vec lp_old(b), a(b), ret(b);
        std::vector<unsigned char> include(len);
        for (std::size_t j = 0; j < len; ++j) {
          const auto src = static_cast<Eigen::Index>(idx[j]);
          lp_old[static_cast<Eigen::Index>(j)] = p.log_prob_old[src];
          a[static_cast<Eigen::Index>(j)] = adv.advantages[src];
          ret[static_cast<Eigen::Index>(j)] = adv.returns[src];
          include[j] = cfg.mask_exploit ? p.explored[idx[j]] : 1;
        }

        // Actor: descend on the negated surrogate.
        const ForwardTrace at = forward_trace(actor, states);
        Mat upstream;
        const SurrogateEval ev = surrogate_upstream(at.output, actions, lp_old, a, include, log_std, cfg.clip, &upstream);
        if (!std::isfinite(ev.objective)) fault("ppo_update: non-finite surrogate");
        if (ev.count > 0) {
          actor_grad.set_zero();
          backward_batch(actor, at, -upstream, actor_grad);
          if (cfg.max_grad_norm) clip_gradient_norm(actor_grad, *cfg.max_grad_norm);
          adam_step(actor, actor_grad, actor_opt);
        }

        // Critic: value_loss_coeff * mean squared error.
        const ForwardTrace ct = forward_trace(critic, states);
        const Vec err = ct.output.row(0).transpose() - ret;
        const double value_loss = cfg.value_loss_coeff * err.squaredNorm() / static_cast<double>(len);
        if (!std::isfinite(value_loss)) fault("ppo_update: non-finite value loss");
        const Mat critic_upstream = (2.0 * cfg.value_loss_coeff / static_cast<double>(len)) * err.transpose();
        critic_grad.set_zero();
        backward_batch(critic, ct, critic_upstream, critic_grad);
        if (cfg.max_grad_norm) clip_gradient_norm(critic_grad, *cfg.max_grad_norm);
        adam_step(critic, critic_grad, critic_opt);
      }
    }
  } catch (const NumericalFault&) {
    restore();
    throw;
  }

  UpdateStats stats;
  std::vector<unsigned char> include(n);
  for (std::size_t j = 0; j < n; ++j) include[j] = cfg.mask_exploit ? p.explored[j] : 1;
  const SurrogateEval ev = surrogate_upstream(actor.forward_batch(p.states), p.actions, p.log_prob_old,
                                              adv.advantages, include, log_std, cfg.clip, nullptr);
  const Vec err = critic.forward_batch(p.states).row(0).transpose() - adv.returns;
  stats.surrogate = ev.objective;
  stats.value_loss = cfg.value_loss_coeff * err.squaredNorm() / static_cast<double>(n);
  stats.mean_ratio = ev.count > 0 ? ev.ratio_sum / static_cast<double>(ev.count) : 1.0;
  stats.clip_fraction = ev.count > 0 ? ev.clipped / static_cast<double>(ev.count) : 0.0;
  if (!std::isfinite(stats.surrogate) || !std::isfinite(stats.value_loss)) {
    restore();
    fault("ppo_update: non-finite statistics");
  }
  return stats;
}

}  // namespace ppoue
