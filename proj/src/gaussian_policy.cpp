#include "ppoue/gaussian_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ppoue {

DiagonalGaussian::DiagonalGaussian(Vec mean, Vec variance)
    : mean_(std::move(mean)), variance_(std::move(variance)) {
  if (mean_.size() < 1) throw std::invalid_argument("DiagonalGaussian: dimension must be >= 1");
  if (variance_.size() != mean_.size())
    throw std::invalid_argument("DiagonalGaussian: mean/variance size mismatch");
  for (Eigen::Index i = 0; i < variance_.size(); ++i) {
    if (!(variance_[i] > 0.0) || !std::isfinite(variance_[i]))
      throw std::invalid_argument("DiagonalGaussian: variances must be positive and finite");
  }
}

DiagonalGaussian DiagonalGaussian::with_log_std(Vec mean, double log_std) {
  const Eigen::Index d = mean.size();
  return DiagonalGaussian(std::move(mean), Vec::Constant(d, std::exp(2.0 * log_std)));
}

double log_std_at(const AnnealSchedule& sched, std::uint64_t step) {
  if (sched.total_steps == 0) throw std::invalid_argument("AnnealSchedule: total_steps must be positive");
  const double frac =
      static_cast<double>(std::min(step, sched.total_steps)) / static_cast<double>(sched.total_steps);
  return sched.start_log_std + frac * (sched.end_log_std - sched.start_log_std);
}

double log_prob(const DiagonalGaussian& dist, const Vec& action) {
  if (action.size() != dist.dim()) throw std::invalid_argument("log_prob: action dimension mismatch");
  const double d = static_cast<double>(dist.dim());
  double acc = d * std::log(2.0 * std::numbers::pi);
  for (int i = 0; i < dist.dim(); ++i) {
    const double diff = action[i] - dist.mean()[i];
    acc += std::log(dist.variance()[i]) + diff * diff / dist.variance()[i];
  }
  return -0.5 * acc;
}

Vec log_prob_grad_mean(const DiagonalGaussian& dist, const Vec& action) {
  if (action.size() != dist.dim()) throw std::invalid_argument("log_prob_grad_mean: action dimension mismatch");
  return ((action - dist.mean()).array() / dist.variance().array()).matrix();
}

Vec sample(const DiagonalGaussian& dist, Rng& rng) {
  Vec a(dist.dim());
  for (int i = 0; i < dist.dim(); ++i) a[i] = dist.mean()[i] + std::sqrt(dist.variance()[i]) * rng.normal();
  return a;
}

Vec mean_action(const DenseNet& actor, const Vec& state) { return actor.forward(state); }

double log_prob_grad_check(const DiagonalGaussian& dist, const Vec& action, double step) {
  const Vec analytic = log_prob_grad_mean(dist, action);
  double worst = 0.0;
  for (int i = 0; i < dist.dim(); ++i) {
    Vec up = dist.mean();
    Vec down = dist.mean();
    up[i] += step;
    down[i] -= step;
    const double numeric = (log_prob(DiagonalGaussian(up, dist.variance()), action) -
                            log_prob(DiagonalGaussian(down, dist.variance()), action)) /
                           (2.0 * step);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1.0});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

}  // namespace ppoue
