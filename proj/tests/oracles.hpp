#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's math beyond reading network weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "ppoue/advantage.hpp"
#include "ppoue/numerics.hpp"

namespace oracle {

using ppoue::DenseNet;
using ppoue::Gradient;
using ppoue::Mat;
using ppoue::Vec;

/// Forward pass with plain loops and std::tanh.
inline Vec forward(const DenseNet& net, const Vec& x) {
  std::vector<double> h(x.data(), x.data() + x.size());
  for (const auto& layer : net.layers()) {
    std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      double acc = layer.bias[i];
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) acc += layer.weight(i, j) * h[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(i)] = layer.activation == ppoue::Activation::kTanh ? std::tanh(acc) : acc;
    }
    h = std::move(next);
  }
  return Eigen::Map<Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
}

/// Central differences of a scalar function of the network parameters.
inline Gradient fd_gradient(const DenseNet& net, const std::function<double(const DenseNet&)>& f, double h) {
  Gradient g = Gradient::zeros_like(net);
  DenseNet probe = net;
  auto& layers = probe.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (Eigen::Index i = 0; i < layers[l].weight.size(); ++i) {
      double& w = layers[l].weight.data()[i];
      const double w0 = w;
      w = w0 + h;
      const double up = f(probe);
      w = w0 - h;
      const double down = f(probe);
      w = w0;
      g.weight[l].data()[i] = (up - down) / (2.0 * h);
    }
    for (Eigen::Index i = 0; i < layers[l].bias.size(); ++i) {
      double& b = layers[l].bias[i];
      const double b0 = b;
      b = b0 + h;
      const double up = f(probe);
      b = b0 - h;
      const double down = f(probe);
      b = b0;
      g.bias[l][i] = (up - down) / (2.0 * h);
    }
  }
  return g;
}

/// |a - n| / max(|a|, |n|, floor), one entry per parameter.
inline std::vector<double> relative_errors(const Gradient& analytic, const Gradient& numeric, double floor) {
  std::vector<double> out;
  auto push = [&](double a, double n) {
    out.push_back(std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  };
  for (std::size_t l = 0; l < analytic.weight.size(); ++l) {
    for (Eigen::Index i = 0; i < analytic.weight[l].size(); ++i)
      push(analytic.weight[l].data()[i], numeric.weight[l].data()[i]);
    for (Eigen::Index i = 0; i < analytic.bias[l].size(); ++i) push(analytic.bias[l][i], numeric.bias[l][i]);
  }
  return out;
}

/// Nearest-rank percentile, p in (0, 100].
inline double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

/// sum_l gamma^l r_{t+l} up to and including the first done at or after t.
inline std::vector<double> discounted_returns(const std::vector<double>& rewards, const std::vector<bool>& dones,
                                              double gamma) {
  std::vector<double> out(rewards.size(), 0.0);
  for (std::size_t t = 0; t < rewards.size(); ++t) {
    double acc = 0.0;
    double w = 1.0;
    for (std::size_t u = t; u < rewards.size(); ++u) {
      acc += w * rewards[u];
      w *= gamma;
      if (dones[u]) break;
    }
    out[t] = acc;
  }
  return out;
}

/// Log density of N(mean, cov) for a full covariance matrix.
inline double gaussian_log_density(const Vec& mean, const Mat& cov, const Vec& a) {
  const Eigen::LLT<Mat> llt(cov);
  const Vec diff = a - mean;
  const double maha = diff.dot(llt.solve(diff));
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(mean.size()) * std::log(2.0 * std::numbers::pi) + log_det + maha);
}

/// Mean clipped surrogate written out from the definition.
inline double surrogate(const DenseNet& actor, const ppoue::RolloutBuffer& buf, const Vec& adv, double log_std,
                        double clip) {
  const double var = std::exp(2.0 * log_std);
  double total = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const Vec mu = forward(actor, buf[i].state);
    double lp = 0.0;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      const double d = buf[i].action[j] - mu[j];
      lp += -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(var) + d * d / var);
    }
    const double rho = std::exp(lp - buf[i].log_prob_old);
    const double a = adv[static_cast<Eigen::Index>(i)];
    total += std::min(rho * a, std::clamp(rho, 1.0 - clip, 1.0 + clip) * a);
  }
  return total / static_cast<double>(buf.size());
}

/// Number of entries strictly below `tau`.
inline std::size_t count_below(const std::vector<double>& v, double tau) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double x) { return x < tau; }));
}

}  // namespace oracle
