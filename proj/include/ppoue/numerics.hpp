#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ppoue {

class Rng;

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when a gradient, loss or parameter turns non-finite.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Activation : std::uint32_t { kTanh = 0, kIdentity = 1 };

struct Layer {
  Mat weight;  // out x in
  Vec bias;    // out
  Activation activation = Activation::kIdentity;
};

/*!
 * Fully connected feed-forward network. Batched calls take one sample per
 * column. Construction checks that layer shapes chain.
 */
class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<Layer> layers);

  [[nodiscard]] int input_dim() const;
  [[nodiscard]] int output_dim() const;
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] bool empty() const { return layers_.empty(); }

  [[nodiscard]] const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& mutable_layers() { return layers_; }

  [[nodiscard]] Vec forward(const Vec& x) const;
  [[nodiscard]] Mat forward_batch(const Mat& inputs) const;

  [[nodiscard]] bool all_finite() const;

  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  std::vector<Layer> layers_;
};

/// Per-parameter partials, shape-congruent with a DenseNet.
struct Gradient {
  std::vector<Mat> weight;
  std::vector<Vec> bias;

  static Gradient zeros_like(const DenseNet& net);

  void set_zero();
  Gradient& operator+=(const Gradient& other);
  Gradient& operator*=(double s);
  [[nodiscard]] double squared_norm() const;
  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] bool congruent_with(const DenseNet& net) const;
};

/// Layer inputs recorded by a batched forward pass.
struct ForwardTrace {
  std::vector<Mat> inputs;  // input to layer i, i.e. the activated output of layer i-1
  Mat output;
};

ForwardTrace forward_trace(const DenseNet& net, const Mat& inputs);

/// Accumulates d(sum_j upstream_j . output_j)/d(theta) into `grad`.
void backward_batch(const DenseNet& net, const ForwardTrace& trace, const Mat& upstream,
                    Gradient& grad);

/// d(upstream . forward(net, x))/d(theta) for a single sample.
Gradient backward(const DenseNet& net, const Vec& x, const Vec& upstream);

/// Multiplies `grad` by max_norm/||grad|| when the norm exceeds max_norm. Returns the pre-clip norm.
double clip_gradient_norm(Gradient& grad, double max_norm);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  AdamState(const DenseNet& net, AdamConfig config);

  [[nodiscard]] const AdamConfig& config() const { return config_; }
  [[nodiscard]] std::uint64_t step() const { return step_; }
  [[nodiscard]] const Gradient& first_moment() const { return m_; }
  [[nodiscard]] const Gradient& second_moment() const { return v_; }

 private:
  friend void adam_step(DenseNet& net, const Gradient& grad, AdamState& state);

  AdamConfig config_;
  Gradient m_;
  Gradient v_;
  std::uint64_t step_ = 0;
};

/// Bias-corrected Adam descent step. Throws NumericalFault and leaves
/// everything untouched when `grad` has a non-finite entry.
void adam_step(DenseNet& net, const Gradient& grad, AdamState& state);

/*!
 * Tanh MLP with a linear head. Hidden weights use orthogonal init with gain
 * sqrt(2), the head uses orthogonal init scaled by `head_scale`; biases are zero.
 */
DenseNet make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim, double head_scale,
                  Rng& rng);

}  // namespace ppoue
