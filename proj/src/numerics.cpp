#include "ppoue/numerics.hpp"

#include <cmath>
#include <sstream>

#include "ppoue/rng.hpp"

namespace ppoue {
namespace {

// tanh(x) = 1 - 2 / (exp(2x) + 1). Eigen vectorizes exp but not tanh for doubles;
// this form stays within a few ulp in absolute terms over the whole real line.
template <typename Derived>
void tanh_inplace(Eigen::MatrixBase<Derived>& z) {
  z = (1.0 - 2.0 / ((2.0 * z.array().min(40.0)).exp() + 1.0)).matrix();
}

void apply_activation(Activation act, Mat& z) {
  if (act == Activation::kTanh) tanh_inplace(z);
}

void apply_activation(Activation act, Vec& z) {
  if (act == Activation::kTanh) tanh_inplace(z);
}

std::string shape_error(const char* what, Eigen::Index got, Eigen::Index want) {
  std::ostringstream os;
  os << what << ": dimension mismatch (got " << got << ", expected " << want << ")";
  return os.str();
}

// Orthogonal matrix of the given shape, from QR of a Gaussian draw.
Mat orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int n = std::max(rows, cols);
  const int m = std::min(rows, cols);
  Mat g(n, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ() * Mat::Identity(n, m);
  // Sign fix makes the distribution uniform over orthogonal matrices.
  const Mat r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  Mat w = rows >= cols ? q : Mat(q.transpose());
  return gain * w;
}

}  // namespace

DenseNet::DenseNet(std::vector<Layer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    if (l.weight.rows() == 0 || l.weight.cols() == 0)
      throw std::invalid_argument("DenseNet: empty layer");
    if (l.bias.size() != l.weight.rows())
      throw std::invalid_argument(shape_error("DenseNet bias", l.bias.size(), l.weight.rows()));
    if (i > 0 && layers_[i - 1].weight.rows() != l.weight.cols())
      throw std::invalid_argument(
          shape_error("DenseNet layer chain", l.weight.cols(), layers_[i - 1].weight.rows()));
  }
}

int DenseNet::input_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.front().weight.cols());
}

int DenseNet::output_dim() const {
  return layers_.empty() ? 0 : static_cast<int>(layers_.back().weight.rows());
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

Vec DenseNet::forward(const Vec& x) const {
  if (x.size() != input_dim()) throw std::invalid_argument(shape_error("forward", x.size(), input_dim()));
  Vec h = x;
  for (const Layer& l : layers_) {
    Vec z = l.weight * h + l.bias;
    apply_activation(l.activation, z);
    h = std::move(z);
  }
  return h;
}

Mat DenseNet::forward_batch(const Mat& inputs) const {
  if (inputs.rows() != input_dim())
    throw std::invalid_argument(shape_error("forward_batch", inputs.rows(), input_dim()));
  Mat h = inputs;
  for (const Layer& l : layers_) {
    Mat z = l.weight * h;
    z.colwise() += l.bias;
    apply_activation(l.activation, z);
    h = std::move(z);
  }
  return h;
}

bool DenseNet::all_finite() const {
  for (const Layer& l : layers_)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const Layer& x = a.layers_[i];
    const Layer& y = b.layers_[i];
    if (x.activation != y.activation || x.weight.rows() != y.weight.rows() ||
        x.weight.cols() != y.weight.cols() || x.weight != y.weight || x.bias != y.bias)
      return false;
  }
  return true;
}

Gradient Gradient::zeros_like(const DenseNet& net) {
  Gradient g;
  for (const Layer& l : net.layers()) {
    g.weight.push_back(Mat::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vec::Zero(l.bias.size()));
  }
  return g;
}

void Gradient::set_zero() {
  for (Mat& w : weight) w.setZero();
  for (Vec& b : bias) b.setZero();
}

Gradient& Gradient::operator+=(const Gradient& other) {
  if (other.weight.size() != weight.size()) throw std::invalid_argument("Gradient: shape mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

Gradient& Gradient::operator*=(double s) {
  for (Mat& w : weight) w *= s;
  for (Vec& b : bias) b *= s;
  return *this;
}

double Gradient::squared_norm() const {
  double s = 0.0;
  for (const Mat& w : weight) s += w.squaredNorm();
  for (const Vec& b : bias) s += b.squaredNorm();
  return s;
}

bool Gradient::all_finite() const {
  for (const Mat& w : weight)
    if (!w.allFinite()) return false;
  for (const Vec& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

bool Gradient::congruent_with(const DenseNet& net) const {
  const auto& layers = net.layers();
  if (weight.size() != layers.size() || bias.size() != layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (weight[i].rows() != layers[i].weight.rows() || weight[i].cols() != layers[i].weight.cols() ||
        bias[i].size() != layers[i].bias.size())
      return false;
  }
  return true;
}

ForwardTrace forward_trace(const DenseNet& net, const Mat& inputs) {
  if (inputs.rows() != net.input_dim())
    throw std::invalid_argument(shape_error("forward_trace", inputs.rows(), net.input_dim()));
  ForwardTrace trace;
  trace.inputs.reserve(net.layers().size());
  Mat h = inputs;
  for (const Layer& l : net.layers()) {
    Mat z = l.weight * h;
    z.colwise() += l.bias;
    trace.inputs.push_back(std::move(h));
    apply_activation(l.activation, z);
    h = std::move(z);
  }
  trace.output = std::move(h);
  return trace;
}

void backward_batch(const DenseNet& net, const ForwardTrace& trace, const Mat& upstream,
                    Gradient& grad) {
  const auto& layers = net.layers();
  if (upstream.rows() != net.output_dim() || upstream.cols() != trace.output.cols())
    throw std::invalid_argument(shape_error("backward", upstream.rows(), net.output_dim()));
  if (!grad.congruent_with(net)) throw std::invalid_argument("backward: gradient not congruent with net");

  Mat delta = upstream;
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const Layer& l = layers[idx];
    if (l.activation == Activation::kTanh) {
      const Mat& y = idx + 1 < layers.size() ? trace.inputs[idx + 1] : trace.output;
      delta.array() *= (1.0 - y.array().square());
    }
    grad.weight[idx].noalias() += delta * trace.inputs[idx].transpose();
    grad.bias[idx] += delta.rowwise().sum();
    if (idx > 0) delta = l.weight.transpose() * delta;
  }
}

Gradient backward(const DenseNet& net, const Vec& x, const Vec& upstream) {
  if (upstream.size() != net.output_dim())
    throw std::invalid_argument(shape_error("backward", upstream.size(), net.output_dim()));
  Gradient g = Gradient::zeros_like(net);
  const ForwardTrace trace = forward_trace(net, x);
  backward_batch(net, trace, upstream, g);
  return g;
}

double clip_gradient_norm(Gradient& grad, double max_norm) {
  const double norm = std::sqrt(grad.squared_norm());
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

AdamState::AdamState(const DenseNet& net, AdamConfig config)
    : config_(config), m_(Gradient::zeros_like(net)), v_(Gradient::zeros_like(net)) {}

void adam_step(DenseNet& net, const Gradient& grad, AdamState& state) {
  if (!grad.congruent_with(net) || !state.m_.congruent_with(net))
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!grad.all_finite()) throw NumericalFault("adam_step: non-finite gradient");

  const AdamConfig& c = state.config_;
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  const double step_size = c.learning_rate / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = (c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square()).matrix();
    param.array() -= step_size * m.array() / (v.array().sqrt() / sqrt_bc2 + c.epsilon);
  };
  auto& layers = net.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    update(layers[i].weight, grad.weight[i], state.m_.weight[i], state.v_.weight[i]);
    update(layers[i].bias, grad.bias[i], state.m_.bias[i], state.v_.bias[i]);
  }
}

DenseNet make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim, double head_scale,
                  Rng& rng) {
  if (input_dim <= 0 || output_dim <= 0) throw std::invalid_argument("make_mlp: dimensions must be positive");
  std::vector<Layer> layers;
  int in = input_dim;
  for (int width : hidden) {
    if (width <= 0) throw std::invalid_argument("make_mlp: hidden width must be positive");
    layers.push_back({orthogonal(width, in, std::sqrt(2.0), rng), Vec::Zero(width), Activation::kTanh});
    in = width;
  }
  layers.push_back({orthogonal(output_dim, in, head_scale, rng), Vec::Zero(output_dim), Activation::kIdentity});
  return DenseNet(std::move(layers));
}

}  // namespace ppoue
