#include "wayfarer/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "wayfarer/error.hpp"

namespace wayfarer::nn {

void validate(const LayerDims& dims) {
  if (dims.input < 1 || dims.output < 1) fail(ErrorKind::config, "layer dims: input and output must be >= 1");
  for (int h : dims.hidden) {
    if (h < 1) fail(ErrorKind::config, "layer dims: hidden widths must be >= 1");
  }
}

MlpParams::MlpParams(LayerDims dims) : dims_(std::move(dims)) {
  validate(dims_);
  std::size_t total = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(fan_out(l)) * static_cast<std::size_t>(fan_in(l) + 1);
  }
  data_.assign(total, 0.0);
}

int MlpParams::fan_in(std::size_t layer) const { return layer == 0 ? dims_.input : dims_.hidden[layer - 1]; }

int MlpParams::fan_out(std::size_t layer) const {
  return layer + 1 == layer_count() ? dims_.output : dims_.hidden[layer];
}

std::span<double> MlpParams::weights(std::size_t layer) {
  return {data_.data() + offsets_[layer], static_cast<std::size_t>(fan_out(layer) * fan_in(layer))};
}

std::span<const double> MlpParams::weights(std::size_t layer) const {
  return {data_.data() + offsets_[layer], static_cast<std::size_t>(fan_out(layer) * fan_in(layer))};
}

std::span<double> MlpParams::bias(std::size_t layer) {
  return {data_.data() + offsets_[layer] + fan_out(layer) * fan_in(layer), static_cast<std::size_t>(fan_out(layer))};
}

std::span<const double> MlpParams::bias(std::size_t layer) const {
  return {data_.data() + offsets_[layer] + fan_out(layer) * fan_in(layer), static_cast<std::size_t>(fan_out(layer))};
}

Eigen::Map<const RowMajorMatrix> MlpParams::weight_matrix(std::size_t layer) const {
  return {weights(layer).data(), fan_out(layer), fan_in(layer)};
}

Eigen::Map<const Eigen::VectorXd> MlpParams::bias_vector(std::size_t layer) const {
  return {bias(layer).data(), fan_out(layer)};
}

MlpParams init_params(const LayerDims& dims, Rng& rng) {
  MlpParams params(dims);
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / static_cast<double>(params.fan_in(l) + params.fan_out(l)));
    for (double& w : params.weights(l)) w = rng.uniform(-bound, bound);
  }
  return params;
}

ForwardResult mlp_forward(const MlpParams& params, const Matrix& inputs) {
  if (inputs.rows() != params.dims().input) {
    fail(ErrorKind::invalid_argument, "mlp_forward: input length " + std::to_string(inputs.rows()) +
                                          " does not match network input " + std::to_string(params.dims().input));
  }
  ForwardResult result;
  result.cache.layer_inputs.reserve(params.layer_count());
  Matrix activation = inputs;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    Matrix z = params.weight_matrix(l) * activation;
    z.colwise() += params.bias_vector(l);
    result.cache.layer_inputs.push_back(std::move(activation));
    if (l + 1 < params.layer_count()) z = z.array().tanh();
    activation = std::move(z);
  }
  result.output = std::move(activation);
  return result;
}

ForwardResult mlp_forward(const MlpParams& params, std::span<const double> input) {
  Matrix x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  return mlp_forward(params, x);
}

std::vector<double> mlp_evaluate(const MlpParams& params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != params.dims().input) {
    fail(ErrorKind::invalid_argument, "mlp_evaluate: input length does not match network input");
  }
  Eigen::VectorXd activation = Eigen::Map<const Eigen::VectorXd>(input.data(), params.dims().input);
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    Eigen::VectorXd z = params.weight_matrix(l) * activation + params.bias_vector(l);
    if (l + 1 < params.layer_count()) z = z.array().tanh();
    activation = std::move(z);
  }
  return {activation.data(), activation.data() + activation.size()};
}

Gradients mlp_backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_gradient) {
  const std::size_t layers = params.layer_count();
  if (cache.layer_inputs.size() != layers) fail(ErrorKind::invalid_argument, "mlp_backward: cache does not match network");
  const Eigen::Index batch = cache.layer_inputs.front().cols();
  if (output_gradient.rows() != params.dims().output || output_gradient.cols() != batch) {
    fail(ErrorKind::invalid_argument, "mlp_backward: output gradient shape mismatch");
  }

  Gradients grads;
  grads.params.assign(params.size(), 0.0);

  Matrix delta = output_gradient;  // dL/dz for the current layer
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& a_in = cache.layer_inputs[l];
    const std::size_t w_offset = params.weight_offset(l);
    // Products go into Eigen-owned (aligned) storage first: writing straight into
    // the std::vector lets the kernel path, and so the rounding, depend on the
    // heap address.
    const RowMajorMatrix dw = delta * a_in.transpose();
    const Eigen::VectorXd db = delta.rowwise().sum();
    std::copy(dw.data(), dw.data() + dw.size(), grads.params.begin() + static_cast<std::ptrdiff_t>(w_offset));
    std::copy(db.data(), db.data() + db.size(), grads.params.begin() + static_cast<std::ptrdiff_t>(w_offset + dw.size()));
    Matrix d_in = params.weight_matrix(l).transpose() * delta;
    if (l > 0) {
      // a_in is the tanh output of the previous layer.
      d_in.array() *= (1.0 - a_in.array().square());
    }
    delta = std::move(d_in);
  }
  grads.input = std::move(delta);
  return grads;
}

void GaussianHead::clamp() {
  for (double& s : log_std) s = std::clamp(s, kMinLogStd, kMaxLogStd);
}

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2*pi)

void check_head(std::span<const double> mean, const GaussianHead& head) {
  if (mean.size() != head.log_std.size()) fail(ErrorKind::invalid_argument, "gaussian head: dimension mismatch");
}

}  // namespace

double log_prob(std::span<const double> mean, const GaussianHead& head, std::span<const double> action) {
  check_head(mean, head);
  if (action.size() != mean.size()) fail(ErrorKind::invalid_argument, "log_prob: action dimension mismatch");
  double lp = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-head.log_std[i]);
    lp += -0.5 * z * z - head.log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

SampledAction sample_action(std::span<const double> mean, const GaussianHead& head, Rng& rng) {
  check_head(mean, head);
  SampledAction out;
  out.action.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) out.action[i] = mean[i] + std::exp(head.log_std[i]) * rng.normal();
  out.log_prob = log_prob(mean, head, out.action);
  return out;
}

double entropy(const GaussianHead& head) {
  double h = 0;
  for (double s : head.log_std) h += s + 0.5 + kHalfLog2Pi;
  return h;
}

LogProbGrad log_prob_grad(std::span<const double> mean, const GaussianHead& head, std::span<const double> action) {
  check_head(mean, head);
  if (action.size() != mean.size()) fail(ErrorKind::invalid_argument, "log_prob_grad: action dimension mismatch");
  LogProbGrad g;
  g.mean.resize(mean.size());
  g.log_std.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double diff = action[i] - mean[i];
    const double inv_var = std::exp(-2.0 * head.log_std[i]);
    g.mean[i] = diff * inv_var;
    g.log_std[i] = diff * diff * inv_var - 1.0;
  }
  return g;
}

}  // namespace wayfarer::nn
