#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "wayfarer/rng.hpp"

namespace wayfarer::nn {

using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerDims {
  int input = 29;
  std::vector<int> hidden = std::vector<int>(6, 128);
  int output = 8;

  bool operator==(const LayerDims&) const = default;
};

void validate(const LayerDims& dims);

// Weights and biases of a tanh MLP (identity on the output layer), stored in
// one flat buffer: per layer a row-major (out x in) weight block followed by
// the bias vector.
class MlpParams {
 public:
  MlpParams() = default;
  explicit MlpParams(LayerDims dims);

  const LayerDims& dims() const { return dims_; }
  std::size_t layer_count() const { return dims_.hidden.size() + 1; }
  int fan_in(std::size_t layer) const;
  int fan_out(std::size_t layer) const;

  // Offset of the layer's weight block in flat(); its bias follows the weights.
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  Eigen::Map<const RowMajorMatrix> weight_matrix(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias_vector(std::size_t layer) const;

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  std::size_t size() const { return data_.size(); }

  bool operator==(const MlpParams&) const = default;

 private:
  LayerDims dims_;
  // Over-aligned so vectorized kernels take the same path on every allocation;
  // otherwise results can differ in the last bit between identical runs.
  std::vector<double, Eigen::aligned_allocator<double>> data_;
  std::vector<std::size_t> offsets_;  // start of each layer's weight block
};

// Glorot-uniform weights, zero biases.
MlpParams init_params(const LayerDims& dims, Rng& rng);

// Per-layer inputs of a batched forward pass; column j is sample j.
struct ForwardCache {
  std::vector<Matrix> layer_inputs;
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

ForwardResult mlp_forward(const MlpParams& params, const Matrix& inputs);
ForwardResult mlp_forward(const MlpParams& params, std::span<const double> input);

// Cache-free single-sample evaluation used on the rollout hot path.
std::vector<double> mlp_evaluate(const MlpParams& params, std::span<const double> input);

struct Gradients {
  std::vector<double> params;  // same layout as MlpParams::flat()
  Matrix input;                // d/d input, one column per sample
};

// Reverse-mode gradient of sum_j <output_j, output_gradient_j>, summed over the batch.
Gradients mlp_backward(const MlpParams& params, const ForwardCache& cache, const Matrix& output_gradient);

// State-independent diagonal Gaussian over actions.
struct GaussianHead {
  std::vector<double> log_std;

  static constexpr double kMinLogStd = -3.0;
  static constexpr double kMaxLogStd = 1.0;

  void clamp();
  bool operator==(const GaussianHead&) const = default;
};

struct SampledAction {
  std::vector<double> action;
  double log_prob = 0;
};

SampledAction sample_action(std::span<const double> mean, const GaussianHead& head, Rng& rng);
double log_prob(std::span<const double> mean, const GaussianHead& head, std::span<const double> action);
double entropy(const GaussianHead& head);

struct LogProbGrad {
  std::vector<double> mean;
  std::vector<double> log_std;
};

LogProbGrad log_prob_grad(std::span<const double> mean, const GaussianHead& head, std::span<const double> action);

}  // namespace wayfarer::nn
