#pragma once

// Dense feed-forward stacks with exact reverse-mode gradients, the two loss
// primitives and a central finite-difference gradient verifier.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace smeta {

using Rng = std::mt19937_64;

enum class Activation { Identity, ReLU, Sigmoid, Tanh };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  Activation activation = Activation::Identity;
};

/// One affine layer; weights are row-major output_dim x input_dim.
struct DenseLayer {
  std::string name;
  LayerSpec spec;
  std::vector<double> weights;
  std::vector<double> biases;

  double& weight(std::size_t row, std::size_t col) { return weights[row * spec.input_dim + col]; }
  double weight(std::size_t row, std::size_t col) const {
    return weights[row * spec.input_dim + col];
  }
};

struct ParameterSet {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;
  bool empty() const noexcept { return layers.empty(); }

  /// Throws ShapeMismatch if consecutive layers do not chain or payload sizes
  /// disagree with the layer specs.
  void validate() const;
};

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> biases;
};

struct GradientSet {
  std::vector<LayerGradient> layers;

  /// All-zero gradient shaped like `params`.
  static GradientSet zeros_like(const ParameterSet& params);
};

/// Per-layer inputs and pre-activations recorded by forward().
struct Tape {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre_activations;
  std::vector<double> output;
};

/// Builds a network from a chain of specs, Glorot-uniform weights and zero biases.
ParameterSet make_network(const std::string& name, std::span<const LayerSpec> specs, Rng& rng);

Tape forward(const ParameterSet& params, std::span<const double> input);
std::vector<double> predict_only(const ParameterSet& params, std::span<const double> input);

/// Reverse-mode derivatives of <upstream, output>: parameter derivatives are
/// added into `accum`, the input derivative is returned.
std::vector<double> backward_into(const ParameterSet& params, const Tape& tape,
                                  std::span<const double> upstream, GradientSet& accum);

struct BackwardResult {
  GradientSet gradients;
  std::vector<double> input_gradient;
};

BackwardResult backward(const ParameterSet& params, const Tape& tape,
                        std::span<const double> upstream);

/// Softmax cross-entropy of a 2-logit head against `label`, max-subtracted.
double cross_entropy(std::span<const double> logits, int label);

/// Gradient of cross_entropy with respect to the logits (softmax - onehot).
std::vector<double> cross_entropy_gradient(std::span<const double> logits, int label);

std::vector<double> softmax(std::span<const double> logits);

double mse(std::span<const double> prediction, std::span<const double> target);

/// Returns dst - scale * grad. Operands must be shape-identical.
ParameterSet axpy_params(const ParameterSet& dst, double scale, const GradientSet& grad);

/// In-place accumulation: into += scale * grad.
void accumulate(GradientSet& into, const GradientSet& grad, double scale = 1.0);

struct LossAndGradient {
  double loss = 0.0;
  GradientSet gradient;
};

using ParamLossFn = std::function<LossAndGradient(const ParameterSet&)>;

/// Worst relative disagreement between analytic and central-difference
/// gradients over every entry: |a - fd| / max(|a|, |fd|, denominator_floor).
double fd_check(const ParameterSet& params, const ParamLossFn& loss_fn, double step,
                double denominator_floor = 0.0);

/// Flat visitation over every scalar parameter, in layer order (weights then biases).
template <typename Fn>
void for_each_parameter(ParameterSet& params, Fn&& fn) {
  for (auto& layer : params.layers) {
    for (double& w : layer.weights) fn(w);
    for (double& b : layer.biases) fn(b);
  }
}

template <typename Fn>
void for_each_parameter(const ParameterSet& params, Fn&& fn) {
  for (const auto& layer : params.layers) {
    for (double w : layer.weights) fn(w);
    for (double b : layer.biases) fn(b);
  }
}

bool all_finite(const ParameterSet& params);

/// FNV-1a over the raw bit patterns of every parameter.
std::uint64_t checksum(const ParameterSet& params);

}  // namespace smeta
