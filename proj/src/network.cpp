#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "smeta/error.hpp"
#include "smeta/network.hpp"

namespace smeta {

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Identity: return "identity";
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "tanh") return Activation::Tanh;
  throw Error(ErrorCode::BadEnum, "unknown activation '" + name + "'");
}

std::size_t ParameterSet::input_dim() const {
  return layers.empty() ? 0 : layers.front().spec.input_dim;
}

std::size_t ParameterSet::output_dim() const {
  return layers.empty() ? 0 : layers.back().spec.output_dim;
}

std::size_t ParameterSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers) n += layer.weights.size() + layer.biases.size();
  return n;
}

void ParameterSet::validate() const {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    if (layer.spec.input_dim < 1 || layer.spec.output_dim < 1) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + layer.name + " has a zero dimension");
    }
    if (layer.weights.size() != layer.spec.input_dim * layer.spec.output_dim ||
        layer.biases.size() != layer.spec.output_dim) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + layer.name + " payload size mismatch");
    }
    if (k + 1 < layers.size() && layer.spec.output_dim != layers[k + 1].spec.input_dim) {
      throw Error(ErrorCode::ShapeMismatch,
                  "layer " + layer.name + " does not chain into " + layers[k + 1].name);
    }
  }
}

GradientSet GradientSet::zeros_like(const ParameterSet& params) {
  GradientSet g;
  g.layers.reserve(params.layers.size());
  for (const auto& layer : params.layers) {
    g.layers.push_back(LayerGradient{std::vector<double>(layer.weights.size(), 0.0),
                                     std::vector<double>(layer.biases.size(), 0.0)});
  }
  return g;
}

ParameterSet make_network(const std::string& name, std::span<const LayerSpec> specs, Rng& rng) {
  ParameterSet params;
  params.layers.reserve(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const LayerSpec& spec = specs[k];
    DenseLayer layer;
    layer.name = name + "." + std::to_string(k);
    layer.spec = spec;
    const double limit =
        std::sqrt(6.0 / static_cast<double>(spec.input_dim + spec.output_dim));
    std::uniform_real_distribution<double> dist(-limit, limit);
    layer.weights.resize(spec.input_dim * spec.output_dim);
    for (double& w : layer.weights) w = dist(rng);
    layer.biases.assign(spec.output_dim, 0.0);
    params.layers.push_back(std::move(layer));
  }
  params.validate();
  return params;
}

namespace {

double activate(Activation act, double z) {
  switch (act) {
    case Activation::Identity: return z;
    case Activation::ReLU: return z > 0.0 ? z : 0.0;
    case Activation::Sigmoid:
      if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
      {
        const double e = std::exp(z);
        return e / (1.0 + e);
      }
    case Activation::Tanh: return std::tanh(z);
  }
  return z;
}

// Derivative expressed through the pre-activation z and the output y.
double activation_slope(Activation act, double z, double y) {
  switch (act) {
    case Activation::Identity: return 1.0;
    case Activation::ReLU: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Tanh: return 1.0 - y * y;
  }
  return 1.0;
}

void affine(const DenseLayer& layer, std::span<const double> in, std::vector<double>& out) {
  const std::size_t n_in = layer.spec.input_dim;
  out.resize(layer.spec.output_dim);
  for (std::size_t r = 0; r < layer.spec.output_dim; ++r) {
    const double* row = layer.weights.data() + r * n_in;
    double acc = layer.biases[r];
    for (std::size_t c = 0; c < n_in; ++c) acc += row[c] * in[c];
    out[r] = acc;
  }
}

void check_input(const ParameterSet& params, std::size_t n) {
  if (params.layers.empty()) throw Error(ErrorCode::ShapeMismatch, "network has no layers");
  if (n != params.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "input length " + std::to_string(n) +
                                              " != network input dim " +
                                              std::to_string(params.input_dim()));
  }
}

}  // namespace

Tape forward(const ParameterSet& params, std::span<const double> input) {
  check_input(params, input.size());
  Tape tape;
  tape.inputs.reserve(params.layers.size());
  tape.pre_activations.reserve(params.layers.size());
  std::vector<double> current(input.begin(), input.end());
  for (const auto& layer : params.layers) {
    std::vector<double> z;
    affine(layer, current, z);
    std::vector<double> y(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) y[r] = activate(layer.spec.activation, z[r]);
    tape.inputs.push_back(std::move(current));
    tape.pre_activations.push_back(std::move(z));
    current = std::move(y);
  }
  tape.output = std::move(current);
  return tape;
}

std::vector<double> predict_only(const ParameterSet& params, std::span<const double> input) {
  check_input(params, input.size());
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> z;
  for (const auto& layer : params.layers) {
    affine(layer, current, z);
    current.resize(z.size());
    for (std::size_t r = 0; r < z.size(); ++r) current[r] = activate(layer.spec.activation, z[r]);
  }
  return current;
}

std::vector<double> backward_into(const ParameterSet& params, const Tape& tape,
                                  std::span<const double> upstream, GradientSet& accum) {
  if (tape.inputs.size() != params.layers.size() || accum.layers.size() != params.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tape/gradient does not match network depth");
  }
  if (upstream.size() != params.output_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "upstream length " + std::to_string(upstream.size()) +
                                              " != output dim " +
                                              std::to_string(params.output_dim()));
  }
  std::vector<double> delta(upstream.begin(), upstream.end());
  std::vector<double> next;
  for (std::size_t k = params.layers.size(); k-- > 0;) {
    const DenseLayer& layer = params.layers[k];
    const auto& z = tape.pre_activations[k];
    const auto& in = tape.inputs[k];
    const std::vector<double>& y = (k + 1 < params.layers.size()) ? tape.inputs[k + 1] : tape.output;
    for (std::size_t r = 0; r < delta.size(); ++r) {
      delta[r] *= activation_slope(layer.spec.activation, z[r], y[r]);
    }
    LayerGradient& g = accum.layers[k];
    const std::size_t n_in = layer.spec.input_dim;
    next.assign(n_in, 0.0);
    for (std::size_t r = 0; r < layer.spec.output_dim; ++r) {
      const double d = delta[r];
      g.biases[r] += d;
      if (d == 0.0) continue;
      double* grow = g.weights.data() + r * n_in;
      const double* wrow = layer.weights.data() + r * n_in;
      for (std::size_t c = 0; c < n_in; ++c) {
        grow[c] += d * in[c];
        next[c] += d * wrow[c];
      }
    }
    delta.swap(next);
  }
  return delta;
}

BackwardResult backward(const ParameterSet& params, const Tape& tape,
                        std::span<const double> upstream) {
  BackwardResult result{GradientSet::zeros_like(params), {}};
  result.input_gradient = backward_into(params, tape, upstream, result.gradients);
  return result;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw Error(ErrorCode::ShapeMismatch, "softmax of empty logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

double cross_entropy(std::span<const double> logits, int label) {
  if (logits.size() != 2) throw Error(ErrorCode::ShapeMismatch, "cross_entropy expects 2 logits");
  if (label != 0 && label != 1) throw Error(ErrorCode::BadEnum, "label must be 0 or 1");
  const double top = std::max(logits[0], logits[1]);
  const double log_sum = top + std::log(std::exp(logits[0] - top) + std::exp(logits[1] - top));
  return std::max(0.0, log_sum - logits[static_cast<std::size_t>(label)]);
}

std::vector<double> cross_entropy_gradient(std::span<const double> logits, int label) {
  std::vector<double> g = softmax(logits);
  g[static_cast<std::size_t>(label)] -= 1.0;
  return g;
}

double mse(std::span<const double> prediction, std::span<const double> target) {
  if (prediction.size() != target.size()) {
    throw Error(ErrorCode::ShapeMismatch, "mse operands differ in length");
  }
  if (prediction.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < prediction.size(); ++k) {
    const double d = prediction[k] - target[k];
    acc += d * d;
  }
  return acc / static_cast<double>(prediction.size());
}

namespace {

void check_same_shape(const ParameterSet& params, const GradientSet& grad) {
  if (params.layers.size() != grad.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient depth differs from parameters");
  }
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    if (params.layers[k].weights.size() != grad.layers[k].weights.size() ||
        params.layers[k].biases.size() != grad.layers[k].biases.size()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "gradient shape differs at layer " + params.layers[k].name);
    }
  }
}

}  // namespace

ParameterSet axpy_params(const ParameterSet& dst, double scale, const GradientSet& grad) {
  check_same_shape(dst, grad);
  ParameterSet out = dst;
  for (std::size_t k = 0; k < out.layers.size(); ++k) {
    auto& layer = out.layers[k];
    const auto& g = grad.layers[k];
    for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] -= scale * g.weights[i];
    for (std::size_t i = 0; i < layer.biases.size(); ++i) layer.biases[i] -= scale * g.biases[i];
  }
  return out;
}

void accumulate(GradientSet& into, const GradientSet& grad, double scale) {
  if (into.layers.size() != grad.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient depth mismatch in accumulate");
  }
  for (std::size_t k = 0; k < into.layers.size(); ++k) {
    auto& dst = into.layers[k];
    const auto& src = grad.layers[k];
    if (dst.weights.size() != src.weights.size() || dst.biases.size() != src.biases.size()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient shape mismatch in accumulate");
    }
    for (std::size_t i = 0; i < dst.weights.size(); ++i) dst.weights[i] += scale * src.weights[i];
    for (std::size_t i = 0; i < dst.biases.size(); ++i) dst.biases[i] += scale * src.biases[i];
  }
}

double fd_check(const ParameterSet& params, const ParamLossFn& loss_fn, double step,
                double denominator_floor) {
  if (params.parameter_count() == 0) return 0.0;
  const LossAndGradient analytic = loss_fn(params);
  check_same_shape(params, analytic.gradient);

  ParameterSet probe = params;
  double worst = 0.0;
  auto check_entry = [&](double& slot, double a) {
    const double saved = slot;
    slot = saved + step;
    const double up = loss_fn(probe).loss;
    slot = saved - step;
    const double down = loss_fn(probe).loss;
    slot = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(a), std::abs(numeric), denominator_floor});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  };
  for (std::size_t k = 0; k < probe.layers.size(); ++k) {
    auto& layer = probe.layers[k];
    const auto& g = analytic.gradient.layers[k];
    for (std::size_t i = 0; i < layer.weights.size(); ++i) check_entry(layer.weights[i], g.weights[i]);
    for (std::size_t i = 0; i < layer.biases.size(); ++i) check_entry(layer.biases[i], g.biases[i]);
  }
  return worst;
}

bool all_finite(const ParameterSet& params) {
  bool ok = true;
  for_each_parameter(params, [&](double v) { ok = ok && std::isfinite(v); });
  return ok;
}

std::uint64_t checksum(const ParameterSet& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for_each_parameter(params, [&](double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  });
  return h;
}

}  // namespace smeta
