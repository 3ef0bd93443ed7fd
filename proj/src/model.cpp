#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_map>

#include "smeta/error.hpp"
#include "smeta/model.hpp"

namespace smeta {

std::string to_string(ModelVariant variant) { return variant == ModelVariant::AE ? "ae" : "sae"; }

ModelVariant model_variant_from_string(const std::string& name) {
  if (name == "ae" || name == "AE") return ModelVariant::AE;
  if (name == "sae" || name == "SAE") return ModelVariant::SAE;
  throw Error(ErrorCode::BadEnum, "unknown model variant '" + name + "'");
}

std::string to_string(NetworkId id) {
  switch (id) {
    case NetworkId::Encoder: return "encoder";
    case NetworkId::Decoder: return "decoder";
    case NetworkId::Classifier: return "classifier";
    case NetworkId::SidePredictor: return "side_predictor";
    case NetworkId::SubjectPredictor: return "subject_predictor";
  }
  return "unknown";
}

void ModelBundle::validate() const {
  for (const auto& n : networks) {
    if (n.empty()) throw Error(ErrorCode::ShapeMismatch, "bundle has an empty sub-network");
    n.validate();
  }
  const std::size_t latent = latent_dim();
  if (decoder().input_dim() != latent || classifier().input_dim() != latent ||
      side_predictor().input_dim() != latent) {
    throw Error(ErrorCode::ShapeMismatch, "heads do not consume the encoder latent dimension");
  }
  if (decoder().output_dim() != input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "decoder output dim differs from signal length");
  }
  if (classifier().output_dim() != 2 || side_predictor().output_dim() != 2 ||
      subject_predictor().output_dim() != 2) {
    throw Error(ErrorCode::ShapeMismatch, "two-class heads must emit 2 logits");
  }
  if (subject_predictor().input_dim() != 2 * latent) {
    throw Error(ErrorCode::ShapeMismatch, "subject predictor must consume 2 * latent_dim");
  }
}

BundleGradients BundleGradients::zeros_like(const ModelBundle& bundle) {
  BundleGradients g;
  for (NetworkId id : kAllNetworks) g.net(id) = GradientSet::zeros_like(bundle.net(id));
  return g;
}

ModelBundle make_bundle(const Architecture& arch, ModelVariant variant, Rng& rng) {
  if (arch.input_dim < 1 || arch.hidden_dim < 1 || arch.latent_dim < 1 ||
      arch.subject_hidden_dim < 1) {
    throw Error(ErrorCode::InvalidConfig, "architecture dimensions must be >= 1");
  }
  using A = Activation;
  const LayerSpec encoder[] = {{arch.input_dim, arch.hidden_dim, A::Tanh},
                               {arch.hidden_dim, arch.latent_dim, A::Identity}};
  const LayerSpec decoder[] = {{arch.latent_dim, arch.hidden_dim, A::Tanh},
                               {arch.hidden_dim, arch.input_dim, A::Sigmoid}};
  const LayerSpec classifier[] = {{arch.latent_dim, 2, A::Identity}};
  const LayerSpec side[] = {{arch.latent_dim, 2, A::Identity}};
  const LayerSpec subject[] = {{2 * arch.latent_dim, arch.subject_hidden_dim, A::ReLU},
                               {arch.subject_hidden_dim, 2, A::Identity}};

  ModelBundle bundle;
  bundle.variant = variant;
  bundle.net(NetworkId::Encoder) = make_network("encoder", encoder, rng);
  bundle.net(NetworkId::Decoder) = make_network("decoder", decoder, rng);
  bundle.net(NetworkId::Classifier) = make_network("classifier", classifier, rng);
  bundle.net(NetworkId::SidePredictor) = make_network("side_predictor", side, rng);
  bundle.net(NetworkId::SubjectPredictor) = make_network("subject_predictor", subject, rng);
  bundle.validate();
  return bundle;
}

ModelBundle axpy_bundle(const ModelBundle& bundle, double scale, const BundleGradients& grads,
                        const std::array<bool, kNetworkCount>& mask) {
  ModelBundle out;
  out.variant = bundle.variant;
  for (NetworkId id : kAllNetworks) {
    const auto k = static_cast<std::size_t>(id);
    out.networks[k] = mask[k] ? axpy_params(bundle.networks[k], scale, grads.networks[k])
                              : bundle.networks[k];
  }
  return out;
}

void accumulate(BundleGradients& into, const BundleGradients& grads, double scale) {
  for (std::size_t k = 0; k < kNetworkCount; ++k) {
    accumulate(into.networks[k], grads.networks[k], scale);
  }
}

std::uint64_t checksum(const ModelBundle& bundle) {
  std::uint64_t h = static_cast<std::uint64_t>(bundle.variant) + 1;
  for (const auto& n : bundle.networks) h = h * 1099511628211ULL ^ checksum(n);
  return h;
}

bool bit_identical(const ModelBundle& a, const ModelBundle& b) {
  if (a.variant != b.variant) return false;
  for (std::size_t k = 0; k < kNetworkCount; ++k) {
    const auto& la = a.networks[k].layers;
    const auto& lb = b.networks[k].layers;
    if (la.size() != lb.size()) return false;
    for (std::size_t i = 0; i < la.size(); ++i) {
      if (la[i].weights.size() != lb[i].weights.size() ||
          la[i].biases.size() != lb[i].biases.size()) {
        return false;
      }
      auto same = [](const std::vector<double>& x, const std::vector<double>& y) {
        for (std::size_t j = 0; j < x.size(); ++j) {
          if (std::bit_cast<std::uint64_t>(x[j]) != std::bit_cast<std::uint64_t>(y[j])) {
            return false;
          }
        }
        return true;
      };
      if (!same(la[i].weights, lb[i].weights) || !same(la[i].biases, lb[i].biases)) return false;
    }
  }
  return true;
}

double max_abs_difference(const ModelBundle& a, const ModelBundle& b) {
  const ParameterSet fa = flatten(a);
  const ParameterSet fb = flatten(b);
  if (fa.parameter_count() != fb.parameter_count()) {
    throw Error(ErrorCode::ShapeMismatch, "bundles differ in shape");
  }
  std::vector<double> va;
  va.reserve(fa.parameter_count());
  for_each_parameter(fa, [&](double v) { va.push_back(v); });
  double worst = 0.0;
  std::size_t i = 0;
  for_each_parameter(fb, [&](double v) { worst = std::max(worst, std::abs(v - va[i++])); });
  return worst;
}

ParameterSet flatten(const ModelBundle& bundle) {
  ParameterSet flat;
  for (const auto& n : bundle.networks) {
    flat.layers.insert(flat.layers.end(), n.layers.begin(), n.layers.end());
  }
  return flat;
}

ModelBundle unflatten(const ParameterSet& flat, const ModelBundle& like) {
  ModelBundle out = like;
  std::size_t cursor = 0;
  for (auto& n : out.networks) {
    for (auto& layer : n.layers) {
      if (cursor >= flat.layers.size()) {
        throw Error(ErrorCode::ShapeMismatch, "flat parameter set is too short");
      }
      const auto& src = flat.layers[cursor++];
      if (src.weights.size() != layer.weights.size() || src.biases.size() != layer.biases.size()) {
        throw Error(ErrorCode::ShapeMismatch, "flat layer shape differs at " + layer.name);
      }
      layer.weights = src.weights;
      layer.biases = src.biases;
    }
  }
  if (cursor != flat.layers.size()) {
    throw Error(ErrorCode::ShapeMismatch, "flat parameter set is too long");
  }
  return out;
}

GradientSet flatten(const BundleGradients& grads) {
  GradientSet flat;
  for (const auto& g : grads.networks) {
    flat.layers.insert(flat.layers.end(), g.layers.begin(), g.layers.end());
  }
  return flat;
}

std::vector<double> encode(const ModelBundle& bundle, std::span<const double> signal) {
  return predict_only(bundle.encoder(), signal);
}

std::vector<double> classify(const ModelBundle& bundle, std::span<const double> signal) {
  return predict_only(bundle.classifier(), encode(bundle, signal));
}

std::vector<double> predict_side(const ModelBundle& bundle, std::span<const double> signal) {
  return predict_only(bundle.side_predictor(), encode(bundle, signal));
}

std::vector<double> reconstruct(const ModelBundle& bundle, std::span<const double> signal) {
  return predict_only(bundle.decoder(), encode(bundle, signal));
}

namespace {

void check_signal(const ModelBundle& bundle, const AlignedSignal& s) {
  if (s.values.size() != bundle.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "signal of subject " + s.subject_id + " has " +
                                              std::to_string(s.values.size()) +
                                              " points, encoder expects " +
                                              std::to_string(bundle.input_dim()));
  }
}

// Adds the weighted 2-class head loss for one latent; returns the unweighted loss.
double head_term(const ParameterSet& head, const std::vector<double>& latent, int label,
                 double scale, GradientSet& head_grad, std::vector<double>& latent_grad) {
  const Tape tape = forward(head, latent);
  const double loss = cross_entropy(tape.output, label);
  if (scale != 0.0) {
    std::vector<double> up = cross_entropy_gradient(tape.output, label);
    for (double& v : up) v *= scale;
    const std::vector<double> d = backward_into(head, tape, up, head_grad);
    for (std::size_t k = 0; k < d.size(); ++k) latent_grad[k] += d[k];
  }
  return loss;
}

struct EncodedSignal {
  const AlignedSignal* signal = nullptr;
  Tape tape;
  std::vector<double> latent_grad;
};

// Shared per-signal cls/rec/ear terms followed by one encoder backward per
// signal with whatever latent gradient pair terms have already deposited.
void finish_signal_terms(const ModelBundle& bundle, std::vector<EncodedSignal>& encoded,
                         const LossWeights& weights, LossResult& result) {
  const double inv_n = 1.0 / static_cast<double>(encoded.size());
  const double n_points = static_cast<double>(bundle.input_dim());
  auto& grads = result.gradients;
  for (auto& item : encoded) {
    const std::vector<double>& latent = item.tape.output;
    const AlignedSignal& s = *item.signal;

    result.components.cls +=
        inv_n * head_term(bundle.classifier(), latent, static_cast<int>(s.class_label),
                          weights.cls * inv_n, grads.net(NetworkId::Classifier), item.latent_grad);
    result.components.ear +=
        inv_n * head_term(bundle.side_predictor(), latent, static_cast<int>(s.side),
                          weights.ear * inv_n, grads.net(NetworkId::SidePredictor),
                          item.latent_grad);

    const Tape dec = forward(bundle.decoder(), latent);
    result.components.rec += inv_n * mse(dec.output, s.values);
    if (weights.rec != 0.0) {
      const double scale = weights.rec * inv_n * 2.0 / n_points;
      std::vector<double> up(dec.output.size());
      for (std::size_t k = 0; k < up.size(); ++k) up[k] = scale * (dec.output[k] - s.values[k]);
      const std::vector<double> d = backward_into(bundle.decoder(), dec, up,
                                                  grads.net(NetworkId::Decoder));
      for (std::size_t k = 0; k < d.size(); ++k) item.latent_grad[k] += d[k];
    }

    backward_into(bundle.encoder(), item.tape, item.latent_grad, grads.net(NetworkId::Encoder));
  }
}

double weighted_total(const LossComponents& c, const LossWeights& w, bool siamese) {
  double total = w.cls * c.cls + w.rec * c.rec + w.ear * c.ear;
  if (siamese) total += w.adv * c.adv + w.sub * c.sub;
  return total;
}

}  // namespace

LossResult loss_smeta_ae(const ModelBundle& bundle, std::span<const AlignedSignal* const> batch,
                         const LossWeights& weights) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");
  LossResult result;
  result.gradients = BundleGradients::zeros_like(bundle);
  std::vector<EncodedSignal> encoded;
  encoded.reserve(batch.size());
  for (const AlignedSignal* s : batch) {
    check_signal(bundle, *s);
    EncodedSignal item{s, forward(bundle.encoder(), s->values), {}};
    item.latent_grad.assign(bundle.latent_dim(), 0.0);
    encoded.push_back(std::move(item));
  }
  finish_signal_terms(bundle, encoded, weights, result);
  result.total = weighted_total(result.components, weights, false);
  return result;
}

LossResult loss_smeta_ae(const ModelBundle& bundle, std::span<const AlignedSignal> batch,
                         const LossWeights& weights) {
  std::vector<const AlignedSignal*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return loss_smeta_ae(bundle, ptrs, weights);
}

LossResult loss_smeta_sae(const ModelBundle& bundle, const PairBatch& pairs,
                          const SiameseOptions& options, const LossWeights& weights) {
  if (bundle.variant != ModelVariant::SAE) {
    throw Error(ErrorCode::VariantMismatch, "Siamese loss requires an SAE bundle");
  }
  if (pairs.empty()) throw Error(ErrorCode::EmptyBatch, "Siamese loss over an empty pair batch");

  LossResult result;
  result.gradients = BundleGradients::zeros_like(bundle);

  // Distinct signals in order of first appearance.
  std::vector<EncodedSignal> encoded;
  std::unordered_map<const AlignedSignal*, std::size_t> slot;
  auto index_of = [&](const AlignedSignal* s) {
    auto [it, inserted] = slot.try_emplace(s, encoded.size());
    if (inserted) {
      check_signal(bundle, *s);
      EncodedSignal item{s, forward(bundle.encoder(), s->values), {}};
      item.latent_grad.assign(bundle.latent_dim(), 0.0);
      encoded.push_back(std::move(item));
    }
    return it->second;
  };
  std::vector<std::pair<std::size_t, std::size_t>> pair_slots;
  pair_slots.reserve(pairs.size());
  for (const auto& p : pairs) pair_slots.emplace_back(index_of(p.first), index_of(p.second));

  const double inv_pairs = 1.0 / static_cast<double>(pairs.size());
  const std::size_t latent = bundle.latent_dim();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto& a = encoded[pair_slots[k].first];
    auto& b = encoded[pair_slots[k].second];
    const std::vector<double>& ea = a.tape.output;
    const std::vector<double>& eb = b.tape.output;
    const bool same = pairs[k].same_subject;

    // Latent distance term: d(MSE)/d(ea) = 2 (ea - eb) / latent.
    const double dist = mse(ea, eb);
    double adv = 0.0;
    double slope = 0.0;
    if (same) {
      adv = dist;
      slope = 1.0;
    } else if (options.literal_adv) {
      adv = -dist;
      slope = -1.0;
    } else if (options.margin - dist > 0.0) {
      adv = options.margin - dist;
      slope = -1.0;
    }
    result.components.adv += inv_pairs * adv;
    const double adv_scale = weights.adv * inv_pairs * slope * 2.0 / static_cast<double>(latent);
    if (adv_scale != 0.0) {
      for (std::size_t j = 0; j < latent; ++j) {
        const double d = adv_scale * (ea[j] - eb[j]);
        a.latent_grad[j] += d;
        b.latent_grad[j] -= d;
      }
    }

    // Same-subject predictor on the concatenated latents.
    std::vector<double> joint(ea);
    joint.insert(joint.end(), eb.begin(), eb.end());
    std::vector<double> joint_grad(joint.size(), 0.0);
    result.components.sub +=
        inv_pairs * head_term(bundle.subject_predictor(), joint, same ? 1 : 0,
                              weights.sub * inv_pairs, result.gradients.net(NetworkId::SubjectPredictor),
                              joint_grad);
    for (std::size_t j = 0; j < latent; ++j) {
      a.latent_grad[j] += joint_grad[j];
      b.latent_grad[j] += joint_grad[latent + j];
    }
  }

  finish_signal_terms(bundle, encoded, weights, result);
  result.total = weighted_total(result.components, weights, true);
  return result;
}

}  // namespace smeta
