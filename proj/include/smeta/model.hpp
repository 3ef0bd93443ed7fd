#pragma once

// The encoder / decoder / head bundle and the composite multi-task losses.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smeta/network.hpp"
#include "smeta/signal.hpp"

namespace smeta {

enum class ModelVariant { AE, SAE };

std::string to_string(ModelVariant variant);
ModelVariant model_variant_from_string(const std::string& name);

enum class NetworkId : std::size_t {
  Encoder = 0,
  Decoder = 1,
  Classifier = 2,
  SidePredictor = 3,
  SubjectPredictor = 4,
};

inline constexpr std::size_t kNetworkCount = 5;
inline constexpr std::array<NetworkId, kNetworkCount> kAllNetworks = {
    NetworkId::Encoder, NetworkId::Decoder, NetworkId::Classifier, NetworkId::SidePredictor,
    NetworkId::SubjectPredictor};

std::string to_string(NetworkId id);

struct Architecture {
  std::size_t input_dim = 131;
  std::size_t hidden_dim = 64;
  std::size_t latent_dim = 32;
  std::size_t subject_hidden_dim = 16;
};

struct ModelBundle {
  std::array<ParameterSet, kNetworkCount> networks;
  ModelVariant variant = ModelVariant::AE;

  ParameterSet& net(NetworkId id) { return networks[static_cast<std::size_t>(id)]; }
  const ParameterSet& net(NetworkId id) const { return networks[static_cast<std::size_t>(id)]; }

  const ParameterSet& encoder() const { return net(NetworkId::Encoder); }
  const ParameterSet& decoder() const { return net(NetworkId::Decoder); }
  const ParameterSet& classifier() const { return net(NetworkId::Classifier); }
  const ParameterSet& side_predictor() const { return net(NetworkId::SidePredictor); }
  const ParameterSet& subject_predictor() const { return net(NetworkId::SubjectPredictor); }

  std::size_t input_dim() const { return encoder().input_dim(); }
  std::size_t latent_dim() const { return encoder().output_dim(); }

  /// Checks sub-network chaining and the latent-dimension contract.
  void validate() const;
};

struct BundleGradients {
  std::array<GradientSet, kNetworkCount> networks;

  GradientSet& net(NetworkId id) { return networks[static_cast<std::size_t>(id)]; }
  const GradientSet& net(NetworkId id) const { return networks[static_cast<std::size_t>(id)]; }

  static BundleGradients zeros_like(const ModelBundle& bundle);
};

ModelBundle make_bundle(const Architecture& arch, ModelVariant variant, Rng& rng);

/// Returns bundle - scale * grads for every sub-network whose mask entry is set.
ModelBundle axpy_bundle(const ModelBundle& bundle, double scale, const BundleGradients& grads,
                        const std::array<bool, kNetworkCount>& mask = {true, true, true, true,
                                                                       true});
void accumulate(BundleGradients& into, const BundleGradients& grads, double scale = 1.0);

std::uint64_t checksum(const ModelBundle& bundle);
bool bit_identical(const ModelBundle& a, const ModelBundle& b);
double max_abs_difference(const ModelBundle& a, const ModelBundle& b);

/// Concatenates every sub-network's layers into one set (layer chaining is
/// not meaningful on the result) so flat tools such as fd_check apply.
ParameterSet flatten(const ModelBundle& bundle);
ModelBundle unflatten(const ParameterSet& flat, const ModelBundle& like);
GradientSet flatten(const BundleGradients& grads);

struct LossWeights {
  double cls = 1.0;
  double rec = 1.0;
  double ear = 1.0;
  double adv = 1.0;
  double sub = 1.0;
};

struct LossComponents {
  double cls = 0.0;
  double rec = 0.0;
  double ear = 0.0;
  double adv = 0.0;
  double sub = 0.0;
};

struct LossResult {
  double total = 0.0;
  LossComponents components;
  BundleGradients gradients;
};

/// Pair of signals for the Siamese loss; identity of a signal is its address.
struct SignalPair {
  const AlignedSignal* first = nullptr;
  const AlignedSignal* second = nullptr;
  bool same_subject = false;
};

using PairBatch = std::vector<SignalPair>;

struct SiameseOptions {
  double margin = 1.0;
  bool literal_adv = false;
};

/// Weighted cls + rec + ear over the batch, each a mean over batch elements.
LossResult loss_smeta_ae(const ModelBundle& bundle, std::span<const AlignedSignal* const> batch,
                         const LossWeights& weights = {});
LossResult loss_smeta_ae(const ModelBundle& bundle, std::span<const AlignedSignal> batch,
                         const LossWeights& weights = {});

/// AE terms over the distinct signals of the pairs plus the pairwise
/// latent-distance term and the same-subject predictor term, each a mean
/// over pairs.
LossResult loss_smeta_sae(const ModelBundle& bundle, const PairBatch& pairs,
                          const SiameseOptions& options = {}, const LossWeights& weights = {});

/// Half-to-half fusion of two subject tasks into same- and cross-subject pairs.
PairBatch fuse_half_to_half(std::span<const AlignedSignal* const> task_a,
                            std::span<const AlignedSignal* const> task_b, Rng& rng);

std::vector<double> encode(const ModelBundle& bundle, std::span<const double> signal);
std::vector<double> classify(const ModelBundle& bundle, std::span<const double> signal);
std::vector<double> predict_side(const ModelBundle& bundle, std::span<const double> signal);
std::vector<double> reconstruct(const ModelBundle& bundle, std::span<const double> signal);

}  // namespace smeta
