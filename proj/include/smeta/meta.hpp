#pragma once

// Subject-as-task episode sampling and the two training stages: plain
// mini-batch pretraining followed by first-order meta-train / meta-test updates.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smeta/model.hpp"
#include "smeta/signal.hpp"

namespace smeta {

struct SubjectGroup {
  std::string subject_id;
  std::vector<const AlignedSignal*> signals;
};

/// Groups signals by subject in order of first appearance.
std::vector<SubjectGroup> group_by_subject(std::span<const AlignedSignal> dataset);

struct TaskSplit {
  std::string subject_id;
  std::vector<const AlignedSignal*> support;
  std::vector<const AlignedSignal*> query;
};

/// Two subject tasks fused into Siamese pair batches.
struct PairedTask {
  TaskSplit first;
  TaskSplit second;
  PairBatch support_pairs;
  PairBatch query_pairs;
};

struct Episode {
  ModelVariant variant = ModelVariant::AE;
  std::vector<TaskSplit> tasks;     // AE episodes
  std::vector<PairedTask> paired;   // SAE episodes

  std::size_t size() const { return variant == ModelVariant::AE ? tasks.size() : paired.size(); }
};

/// How the outer step is formed.
enum class UpdateRule {
  QueryOnly,       // theta <- theta - beta * sum_k grad L_qry_k(theta)
  FirstOrderMeta,  // query gradients at the virtual parameters, applied to theta
};

/// Shared: one virtual parameter set from the task-summed support gradient.
/// PerTask: each task adapts its own copy before its query gradient is taken.
enum class Adaptation { Shared, PerTask };

/// The three trained variants exposed on the command line.
enum class TrainingVariant { Plain, Meta, SMeta };

std::string to_string(TrainingVariant variant);
TrainingVariant training_variant_from_string(const std::string& name);

struct MetaConfig {
  double alpha = 1e-3;
  double beta = 1e-3;
  std::size_t shots = 2;
  std::size_t query_size = 8;
  std::size_t batch_size = 16;
  std::size_t inner_steps = 1;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  ModelVariant variant = ModelVariant::AE;
  bool side_aware = true;
  UpdateRule rule = UpdateRule::FirstOrderMeta;
  Adaptation adaptation = Adaptation::Shared;
  LossWeights weights;
  SiameseOptions siamese;

  /// Defaults of the reference setting: batch 16 / 200 epochs for AE,
  /// batch 5 / 1000 epochs for SAE.
  static MetaConfig defaults_for(ModelVariant variant);

  void apply(TrainingVariant training);
  void validate() const;

  /// Loss weights after the side-awareness switch is applied.
  LossWeights effective_weights() const;
};

/// Subjects eligible for sampling; subjects with too few signals are excluded.
struct SubjectPool {
  std::vector<SubjectGroup> eligible;
  std::vector<std::string> excluded;
};

SubjectPool build_subject_pool(std::span<const AlignedSignal> dataset, std::size_t min_signals);

/// b distinct subjects (2b for SAE, paired in draw order), each split into
/// disjoint support and query draws.
Episode sample_episode(const SubjectPool& pool, const MetaConfig& cfg, Rng& rng);

LossResult support_loss(const ModelBundle& bundle, const Episode& episode, std::size_t task,
                        const MetaConfig& cfg);
LossResult query_loss(const ModelBundle& bundle, const Episode& episode, std::size_t task,
                      const MetaConfig& cfg);

/// theta' <- theta - alpha * sum_k grad L_spt_k(theta), repeated inner_steps times.
ModelBundle meta_train_inner(const ModelBundle& bundle, const Episode& episode,
                             const MetaConfig& cfg);

/// theta* <- theta - beta * sum_k grad L_qry_k(theta'), first order.
ModelBundle meta_test_outer(const ModelBundle& bundle, const ModelBundle& virtual_bundle,
                            const Episode& episode, const MetaConfig& cfg);

struct StepStats {
  double mean_support_loss = 0.0;
  double mean_query_loss = 0.0;
  LossComponents query_components;
};

struct MetaStepResult {
  ModelBundle bundle;
  StepStats stats;
};

/// One full update for an episode according to cfg.rule and cfg.adaptation.
MetaStepResult meta_step(const ModelBundle& bundle, const Episode& episode, const MetaConfig& cfg);

struct PretrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  LossWeights weights{1.0, 1.0, 0.0, 1.0, 1.0};
  SiameseOptions siamese;
};

struct PretrainResult {
  ModelBundle bundle;
  std::vector<double> epoch_losses;
};

/// Mini-batch SGD without episodes. SAE bundles train on pairs fused from two
/// randomly drawn subjects per step.
PretrainResult pretrain(const ModelBundle& bundle, std::span<const AlignedSignal> dataset,
                        const PretrainConfig& cfg, Rng& rng);

struct TraceRow {
  std::size_t epoch = 0;
  double mean_support_loss = 0.0;
  double mean_query_loss = 0.0;
  LossComponents components;
};

struct MetaFitResult {
  ModelBundle bundle;
  std::vector<TraceRow> trace;
  std::vector<std::string> warnings;
};

MetaFitResult meta_fit(const ModelBundle& bundle, std::span<const AlignedSignal> source,
                       const MetaConfig& cfg, Rng& rng, bool from_pretrained = true);

}  // namespace smeta
