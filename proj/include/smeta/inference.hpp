#pragma once

// Target-side inference: per-subject side fine-tuning, prediction and latent export.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "smeta/evaluation.hpp"
#include "smeta/model.hpp"
#include "smeta/signal.hpp"

namespace smeta {

struct SubjectTestSet {
  std::string subject_id;
  std::vector<const AlignedSignal*> signals;
};

/// Groups target signals per subject, preserving first-appearance order.
std::vector<SubjectTestSet> group_test_subjects(std::span<const AlignedSignal> signals);

/// What side fine-tuning is allowed to see: values and side, never the class.
struct SideSample {
  std::span<const double> values;
  Side side = Side::Left;
};

struct SideView {
  std::string subject_id;
  std::vector<SideSample> samples;
};

SideView side_view(const SubjectTestSet& subject);

enum class FinetuneScope {
  Encoder,  // encoder + side predictor
  All,      // every sub-network
};

std::string to_string(FinetuneScope scope);
FinetuneScope finetune_scope_from_string(const std::string& name);

/// `steps` gradient steps of rate beta on the mean side-prediction loss over
/// the subject's signals. Returns a fresh bundle.
ModelBundle side_finetune(const ModelBundle& bundle, const SideView& subject, double beta,
                          std::size_t steps, FinetuneScope scope = FinetuneScope::Encoder);

struct Prediction {
  std::array<double, 2> probabilities{0.5, 0.5};
  ClassLabel label = ClassLabel::Control;
  double tinnitus_score = 0.5;
};

/// Softmax over the classifier logits; ties resolve to Control.
Prediction predict(const ModelBundle& bundle, const AlignedSignal& signal);

struct PredictionRecord {
  std::string subject_id;
  Side side = Side::Left;
  ClassLabel true_label = ClassLabel::Control;
  ClassLabel predicted = ClassLabel::Control;
  double score = 0.0;
  Side predicted_side = Side::Left;
};

struct InferenceConfig {
  bool side_aware = true;
  double beta = 1e-3;
  std::size_t finetune_steps = 1;
  FinetuneScope scope = FinetuneScope::Encoder;
};

struct EvaluationResult {
  std::vector<PredictionRecord> predictions;
  EvalReport report;
  /// Side-prediction accuracy of the shared bundle and after per-subject fine-tuning.
  double side_accuracy_before = 0.0;
  double side_accuracy_after = 0.0;
};

EvaluationResult evaluate_subjects(const ModelBundle& bundle,
                                   std::span<const SubjectTestSet> subjects,
                                   const InferenceConfig& cfg);

struct LatentRow {
  std::string subject_id;
  Side side = Side::Left;
  ClassLabel class_label = ClassLabel::Control;
  std::vector<double> latent;
};

std::vector<LatentRow> extract_latent(const ModelBundle& bundle,
                                      std::span<const AlignedSignal> signals);

}  // namespace smeta
