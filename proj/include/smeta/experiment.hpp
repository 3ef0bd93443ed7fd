#pragma once

// End-to-end runs (pretrain -> meta-train -> evaluate) and parameter sweeps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smeta/inference.hpp"
#include "smeta/meta.hpp"
#include "smeta/model.hpp"

namespace smeta {

/// Independent, reproducible random stream for one pipeline stage.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kPretrain = 2;
inline constexpr std::uint64_t kMeta = 3;
}  // namespace stream

struct ExperimentConfig {
  Architecture arch;
  PretrainConfig pretrain;
  MetaConfig meta;
  TrainingVariant training = TrainingVariant::SMeta;
  /// When false the pretrained bundle is evaluated directly (the AE / SAE baselines).
  bool run_meta = true;
  InferenceConfig inference;
  std::uint64_t seed = 0;
};

/// Fresh bundle from the init stream, then pretraining.
PretrainResult pretrain_from_scratch(std::span<const AlignedSignal> source,
                                     const ExperimentConfig& cfg);

struct RunResult {
  ModelBundle bundle;
  std::vector<TraceRow> trace;
  EvaluationResult evaluation;
};

/// Meta-trains (when enabled) from `pretrained` and evaluates on the target.
RunResult run_experiment(const ModelBundle& pretrained, std::span<const AlignedSignal> source,
                         std::span<const AlignedSignal> target, const ExperimentConfig& cfg);

enum class SweepAxis { BatchSize, InnerSteps, Alpha, Beta };

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);

/// Returns a copy of cfg with the axis set to `value`.
ExperimentConfig with_axis_value(const ExperimentConfig& cfg, SweepAxis axis, double value);

struct SweepRecord {
  double value = 0.0;
  std::uint64_t seed = 0;
  EvalReport report;
};

struct SweepTable {
  SweepAxis axis = SweepAxis::BatchSize;
  std::vector<SweepRecord> records;
};

/// One record per (value, run); run r uses seed cfg.seed + r.
SweepTable run_sweep(SweepAxis axis, std::span<const double> values, const ExperimentConfig& cfg,
                     const ModelBundle& pretrained, std::span<const AlignedSignal> source,
                     std::span<const AlignedSignal> target, std::size_t runs = 1);

/// CSV: axis,value,seed then Both/Left/Right x NPV,TNR,PPV,TPR,Acc.
std::string sweep_to_csv(const SweepTable& table);
/// Fixed-width table shaped like the parameter-study tables.
std::string sweep_to_text(const SweepTable& table);

}  // namespace smeta
