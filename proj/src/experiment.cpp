#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "smeta/dataset_io.hpp"
#include "smeta/error.hpp"
#include "smeta/experiment.hpp"

namespace smeta {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

PretrainResult pretrain_from_scratch(std::span<const AlignedSignal> source,
                                     const ExperimentConfig& cfg) {
  Rng init = make_rng(cfg.seed, stream::kInit);
  const ModelBundle fresh = make_bundle(cfg.arch, cfg.meta.variant, init);
  Rng rng = make_rng(cfg.seed, stream::kPretrain);
  return pretrain(fresh, source, cfg.pretrain, rng);
}

RunResult run_experiment(const ModelBundle& pretrained, std::span<const AlignedSignal> source,
                         std::span<const AlignedSignal> target, const ExperimentConfig& cfg) {
  RunResult result{pretrained, {}, {}};
  InferenceConfig inference = cfg.inference;
  if (cfg.run_meta) {
    MetaConfig meta = cfg.meta;
    meta.seed = cfg.seed;
    meta.apply(cfg.training);
    Rng rng = make_rng(cfg.seed, stream::kMeta);
    MetaFitResult fit = meta_fit(pretrained, source, meta, rng);
    result.bundle = std::move(fit.bundle);
    result.trace = std::move(fit.trace);
    inference.side_aware = inference.side_aware && cfg.training == TrainingVariant::SMeta;
  } else {
    inference.side_aware = false;
  }
  const auto subjects = group_test_subjects(target);
  result.evaluation = evaluate_subjects(result.bundle, subjects, inference);
  return result;
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::BatchSize: return "batch_size";
    case SweepAxis::InnerSteps: return "inner_steps";
    case SweepAxis::Alpha: return "alpha";
    case SweepAxis::Beta: return "beta";
  }
  return "batch_size";
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "batch_size" || name == "batch") return SweepAxis::BatchSize;
  if (name == "inner_steps") return SweepAxis::InnerSteps;
  if (name == "alpha") return SweepAxis::Alpha;
  if (name == "beta") return SweepAxis::Beta;
  throw Error(ErrorCode::BadEnum, "unknown sweep axis '" + name + "'");
}

namespace {

std::size_t as_count(double value, SweepAxis axis) {
  if (!(value >= 1.0) || std::floor(value) != value) {
    throw Error(ErrorCode::InvalidConfig,
                to_string(axis) + " values must be positive integers");
  }
  return static_cast<std::size_t>(value);
}

}  // namespace

ExperimentConfig with_axis_value(const ExperimentConfig& cfg, SweepAxis axis, double value) {
  ExperimentConfig out = cfg;
  switch (axis) {
    case SweepAxis::BatchSize: out.meta.batch_size = as_count(value, axis); break;
    case SweepAxis::InnerSteps: out.meta.inner_steps = as_count(value, axis); break;
    case SweepAxis::Alpha:
      if (!(value >= 0.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be >= 0");
      out.meta.alpha = value;
      break;
    case SweepAxis::Beta:
      if (!(value >= 0.0)) throw Error(ErrorCode::InvalidConfig, "beta must be >= 0");
      out.meta.beta = value;
      out.inference.beta = value;
      break;
  }
  return out;
}

SweepTable run_sweep(SweepAxis axis, std::span<const double> values, const ExperimentConfig& cfg,
                     const ModelBundle& pretrained, std::span<const AlignedSignal> source,
                     std::span<const AlignedSignal> target, std::size_t runs) {
  if (values.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one value");
  if (runs < 1) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one run per value");
  SweepTable table;
  table.axis = axis;
  for (double v : values) {
    const ExperimentConfig point = with_axis_value(cfg, axis, v);
    for (std::size_t r = 0; r < runs; ++r) {
      ExperimentConfig run_cfg = point;
      run_cfg.seed = cfg.seed + r;
      const RunResult run = run_experiment(pretrained, source, target, run_cfg);
      table.records.push_back(SweepRecord{v, run_cfg.seed, run.evaluation.report});
    }
  }
  return table;
}

namespace {

const SliceReport& slice_of(const EvalReport& r, int k) {
  return k == 0 ? r.both : (k == 1 ? r.left : r.right);
}

std::vector<Metric> five_columns(const SliceReport& s) {
  return {s.metrics.npv, s.metrics.tnr, s.metrics.ppv, s.metrics.tpr, s.metrics.acc};
}

}  // namespace

std::string sweep_to_csv(const SweepTable& table) {
  std::ostringstream out;
  out << "axis,value,seed";
  for (const char* slice : {"both", "left", "right"}) {
    for (const char* m : {"npv", "tnr", "ppv", "tpr", "acc"}) out << ',' << slice << '_' << m;
  }
  out << '\n';
  for (const auto& rec : table.records) {
    out << to_string(table.axis) << ',' << format_double(rec.value) << ',' << rec.seed;
    for (int k = 0; k < 3; ++k) {
      for (const Metric& m : five_columns(slice_of(rec.report, k))) {
        out << ',' << (m ? format_double(*m) : std::string("NA"));
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string sweep_to_text(const SweepTable& table) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s %-6s", to_string(table.axis).c_str(), "seed");
  out << buf;
  for (const char* slice : {"Both", "Left", "Right"}) {
    std::snprintf(buf, sizeof buf, " | %-34s", slice);
    out << buf;
  }
  out << '\n' << std::string(19, ' ');
  for (int k = 0; k < 3; ++k) out << " | NPV    TNR    PPV    TPR    Acc   ";
  out << '\n';
  for (const auto& rec : table.records) {
    std::snprintf(buf, sizeof buf, "%-12g %-6llu", rec.value,
                  static_cast<unsigned long long>(rec.seed));
    out << buf;
    for (int k = 0; k < 3; ++k) {
      out << " |";
      for (const Metric& m : five_columns(slice_of(rec.report, k))) {
        std::snprintf(buf, sizeof buf, " %-6s", format_metric(m).c_str());
        out << buf;
      }
    }
    out << '\n';
  }

  // Per-value summary of Both-slice accuracy over runs: best and mean +- std.
  std::vector<double> values;
  for (const auto& rec : table.records) {
    if (std::find(values.begin(), values.end(), rec.value) == values.end()) {
      values.push_back(rec.value);
    }
  }
  out << "\nsummary (both-slice accuracy)\n";
  for (double v : values) {
    std::vector<double> accs;
    for (const auto& rec : table.records) {
      if (rec.value == v && rec.report.both.metrics.acc) accs.push_back(*rec.report.both.metrics.acc);
    }
    if (accs.empty()) {
      std::snprintf(buf, sizeof buf, "%-12g NA\n", v);
      out << buf;
      continue;
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    const double sd = accs.size() > 1 ? std::sqrt(var / static_cast<double>(accs.size() - 1)) : 0.0;
    std::snprintf(buf, sizeof buf, "%-12g best %.3f  mean %.3f (%.3f)  runs %zu\n", v,
                  *std::max_element(accs.begin(), accs.end()), mean, sd, accs.size());
    out << buf;
  }
  return out.str();
}

}  // namespace smeta
