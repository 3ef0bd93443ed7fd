#pragma once

// Confusion-matrix metrics, Both/Left/Right slice reports and ROC/AUC.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smeta/signal.hpp"

namespace smeta {

struct Confusion {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  Confusion& operator+=(const Confusion& o) noexcept {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Confusion&) const = default;
};

/// An undefined cell (0/0) is std::nullopt and renders as NA.
using Metric = std::optional<double>;

struct Metrics {
  Metric npv, tnr, n_f1, ppv, tpr, p_f1, acc;
};

/// Positive class is Tinnitus (1).
Confusion confusion(std::span<const int> preds, std::span<const int> labels);

Metrics metrics(const Confusion& c);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Threshold sweep over distinct scores in descending order; tied scores form
/// a single step. Trapezoidal area.
RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels);

struct SliceReport {
  std::string name;
  Confusion confusion;
  Metrics metrics;
  std::optional<RocCurve> roc;  // absent when the slice lacks one of the classes
};

struct EvalReport {
  SliceReport both;
  SliceReport left;
  SliceReport right;
};

struct ScoredPrediction {
  Side side = Side::Left;
  int label = 0;
  int predicted = 0;
  double score = 0.0;
};

/// Both / Left / Right slices computed independently; an empty slice yields
/// zero counts and undefined metrics.
EvalReport slice_report(std::span<const ScoredPrediction> predictions);

std::string format_metric(const Metric& m, int decimals = 3);

}  // namespace smeta
