#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "smeta/error.hpp"
#include "smeta/evaluation.hpp"

namespace smeta {

namespace {

void check_binary(std::span<const int> values, const char* what) {
  for (int v : values) {
    if (v != 0 && v != 1) {
      throw Error(ErrorCode::BadEnum, std::string(what) + " must be 0 or 1");
    }
  }
}

Metric ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

Metric harmonic(const Metric& a, const Metric& b) {
  if (!a || !b) return std::nullopt;
  const double s = *a + *b;
  if (s == 0.0) return std::nullopt;
  return 2.0 * *a * *b / s;
}

}  // namespace

Confusion confusion(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(preds.size()) + " predictions vs " +
                                               std::to_string(labels.size()) + " labels");
  }
  if (preds.empty()) throw Error(ErrorCode::EmptyInput, "confusion of an empty prediction list");
  check_binary(preds, "predictions");
  check_binary(labels, "labels");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] == 1) {
      (preds[i] == 1 ? c.tp : c.fn) += 1;
    } else {
      (preds[i] == 1 ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

Metrics metrics(const Confusion& c) {
  Metrics m;
  m.npv = ratio(c.tn, c.fn + c.tn);
  m.tnr = ratio(c.tn, c.fp + c.tn);
  m.ppv = ratio(c.tp, c.tp + c.fp);
  m.tpr = ratio(c.tp, c.tp + c.fn);
  m.n_f1 = harmonic(m.npv, m.tnr);
  m.p_f1 = harmonic(m.ppv, m.tpr);
  m.acc = ratio(c.tp + c.tn, c.total());
  return m;
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  }
  check_binary(labels, "labels");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::SingleClassInput, "ROC needs both classes present");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorCode::ParseError, "non-finite score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives)});
  }
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const RocPoint& a = curve.points[k - 1];
    const RocPoint& b = curve.points[k];
    curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return curve;
}

namespace {

SliceReport make_slice(const std::string& name, std::span<const ScoredPrediction> all,
                       const std::optional<Side>& side) {
  SliceReport slice;
  slice.name = name;
  std::vector<int> preds;
  std::vector<int> labels;
  std::vector<double> scores;
  for (const auto& p : all) {
    if (side && p.side != *side) continue;
    preds.push_back(p.predicted);
    labels.push_back(p.label);
    scores.push_back(p.score);
  }
  if (!preds.empty()) slice.confusion = confusion(preds, labels);
  slice.metrics = metrics(slice.confusion);
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (has_pos && has_neg) slice.roc = roc_auc(scores, labels);
  return slice;
}

}  // namespace

EvalReport slice_report(std::span<const ScoredPrediction> predictions) {
  EvalReport report;
  report.both = make_slice("both", predictions, std::nullopt);
  report.left = make_slice("left", predictions, Side::Left);
  report.right = make_slice("right", predictions, Side::Right);
  return report;
}

std::string format_metric(const Metric& m, int decimals) {
  if (!m) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, *m);
  return buf;
}

}  // namespace smeta
