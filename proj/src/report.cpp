#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "smeta/report.hpp"

namespace smeta {

using nlohmann::ordered_json;

namespace {

ordered_json metric_json(const Metric& m) { return m ? ordered_json(*m) : ordered_json(nullptr); }

ordered_json slice_json(const SliceReport& s) {
  ordered_json j;
  j["confusion"] = {{"tp", s.confusion.tp},
                    {"tn", s.confusion.tn},
                    {"fp", s.confusion.fp},
                    {"fn", s.confusion.fn}};
  j["metrics"] = {{"npv", metric_json(s.metrics.npv)},   {"tnr", metric_json(s.metrics.tnr)},
                  {"n_f1", metric_json(s.metrics.n_f1)}, {"ppv", metric_json(s.metrics.ppv)},
                  {"tpr", metric_json(s.metrics.tpr)},   {"p_f1", metric_json(s.metrics.p_f1)},
                  {"acc", metric_json(s.metrics.acc)}};
  if (s.roc) {
    ordered_json points = ordered_json::array();
    for (const auto& p : s.roc->points) points.push_back({p.fpr, p.tpr});
    j["roc"] = {{"points", points}, {"auc", s.roc->auc}};
  } else {
    j["roc"] = nullptr;
  }
  return j;
}

}  // namespace

std::string report_to_text(const EvaluationResult& result, const std::string& title) {
  std::ostringstream out;
  out << title << '\n';
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %4s %4s %4s %4s  %-6s %-6s %-6s %-6s %-6s %-6s %-6s %-6s\n",
                "slice", "TP", "TN", "FP", "FN", "NPV", "TNR", "N-F1", "PPV", "TPR", "P-F1", "Acc",
                "AUC");
  out << buf;
  for (const SliceReport* s : {&result.report.both, &result.report.left, &result.report.right}) {
    const Metrics& m = s->metrics;
    const Metric auc = s->roc ? Metric(s->roc->auc) : std::nullopt;
    std::snprintf(buf, sizeof buf,
                  "%-6s %4zu %4zu %4zu %4zu  %-6s %-6s %-6s %-6s %-6s %-6s %-6s %-6s\n",
                  s->name.c_str(), s->confusion.tp, s->confusion.tn, s->confusion.fp,
                  s->confusion.fn, format_metric(m.npv).c_str(), format_metric(m.tnr).c_str(),
                  format_metric(m.n_f1).c_str(), format_metric(m.ppv).c_str(),
                  format_metric(m.tpr).c_str(), format_metric(m.p_f1).c_str(),
                  format_metric(m.acc).c_str(), format_metric(auc).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "side accuracy: before fine-tune %.3f, after %.3f\n",
                result.side_accuracy_before, result.side_accuracy_after);
  out << buf;
  return out.str();
}

std::string report_to_json(const EvaluationResult& result) {
  ordered_json doc;
  doc["signals"] = result.predictions.size();
  doc["slices"] = {{"both", slice_json(result.report.both)},
                   {"left", slice_json(result.report.left)},
                   {"right", slice_json(result.report.right)}};
  doc["side_accuracy"] = {{"before", result.side_accuracy_before},
                          {"after", result.side_accuracy_after}};
  return doc.dump(2) + "\n";
}

}  // namespace smeta
