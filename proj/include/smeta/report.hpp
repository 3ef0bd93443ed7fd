#pragma once

#include <string>

#include "smeta/inference.hpp"

namespace smeta {

/// Human-readable table: one row per slice, NA for undefined cells.
std::string report_to_text(const EvaluationResult& result, const std::string& title);

/// Machine-readable document:
/// {"slices": {"both"|"left"|"right": {"confusion": {tp,tn,fp,fn},
///   "metrics": {npv,tnr,n_f1,ppv,tpr,p_f1,acc} (null when undefined),
///   "roc": {"points": [[fpr,tpr],...], "auc": x} | null}},
///  "side_accuracy": {"before": x, "after": x}, "signals": n}
std::string report_to_json(const EvaluationResult& result);

}  // namespace smeta
