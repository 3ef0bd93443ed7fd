#include <unordered_map>

#include "smeta/error.hpp"
#include "smeta/inference.hpp"

namespace smeta {

std::vector<SubjectTestSet> group_test_subjects(std::span<const AlignedSignal> signals) {
  std::vector<SubjectTestSet> subjects;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : signals) {
    auto [it, inserted] = index.try_emplace(s.subject_id, subjects.size());
    if (inserted) subjects.push_back(SubjectTestSet{s.subject_id, {}});
    subjects[it->second].signals.push_back(&s);
  }
  return subjects;
}

SideView side_view(const SubjectTestSet& subject) {
  SideView view;
  view.subject_id = subject.subject_id;
  view.samples.reserve(subject.signals.size());
  for (const AlignedSignal* s : subject.signals) view.samples.push_back({s->values, s->side});
  return view;
}

std::string to_string(FinetuneScope scope) {
  return scope == FinetuneScope::Encoder ? "encoder" : "all";
}

FinetuneScope finetune_scope_from_string(const std::string& name) {
  if (name == "encoder") return FinetuneScope::Encoder;
  if (name == "all") return FinetuneScope::All;
  throw Error(ErrorCode::BadEnum, "unknown fine-tune scope '" + name + "'");
}

ModelBundle side_finetune(const ModelBundle& bundle, const SideView& subject, double beta,
                          std::size_t steps, FinetuneScope scope) {
  if (subject.samples.empty()) {
    throw Error(ErrorCode::EmptySubject, "subject " + subject.subject_id + " has no signals");
  }
  for (const auto& sample : subject.samples) {
    if (!is_valid(sample.side)) {
      throw Error(ErrorCode::MissingSideLabel,
                  "subject " + subject.subject_id + " has a signal without a side label");
    }
    if (sample.values.size() != bundle.input_dim()) {
      throw Error(ErrorCode::ShapeMismatch, "signal length differs from encoder input");
    }
  }
  std::array<bool, kNetworkCount> mask{};
  if (scope == FinetuneScope::All) {
    mask.fill(true);
  } else {
    mask[static_cast<std::size_t>(NetworkId::Encoder)] = true;
    mask[static_cast<std::size_t>(NetworkId::SidePredictor)] = true;
  }

  ModelBundle current = bundle;
  if (beta == 0.0) return current;
  const double inv_n = 1.0 / static_cast<double>(subject.samples.size());
  for (std::size_t step = 0; step < steps; ++step) {
    BundleGradients grads = BundleGradients::zeros_like(current);
    for (const auto& sample : subject.samples) {
      const Tape enc = forward(current.encoder(), sample.values);
      const Tape head = forward(current.side_predictor(), enc.output);
      std::vector<double> up = cross_entropy_gradient(head.output, static_cast<int>(sample.side));
      for (double& v : up) v *= inv_n;
      const std::vector<double> d_latent = backward_into(
          current.side_predictor(), head, up, grads.net(NetworkId::SidePredictor));
      backward_into(current.encoder(), enc, d_latent, grads.net(NetworkId::Encoder));
    }
    current = axpy_bundle(current, beta, grads, mask);
  }
  return current;
}

Prediction predict(const ModelBundle& bundle, const AlignedSignal& signal) {
  const std::vector<double> logits = classify(bundle, signal.values);
  const std::vector<double> p = softmax(logits);
  Prediction out;
  out.probabilities = {p[0], p[1]};
  out.label = p[1] > p[0] ? ClassLabel::Tinnitus : ClassLabel::Control;
  out.tinnitus_score = p[1];
  return out;
}

namespace {

Side argmax_side(const ModelBundle& bundle, const AlignedSignal& s) {
  const std::vector<double> logits = predict_side(bundle, s.values);
  return logits[1] > logits[0] ? Side::Right : Side::Left;
}

}  // namespace

EvaluationResult evaluate_subjects(const ModelBundle& bundle,
                                   std::span<const SubjectTestSet> subjects,
                                   const InferenceConfig& cfg) {
  EvaluationResult result;
  std::vector<ScoredPrediction> scored;
  std::size_t side_hits_before = 0;
  std::size_t side_hits_after = 0;
  for (const auto& subject : subjects) {
    const ModelBundle tuned = cfg.side_aware
                                  ? side_finetune(bundle, side_view(subject), cfg.beta,
                                                  cfg.finetune_steps, cfg.scope)
                                  : bundle;
    for (const AlignedSignal* s : subject.signals) {
      const Prediction p = predict(tuned, *s);
      PredictionRecord rec;
      rec.subject_id = s->subject_id;
      rec.side = s->side;
      rec.true_label = s->class_label;
      rec.predicted = p.label;
      rec.score = p.tinnitus_score;
      rec.predicted_side = argmax_side(tuned, *s);
      side_hits_before += argmax_side(bundle, *s) == s->side ? 1 : 0;
      side_hits_after += rec.predicted_side == s->side ? 1 : 0;
      scored.push_back({rec.side, static_cast<int>(rec.true_label), static_cast<int>(rec.predicted),
                        rec.score});
      result.predictions.push_back(std::move(rec));
    }
  }
  result.report = slice_report(scored);
  if (!scored.empty()) {
    const auto n = static_cast<double>(scored.size());
    result.side_accuracy_before = static_cast<double>(side_hits_before) / n;
    result.side_accuracy_after = static_cast<double>(side_hits_after) / n;
  }
  return result;
}

std::vector<LatentRow> extract_latent(const ModelBundle& bundle,
                                      std::span<const AlignedSignal> signals) {
  std::vector<LatentRow> rows;
  rows.reserve(signals.size());
  for (const auto& s : signals) {
    rows.push_back(LatentRow{s.subject_id, s.side, s.class_label, encode(bundle, s.values)});
  }
  return rows;
}

}  // namespace smeta
