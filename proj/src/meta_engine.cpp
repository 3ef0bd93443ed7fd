#include <algorithm>
#include <numeric>

#include "smeta/error.hpp"
#include "smeta/meta.hpp"

namespace smeta {

std::string to_string(TrainingVariant variant) {
  switch (variant) {
    case TrainingVariant::Plain: return "plain";
    case TrainingVariant::Meta: return "meta";
    case TrainingVariant::SMeta: return "smeta";
  }
  return "smeta";
}

TrainingVariant training_variant_from_string(const std::string& name) {
  if (name == "plain") return TrainingVariant::Plain;
  if (name == "meta") return TrainingVariant::Meta;
  if (name == "smeta") return TrainingVariant::SMeta;
  throw Error(ErrorCode::BadEnum, "unknown training variant '" + name + "'");
}

MetaConfig MetaConfig::defaults_for(ModelVariant variant) {
  MetaConfig cfg;
  cfg.variant = variant;
  if (variant == ModelVariant::SAE) {
    cfg.batch_size = 5;
    cfg.epochs = 1000;
  }
  return cfg;
}

void MetaConfig::apply(TrainingVariant training) {
  rule = training == TrainingVariant::Plain ? UpdateRule::QueryOnly : UpdateRule::FirstOrderMeta;
  side_aware = training == TrainingVariant::SMeta;
}

void MetaConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "learning rates must be non-negative");
  }
  if (shots < 1 || query_size < 1 || batch_size < 1 || inner_steps < 1) {
    throw Error(ErrorCode::InvalidConfig,
                "shots, query size, batch size and inner steps must be >= 1");
  }
}

LossWeights MetaConfig::effective_weights() const {
  LossWeights w = weights;
  if (!side_aware) w.ear = 0.0;
  return w;
}

namespace {

LossResult task_loss(const ModelBundle& bundle, const Episode& episode, std::size_t task,
                     const MetaConfig& cfg, bool support) {
  if (task >= episode.size()) throw Error(ErrorCode::EmptyBatch, "task index out of range");
  const LossWeights w = cfg.effective_weights();
  if (episode.variant == ModelVariant::AE) {
    const TaskSplit& t = episode.tasks[task];
    return loss_smeta_ae(bundle, support ? t.support : t.query, w);
  }
  const PairedTask& t = episode.paired[task];
  return loss_smeta_sae(bundle, support ? t.support_pairs : t.query_pairs, cfg.siamese, w);
}

void add_components(LossComponents& into, const LossComponents& c, double scale) {
  into.cls += scale * c.cls;
  into.rec += scale * c.rec;
  into.ear += scale * c.ear;
  into.adv += scale * c.adv;
  into.sub += scale * c.sub;
}

// Summed support gradient over all tasks, in task-index order.
BundleGradients summed_support_gradient(const ModelBundle& bundle, const Episode& episode,
                                        const MetaConfig& cfg, double* mean_loss) {
  BundleGradients sum = BundleGradients::zeros_like(bundle);
  double total = 0.0;
  for (std::size_t k = 0; k < episode.size(); ++k) {
    const LossResult r = task_loss(bundle, episode, k, cfg, true);
    accumulate(sum, r.gradients);
    total += r.total;
  }
  if (mean_loss) *mean_loss = total / static_cast<double>(episode.size());
  return sum;
}

}  // namespace

LossResult support_loss(const ModelBundle& bundle, const Episode& episode, std::size_t task,
                        const MetaConfig& cfg) {
  return task_loss(bundle, episode, task, cfg, true);
}

LossResult query_loss(const ModelBundle& bundle, const Episode& episode, std::size_t task,
                      const MetaConfig& cfg) {
  return task_loss(bundle, episode, task, cfg, false);
}

ModelBundle meta_train_inner(const ModelBundle& bundle, const Episode& episode,
                             const MetaConfig& cfg) {
  ModelBundle current = bundle;
  for (std::size_t step = 0; step < cfg.inner_steps; ++step) {
    const BundleGradients g = summed_support_gradient(current, episode, cfg, nullptr);
    current = axpy_bundle(current, cfg.alpha, g);
  }
  return current;
}

ModelBundle meta_test_outer(const ModelBundle& bundle, const ModelBundle& virtual_bundle,
                            const Episode& episode, const MetaConfig& cfg) {
  BundleGradients sum = BundleGradients::zeros_like(bundle);
  for (std::size_t k = 0; k < episode.size(); ++k) {
    accumulate(sum, query_loss(virtual_bundle, episode, k, cfg).gradients);
  }
  return axpy_bundle(bundle, cfg.beta, sum);
}

MetaStepResult meta_step(const ModelBundle& bundle, const Episode& episode, const MetaConfig& cfg) {
  if (episode.size() == 0) throw Error(ErrorCode::EmptyBatch, "episode has no tasks");
  const double inv_tasks = 1.0 / static_cast<double>(episode.size());
  StepStats stats;
  BundleGradients outer = BundleGradients::zeros_like(bundle);

  auto add_query = [&](const ModelBundle& at, std::size_t k) {
    const LossResult q = query_loss(at, episode, k, cfg);
    accumulate(outer, q.gradients);
    stats.mean_query_loss += inv_tasks * q.total;
    add_components(stats.query_components, q.components, inv_tasks);
  };

  if (cfg.rule == UpdateRule::QueryOnly) {
    for (std::size_t k = 0; k < episode.size(); ++k) {
      stats.mean_support_loss += inv_tasks * support_loss(bundle, episode, k, cfg).total;
      add_query(bundle, k);
    }
  } else if (cfg.adaptation == Adaptation::Shared) {
    ModelBundle adapted = bundle;
    for (std::size_t step = 0; step < cfg.inner_steps; ++step) {
      double mean = 0.0;
      const BundleGradients g = summed_support_gradient(adapted, episode, cfg, &mean);
      if (step == 0) stats.mean_support_loss = mean;
      adapted = axpy_bundle(adapted, cfg.alpha, g);
    }
    for (std::size_t k = 0; k < episode.size(); ++k) add_query(adapted, k);
  } else {
    for (std::size_t k = 0; k < episode.size(); ++k) {
      ModelBundle adapted = bundle;
      for (std::size_t step = 0; step < cfg.inner_steps; ++step) {
        const LossResult s = support_loss(adapted, episode, k, cfg);
        if (step == 0) stats.mean_support_loss += inv_tasks * s.total;
        adapted = axpy_bundle(adapted, cfg.alpha, s.gradients);
      }
      add_query(adapted, k);
    }
  }
  return MetaStepResult{axpy_bundle(bundle, cfg.beta, outer), stats};
}

PretrainResult pretrain(const ModelBundle& bundle, std::span<const AlignedSignal> dataset,
                        const PretrainConfig& cfg, Rng& rng) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyBatch, "pretraining needs a non-empty dataset");
  if (cfg.batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch size must be >= 1");
  PretrainResult result{bundle, {}};
  result.epoch_losses.reserve(cfg.epochs);

  if (bundle.variant == ModelVariant::AE) {
    std::vector<const AlignedSignal*> order;
    order.reserve(dataset.size());
    for (const auto& s : dataset) order.push_back(&s);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double total = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg.batch_size);
        const std::span<const AlignedSignal* const> batch(order.data() + start, end - start);
        const LossResult r = loss_smeta_ae(result.bundle, batch, cfg.weights);
        result.bundle = axpy_bundle(result.bundle, cfg.learning_rate, r.gradients);
        total += r.total;
        ++batches;
      }
      result.epoch_losses.push_back(total / static_cast<double>(batches));
    }
    return result;
  }

  const auto groups = group_by_subject(dataset);
  if (groups.size() < 2) {
    throw Error(ErrorCode::InsufficientSubjects, "Siamese pretraining needs two subjects");
  }
  const std::size_t steps =
      std::max<std::size_t>(1, (dataset.size() + 2 * cfg.batch_size - 1) / (2 * cfg.batch_size));
  std::uniform_int_distribution<std::size_t> pick_first(0, groups.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_second(0, groups.size() - 2);
  auto draw = [&](const SubjectGroup& g) {
    std::vector<const AlignedSignal*> s = g.signals;
    std::shuffle(s.begin(), s.end(), rng);
    s.resize(std::min(s.size(), cfg.batch_size));
    return s;
  };
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double total = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      const std::size_t a = pick_first(rng);
      std::size_t b = pick_second(rng);
      if (b >= a) ++b;
      const PairBatch pairs = fuse_half_to_half(draw(groups[a]), draw(groups[b]), rng);
      const LossResult r = loss_smeta_sae(result.bundle, pairs, cfg.siamese, cfg.weights);
      result.bundle = axpy_bundle(result.bundle, cfg.learning_rate, r.gradients);
      total += r.total;
    }
    result.epoch_losses.push_back(total / static_cast<double>(steps));
  }
  return result;
}

MetaFitResult meta_fit(const ModelBundle& bundle, std::span<const AlignedSignal> source,
                       const MetaConfig& cfg, Rng& rng, bool from_pretrained) {
  cfg.validate();
  if (bundle.variant != cfg.variant) {
    throw Error(ErrorCode::VariantMismatch, "bundle variant differs from the meta configuration");
  }
  MetaFitResult result{bundle, {}, {}};
  if (!from_pretrained) {
    result.warnings.push_back("meta-learning starts from an untrained bundle");
  }
  const SubjectPool pool = build_subject_pool(source, cfg.shots + cfg.query_size);
  for (const auto& id : pool.excluded) {
    result.warnings.push_back("subject " + id + " excluded: fewer than " +
                              std::to_string(cfg.shots + cfg.query_size) + " signals");
  }
  result.trace.reserve(cfg.epochs);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Episode episode = sample_episode(pool, cfg, rng);
    MetaStepResult step = meta_step(result.bundle, episode, cfg);
    result.bundle = std::move(step.bundle);
    result.trace.push_back(TraceRow{epoch + 1, step.stats.mean_support_loss,
                                    step.stats.mean_query_loss, step.stats.query_components});
  }
  return result;
}

}  // namespace smeta
