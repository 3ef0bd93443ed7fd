#include <algorithm>
#include <numeric>
#include <unordered_map>

#include "smeta/error.hpp"
#include "smeta/meta.hpp"

namespace smeta {

std::vector<SubjectGroup> group_by_subject(std::span<const AlignedSignal> dataset) {
  std::vector<SubjectGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : dataset) {
    auto [it, inserted] = index.try_emplace(s.subject_id, groups.size());
    if (inserted) groups.push_back(SubjectGroup{s.subject_id, {}});
    groups[it->second].signals.push_back(&s);
  }
  return groups;
}

SubjectPool build_subject_pool(std::span<const AlignedSignal> dataset, std::size_t min_signals) {
  SubjectPool pool;
  for (auto& group : group_by_subject(dataset)) {
    if (group.signals.size() >= min_signals) {
      pool.eligible.push_back(std::move(group));
    } else {
      pool.excluded.push_back(group.subject_id);
    }
  }
  return pool;
}

namespace {

// First `count` entries of a uniformly random permutation of [0, n).
std::vector<std::size_t> draw_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  return idx;
}

TaskSplit split_subject(const SubjectGroup& group, const MetaConfig& cfg, Rng& rng) {
  const auto picks =
      draw_without_replacement(group.signals.size(), cfg.shots + cfg.query_size, rng);
  TaskSplit task;
  task.subject_id = group.subject_id;
  task.support.reserve(cfg.shots);
  task.query.reserve(cfg.query_size);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    (i < cfg.shots ? task.support : task.query).push_back(group.signals[picks[i]]);
  }
  return task;
}

}  // namespace

Episode sample_episode(const SubjectPool& pool, const MetaConfig& cfg, Rng& rng) {
  const std::size_t per_task = cfg.shots + cfg.query_size;
  const std::size_t needed = cfg.variant == ModelVariant::AE ? cfg.batch_size : 2 * cfg.batch_size;
  std::vector<const SubjectGroup*> usable;
  std::string first_short = pool.excluded.empty() ? std::string() : pool.excluded.front();
  for (const auto& group : pool.eligible) {
    if (group.signals.size() >= per_task) {
      usable.push_back(&group);
    } else if (first_short.empty()) {
      first_short = group.subject_id;
    }
  }
  if (usable.empty()) {
    throw Error(ErrorCode::InsufficientSignals,
                "no subject has " + std::to_string(per_task) + " signals" +
                    (first_short.empty() ? std::string() : " (first short: " + first_short + ")"));
  }
  if (usable.size() < needed) {
    throw Error(ErrorCode::InsufficientSubjects,
                std::to_string(usable.size()) + " eligible subjects, episode needs " +
                    std::to_string(needed));
  }

  Episode episode;
  episode.variant = cfg.variant;
  const auto subjects = draw_without_replacement(usable.size(), needed, rng);
  if (cfg.variant == ModelVariant::AE) {
    episode.tasks.reserve(needed);
    for (std::size_t s : subjects) episode.tasks.push_back(split_subject(*usable[s], cfg, rng));
    return episode;
  }
  episode.paired.reserve(cfg.batch_size);
  for (std::size_t k = 0; k < cfg.batch_size; ++k) {
    PairedTask pt;
    pt.first = split_subject(*usable[subjects[2 * k]], cfg, rng);
    pt.second = split_subject(*usable[subjects[2 * k + 1]], cfg, rng);
    pt.support_pairs = fuse_half_to_half(pt.first.support, pt.second.support, rng);
    pt.query_pairs = fuse_half_to_half(pt.first.query, pt.second.query, rng);
    episode.paired.push_back(std::move(pt));
  }
  return episode;
}

}  // namespace smeta
