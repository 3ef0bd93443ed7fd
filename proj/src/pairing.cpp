#include <algorithm>
#include <numeric>

#include "smeta/error.hpp"
#include "smeta/model.hpp"

namespace smeta {

namespace {

// Walks a shuffled copy of a task, wrapping around once exhausted.
class Cursor {
 public:
  Cursor(std::span<const AlignedSignal* const> task, Rng& rng) : order_(task.begin(), task.end()) {
    std::shuffle(order_.begin(), order_.end(), rng);
  }

  const AlignedSignal* next() {
    const AlignedSignal* s = order_[pos_ % order_.size()];
    ++pos_;
    return s;
  }

  std::size_t size() const { return order_.size(); }

 private:
  std::vector<const AlignedSignal*> order_;
  std::size_t pos_ = 0;
};

}  // namespace

PairBatch fuse_half_to_half(std::span<const AlignedSignal* const> task_a,
                            std::span<const AlignedSignal* const> task_b, Rng& rng) {
  if (task_a.empty() || task_b.empty()) {
    throw Error(ErrorCode::EmptyTask, "half-to-half fusion needs two non-empty tasks");
  }
  const std::size_t n = std::min(task_a.size(), task_b.size());
  const std::size_t n_same = (n + 1) / 2;
  const std::size_t n_cross = n / 2;

  Cursor a(task_a, rng);
  Cursor b(task_b, rng);
  PairBatch pairs;
  pairs.reserve(n);

  // The unfused half: pairs alternate between the two tasks. A singleton task
  // pairs its only signal with itself.
  for (std::size_t k = 0; k < n_same; ++k) {
    Cursor& from = (k % 2 == 0) ? a : b;
    const AlignedSignal* first = from.next();
    const AlignedSignal* second = from.size() > 1 ? from.next() : first;
    pairs.push_back({first, second, first->subject_id == second->subject_id});
  }
  // The fused half: one signal from each task.
  for (std::size_t k = 0; k < n_cross; ++k) {
    const AlignedSignal* first = a.next();
    const AlignedSignal* second = b.next();
    pairs.push_back({first, second, first->subject_id == second->subject_id});
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);
  return pairs;
}

}  // namespace smeta
