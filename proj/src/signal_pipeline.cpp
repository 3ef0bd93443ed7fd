#include <algorithm>
#include <string>

#include "smeta/error.hpp"
#include "smeta/signal.hpp"

namespace smeta {

bool is_valid(Side side) noexcept { return side == Side::Left || side == Side::Right; }

bool is_valid(ClassLabel label) noexcept {
  return label == ClassLabel::Control || label == ClassLabel::Tinnitus;
}

void AlignmentConfig::validate() const {
  if (stride < 1) throw Error(ErrorCode::InvalidConfig, "stride must be >= 1");
  if (target_points < 1) throw Error(ErrorCode::InvalidConfig, "target_points must be >= 1");
  if (window_size < target_points) {
    throw Error(ErrorCode::InvalidConfig, "window_size (" + std::to_string(window_size) +
                                              ") must be >= target_points (" +
                                              std::to_string(target_points) + ")");
  }
}

BlockLayout block_layout(std::size_t source_points, std::size_t target_points) {
  if (target_points < 1 || target_points > source_points) {
    throw Error(ErrorCode::InvalidTargetLength,
                "cannot down-sample " + std::to_string(source_points) + " points to " +
                    std::to_string(target_points));
  }
  BlockLayout layout;
  layout.base_size = source_points / target_points;
  layout.long_blocks = source_points - layout.base_size * target_points;
  return layout;
}

std::size_t window_count(std::size_t sample_count, const AlignmentConfig& cfg) {
  if (sample_count < cfg.window_size) return 0;
  return (sample_count - cfg.window_size) / cfg.stride + 1;
}

std::vector<Window> slice_sliding_window(const RawSignal& raw, const AlignmentConfig& cfg) {
  if (cfg.stride < 1) throw Error(ErrorCode::InvalidConfig, "stride must be >= 1");
  if (cfg.window_size < 1) throw Error(ErrorCode::InvalidConfig, "window_size must be >= 1");
  if (raw.sample_count() < cfg.window_size) {
    throw Error(ErrorCode::SampleCountTooSmall,
                "subject " + raw.subject_id + " has " + std::to_string(raw.sample_count()) +
                    " samples, window needs " + std::to_string(cfg.window_size));
  }
  const std::size_t count = window_count(raw.sample_count(), cfg);
  std::vector<Window> windows;
  windows.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * cfg.stride;
    const auto first = raw.values.begin() + static_cast<std::ptrdiff_t>(start);
    windows.push_back(
        Window{std::vector<double>(first, first + static_cast<std::ptrdiff_t>(cfg.window_size)),
               start});
  }
  return windows;
}

std::vector<double> downsample(std::span<const double> window, std::size_t target_points) {
  const BlockLayout layout = block_layout(window.size(), target_points);
  std::vector<double> out(target_points);
  for (std::size_t j = 0; j < target_points; ++j) {
    const std::size_t start = layout.block_start(j);
    const std::size_t size = layout.block_size(j);
    double sum = 0.0;
    for (std::size_t k = start; k < start + size; ++k) sum += window[k];
    out[j] = sum / static_cast<double>(size);
  }
  return out;
}

std::vector<double> minmax_normalize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptySignal, "cannot normalize an empty signal");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(values.size(), 0.0);
  if (hi == lo) return out;
  const double range = hi - lo;
  for (std::size_t j = 0; j < values.size(); ++j) {
    // Exact endpoints regardless of rounding in the division.
    if (values[j] == lo) {
      out[j] = 0.0;
    } else if (values[j] == hi) {
      out[j] = 1.0;
    } else {
      out[j] = std::clamp((values[j] - lo) / range, 0.0, 1.0);
    }
  }
  return out;
}

namespace {

AlignedSignal make_aligned(const RawSignal& raw, std::vector<double> values, std::size_t offset) {
  AlignedSignal out;
  out.values = std::move(values);
  out.subject_id = raw.subject_id;
  out.side = raw.side;
  out.class_label = raw.class_label;
  out.dataset_id = raw.dataset_id;
  out.parent_offset = offset;
  return out;
}

}  // namespace

std::vector<AlignedSignal> align_dataset(std::span<const RawSignal> raws,
                                         const AlignmentConfig& cfg, bool apply_window) {
  cfg.validate();
  std::vector<AlignedSignal> out;
  if (apply_window) {
    std::size_t total = 0;
    for (const auto& raw : raws) total += window_count(raw.sample_count(), cfg);
    out.reserve(total);
    for (const auto& raw : raws) {
      for (const Window& w : slice_sliding_window(raw, cfg)) {
        out.push_back(make_aligned(raw, minmax_normalize(downsample(w.values, cfg.target_points)),
                                   w.parent_offset));
      }
    }
    return out;
  }
  out.reserve(raws.size());
  for (const auto& raw : raws) {
    if (raw.sample_count() != cfg.target_points) {
      throw Error(ErrorCode::InvalidTargetLength,
                  "subject " + raw.subject_id + " has " + std::to_string(raw.sample_count()) +
                      " samples, expected " + std::to_string(cfg.target_points));
    }
    out.push_back(make_aligned(raw, minmax_normalize(raw.values), 0));
  }
  return out;
}

}  // namespace smeta
