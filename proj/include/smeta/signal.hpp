#pragma once

// Signal types and the source/target alignment pipeline: sliding-window
// slicing, mean-block down-sampling and per-signal min-max normalization.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace smeta {

enum class Side : int { Left = 0, Right = 1 };
enum class ClassLabel : int { Control = 0, Tinnitus = 1 };

bool is_valid(Side side) noexcept;
bool is_valid(ClassLabel label) noexcept;

struct RawSignal {
  std::vector<double> values;
  std::string subject_id;
  Side side = Side::Left;
  ClassLabel class_label = ClassLabel::Control;
  std::string dataset_id;

  std::size_t sample_count() const noexcept { return values.size(); }
};

struct AlignedSignal {
  std::vector<double> values;
  std::string subject_id;
  Side side = Side::Left;
  ClassLabel class_label = ClassLabel::Control;
  std::string dataset_id;
  std::size_t parent_offset = 0;
};

struct AlignmentConfig {
  std::size_t window_size = 400;
  std::size_t stride = 20;
  std::size_t target_points = 131;

  /// Throws InvalidConfig unless window_size >= target_points >= 1 and stride >= 1.
  void validate() const;
};

struct Window {
  std::vector<double> values;
  std::size_t parent_offset = 0;
};

/// Size of the leading blocks (l + 1), trailing blocks (l) and the number of
/// leading blocks (m) for a down-sampling from n_s to n_g points.
struct BlockLayout {
  std::size_t base_size = 0;    // l = floor(n_s / n_g)
  std::size_t long_blocks = 0;  // m = n_s - l * n_g

  std::size_t block_size(std::size_t j) const noexcept {
    return j < long_blocks ? base_size + 1 : base_size;
  }
  std::size_t block_start(std::size_t j) const noexcept {
    return j * base_size + (j < long_blocks ? j : long_blocks);
  }
};

BlockLayout block_layout(std::size_t source_points, std::size_t target_points);

std::size_t window_count(std::size_t sample_count, const AlignmentConfig& cfg);

std::vector<Window> slice_sliding_window(const RawSignal& raw, const AlignmentConfig& cfg);

std::vector<double> downsample(std::span<const double> window, std::size_t target_points);

/// Per-signal min-max scaling into [0,1]; a constant input maps to all zeros.
std::vector<double> minmax_normalize(std::span<const double> values);

/// Source-style datasets (apply_window set) are sliced, down-sampled and
/// normalized in that order; target-style datasets are only normalized and
/// must already have target_points samples. Output preserves input order.
std::vector<AlignedSignal> align_dataset(std::span<const RawSignal> raws,
                                         const AlignmentConfig& cfg, bool apply_window);

}  // namespace smeta
