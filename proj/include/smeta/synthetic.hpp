#pragma once

// Synthetic two-dataset evoked-response benchmark.
//
// Every signal is a sampled waveform over a nominal duration:
//   base(t) + class_effect * y * class_template(t)
//           + side_effect * (+1 right / -1 left) * side_template(t)
//           + subject component + observation noise
// base(t) is a sum of raised-cosine bumps (waves near 1.6, 3.7 and 5.7 ms and
// a late trough near 7 ms). The class template attenuates the first wave, the
// side template is a first-order latency shift of the base waveform, and each
// subject draws random wave amplitudes and a latency jitter scaled by
// subject_noise. The source dataset covers 10 ms in 500 points with one ear
// per subject; the target covers 8 ms in 131 points with both ears.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "smeta/signal.hpp"

namespace smeta {

struct SynthConfig {
  std::size_t n_subjects_source = 38;
  std::size_t n_subjects_target = 40;
  std::size_t source_signals = 408;
  std::size_t source_points = 500;
  std::size_t target_points = 131;
  double source_duration_ms = 10.0;
  double target_duration_ms = 8.0;
  double class_effect = 0.6;
  double side_effect = 1.0;
  double subject_noise = 0.3;
  double observation_noise = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  std::vector<RawSignal> source;
  std::vector<RawSignal> target;
};

SyntheticData generate_synthetic(const SynthConfig& cfg);

/// Noise-free waveform components, exposed for tests and plots.
double base_waveform(double t_ms);
double class_template(double t_ms);
double side_template(double t_ms);

}  // namespace smeta
