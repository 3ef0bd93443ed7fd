#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "smeta/error.hpp"
#include "smeta/synthetic.hpp"

namespace smeta {

namespace {

struct Wave {
  double latency_ms;
  double half_width_ms;
  double amplitude;
};

constexpr std::array<Wave, 4> kWaves = {{
    {1.6, 0.5, 1.0},   // I
    {3.7, 0.6, 0.6},   // III
    {5.7, 0.8, 1.2},   // V
    {7.0, 1.2, -0.4},  // late trough
}};

constexpr double kSideShiftMs = 0.2;
constexpr double kSubjectJitterMs = 0.15;
constexpr double kTargetGain = 2.5;
constexpr double kTargetDc = 0.4;

double bump(double t, double centre, double half_width) {
  const double x = (t - centre) / half_width;
  if (std::abs(x) >= 1.0) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

struct SubjectProfile {
  std::array<double, kWaves.size()> amplitude_offsets{};
  double latency_jitter_ms = 0.0;
};

SubjectProfile draw_subject(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  SubjectProfile p;
  for (double& a : p.amplitude_offsets) a = cfg.subject_noise * normal(rng);
  p.latency_jitter_ms = cfg.subject_noise * kSubjectJitterMs * normal(rng);
  return p;
}

double clean_value(double t, const SynthConfig& cfg, const SubjectProfile& subject, Side side,
                   ClassLabel label) {
  const double ts = t - subject.latency_jitter_ms;
  double v = base_waveform(ts);
  for (std::size_t k = 0; k < kWaves.size(); ++k) {
    v += subject.amplitude_offsets[k] * bump(ts, kWaves[k].latency_ms, kWaves[k].half_width_ms);
  }
  if (label == ClassLabel::Tinnitus) v += cfg.class_effect * class_template(ts);
  v += cfg.side_effect * (side == Side::Right ? 1.0 : -1.0) * side_template(ts);
  return v;
}

RawSignal record(const SynthConfig& cfg, const SubjectProfile& subject, std::string subject_id,
                 std::string dataset_id, Side side, ClassLabel label, std::size_t points,
                 double duration_ms, double gain, double dc, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  RawSignal s;
  s.subject_id = std::move(subject_id);
  s.dataset_id = std::move(dataset_id);
  s.side = side;
  s.class_label = label;
  s.values.resize(points);
  const double dt = duration_ms / static_cast<double>(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double t = static_cast<double>(k) * dt;
    s.values[k] = gain * (clean_value(t, cfg, subject, side, label) +
                          cfg.observation_noise * normal(rng)) +
                  dc;
  }
  return s;
}

std::string subject_name(char prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%03zu", prefix, index + 1);
  return buf;
}

}  // namespace

double base_waveform(double t_ms) {
  double v = 0.0;
  for (const Wave& w : kWaves) v += w.amplitude * bump(t_ms, w.latency_ms, w.half_width_ms);
  return v;
}

double class_template(double t_ms) { return -bump(t_ms, kWaves[0].latency_ms, kWaves[0].half_width_ms); }

double side_template(double t_ms) {
  return 0.5 * (base_waveform(t_ms - kSideShiftMs) - base_waveform(t_ms + kSideShiftMs));
}

void SynthConfig::validate() const {
  if (n_subjects_source < 1 || n_subjects_target < 1) {
    throw Error(ErrorCode::InvalidConfig, "subject counts must be positive");
  }
  if (source_signals < n_subjects_source) {
    throw Error(ErrorCode::InvalidConfig, "every source subject needs at least one signal");
  }
  if (source_points < 8 || target_points < 8) {
    throw Error(ErrorCode::InvalidConfig, "signals need at least 8 points");
  }
  if (class_effect < 0.0 || side_effect < 0.0 || subject_noise < 0.0 || observation_noise < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "effect and noise amplitudes must be >= 0");
  }
  if (!(source_duration_ms > 0.0) || !(target_duration_ms > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "durations must be positive");
  }
}

SyntheticData generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SyntheticData data;

  // Subjects alternate class; sides follow a period-4 pattern so side and class
  // are uncorrelated. Extra signals go to the leading subjects, which
  // alternate class, so class totals differ by at most one signal.
  const std::size_t base_count = cfg.source_signals / cfg.n_subjects_source;
  const std::size_t extra = cfg.source_signals % cfg.n_subjects_source;
  data.source.reserve(cfg.source_signals);
  for (std::size_t s = 0; s < cfg.n_subjects_source; ++s) {
    const auto label = static_cast<ClassLabel>(s % 2);
    const auto side = static_cast<Side>((s / 2) % 2);
    const SubjectProfile profile = draw_subject(cfg, rng);
    const std::size_t count = base_count + (s < extra ? 1 : 0);
    for (std::size_t r = 0; r < count; ++r) {
      data.source.push_back(record(cfg, profile, subject_name('S', s), "source", side, label,
                                   cfg.source_points, cfg.source_duration_ms, 1.0, 0.0, rng));
    }
  }

  data.target.reserve(2 * cfg.n_subjects_target);
  for (std::size_t s = 0; s < cfg.n_subjects_target; ++s) {
    const auto label = static_cast<ClassLabel>(s % 2);
    const SubjectProfile profile = draw_subject(cfg, rng);
    for (Side side : {Side::Left, Side::Right}) {
      data.target.push_back(record(cfg, profile, subject_name('T', s), "target", side, label,
                                   cfg.target_points, cfg.target_duration_ms, kTargetGain,
                                   kTargetDc, rng));
    }
  }
  return data;
}

}  // namespace smeta
