#pragma once

// CSV readers and writers for signals, predictions, latents and training traces.
//
// Signal CSV header: dataset_id,subject_id,side,label,v0,v1,...[,parent_offset]
// side is L or R, label is 0 or 1. Values are written in shortest round-trip
// decimal form, so save followed by load reproduces every value exactly.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "smeta/inference.hpp"
#include "smeta/meta.hpp"
#include "smeta/signal.hpp"

namespace smeta {

std::vector<RawSignal> read_raw_csv(std::istream& in);
std::vector<AlignedSignal> read_aligned_csv(std::istream& in);
void write_raw_csv(std::ostream& out, std::span<const RawSignal> signals);
void write_aligned_csv(std::ostream& out, std::span<const AlignedSignal> signals);

std::vector<RawSignal> load_dataset(const std::filesystem::path& path);
std::vector<AlignedSignal> load_aligned(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, std::span<const RawSignal> signals);
void save_aligned(const std::filesystem::path& path, std::span<const AlignedSignal> signals);

void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> predictions);
void write_latent_csv(std::ostream& out, std::span<const LatentRow> rows);
void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace, ModelVariant variant);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Writes `content` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace smeta
