#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "smeta/dataset_io.hpp"
#include "smeta/error.hpp"

namespace smeta {

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line); }

double parse_value(std::string_view field, std::size_t line) {
  double v = 0.0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw Error(ErrorCode::ParseError, at_line(line) + ": bad number '" + std::string(field) + "'");
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::ParseError, at_line(line) + ": non-finite value");
  }
  return v;
}

std::size_t parse_offset(std::string_view field, std::size_t line) {
  std::size_t v = 0;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || ptr != end || field.empty()) {
    throw Error(ErrorCode::ParseError,
                at_line(line) + ": bad parent_offset '" + std::string(field) + "'");
  }
  return v;
}

Side parse_side(std::string_view field, std::size_t line) {
  if (field == "L") return Side::Left;
  if (field == "R") return Side::Right;
  throw Error(ErrorCode::BadEnum, at_line(line) + ": side must be L or R, got '" +
                                      std::string(field) + "'");
}

ClassLabel parse_label(std::string_view field, std::size_t line) {
  if (field == "0") return ClassLabel::Control;
  if (field == "1") return ClassLabel::Tinnitus;
  throw Error(ErrorCode::BadEnum, at_line(line) + ": label must be 0 or 1, got '" +
                                      std::string(field) + "'");
}

struct ParsedRow {
  std::string dataset_id;
  std::string subject_id;
  Side side = Side::Left;
  ClassLabel label = ClassLabel::Control;
  std::vector<double> values;
  std::optional<std::size_t> parent_offset;
};

std::vector<ParsedRow> parse_signal_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 5 || header[0] != "dataset_id" || header[1] != "subject_id" ||
      header[2] != "side" || header[3] != "label") {
    throw Error(ErrorCode::ParseError,
                at_line(1) + ": header must start with dataset_id,subject_id,side,label,v0");
  }
  const bool has_offset = header.back() == "parent_offset";
  const std::size_t n_values = header.size() - 4 - (has_offset ? 1 : 0);
  if (n_values < 1) throw Error(ErrorCode::ParseError, at_line(1) + ": no value columns");
  for (std::size_t j = 0; j < n_values; ++j) {
    if (header[4 + j] != "v" + std::to_string(j)) {
      throw Error(ErrorCode::ParseError, at_line(1) + ": expected column v" + std::to_string(j));
    }
  }

  std::vector<ParsedRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::InconsistentWidth,
                  at_line(line_no) + ": " + std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    ParsedRow row;
    row.dataset_id = std::string(fields[0]);
    row.subject_id = std::string(fields[1]);
    row.side = parse_side(fields[2], line_no);
    row.label = parse_label(fields[3], line_no);
    row.values.reserve(n_values);
    for (std::size_t j = 0; j < n_values; ++j) row.values.push_back(parse_value(fields[4 + j], line_no));
    if (has_offset) row.parent_offset = parse_offset(fields.back(), line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

void check_id(const std::string& id) {
  if (id.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "identifier '" + id + "' contains a separator");
  }
}

void write_header(std::ostream& out, std::size_t n_values, bool with_offset) {
  out << "dataset_id,subject_id,side,label";
  for (std::size_t j = 0; j < n_values; ++j) out << ",v" << j;
  if (with_offset) out << ",parent_offset";
  out << '\n';
}

template <typename Signal>
void write_row_prefix(std::ostream& out, const Signal& s) {
  check_id(s.dataset_id);
  check_id(s.subject_id);
  out << s.dataset_id << ',' << s.subject_id << ',' << (s.side == Side::Left ? 'L' : 'R') << ','
      << static_cast<int>(s.class_label);
  for (double v : s.values) out << ',' << format_double(v);
}

template <typename Signal>
std::size_t common_width(std::span<const Signal> signals) {
  if (signals.empty()) return 1;
  const std::size_t n = signals.front().values.size();
  for (const auto& s : signals) {
    if (s.values.size() != n) {
      throw Error(ErrorCode::InconsistentWidth, "signals in one file must share a length");
    }
  }
  return n;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "number formatting failed");
  return std::string(buf, ptr);
}

std::vector<RawSignal> read_raw_csv(std::istream& in) {
  std::vector<RawSignal> out;
  for (auto& row : parse_signal_csv(in)) {
    out.push_back(RawSignal{std::move(row.values), std::move(row.subject_id), row.side, row.label,
                            std::move(row.dataset_id)});
  }
  return out;
}

std::vector<AlignedSignal> read_aligned_csv(std::istream& in) {
  std::vector<AlignedSignal> out;
  for (auto& row : parse_signal_csv(in)) {
    out.push_back(AlignedSignal{std::move(row.values), std::move(row.subject_id), row.side,
                                row.label, std::move(row.dataset_id),
                                row.parent_offset.value_or(0)});
  }
  return out;
}

void write_raw_csv(std::ostream& out, std::span<const RawSignal> signals) {
  write_header(out, common_width(signals), false);
  for (const auto& s : signals) {
    write_row_prefix(out, s);
    out << '\n';
  }
}

void write_aligned_csv(std::ostream& out, std::span<const AlignedSignal> signals) {
  write_header(out, common_width(signals), true);
  for (const auto& s : signals) {
    write_row_prefix(out, s);
    out << ',' << s.parent_offset << '\n';
  }
}

std::vector<RawSignal> load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_raw_csv(in);
}

std::vector<AlignedSignal> load_aligned(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_aligned_csv(in);
}

void save_dataset(const std::filesystem::path& path, std::span<const RawSignal> signals) {
  std::ostringstream out;
  write_raw_csv(out, signals);
  write_text_file(path, out.str());
}

void save_aligned(const std::filesystem::path& path, std::span<const AlignedSignal> signals) {
  std::ostringstream out;
  write_aligned_csv(out, signals);
  write_text_file(path, out.str());
}

void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> predictions) {
  out << "subject_id,side,true_label,pred_label,score\n";
  for (const auto& p : predictions) {
    out << p.subject_id << ',' << (p.side == Side::Left ? 'L' : 'R') << ','
        << static_cast<int>(p.true_label) << ',' << static_cast<int>(p.predicted) << ','
        << format_double(p.score) << '\n';
  }
}

void write_latent_csv(std::ostream& out, std::span<const LatentRow> rows) {
  const std::size_t width = rows.empty() ? 0 : rows.front().latent.size();
  out << "subject_id,side,label";
  for (std::size_t j = 0; j < width; ++j) out << ",z" << j;
  out << '\n';
  for (const auto& r : rows) {
    out << r.subject_id << ',' << (r.side == Side::Left ? 'L' : 'R') << ','
        << static_cast<int>(r.class_label);
    for (double z : r.latent) out << ',' << format_double(z);
    out << '\n';
  }
}

void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace, ModelVariant variant) {
  const bool siamese = variant == ModelVariant::SAE;
  out << "epoch,mean_support_loss,mean_query_loss,component_cls,component_rec,component_ear";
  if (siamese) out << ",component_adv,component_sub";
  out << '\n';
  for (const auto& row : trace) {
    out << row.epoch << ',' << format_double(row.mean_support_loss) << ','
        << format_double(row.mean_query_loss) << ',' << format_double(row.components.cls) << ','
        << format_double(row.components.rec) << ',' << format_double(row.components.ear);
    if (siamese) {
      out << ',' << format_double(row.components.adv) << ',' << format_double(row.components.sub);
    }
    out << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace smeta
