#pragma once

// Dataset records and the LSDS-DATA v1 text format:
//
//   LSDS-DATA v1
//   object_id,scenario,sequence,time,H,dH_dt,...,dA_n_dt,<label|v_slip>
//   book,static,0,0.0399999991,...
//
// Numeric columns carry float32 precision (9 significant digits), so samples
// built with quantize() survive a write/read cycle bit for bit.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lsds/error.hpp"
#include "lsds/features.hpp"

namespace lsds {

enum class Scenario { Static, Grasp, Slip, Rotation, Slide };

inline std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::Static: return "static";
    case Scenario::Grasp: return "grasp";
    case Scenario::Slip: return "slip";
    case Scenario::Rotation: return "rotation";
    case Scenario::Slide: return "slide";
  }
  return "?";
}

inline std::optional<Scenario> parse_scenario(std::string_view s) {
  if (s == "static") return Scenario::Static;
  if (s == "grasp") return Scenario::Grasp;
  if (s == "slip") return Scenario::Slip;
  if (s == "rotation") return Scenario::Rotation;
  if (s == "slide") return Scenario::Slide;
  return std::nullopt;
}

struct DetectionSample {
  FeatureVector features;
  int label = 0;  // 0 = no slip, 1 = slip
  std::string object_id;
  Scenario scenario = Scenario::Static;
  std::uint32_t sequence = 0;  // contiguous stream the sample belongs to

  friend bool operator==(const DetectionSample&, const DetectionSample&) = default;
};

struct SeveritySample {
  FeatureVector features;
  double v_slip = 0.0;  // cm/s
  std::string object_id;
  std::uint32_t sequence = 0;

  friend bool operator==(const SeveritySample&, const SeveritySample&) = default;
};

inline constexpr std::string_view kDatasetMagic = "LSDS-DATA v1";

// The volatile store keeps the rounding: g++ 11 at -O3 SLP-vectorizes the
// double->float->double pair inside the feature renderer and loses it.
inline double to_float32(double v) {
  volatile float f = static_cast<float>(v);
  return static_cast<double>(f);
}

inline FeatureVector quantize(FeatureVector v) {
  auto a = as_array(v);
  for (double& x : a) x = to_float32(x);
  return from_array(a, to_float32(v.timestamp));
}

namespace detail {

inline void write_float(std::ostream& os, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, static_cast<float>(v), std::chars_format::general, 9);
  os.write(buf, res.ptr - buf);
}

inline std::string header_line(std::string_view annotation) {
  std::string h = "object_id,scenario,sequence,time";
  for (auto name : combined_feature_names()) {
    h += ',';
    h += name;
  }
  h += ',';
  h += annotation;
  return h;
}

inline void write_common(std::ostream& os, std::string_view object_id, Scenario scenario,
                         std::uint32_t sequence, const FeatureVector& fv) {
  os << object_id << ',' << to_string(scenario) << ',' << sequence << ',';
  write_float(os, fv.timestamp);
  for (double x : as_array(fv)) {
    os << ',';
    write_float(os, x);
  }
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_float(std::string_view s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError("malformed number '" + std::string(s) + "'", line);
  }
  return to_float32(v);
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t line) {
  Int v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError("malformed integer '" + std::string(s) + "'", line);
  }
  return v;
}

inline void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Reads the two header lines and calls `row` for every data row with its
// split columns and line number.
template <typename RowFn>
void read_rows(std::istream& is, std::string_view annotation, RowFn&& row) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError("empty dataset", lineno);
  strip_cr(line);
  if (line != kDatasetMagic) throw ParseError("expected '" + std::string(kDatasetMagic) + "'", lineno);
  ++lineno;
  if (!std::getline(is, line)) throw ParseError("missing header row", lineno);
  strip_cr(line);
  const std::string expected = header_line(annotation);
  if (line != expected) throw ParseError("unexpected header, expected '" + expected + "'", lineno);
  const std::size_t ncols = 4 + kNumFeatures + 1;
  while (std::getline(is, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto cols = split_commas(line);
    if (cols.size() != ncols) {
      throw ParseError("row " + std::to_string(lineno - 2) + " has " + std::to_string(cols.size()) +
                           " columns, expected " + std::to_string(ncols),
                       lineno);
    }
    row(cols, lineno);
  }
}

inline FeatureVector parse_features(const std::vector<std::string_view>& cols, std::size_t line) {
  std::array<double, kNumFeatures> a{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) a[i] = parse_float(cols[4 + i], line);
  return from_array(a, parse_float(cols[3], line));
}

inline Scenario parse_scenario_col(std::string_view s, std::size_t line) {
  auto sc = parse_scenario(s);
  if (!sc) throw ParseError("unknown scenario '" + std::string(s) + "'", line);
  return *sc;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return is;
}

}  // namespace detail

inline void write_dataset(std::ostream& os, std::span<const DetectionSample> samples) {
  os << kDatasetMagic << '\n' << detail::header_line("label") << '\n';
  for (const auto& s : samples) {
    detail::write_common(os, s.object_id, s.scenario, s.sequence, s.features);
    os << ',' << s.label << '\n';
  }
}

inline void write_dataset(std::ostream& os, std::span<const SeveritySample> samples) {
  os << kDatasetMagic << '\n' << detail::header_line("v_slip") << '\n';
  for (const auto& s : samples) {
    detail::write_common(os, s.object_id, Scenario::Slide, s.sequence, s.features);
    os << ',';
    detail::write_float(os, s.v_slip);
    os << '\n';
  }
}

inline std::vector<DetectionSample> read_detection_dataset(std::istream& is) {
  std::vector<DetectionSample> out;
  detail::read_rows(is, "label", [&](const std::vector<std::string_view>& cols, std::size_t line) {
    DetectionSample s;
    s.object_id = std::string(cols[0]);
    s.scenario = detail::parse_scenario_col(cols[1], line);
    s.sequence = detail::parse_int<std::uint32_t>(cols[2], line);
    s.features = detail::parse_features(cols, line);
    s.label = detail::parse_int<int>(cols.back(), line);
    if (s.label != 0 && s.label != 1) throw ParseError("label must be 0 or 1", line);
    out.push_back(std::move(s));
  });
  return out;
}

inline std::vector<SeveritySample> read_severity_dataset(std::istream& is) {
  std::vector<SeveritySample> out;
  detail::read_rows(is, "v_slip", [&](const std::vector<std::string_view>& cols, std::size_t line) {
    SeveritySample s;
    s.object_id = std::string(cols[0]);
    detail::parse_scenario_col(cols[1], line);
    s.sequence = detail::parse_int<std::uint32_t>(cols[2], line);
    s.features = detail::parse_features(cols, line);
    s.v_slip = detail::parse_float(cols.back(), line);
    if (!(s.v_slip >= 0.0)) throw ParseError("v_slip must be non-negative", line);
    out.push_back(std::move(s));
  });
  return out;
}

template <typename Sample>
void write_dataset(const std::string& path, std::span<const Sample> samples) {
  auto os = detail::open_out(path);
  write_dataset(os, samples);
  if (!os) throw IoError("write to '" + path + "' failed");
}

inline void write_dataset(const std::string& path, const std::vector<DetectionSample>& s) {
  write_dataset<DetectionSample>(path, std::span<const DetectionSample>(s));
}
inline void write_dataset(const std::string& path, const std::vector<SeveritySample>& s) {
  write_dataset<SeveritySample>(path, std::span<const SeveritySample>(s));
}

inline std::vector<DetectionSample> read_detection_dataset(const std::string& path) {
  auto is = detail::open_in(path);
  return read_detection_dataset(is);
}

inline std::vector<SeveritySample> read_severity_dataset(const std::string& path) {
  auto is = detail::open_in(path);
  return read_severity_dataset(is);
}

enum class DatasetKind { Detection, Severity };

// Peeks at the header to tell the two dataset kinds apart.
inline DatasetKind sniff_dataset(const std::string& path) {
  auto is = detail::open_in(path);
  std::string magic, header;
  std::getline(is, magic);
  std::getline(is, header);
  detail::strip_cr(magic);
  detail::strip_cr(header);
  if (magic != kDatasetMagic) throw ParseError("not an LSDS-DATA v1 file", 1);
  if (header == detail::header_line("label")) return DatasetKind::Detection;
  if (header == detail::header_line("v_slip")) return DatasetKind::Severity;
  throw ParseError("unrecognised header", 2);
}

}  // namespace lsds
