#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "stairmod/core.hpp"
#include "stairmod/rng.hpp"

// Text cloud format, one point per line:
//
//   x y z r g b label nx ny nz
//
// Fields are separated by spaces or tabs, lines starting with '#' are
// comments, CRLF is accepted. A normal of "0 0 0" means the point has none.

namespace stairmod::io {

inline constexpr std::string_view kFormatTag = "stairmod-cloud v1";
inline constexpr int kSignificantDigits = 6;

struct ReadStats {
  std::size_t data_lines = 0;
  std::size_t comment_lines = 0;
  /// Nonzero normals that were not unit length and had to be rescaled.
  std::size_t normalized_normals = 0;
};

namespace detail {

// Rounding to 6 significant digits perturbs a unit normal's length by up to
// ~1e-6. Anything beyond this counts as a genuinely non-unit normal.
inline constexpr double kNormalFormatSlack = 1e-5;

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
  T value{};
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line_no, std::string("bad ") + what + " field '" + std::string(field) + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(line_no, std::string("non-finite ") + what);
  }
  return value;
}

inline void append_number(std::string& out, double v) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, kSignificantDigits);
  out.append(buf, ptr);
}

}  // namespace detail

inline Point parse_point_line(std::string_view line, std::size_t line_no, ReadStats* stats = nullptr) {
  const auto f = detail::split_fields(line);
  if (f.size() != 10) {
    throw ParseError(line_no, "expected 10 fields, got " + std::to_string(f.size()));
  }
  Point p;
  for (int i = 0; i < 3; ++i) p.position[i] = detail::parse_number<double>(f[i], line_no, "coordinate");
  std::array<int, 3> rgb{};
  for (int i = 0; i < 3; ++i) {
    rgb[i] = detail::parse_number<int>(f[3 + i], line_no, "color");
    if (rgb[i] < 0 || rgb[i] > 255) throw ParseError(line_no, "color component out of [0,255]");
  }
  p.color = {static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
             static_cast<std::uint8_t>(rgb[2])};
  p.label = detail::parse_number<Label>(f[6], line_no, "label");
  Vec3 n;
  for (int i = 0; i < 3; ++i) n[i] = detail::parse_number<double>(f[7 + i], line_no, "normal");
  if (!n.isZero(0.0)) {
    const double len = n.norm();
    if (std::abs(len - 1.0) > detail::kNormalFormatSlack && stats) ++stats->normalized_normals;
    p.normal = n / len;
  }
  return p;
}

/// Reads a whole cloud. A "# frame=<name>" comment sets the cloud frame.
inline LabeledCloud read_cloud(std::istream& in, ReadStats* stats = nullptr) {
  LabeledCloud cloud;
  ReadStats local;
  ReadStats& st = stats ? *stats : local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    const auto first = view.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    view.remove_prefix(first);
    if (view.front() == '#') {
      ++st.comment_lines;
      constexpr std::string_view key = "# frame=";
      if (view.substr(0, key.size()) == key) cloud.frame = std::string(view.substr(key.size()));
      continue;
    }
    cloud.points.push_back(parse_point_line(view, line_no, &st));
    ++st.data_lines;
  }
  if (in.bad()) throw Error(ErrorKind::IoError, "read failure");
  return cloud;
}

inline std::string format_point_line(const Point& p) {
  std::string out;
  out.reserve(96);
  for (int i = 0; i < 3; ++i) {
    detail::append_number(out, p.position[i]);
    out.push_back(' ');
  }
  out += std::to_string(p.color.r) + ' ' + std::to_string(p.color.g) + ' ' + std::to_string(p.color.b) + ' ';
  out += std::to_string(p.label);
  const Vec3 n = p.normal.value_or(Vec3::Zero());
  for (int i = 0; i < 3; ++i) {
    out.push_back(' ');
    detail::append_number(out, n[i]);
  }
  return out;
}

inline void write_cloud(const LabeledCloud& cloud, std::ostream& out) {
  out << "# " << kFormatTag << '\n';
  out << "# frame=" << cloud.frame << '\n';
  out << "# x y z r g b label nx ny nz\n";
  for (const auto& p : cloud.points) out << format_point_line(p) << '\n';
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write failure");
}

inline LabeledCloud read_cloud_file(const std::filesystem::path& path, ReadStats* stats = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_cloud(in, stats);
}

inline void write_cloud_file(const LabeledCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot create " + path.string());
  write_cloud(cloud, out);
}

/// ASCII PLY with positions and colors. Write-only.
inline void write_ply(const LabeledCloud& cloud, std::ostream& out) {
  out << "ply\nformat ascii 1.0\n";
  out << "comment generated by stairmod\n";
  out << "element vertex " << cloud.size() << '\n';
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  std::string line;
  for (const auto& p : cloud.points) {
    line.clear();
    for (int i = 0; i < 3; ++i) {
      detail::append_number(line, p.position[i]);
      line.push_back(' ');
    }
    line += std::to_string(p.color.r) + ' ' + std::to_string(p.color.g) + ' ' + std::to_string(p.color.b);
    out << line << '\n';
  }
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "write failure");
}

/// Keeps exactly `target` points chosen uniformly without replacement,
/// preserving relative order. Clouds already within budget pass through.
inline LabeledCloud uniform_downsample(const LabeledCloud& cloud, std::size_t target, std::uint64_t seed) {
  if (target == 0) throw Error(ErrorKind::InvalidArgument, "downsample target must be >= 1");
  if (cloud.size() <= target) return cloud;
  Rng rng(seed);
  std::vector<std::size_t> idx(cloud.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // partial Fisher-Yates: first `target` slots become the sample
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.index(idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(target);
  std::sort(idx.begin(), idx.end());
  LabeledCloud out;
  out.frame = cloud.frame;
  out.points.reserve(target);
  for (auto i : idx) out.points.push_back(cloud.points[i]);
  return out;
}

}  // namespace stairmod::io
