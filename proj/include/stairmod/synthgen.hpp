#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stairmod/core.hpp"
#include "stairmod/dataset_io.hpp"
#include "stairmod/rng.hpp"

namespace stairmod::synth {

/// Staircase scene description. Geometry is built in a stair-aligned frame
/// that shares the camera axis convention (ground plane at Y = 0, tread k at
/// Y = -k * step_height, the first riser at Z = first_riser_distance), then
/// mapped into the camera frame by p_cam = camera_rotation * p + camera_translation.
struct StairSpec {
  int step_count = 5;
  double step_height = 0.15;
  double step_depth = 0.30;
  double step_width = 1.0;
  bool has_risers = true;
  double points_per_square_meter = 10000.0;
  Rotation camera_rotation;
  Vec3 camera_translation = Vec3::Zero();
  /// Standard deviation of Gaussian noise applied along each camera ray.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  double first_riser_distance = 1.0;
  /// Depth of the ground strip in front of the first riser; 0 disables it.
  double ground_depth = 0.5;
};

struct StaircaseTruth {
  int step_count = 0;
  double step_height = 0.0;
  double step_depth = 0.0;
  double step_width = 0.0;
  bool has_risers = false;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  /// Geometric tread-rectangle centers in the camera frame, index 0 = step 1.
  std::vector<Vec3> central_points;
  std::vector<Vec3> tread_normals;
  std::vector<std::optional<Vec3>> riser_normals;
  std::vector<std::size_t> tread_point_counts;
  Rotation applied_rotation;
  Vec3 applied_translation = Vec3::Zero();
};

struct Scene {
  LabeledCloud cloud;
  StaircaseTruth truth;
};

/// Camera-from-stair rotation: yaw about Y (vertical), then pitch about X,
/// then roll about Z. Angles in radians.
inline Rotation pose_from_angles(double yaw, double pitch, double roll = 0.0) {
  return Rotation::about_axis(Vec3::UnitY(), yaw) * Rotation::about_axis(Vec3::UnitX(), pitch) *
         Rotation::about_axis(Vec3::UnitZ(), roll);
}

namespace detail {

inline int grid_count(double length, double density) {
  return static_cast<int>(std::lround(length * std::sqrt(density)));
}

// Cell-centered grid over the rectangle origin + s*axis_u + t*axis_v,
// s in [0, len_u], t in [0, len_v]. The sample mean is exactly the center.
inline std::size_t sample_rectangle(std::vector<Point>& out, const Vec3& origin, const Vec3& axis_u,
                                    double len_u, const Vec3& axis_v, double len_v, double density,
                                    const Vec3& normal, Label label, Rgb color) {
  const int nu = grid_count(len_u, density);
  const int nv = grid_count(len_v, density);
  if (nu <= 0 || nv <= 0) return 0;
  for (int i = 0; i < nu; ++i) {
    const double s = (i + 0.5) * len_u / nu;
    for (int j = 0; j < nv; ++j) {
      const double t = (j + 0.5) * len_v / nv;
      Point p;
      p.position = origin + s * axis_u + t * axis_v;
      p.normal = normal;
      p.label = label;
      p.color = color;
      out.push_back(p);
    }
  }
  return static_cast<std::size_t>(nu) * static_cast<std::size_t>(nv);
}

}  // namespace detail

inline Scene generate(const StairSpec& spec) {
  if (spec.step_count < 2) throw Error(ErrorKind::DegenerateSpec, "step_count must be >= 2");
  if (!(spec.step_height > 0 && spec.step_depth > 0 && spec.step_width > 0)) {
    throw Error(ErrorKind::DegenerateSpec, "step dimensions must be positive");
  }
  if (!(spec.noise_sigma >= 0)) throw Error(ErrorKind::DegenerateSpec, "noise_sigma must be >= 0");
  if (!(spec.points_per_square_meter > 0)) throw Error(ErrorKind::DegenerateSpec, "density must be positive");

  const double h = spec.step_height, d = spec.step_depth, w = spec.step_width;
  const double z0 = spec.first_riser_distance;
  const double rho = spec.points_per_square_meter;
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  constexpr Rgb kTreadColor{200, 190, 180}, kRiserColor{150, 140, 130}, kGroundColor{90, 90, 90};

  Scene scene;
  auto& pts = scene.cloud.points;
  auto& truth = scene.truth;
  truth.step_count = spec.step_count;
  truth.step_height = h;
  truth.step_depth = d;
  truth.step_width = w;
  truth.has_risers = spec.has_risers;
  truth.noise_sigma = spec.noise_sigma;
  truth.seed = spec.seed;
  truth.applied_rotation = spec.camera_rotation;
  truth.applied_translation = spec.camera_translation;

  if (spec.ground_depth > 0) {
    detail::sample_rectangle(pts, Vec3(-w / 2, 0.0, z0 - spec.ground_depth), ex, w, ez, spec.ground_depth, rho,
                             kUp, 0, kGroundColor);
  }
  for (int k = 1; k <= spec.step_count; ++k) {
    if (spec.has_risers) {
      // riser -k spans from the tread below (or ground) up to tread k
      detail::sample_rectangle(pts, Vec3(-w / 2, -(k - 1) * h, z0 + (k - 1) * d), ex, w, -ey, h, rho,
                               kTowardCamera, -k, kRiserColor);
    }
    const std::size_t n = detail::sample_rectangle(pts, Vec3(-w / 2, -k * h, z0 + (k - 1) * d), ex, w, ez, d,
                                                   rho, kUp, k, kTreadColor);
    if (n == 0) {
      throw Error(ErrorKind::DegenerateSpec, "density yields no points on tread " + std::to_string(k));
    }
    truth.tread_point_counts.push_back(n);
    truth.central_points.push_back(Vec3(0.0, -k * h, z0 + (k - 0.5) * d));
    truth.tread_normals.push_back(kUp);
    truth.riser_normals.push_back(spec.has_risers ? std::optional<Vec3>(kTowardCamera) : std::nullopt);
  }

  const Rotation& r = spec.camera_rotation;
  const Vec3& t = spec.camera_translation;
  for (auto& p : pts) {
    p.position = r * p.position + t;
    p.normal = r * *p.normal;
  }
  for (auto& c : truth.central_points) c = r * c + t;
  for (auto& n : truth.tread_normals) n = r * n;
  for (auto& n : truth.riser_normals)
    if (n) n = r * *n;

  if (spec.noise_sigma > 0) {
    Rng rng(spec.seed);
    for (auto& p : pts) {
      const double dist = p.position.norm();
      const double offset = rng.normal(0.0, spec.noise_sigma);
      if (dist > 0) p.position += offset * (p.position / dist);
    }
  }
  return scene;
}

/// Keeps points whose normal faces `camera_origin`.
inline LabeledCloud cull_backfaces(const LabeledCloud& cloud, const Vec3& camera_origin = Vec3::Zero()) {
  LabeledCloud out;
  out.frame = cloud.frame;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    if (!p.normal) throw Error(ErrorKind::MissingNormal, "point " + std::to_string(i) + " has no normal");
    if (p.normal->dot(p.position - camera_origin) < 0) out.points.push_back(p);
  }
  return out;
}

// Truth sidecar: key=value text, one key per line, vectors space-separated.
// Values are written with round-trip precision.

namespace detail {

inline std::string fmt_exact(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string fmt_vec(const Vec3& v) {
  return fmt_exact(v.x()) + ' ' + fmt_exact(v.y()) + ' ' + fmt_exact(v.z());
}

inline std::vector<double> parse_doubles(const std::string& value, std::size_t line_no) {
  std::vector<double> out;
  for (auto field : io::detail::split_fields(value)) {
    out.push_back(io::detail::parse_number<double>(field, line_no, "truth value"));
  }
  return out;
}

inline Vec3 parse_vec(const std::string& value, std::size_t line_no) {
  const auto v = parse_doubles(value, line_no);
  if (v.size() != 3) throw ParseError(line_no, "expected 3 components");
  return {v[0], v[1], v[2]};
}

}  // namespace detail

inline void write_truth(const StaircaseTruth& t, std::ostream& out) {
  using detail::fmt_exact;
  using detail::fmt_vec;
  out << "format=stairmod-truth v1\n";
  out << "step_count=" << t.step_count << '\n';
  out << "step_height=" << fmt_exact(t.step_height) << '\n';
  out << "step_depth=" << fmt_exact(t.step_depth) << '\n';
  out << "step_width=" << fmt_exact(t.step_width) << '\n';
  out << "has_risers=" << (t.has_risers ? 1 : 0) << '\n';
  out << "noise_sigma=" << fmt_exact(t.noise_sigma) << '\n';
  out << "seed=" << t.seed << '\n';
  const Mat3& m = t.applied_rotation.matrix();
  out << "rotation=";
  for (int i = 0; i < 9; ++i) out << (i ? " " : "") << fmt_exact(m(i / 3, i % 3));
  out << '\n';
  out << "translation=" << fmt_vec(t.applied_translation) << '\n';
  for (std::size_t k = 0; k < t.central_points.size(); ++k) {
    const auto idx = std::to_string(k + 1);
    out << "cp" << idx << '=' << fmt_vec(t.central_points[k]) << '\n';
    out << "tread_normal" << idx << '=' << fmt_vec(t.tread_normals[k]) << '\n';
    if (k < t.riser_normals.size() && t.riser_normals[k]) {
      out << "riser_normal" << idx << '=' << fmt_vec(*t.riser_normals[k]) << '\n';
    }
    if (k < t.tread_point_counts.size()) out << "tread_points" << idx << '=' << t.tread_point_counts[k] << '\n';
  }
  out.flush();
  if (!out) throw Error(ErrorKind::IoError, "truth write failure");
}

inline StaircaseTruth read_truth(std::istream& in) {
  StaircaseTruth t;
  std::map<std::string, std::pair<std::string, std::size_t>> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key=value");
    kv[line.substr(0, eq)] = {line.substr(eq + 1), line_no};
  }
  auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(line_no, "missing key '" + key + "'");
    return it->second;
  };
  auto scalar = [&](const std::string& key) {
    const auto& [v, ln] = get(key);
    const auto vals = detail::parse_doubles(v, ln);
    if (vals.size() != 1) throw ParseError(ln, "expected scalar for '" + key + "'");
    return vals[0];
  };
  t.step_count = static_cast<int>(scalar("step_count"));
  t.step_height = scalar("step_height");
  t.step_depth = scalar("step_depth");
  if (kv.count("step_width")) t.step_width = scalar("step_width");
  if (kv.count("has_risers")) t.has_risers = scalar("has_risers") != 0.0;
  if (kv.count("noise_sigma")) t.noise_sigma = scalar("noise_sigma");
  if (kv.count("seed")) t.seed = static_cast<std::uint64_t>(std::stoull(get("seed").first));
  if (kv.count("rotation")) {
    const auto& [v, ln] = get("rotation");
    const auto vals = detail::parse_doubles(v, ln);
    if (vals.size() != 9) throw ParseError(ln, "rotation needs 9 values");
    Mat3 m;
    for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = vals[i];
    // values are stored at full precision so the rotation check still holds
    t.applied_rotation = Rotation::from_matrix(m);
  }
  if (kv.count("translation")) t.applied_translation = detail::parse_vec(get("translation").first, get("translation").second);
  for (int k = 1; k <= t.step_count; ++k) {
    const auto idx = std::to_string(k);
    const auto& cp = get("cp" + idx);
    t.central_points.push_back(detail::parse_vec(cp.first, cp.second));
    const auto& tn = get("tread_normal" + idx);
    t.tread_normals.push_back(detail::parse_vec(tn.first, tn.second).normalized());
    if (auto it = kv.find("riser_normal" + idx); it != kv.end()) {
      t.riser_normals.push_back(detail::parse_vec(it->second.first, it->second.second).normalized());
    } else {
      t.riser_normals.push_back(std::nullopt);
    }
    if (auto it = kv.find("tread_points" + idx); it != kv.end()) {
      t.tread_point_counts.push_back(static_cast<std::size_t>(std::stoull(it->second.first)));
    }
  }
  return t;
}

inline void write_truth_file(const StaircaseTruth& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot create " + path.string());
  write_truth(t, out);
}

inline StaircaseTruth read_truth_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_truth(in);
}

/// "stairs/s.txt" -> "stairs/s.truth"
inline std::filesystem::path truth_path_for(const std::filesystem::path& cloud_path) {
  auto p = cloud_path;
  p.replace_extension(".truth");
  return p;
}

}  // namespace stairmod::synth
