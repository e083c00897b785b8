#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stairmod/core.hpp"
#include "stairmod/kdtree.hpp"
#include "stairmod/rng.hpp"

// Post-prediction staircase modeling: group labeled treads, fit a plane to
// each, take the inlier mean as the central point, rotate central points so
// the nearest tread (and riser) line up with the camera axes, then read step
// depth and height off the Z and Y differences of neighboring central points.

namespace stairmod::model {

struct StepGroup {
  int step_index = 0;
  LabeledCloud points;
};

inline constexpr std::size_t kDefaultMinGroupPoints = 20;

namespace detail {

inline std::vector<StepGroup> group_labels(const LabeledCloud& cloud, bool risers, std::size_t min_points) {
  std::map<int, LabeledCloud> by_label;
  for (const auto& p : cloud.points) {
    if (risers ? is_riser(p.label) : is_tread(p.label)) by_label[std::abs(p.label)].points.push_back(p);
  }
  std::vector<StepGroup> out;
  for (auto& [k, pts] : by_label) {
    if (pts.size() < min_points) continue;
    pts.frame = cloud.frame;
    out.push_back({k, std::move(pts)});
  }
  return out;
}

inline std::vector<Vec3> positions(const LabeledCloud& cloud) {
  std::vector<Vec3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud.points) out.push_back(p.position);
  return out;
}

struct Pca {
  Vec3 mean;
  Vec3 eigenvalues;  // ascending
  Mat3 eigenvectors;  // columns match eigenvalues
};

template <typename IndexRange>
Pca pca(std::span<const Vec3> pts, const IndexRange& idx) {
  Vec3 mean = Vec3::Zero();
  std::size_t n = 0;
  for (auto i : idx) {
    mean += pts[i];
    ++n;
  }
  mean /= static_cast<double>(n);
  Mat3 cov = Mat3::Zero();
  for (auto i : idx) {
    const Vec3 d = pts[i] - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  return {mean, es.eigenvalues(), es.eigenvectors()};
}

struct AllIndices {
  std::size_t n;
  struct It {
    std::size_t i;
    std::size_t operator*() const { return i; }
    It& operator++() {
      ++i;
      return *this;
    }
    bool operator!=(const It& o) const { return i != o.i; }
  };
  It begin() const { return {0}; }
  It end() const { return {n}; }
};

/// Flips `n` into the -Y half-space; falls back to -Z then -X when n is
/// (numerically) perpendicular to Y.
inline Vec3 orient_up(Vec3 n) {
  for (int axis : {1, 2, 0}) {
    if (std::abs(n[axis]) > 1e-12) {
      if (n[axis] > 0) n = -n;
      return n;
    }
  }
  return n;
}

}  // namespace detail

/// Partitions tread points (label > 0) by label, dropping groups smaller than
/// `min_points`. Groups come back sorted by step index.
inline std::vector<StepGroup> group_by_step(const LabeledCloud& cloud, std::size_t min_points = kDefaultMinGroupPoints) {
  auto groups = detail::group_labels(cloud, false, min_points);
  if (groups.empty()) {
    const bool any = std::any_of(cloud.points.begin(), cloud.points.end(), [](const Point& p) { return is_tread(p.label); });
    throw Error(ErrorKind::NoTreadsDetected,
                any ? "no tread group reaches " + std::to_string(min_points) + " points" : "cloud has no tread labels");
  }
  return groups;
}

struct RansacParams {
  int max_iterations = 200;
  double inlier_threshold = 0.008;
  double min_inlier_fraction = 0.5;
  std::uint64_t seed = 0;
};

/// Plane n . p = offset with unit normal.
struct PlaneFit {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  std::vector<std::size_t> inliers;

  double distance(const Vec3& p) const { return std::abs(normal.dot(p) - offset); }
};

/// Least-squares plane through the given points (smallest PCA axis), normal
/// oriented with detail::orient_up.
inline PlaneFit fit_plane_least_squares(std::span<const Vec3> pts, const std::vector<std::size_t>& idx) {
  if (idx.size() < 3) throw Error(ErrorKind::InsufficientPoints, "plane fit needs >= 3 points");
  const auto pc = detail::pca(pts, idx);
  PlaneFit fit;
  fit.normal = detail::orient_up(pc.eigenvectors.col(0).normalized());
  fit.offset = fit.normal.dot(pc.mean);
  fit.inliers = idx;
  return fit;
}

/// Three-point-hypothesis RANSAC. The best hypothesis maximizes inlier count,
/// ties go to the lower mean inlier distance; the returned plane is the
/// least-squares refit over that hypothesis' inliers.
inline PlaneFit ransac_plane(std::span<const Vec3> pts, const RansacParams& params) {
  if (params.max_iterations < 1) throw Error(ErrorKind::InvalidArgument, "max_iterations must be >= 1");
  if (!(params.inlier_threshold > 0)) throw Error(ErrorKind::InvalidArgument, "inlier_threshold must be > 0");
  const std::size_t n = pts.size();
  if (n < 3) throw Error(ErrorKind::InsufficientPoints, "RANSAC needs >= 3 points, got " + std::to_string(n));
  {
    const auto pc = detail::pca(pts, detail::AllIndices{n});
    const double scale = std::max(pc.eigenvalues[2], 1e-300);
    if (pc.eigenvalues[1] <= 1e-12 * scale) throw Error(ErrorKind::InsufficientPoints, "points are collinear");
  }

  Rng rng(params.seed);
  std::size_t best_count = 0;
  double best_mean = std::numeric_limits<double>::infinity();
  Vec3 best_n = Vec3::Zero();
  double best_d = 0.0;
  for (int it = 0; it < params.max_iterations; ++it) {
    const std::size_t a = rng.index(n);
    std::size_t b = rng.index(n - 1);
    if (b >= a) ++b;
    std::size_t c = rng.index(n - 2);
    for (std::size_t skip : {std::min(a, b), std::max(a, b)})
      if (c >= skip) ++c;
    const Vec3 cross = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    const double len = cross.norm();
    if (!(len > 1e-12)) continue;
    const Vec3 nrm = cross / len;
    const double off = nrm.dot(pts[a]);
    std::size_t count = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dist = std::abs(nrm.dot(pts[i]) - off);
      if (dist <= params.inlier_threshold) {
        ++count;
        sum += dist;
      }
    }
    const double mean = count ? sum / static_cast<double>(count) : std::numeric_limits<double>::infinity();
    if (count > best_count || (count == best_count && count > 0 && mean < best_mean)) {
      best_count = count;
      best_mean = mean;
      best_n = nrm;
      best_d = off;
    }
  }
  if (best_count < 3) throw Error(ErrorKind::NoPlaneFound, "no hypothesis with >= 3 inliers");
  const double fraction = static_cast<double>(best_count) / static_cast<double>(n);
  if (fraction < params.min_inlier_fraction) {
    throw Error(ErrorKind::NoPlaneFound, "best inlier fraction " + std::to_string(fraction) + " below minimum");
  }
  std::vector<std::size_t> inliers;
  inliers.reserve(best_count);
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(best_n.dot(pts[i]) - best_d) <= params.inlier_threshold) inliers.push_back(i);
  return fit_plane_least_squares(pts, inliers);
}

/// Per-point PCA normal over the k nearest neighbors, oriented toward
/// `viewpoint`. Neighborhoods of rank < 2 yield no normal.
inline std::vector<std::optional<Vec3>> estimate_point_normals(const LabeledCloud& cloud, std::size_t k,
                                                               const Vec3& viewpoint = Vec3::Zero()) {
  if (k < 3) throw Error(ErrorKind::InvalidArgument, "k must be >= 3");
  if (cloud.size() < k) {
    throw Error(ErrorKind::InsufficientPoints,
                "cloud has " + std::to_string(cloud.size()) + " points, k = " + std::to_string(k));
  }
  const auto pts = detail::positions(cloud);
  const KdTree tree(pts);
  std::vector<std::optional<Vec3>> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto nb = tree.knn(pts[i], k);
    const auto pc = detail::pca(std::span<const Vec3>(pts), nb);
    const double scale = pc.eigenvalues[2];
    if (!(scale > 0) || pc.eigenvalues[1] <= 1e-12 * scale) continue;
    Vec3 n = pc.eigenvectors.col(0).normalized();
    if (n.dot(viewpoint - pts[i]) < 0) n = -n;
    out[i] = n;
  }
  return out;
}

enum class CorrectionSource { Riser, Pca, None };

constexpr std::string_view to_string(CorrectionSource s) {
  switch (s) {
    case CorrectionSource::Riser: return "riser";
    case CorrectionSource::Pca: return "pca";
    case CorrectionSource::None: return "none";
  }
  return "none";
}

struct Correction {
  Rotation rotation;
  CorrectionSource source = CorrectionSource::None;
};

inline constexpr double kDegenerateRiserAngleDeg = 5.0;

/// Rotation that levels the nearest tread. With a riser normal the tread
/// normal goes to -Y and the riser normal (made orthogonal to the tread) to
/// -Z. Without one, PCA of the tread inliers supplies the frame: the
/// least-variance axis goes to -Y and the largest-variance axis, taken with a
/// positive X component, goes to +X.
inline Correction estimate_correction(const Vec3& tread_normal, const std::optional<Vec3>& riser_normal,
                                      std::span<const Vec3> tread_inliers) {
  const Vec3 up = detail::orient_up(tread_normal.normalized());
  if (riser_normal) {
    const Vec3 r = riser_normal->normalized();
    const double cos_limit = std::cos(kDegenerateRiserAngleDeg * std::numbers::pi / 180.0);
    if (std::abs(up.dot(r)) >= cos_limit) {
      throw Error(ErrorKind::DegenerateGeometry, "tread and riser normals within 5 degrees of parallel");
    }
    Vec3 toward = (r - r.dot(up) * up).normalized();
    return {rotation_from_frames(up, toward, kUp, kTowardCamera), CorrectionSource::Riser};
  }
  if (tread_inliers.size() < 3) throw Error(ErrorKind::InsufficientPoints, "PCA correction needs >= 3 tread points");
  const auto pc = detail::pca(tread_inliers, detail::AllIndices{tread_inliers.size()});
  const Vec3 normal = detail::orient_up(pc.eigenvectors.col(0).normalized());
  Vec3 major = pc.eigenvectors.col(2);
  major = (major - major.dot(normal) * normal).normalized();
  if (major.x() < 0) major = -major;
  return {rotation_from_frames(normal, major, kUp, kRight), CorrectionSource::Pca};
}

struct StepParameters {
  double depth = 0.0;
  double height = 0.0;
  /// Median signed rise per step is toward -Y (up in the camera frame).
  bool ascending = true;
  std::vector<double> pair_depths;
  std::vector<double> pair_heights;
};

inline double median(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorKind::EmptyInput, "median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct IndexedPoint {
  int step_index;
  Vec3 point;
};

/// Depth and height from neighboring central points: per adjacent pair,
/// dZ / N and |dY| / N with N the step-index gap, aggregated by median.
inline StepParameters step_parameters(std::vector<IndexedPoint> cps) {
  if (cps.size() < 2) throw Error(ErrorKind::InsufficientSteps, "need >= 2 central points");
  std::sort(cps.begin(), cps.end(), [](const auto& a, const auto& b) { return a.step_index < b.step_index; });
  StepParameters out;
  std::vector<double> signed_rise;
  for (std::size_t i = 1; i < cps.size(); ++i) {
    const int gap = cps[i].step_index - cps[i - 1].step_index;
    if (gap == 0) throw Error(ErrorKind::InvalidArgument, "duplicate step index " + std::to_string(cps[i].step_index));
    const Vec3 delta = cps[i].point - cps[i - 1].point;
    out.pair_depths.push_back(delta.z() / gap);
    out.pair_heights.push_back(std::abs(delta.y()) / gap);
    signed_rise.push_back(delta.y() / gap);
  }
  out.depth = median(out.pair_depths);
  out.height = median(out.pair_heights);
  out.ascending = median(signed_rise) <= 0;
  return out;
}

struct TraversableRegion {
  int step_index = 0;
  LabeledCloud inliers;
  Vec3 normal = kUp;
  Vec3 central_point = Vec3::Zero();
  /// central_point after the correction rotation.
  Vec3 corrected_central_point = Vec3::Zero();
};

struct StageTimings {
  double group = 0, fit = 0, correct = 0, params = 0;
  double total() const { return group + fit + correct + params; }
};

struct ModelOptions {
  RansacParams ransac;
  bool correct = true;
  std::size_t min_group_points = kDefaultMinGroupPoints;
};

struct StairModelResult {
  std::vector<TraversableRegion> regions;
  double step_depth = 0.0;
  double step_height = 0.0;
  bool ascending = true;
  Rotation correction;
  CorrectionSource correction_source = CorrectionSource::None;
  StageTimings timings;
};

namespace detail {

inline std::uint64_t group_seed(std::uint64_t seed, int label) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(static_cast<std::int64_t>(label))));
}

class StageClock {
 public:
  StageClock() : last_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_;
};

}  // namespace detail

/// Full modeling pipeline over a labeled cloud (labels from ground truth or
/// any external predictor).
inline StairModelResult detect_and_model(const LabeledCloud& cloud, const ModelOptions& opt = {}) {
  StairModelResult result;
  detail::StageClock clock;

  std::vector<StepGroup> groups;
  try {
    groups = group_by_step(cloud, opt.min_group_points);
  } catch (const Error& e) {
    rethrow_with_context(e, "group");
  }
  result.timings.group = clock.lap();

  for (auto& g : groups) {
    const auto pts = detail::positions(g.points);
    RansacParams rp = opt.ransac;
    rp.seed = detail::group_seed(opt.ransac.seed, g.step_index);
    PlaneFit fit;
    try {
      fit = ransac_plane(pts, rp);
    } catch (const Error& e) {
      rethrow_with_context(e, "fit(step " + std::to_string(g.step_index) + ")");
    }
    TraversableRegion region;
    region.step_index = g.step_index;
    region.normal = fit.normal;
    region.inliers.frame = cloud.frame;
    region.inliers.points.reserve(fit.inliers.size());
    for (auto i : fit.inliers) region.inliers.points.push_back(g.points.points[i]);
    region.central_point = centroid(region.inliers);
    result.regions.push_back(std::move(region));
  }
  result.timings.fit = clock.lap();

  if (opt.correct) {
    const auto& nearest = result.regions.front();
    std::optional<Vec3> riser_normal;
    const auto risers = detail::group_labels(cloud, true, std::max<std::size_t>(opt.min_group_points, 3));
    for (const auto& r : risers) {
      if (r.step_index != nearest.step_index) continue;
      const auto pts = detail::positions(r.points);
      RansacParams rp = opt.ransac;
      rp.seed = detail::group_seed(opt.ransac.seed, -r.step_index);
      try {
        const auto fit = ransac_plane(pts, rp);
        Vec3 n = fit.normal;
        Vec3 center = Vec3::Zero();
        for (auto i : fit.inliers) center += pts[i];
        center /= static_cast<double>(fit.inliers.size());
        if (n.dot(center) > 0) n = -n;  // face the camera
        riser_normal = n;
      } catch (const Error&) {
        // unusable riser: fall through to the PCA path
      }
    }
    try {
      const auto inliers = detail::positions(nearest.inliers);
      const auto c = estimate_correction(nearest.normal, riser_normal, inliers);
      result.correction = c.rotation;
      result.correction_source = c.source;
    } catch (const Error& e) {
      rethrow_with_context(e, "correct");
    }
  }
  for (auto& r : result.regions) r.corrected_central_point = result.correction * r.central_point;
  result.timings.correct = clock.lap();

  std::vector<IndexedPoint> cps;
  for (const auto& r : result.regions) cps.push_back({r.step_index, r.corrected_central_point});
  try {
    const auto sp = step_parameters(cps);
    result.step_depth = sp.depth;
    result.step_height = sp.height;
    result.ascending = sp.ascending;
  } catch (const Error& e) {
    rethrow_with_context(e, "params");
  }
  result.timings.params = clock.lap();
  return result;
}

}  // namespace stairmod::model
