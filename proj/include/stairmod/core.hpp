#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stairmod/error.hpp"

namespace stairmod {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Camera frame: X right, Y down, Z forward. "Up" is -Y.
inline const Vec3 kUp{0.0, -1.0, 0.0};
inline const Vec3 kTowardCamera{0.0, 0.0, -1.0};
inline const Vec3 kRight{1.0, 0.0, 0.0};

/// Label codes: 0 = non-step background, k >= 1 = tread of step k (counted
/// from the nearest step), -k = riser directly below tread k.
using Label = std::int32_t;

constexpr bool is_tread(Label l) noexcept { return l > 0; }
constexpr bool is_riser(Label l) noexcept { return l < 0; }

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Point {
  Vec3 position = Vec3::Zero();
  Rgb color;
  Label label = 0;
  std::optional<Vec3> normal;
};

inline bool operator==(const Point& a, const Point& b) {
  return a.position == b.position && a.color == b.color && a.label == b.label &&
         a.normal.has_value() == b.normal.has_value() && (!a.normal || *a.normal == *b.normal);
}

struct LabeledCloud {
  std::vector<Point> points;
  std::string frame = "camera";

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  friend bool operator==(const LabeledCloud&, const LabeledCloud&) = default;
};

/// Proper rotation matrix. Construction validates orthonormality and det = +1.
class Rotation {
 public:
  static constexpr double kTolerance = 1e-9;

  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  static Rotation from_matrix(const Mat3& m) {
    if (!is_proper_rotation(m)) {
      throw Error(ErrorKind::InvalidRotation, "matrix is not orthonormal with det +1");
    }
    return Rotation(m, 0);
  }

  /// Right-handed rotation of `angle` radians about `axis` (normalized here).
  static Rotation about_axis(const Vec3& axis, double angle) {
    return Rotation(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), 0);
  }

  static bool is_proper_rotation(const Mat3& m, double tol = kTolerance) {
    if (!m.allFinite()) return false;
    const Mat3 gram = m.transpose() * m;
    if (((gram - Mat3::Identity()).cwiseAbs().array() > tol).any()) return false;
    return std::abs(m.determinant() - 1.0) <= tol;
  }

  const Mat3& matrix() const noexcept { return m_; }
  Rotation inverse() const { return Rotation(m_.transpose(), 0); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_, 0); }

 private:
  Rotation(const Mat3& m, int) : m_(m) {}
  Mat3 m_;
};

inline Vec3 centroid(const LabeledCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorKind::EmptyInput, "centroid of empty cloud");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : cloud.points) sum += p.position;
  return sum / static_cast<double>(cloud.size());
}

inline Vec3 centroid(const std::vector<Vec3>& positions) {
  if (positions.empty()) throw Error(ErrorKind::EmptyInput, "centroid of empty point set");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : positions) sum += p;
  return sum / static_cast<double>(positions.size());
}

inline LabeledCloud rotate(const LabeledCloud& cloud, const Rotation& r) {
  LabeledCloud out = cloud;
  for (auto& p : out.points) {
    p.position = r * p.position;
    if (p.normal) p.normal = r * *p.normal;
  }
  return out;
}

inline LabeledCloud rotate(const LabeledCloud& cloud, const Mat3& m) {
  return rotate(cloud, Rotation::from_matrix(m));
}

/// Minimal-angle rotation taking unit vector `from` onto unit vector `to`.
/// For anti-parallel inputs the axis is the unit vector orthogonal to `from`
/// built from the lowest-index coordinate axis not parallel to it.
inline Rotation rotation_between(const Vec3& from, const Vec3& to) {
  const Vec3 a = from.normalized();
  const Vec3 b = to.normalized();
  const Vec3 axis = a.cross(b);
  const double s = axis.norm();
  const double c = a.dot(b);
  if (s < 1e-12) {
    if (c > 0) return Rotation::identity();
    Vec3 perp = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
      const Vec3 e = Vec3::Unit(i);
      const Vec3 candidate = e - a.dot(e) * a;
      if (candidate.norm() > 1e-6) {
        perp = candidate.normalized();
        break;
      }
    }
    // 180 degrees about perp: R = 2 perp perp^T - I
    return Rotation::from_matrix(2.0 * perp * perp.transpose() - Mat3::Identity());
  }
  const double angle = std::atan2(s, c);
  return Rotation::about_axis(axis / s, angle);
}

/// Rotation whose rows map the right-handed orthonormal basis {u, v, u x v}
/// onto {tu, tv, tu x tv}.
inline Rotation rotation_from_frames(const Vec3& u, const Vec3& v, const Vec3& tu, const Vec3& tv) {
  Mat3 src, dst;
  src.col(0) = u;
  src.col(1) = v;
  src.col(2) = u.cross(v);
  dst.col(0) = tu;
  dst.col(1) = tv;
  dst.col(2) = tu.cross(tv);
  return Rotation::from_matrix(dst * src.transpose());
}

}  // namespace stairmod
