#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

#include "stairmod/core.hpp"
#include "stairmod/modeling.hpp"
#include "stairmod/synthgen.hpp"

namespace stairmod::metrics {

/// Per-sample evaluation. `ne` is a similarity: |cos| between predicted and
/// true first-tread normals, 1.0 is perfect.
struct EvalRecord {
  double de = 0.0;
  double he = 0.0;
  bool fp = false;
  bool fn = false;
  double cpe = 0.0;
  double ne = 1.0;
  double tc = 0.0;
};

struct DepthHeight {
  double depth = 0.0;
  double height = 0.0;
};

inline std::pair<double, double> depth_height_error(const DepthHeight& pred, const DepthHeight& truth) {
  return {std::abs(pred.depth - truth.depth), std::abs(pred.height - truth.height)};
}

struct CountFlags {
  bool fp = false;
  bool fn = false;
};

inline CountFlags tread_count_flags(int pred_count, int truth_count, bool position_ok) {
  if (pred_count < 0 || truth_count < 0) throw Error(ErrorKind::InvalidArgument, "tread counts must be >= 0");
  return {pred_count > truth_count || !position_ok, pred_count < truth_count};
}

inline double central_point_error(const Vec3& pred, const Vec3& truth) { return (pred - truth).norm(); }

inline double normal_error(const Vec3& pred, const Vec3& truth) {
  return std::abs(pred.dot(truth) / (pred.norm() * truth.norm()));
}

/// Wall-clock seconds spent in `fn()`.
template <typename Fn>
double time_cost(Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  std::forward<Fn>(fn)();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct EvalOptions {
  /// A first-step central point farther than this fraction of the true step
  /// depth from the truth counts as a wrong-position prediction.
  double position_tolerance_fraction = 0.5;
};

/// Compares a model result with synthetic ground truth. `tc` is the caller's
/// measured pipeline time.
inline EvalRecord evaluate(const model::StairModelResult& result, const synth::StaircaseTruth& truth, double tc,
                           const EvalOptions& opt = {}) {
  if (truth.central_points.empty()) throw Error(ErrorKind::InvalidArgument, "truth has no steps");
  EvalRecord r;
  std::tie(r.de, r.he) = depth_height_error({result.step_depth, result.step_height}, {truth.step_depth, truth.step_height});
  const auto& first = result.regions.front();
  r.cpe = central_point_error(first.central_point, truth.central_points.front());
  r.ne = normal_error(first.normal, truth.tread_normals.front());
  const bool position_ok = r.cpe <= opt.position_tolerance_fraction * truth.step_depth;
  const auto flags = tread_count_flags(static_cast<int>(result.regions.size()), truth.step_count, position_ok);
  r.fp = flags.fp;
  r.fn = flags.fn;
  r.tc = tc;
  return r;
}

/// Dataset-level numbers in the layout DE HE FP% FN% CPE NE TC(max).
struct Summary {
  std::size_t samples = 0;
  double de = 0.0;
  double he = 0.0;
  double fp_percent = 0.0;
  double fn_percent = 0.0;
  double cpe = 0.0;
  double ne = 0.0;
  double tc_mean = 0.0;
  double tc_max = 0.0;
};

inline Summary aggregate(std::span<const EvalRecord> records) {
  Summary s;
  s.samples = records.size();
  if (records.empty()) return s;
  std::size_t fp = 0, fn = 0;
  for (const auto& r : records) {
    s.de += r.de;
    s.he += r.he;
    s.cpe += r.cpe;
    s.ne += r.ne;
    s.tc_mean += r.tc;
    s.tc_max = std::max(s.tc_max, r.tc);
    fp += r.fp;
    fn += r.fn;
  }
  const double n = static_cast<double>(records.size());
  s.de /= n;
  s.he /= n;
  s.cpe /= n;
  s.ne /= n;
  s.tc_mean /= n;
  s.fp_percent = 100.0 * static_cast<double>(fp) / n;
  s.fn_percent = 100.0 * static_cast<double>(fn) / n;
  return s;
}

}  // namespace stairmod::metrics
