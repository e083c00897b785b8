#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <span>
#include <vector>

#include "stairmod/core.hpp"

// Curvature-suppression cross-entropy for binary tread / not-tread scores.
//
//   total = (1 - k) * ce + k * (cs + ce),   k = [epoch >= gate_epoch]
//   cs    = sum_i sum_{j in step i, predicted positive} a_i * (1 - cos^2(N_gt_i, N_j))
//
// a_i is 0 for steps without a ground-truth normal.

namespace stairmod::loss {

enum class PositiveRule {
  /// sigmoid(logit) > 0.5 counts with weight 1 (the evaluation rule).
  Hard,
  /// every point weighted by sigmoid(logit); differentiable in the logits.
  Soft,
};

struct LossInput {
  std::vector<double> logits;
  std::vector<int> gt_labels;  // 1 = tread, 0 = not tread
  std::vector<std::optional<Vec3>> point_normals;
  std::vector<std::optional<int>> step_of_point;  // 1-based step index
  std::vector<std::optional<Vec3>> gt_step_normals;  // index 0 = step 1
  int epoch = 0;
  int gate_epoch = 0;
};

struct LossOptions {
  PositiveRule rule = PositiveRule::Hard;
  /// Divide cs by the (weighted) number of counted points instead of
  /// reporting the raw double sum.
  bool normalize_cs = false;
  bool want_gradient = false;
};

struct LossReport {
  double ce = 0.0;
  double cs = 0.0;
  int gate_k = 0;
  double total = 0.0;
  std::optional<std::vector<double>> gradient;
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Binary cross-entropy for one point in log-sum-exp form.
inline double bce_term(double logit, int label) {
  return std::max(logit, 0.0) - logit * label + std::log1p(std::exp(-std::abs(logit)));
}

inline double cross_entropy(std::span<const double> logits, std::span<const int> labels) {
  if (logits.empty()) throw Error(ErrorKind::EmptyInput, "cross_entropy on empty input");
  if (logits.size() != labels.size()) throw Error(ErrorKind::InvalidArgument, "logits/labels length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += bce_term(logits[i], labels[i]);
  return sum / static_cast<double>(logits.size());
}

inline int gate(int epoch, int gate_epoch) { return epoch >= gate_epoch ? 1 : 0; }

inline double misalignment(const Vec3& gt, const Vec3& pred) {
  const double c = gt.dot(pred) / (gt.norm() * pred.norm());
  return 1.0 - c * c;
}

namespace detail {

inline void check_alignment(const LossInput& in) {
  const std::size_t n = in.logits.size();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "loss on empty input");
  if (in.gt_labels.size() != n || in.point_normals.size() != n || in.step_of_point.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "loss inputs are not length-aligned");
  }
}

struct CsTerms {
  double value = 0.0;
  std::vector<double> grad;  // filled for the soft rule only
};

inline CsTerms curvature_terms(const LossInput& in, const LossOptions& opt, bool with_grad) {
  const std::size_t n = in.logits.size();
  CsTerms out;
  if (with_grad) out.grad.assign(n, 0.0);
  double sum = 0.0, weight = 0.0;
  std::vector<double> m(n, 0.0), dsig(n, 0.0);
  std::vector<bool> counted(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    if (!in.step_of_point[j]) continue;
    const int step = *in.step_of_point[j];
    if (step < 1 || static_cast<std::size_t>(step) > in.gt_step_normals.size()) {
      throw Error(ErrorKind::InvalidAssignment,
                  "point " + std::to_string(j) + " assigned to step " + std::to_string(step) + " with no record");
    }
    const auto& gt = in.gt_step_normals[step - 1];
    if (!gt) continue;  // a = 0
    double w;
    if (opt.rule == PositiveRule::Hard) {
      w = sigmoid(in.logits[j]) > 0.5 ? 1.0 : 0.0;
    } else {
      w = sigmoid(in.logits[j]);
    }
    if (opt.rule == PositiveRule::Hard && w == 0.0) continue;
    if (!in.point_normals[j]) throw Error(ErrorKind::MissingNormal, "counted point " + std::to_string(j) + " has no normal");
    m[j] = misalignment(*gt, *in.point_normals[j]);
    counted[j] = true;
    const double s = sigmoid(in.logits[j]);
    dsig[j] = s * (1.0 - s);
    sum += w * m[j];
    weight += w;
  }
  if (opt.normalize_cs) {
    out.value = weight > 0 ? sum / weight : 0.0;
  } else {
    out.value = sum;
  }
  if (with_grad) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!counted[j]) continue;
      if (opt.normalize_cs) {
        out.grad[j] = weight > 0 ? dsig[j] * (m[j] - out.value) / weight : 0.0;
      } else {
        out.grad[j] = dsig[j] * m[j];
      }
    }
  }
  return out;
}

}  // namespace detail

inline double curvature_suppression(const LossInput& in, const LossOptions& opt = {}) {
  detail::check_alignment(in);
  return detail::curvature_terms(in, opt, false).value;
}

inline LossReport csce(const LossInput& in, const LossOptions& opt = {}) {
  detail::check_alignment(in);
  LossReport r;
  r.ce = cross_entropy(in.logits, in.gt_labels);
  const bool grad = opt.want_gradient && opt.rule == PositiveRule::Soft;
  auto cs = detail::curvature_terms(in, opt, grad);
  r.cs = cs.value;
  r.gate_k = gate(in.epoch, in.gate_epoch);
  const double k = r.gate_k;
  r.total = (1.0 - k) * r.ce + k * (r.cs + r.ce);
  if (grad) {
    const double inv_n = 1.0 / static_cast<double>(in.logits.size());
    std::vector<double> g(in.logits.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double dce = (sigmoid(in.logits[j]) - in.gt_labels[j]) * inv_n;
      g[j] = dce + k * cs.grad[j];
    }
    r.gradient = std::move(g);
  }
  return r;
}

/// Central finite-difference gradient of csce().total w.r.t. each logit.
inline std::vector<double> finite_difference_gradient(const LossInput& in, const LossOptions& opt, double h = 1e-5) {
  LossOptions no_grad = opt;
  no_grad.want_gradient = false;
  LossInput probe = in;
  std::vector<double> g(in.logits.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double x = in.logits[j];
    probe.logits[j] = x + h;
    const double up = csce(probe, no_grad).total;
    probe.logits[j] = x - h;
    const double down = csce(probe, no_grad).total;
    probe.logits[j] = x;
    g[j] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Relative error with an absolute floor so entries that are both ~0 do not
/// dominate: |a - b| / max(|a|, |b|, floor).
inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

/// Builds a loss input from a labeled cloud: tread points are positives,
/// risers -k are assigned to step k, and each step's ground-truth normal is
/// the normalized mean of its tread point normals.
inline LossInput make_input(const LabeledCloud& cloud, std::vector<double> logits, int epoch, int gate_epoch) {
  if (logits.size() != cloud.size()) throw Error(ErrorKind::InvalidArgument, "one logit per point required");
  LossInput in;
  in.logits = std::move(logits);
  in.epoch = epoch;
  in.gate_epoch = gate_epoch;
  int max_step = 0;
  for (const auto& p : cloud.points) max_step = std::max(max_step, std::abs(p.label));
  std::vector<Vec3> sums(max_step, Vec3::Zero());
  std::vector<int> counts(max_step, 0);
  for (const auto& p : cloud.points) {
    in.gt_labels.push_back(is_tread(p.label) ? 1 : 0);
    in.point_normals.push_back(p.normal);
    in.step_of_point.push_back(p.label != 0 ? std::optional<int>(std::abs(p.label)) : std::nullopt);
    if (is_tread(p.label) && p.normal) {
      sums[p.label - 1] += *p.normal;
      ++counts[p.label - 1];
    }
  }
  for (int s = 0; s < max_step; ++s) {
    if (counts[s] > 0 && sums[s].norm() > 1e-12) {
      in.gt_step_normals.push_back(sums[s].normalized());
    } else {
      in.gt_step_normals.push_back(std::nullopt);
    }
  }
  return in;
}

}  // namespace stairmod::loss
