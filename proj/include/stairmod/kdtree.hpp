#pragma once

#include <algorithm>
#include <numeric>
#include <queue>
#include <span>
#include <utility>
#include <vector>

#include "stairmod/core.hpp"

namespace stairmod {

/// Static 3-D kd-tree over a borrowed point array, k-nearest-neighbor queries
/// only. The tree is stored implicitly: each subrange [lo, hi) has its split
/// point at the midpoint.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points) : points_(points), order_(points.size()), axis_(points.size(), 0) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    build(0, order_.size());
  }

  /// Indices of the k nearest points to `query`, closest first. Ties are
  /// broken by index so results are deterministic.
  std::vector<std::size_t> knn(const Vec3& query, std::size_t k) const {
    k = std::min(k, points_.size());
    Heap heap;
    if (k > 0) search(0, order_.size(), query, k, heap);
    std::vector<std::pair<double, std::size_t>> found;
    found.reserve(heap.size());
    while (!heap.empty()) {
      found.push_back(heap.top());
      heap.pop();
    }
    std::sort(found.begin(), found.end());
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const auto& f : found) out.push_back(f.second);
    return out;
  }

 private:
  using Entry = std::pair<double, std::size_t>;
  using Heap = std::priority_queue<Entry>;

  void build(std::size_t lo, std::size_t hi) {
    if (hi - lo <= 1) return;
    Vec3 mn = points_[order_[lo]], mx = mn;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(points_[order_[i]]);
      mx = mx.cwiseMax(points_[order_[i]]);
    }
    int axis;
    (mx - mn).maxCoeff(&axis);
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    axis_[mid] = axis;
    build(lo, mid);
    build(mid + 1, hi);
  }

  void search(std::size_t lo, std::size_t hi, const Vec3& q, std::size_t k, Heap& heap) const {
    if (lo >= hi) return;
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::size_t id = order_[mid];
    const Entry e{(points_[id] - q).squaredNorm(), id};
    if (heap.size() < k) {
      heap.push(e);
    } else if (e < heap.top()) {
      heap.pop();
      heap.push(e);
    }
    if (hi - lo == 1) return;
    const int axis = axis_[mid];
    const double diff = q[axis] - points_[id][axis];
    const bool left_first = diff < 0;
    if (left_first) search(lo, mid, q, k, heap);
    else search(mid + 1, hi, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.top().first) {
      if (left_first) search(mid + 1, hi, q, k, heap);
      else search(lo, mid, q, k, heap);
    }
  }

  std::span<const Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<int> axis_;
};

}  // namespace stairmod
