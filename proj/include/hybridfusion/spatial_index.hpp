#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "hybridfusion/cloud.hpp"
#include "hybridfusion/errors.hpp"

namespace hybridfusion {

struct Neighbor {
  std::size_t index;
  double squared_distance;
};

/// Balanced kd-tree over a fixed point set.
///
/// Splits on the axis of largest extent at the median; leaves hold at most
/// kLeafSize points. The tree keeps its own copy of the points, so it stays
/// valid after the source container goes away.
template <int Dim>
class KdTree {
 public:
  using Vec = Eigen::Matrix<double, Dim, 1>;

  KdTree() = default;
  explicit KdTree(std::vector<Vec> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      build(0, points_.size());
    }
  }

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vec>& points() const { return points_; }

  /// Nearest neighbor of `query`. Throws MetricError on an empty tree.
  Neighbor nearest(const Vec& query) const {
    if (empty()) throw MetricError("nearest-neighbor query on an empty index");
    Neighbor best{0, std::numeric_limits<double>::infinity()};
    search_nearest(0, query, best);
    return best;
  }

  /// Up to k nearest neighbors sorted by increasing distance (ties by index).
  std::vector<Neighbor> k_nearest(const Vec& query, std::size_t k) const {
    std::vector<Neighbor> heap;
    if (empty() || k == 0) return heap;
    heap.reserve(k + 1);
    search_knn(0, query, k, heap);
    std::sort_heap(heap.begin(), heap.end(), closer);
    return heap;
  }

  /// All points within `radius` (inclusive), sorted by index.
  std::vector<std::size_t> radius_search(const Vec& query, double radius) const {
    std::vector<std::size_t> out;
    if (empty()) return out;
    search_radius(0, query, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  static bool closer(const Neighbor& a, const Neighbor& b) {
    return a.squared_distance < b.squared_distance ||
           (a.squared_distance == b.squared_distance && a.index < b.index);
  }

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec lo = points_[order_[begin]];
    Vec hi = lo;
    for (std::size_t i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void search_nearest(std::uint32_t id, const Vec& q, Neighbor& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
        if (closer(cand, best)) best = cand;
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t near = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far = diff < 0.0 ? node.right : node.left;
    search_nearest(near, q, best);
    if (diff * diff <= best.squared_distance) search_nearest(far, q, best);
  }

  void search_knn(std::uint32_t id, const Vec& q, std::size_t k, std::vector<Neighbor>& heap) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), closer);
        } else if (closer(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), closer);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), closer);
        }
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t near = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far = diff < 0.0 ? node.right : node.left;
    search_knn(near, q, k, heap);
    if (heap.size() < k || diff * diff <= heap.front().squared_distance) search_knn(far, q, k, heap);
  }

  void search_radius(std::uint32_t id, const Vec& q, double r2, std::vector<std::size_t>& out) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        if ((points_[order_[i]] - q).squaredNorm() <= r2) out.push_back(order_[i]);
      }
      return;
    }
    const double diff = q[node.axis] - node.split;
    const std::uint32_t near = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far = diff < 0.0 ? node.right : node.left;
    search_radius(near, q, r2, out);
    if (diff * diff <= r2) search_radius(far, q, r2, out);
  }

  std::vector<Vec> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

using SpatialIndex = KdTree<3>;
using SpatialIndex2 = KdTree<2>;

inline SpatialIndex make_index(const PointCloud3& cloud) { return SpatialIndex(cloud.points); }

/// Mean Euclidean distance from each source point to its nearest target point.
/// Throws MetricError if either side is empty.
double avg_nearest_distance(const PointCloud3& source, const SpatialIndex& target_index);
double avg_nearest_distance(const std::vector<Point2>& source, const SpatialIndex2& target_index);

}  // namespace hybridfusion
