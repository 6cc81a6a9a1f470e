#include "lidartraj/kdtree.h"

#include <algorithm>
#include <limits>
#include <numeric>

#include "lidartraj/errors.h"

namespace lidartraj {

namespace {
constexpr int kLeafSize = 12;
}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) Build(0, static_cast<int>(points_.size()), 0);
}

int KdTree::Build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({-1, 0.0, -1, -1, begin, end});
  if (end - begin <= kLeafSize) return id;

  // Split on the widest axis at the median.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double va = points_[a][axis], vb = points_[b][axis];
                     return va < vb || (va == vb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const int left = Build(begin, mid, depth + 1);
  const int right = Build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::Search(int node, const Vec3& q, std::size_t& best, double& best_d2) const {
  const Node& nd = nodes_[node];
  if (nd.axis < 0) {
    for (int i = nd.begin; i < nd.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const double diff = q[nd.axis] - nd.split;
  const int near = diff < 0.0 ? nd.left : nd.right;
  const int far = diff < 0.0 ? nd.right : nd.left;
  Search(near, q, best, best_d2);
  // Equality keeps ties reachable on both sides of the split.
  if (diff * diff <= best_d2) Search(far, q, best, best_d2);
}

std::size_t KdTree::Nearest(const Vec3& query) const {
  if (points_.empty()) throw ArgumentError("nearest-neighbour query on an empty tree");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  Search(0, query, best, best_d2);
  return best;
}

}  // namespace lidartraj
