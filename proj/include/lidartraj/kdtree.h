#ifndef LIDARTRAJ_KDTREE_H_
#define LIDARTRAJ_KDTREE_H_

#include <span>
#include <vector>

#include "lidartraj/geometry.h"

namespace lidartraj {

// Static 3-D tree for exact nearest-neighbour queries. Keeps a copy of the
// points; indices refer to the input order.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  // Index of the nearest point (ties go to the lowest index). The tree must
  // be non-empty.
  std::size_t Nearest(const Vec3& query) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int axis;  // -1 for leaves
    double split;
    int left, right;
    int begin, end;  // range in order_ (leaves only)
  };

  int Build(int begin, int end, int depth);
  void Search(int node, const Vec3& q, std::size_t& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace lidartraj

#endif  // LIDARTRAJ_KDTREE_H_
