#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace poleloc {

// Static 2D kd-tree over (x, y, id) entries. Built once, queried for the
// single nearest neighbor. Ties on distance keep the entry found first in
// the fixed traversal order, so queries are deterministic.
class KdTree2 {
 public:
  struct Entry {
    double x = 0.0;
    double y = 0.0;
    int id = -1;
  };

  struct Result {
    int id = -1;
    double dist = std::numeric_limits<double>::infinity();
  };

  KdTree2() = default;

  explicit KdTree2(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (!entries_.empty()) root_ = build(0, entries_.size(), 0);
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  Result nearest(double x, double y) const {
    Result best;
    if (!entries_.empty()) search(root_, 0, x, y, best);
    return best;
  }

 private:
  struct Node {
    int entry = -1;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t lo, std::size_t hi, int axis) {
    const std::size_t mid = lo + (hi - lo) / 2;
    auto cmp = [axis](const Entry& a, const Entry& b) {
      return axis == 0 ? a.x < b.x : a.y < b.y;
    };
    std::nth_element(entries_.begin() + lo, entries_.begin() + mid,
                     entries_.begin() + hi, cmp);
    Node node;
    node.entry = static_cast<int>(mid);
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (mid > lo) nodes_[index].left = build(lo, mid, 1 - axis);
    if (mid + 1 < hi) nodes_[index].right = build(mid + 1, hi, 1 - axis);
    return index;
  }

  void search(int node_index, int axis, double x, double y,
              Result& best) const {
    const Node& node = nodes_[node_index];
    const Entry& e = entries_[node.entry];
    const double dist = std::hypot(e.x - x, e.y - y);
    if (dist < best.dist) {
      best.dist = dist;
      best.id = e.id;
    }
    const double delta = (axis == 0 ? x - e.x : y - e.y);
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    if (near >= 0) search(near, 1 - axis, x, y, best);
    if (far >= 0 && std::abs(delta) < best.dist) search(far, 1 - axis, x, y, best);
  }

  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace poleloc
