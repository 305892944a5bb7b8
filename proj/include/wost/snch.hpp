#pragma once

// Bounding volume hierarchy with per-node normal cones. Serves closest-point,
// closest-silhouette, ray-intersection and Neumann point-sampling queries.

#include "wost/mesh.hpp"

#include <memory>
#include <utility>

namespace wost {

template <int DIM>
struct Aabb {
  Vec<DIM> lo = Vec<DIM>::Constant(kInf);
  Vec<DIM> hi = Vec<DIM>::Constant(-kInf);

  void expand(const Vec<DIM>& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
  Vec<DIM> centroid() const { return 0.5 * (lo + hi); }
  double bounding_radius() const { return 0.5 * (hi - lo).norm(); }
  bool contains(const Aabb& b) const {
    return (lo.array() <= b.lo.array()).all() && (b.hi.array() <= hi.array()).all();
  }

  // Surface area (3D) or perimeter (2D), up to a constant factor.
  double surface_measure() const {
    if (!valid()) return 0.0;
    const Vec<DIM> e = hi - lo;
    if constexpr (DIM == 2) {
      return e.x() + e.y();
    } else {
      return e.x() * e.y() + e.y() * e.z() + e.z() * e.x();
    }
  }

  double distance2(const Vec<DIM>& p) const {
    const Vec<DIM> d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
    return d.squaredNorm();
  }
  double distance(const Vec<DIM>& p) const { return std::sqrt(distance2(p)); }

  // Parameter interval [t0, t1] where the ray overlaps the box, padded so that
  // geometry lying exactly on a box face is never culled.
  bool ray_overlap(const Vec<DIM>& o, const Vec<DIM>& d, double& t0, double& t1) const {
    t0 = -kInf;
    t1 = kInf;
    for (int i = 0; i < DIM; ++i) {
      if (d[i] == 0.0) {
        if (o[i] < lo[i] || o[i] > hi[i]) return false;
        continue;
      }
      double a = (lo[i] - o[i]) / d[i], b = (hi[i] - o[i]) / d[i];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    const double pad = 1e-9 * (std::abs(t0) + std::abs(t1)) + 1e-300;
    t0 -= pad;
    t1 += pad;
    return t0 <= t1;
  }
};

template <int DIM>
struct NormalCone {
  Vec<DIM> axis = Vec<DIM>::Zero();
  double half_angle = kPi;
};

template <int DIM>
struct SnchNode {
  Aabb<DIM> box;
  NormalCone<DIM> cone;
  int left = -1, right = -1;     // children, or -1 for a leaf
  int begin = 0, end = 0;        // range into element_order
  int cand_begin = 0, cand_end = 0;  // range into candidate_order
  bool leaf() const { return left < 0; }
};

// Conservative test for whether a node may contain a silhouette as seen from x.
template <int DIM>
bool has_silhouette(const Aabb<DIM>& box, const NormalCone<DIM>& cone, const Vec<DIM>& x) {
  constexpr double half_pi = 0.5 * kPi;
  if (cone.half_angle >= half_pi) return true;
  const Vec<DIM> vc = box.centroid() - x;
  const double l = vc.norm();
  if (l == 0.0) return true;
  const Vec<DIM> a_vc = vc / l;
  const double phi = std::acos(std::clamp(cone.axis.dot(a_vc), -1.0, 1.0));
  if (half_pi >= phi - cone.half_angle && half_pi <= phi + cone.half_angle) return true;
  const double r = box.bounding_radius();
  if (l <= r) return true;
  const double theta_vc = std::asin(std::min(1.0, r / l));
  const double theta_sum = cone.half_angle + theta_vc;
  if (theta_sum >= half_pi) return true;
  return half_pi >= phi - theta_sum && half_pi <= phi + theta_sum;
}

template <int DIM>
struct ClosestPointResult {
  double distance = kInf;
  Vec<DIM> point = Vec<DIM>::Zero();
  int element = -1;
  bool found() const { return element >= 0; }
};

template <int DIM>
struct SilhouetteResult {
  double distance = kInf;
  int candidate = -1;  // -1 when no silhouette lies within r_max
  int nodes_visited = 0;
};

template <int DIM>
struct RayHit {
  bool did_hit = false;
  double t = kInf;
  Vec<DIM> point = Vec<DIM>::Zero();
  Vec<DIM> normal = Vec<DIM>::Zero();
  int element = -1;
};

template <int DIM>
struct BoundarySample {
  Vec<DIM> point = Vec<DIM>::Zero();
  Vec<DIM> normal = Vec<DIM>::Zero();
  double pdf = 0.0;  // per unit area; 0 when no element meets the ball
  int element = -1;
};

// Rays hitting closer than this parameter value are ignored.
inline constexpr double kMinRayT = 1e-12;

template <int DIM>
class SnchTree {
 public:
  SnchTree() = default;

  explicit SnchTree(std::shared_ptr<const BoundaryMesh<DIM>> mesh, int max_leaf_size = 4)
      : mesh_(std::move(mesh)), max_leaf_size_(std::max(1, max_leaf_size)) {
    if (!mesh_ || mesh_->empty()) return;
    build();
  }

  bool empty() const { return nodes_.empty(); }
  const BoundaryMesh<DIM>& mesh() const { return *mesh_; }
  const std::shared_ptr<const BoundaryMesh<DIM>>& mesh_ptr() const { return mesh_; }
  const std::vector<SnchNode<DIM>>& nodes() const { return nodes_; }
  const std::vector<int>& element_order() const { return element_order_; }
  const std::vector<int>& candidate_order() const { return candidate_order_; }

  ClosestPointResult<DIM> closest_point(const Vec<DIM>& x) const {
    ClosestPointResult<DIM> best;
    if (empty()) return best;
    double best_d2 = kInf;
    std::vector<std::pair<int, double>> stack;
    stack.reserve(64);
    stack.push_back({0, nodes_[0].box.distance2(x)});
    while (!stack.empty()) {
      const auto [ni, d2] = stack.back();
      stack.pop_back();
      if (d2 > best_d2) continue;
      const SnchNode<DIM>& node = nodes_[ni];
      if (node.leaf()) {
        for (int i = node.begin; i < node.end; ++i) {
          const int e = element_order_[i];
          const Vec<DIM> cp = closest_point_on_element(*mesh_, e, x);
          const double de = (cp - x).squaredNorm();
          if (de < best_d2 || (de == best_d2 && e < best.element)) {
            best_d2 = de;
            best.element = e;
            best.point = cp;
          }
        }
        continue;
      }
      const double dl = nodes_[node.left].box.distance2(x);
      const double dr = nodes_[node.right].box.distance2(x);
      if (dl <= dr) {
        if (dr <= best_d2) stack.push_back({node.right, dr});
        if (dl <= best_d2) stack.push_back({node.left, dl});
      } else {
        if (dl <= best_d2) stack.push_back({node.left, dl});
        if (dr <= best_d2) stack.push_back({node.right, dr});
      }
    }
    best.distance = std::sqrt(best_d2);
    return best;
  }

  // Closest silhouette point within r_max.
  SilhouetteResult<DIM> closest_silhouette(const Vec<DIM>& x, double r_max) const {
    SilhouetteResult<DIM> res;
    res.distance = r_max;
    if (empty()) return res;
    if (nodes_[0].box.distance(x) <= r_max) visit_silhouette(0, x, res);
    return res;
  }

  double silhouette_distance(const Vec<DIM>& x, double r_max) const {
    return closest_silhouette(x, r_max).distance;
  }

  // First hit along o + t d for t in (kMinRayT, t_max]; d need not be unit.
  RayHit<DIM> intersect(const Vec<DIM>& o, const Vec<DIM>& d, double t_max) const {
    RayHit<DIM> hit;
    if (empty()) return hit;
    double best_t = t_max;
    int best_e = -1;
    std::vector<std::pair<int, double>> stack;
    stack.reserve(64);
    double t0, t1;
    if (!nodes_[0].box.ray_overlap(o, d, t0, t1) || t1 < 0.0 || t0 > best_t) return hit;
    stack.push_back({0, t0});
    while (!stack.empty()) {
      const auto [ni, tn] = stack.back();
      stack.pop_back();
      if (tn > best_t) continue;
      const SnchNode<DIM>& node = nodes_[ni];
      if (node.leaf()) {
        for (int i = node.begin; i < node.end; ++i) {
          const int e = element_order_[i];
          const double t = intersect_element(*mesh_, e, o, d);
          if (!(t > kMinRayT)) continue;
          if (t < best_t || (t == best_t && (best_e < 0 || e < best_e))) {
            best_t = t;
            best_e = e;
          }
        }
        continue;
      }
      double l0, l1, r0, r1;
      const bool hl = nodes_[node.left].box.ray_overlap(o, d, l0, l1) && l1 >= 0.0 && l0 <= best_t;
      const bool hr = nodes_[node.right].box.ray_overlap(o, d, r0, r1) && r1 >= 0.0 && r0 <= best_t;
      if (hl && hr) {
        if (l0 <= r0) {
          stack.push_back({node.right, r0});
          stack.push_back({node.left, l0});
        } else {
          stack.push_back({node.left, l0});
          stack.push_back({node.right, r0});
        }
      } else if (hl) {
        stack.push_back({node.left, l0});
      } else if (hr) {
        stack.push_back({node.right, r0});
      }
    }
    if (best_e >= 0) {
      hit.did_hit = true;
      hit.t = best_t;
      hit.point = o + best_t * d;
      hit.normal = mesh_->normals[best_e];
      hit.element = best_e;
    }
    return hit;
  }

  // All hits with t in (kMinRayT, t_max], sorted by t then element index.
  std::vector<RayHit<DIM>> intersect_all(const Vec<DIM>& o, const Vec<DIM>& d, double t_max) const {
    std::vector<RayHit<DIM>> hits;
    if (empty()) return hits;
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const int ni = stack.back();
      stack.pop_back();
      const SnchNode<DIM>& node = nodes_[ni];
      double t0, t1;
      if (!node.box.ray_overlap(o, d, t0, t1) || t1 < 0.0 || t0 > t_max) continue;
      if (!node.leaf()) {
        stack.push_back(node.right);
        stack.push_back(node.left);
        continue;
      }
      for (int i = node.begin; i < node.end; ++i) {
        const int e = element_order_[i];
        const double t = intersect_element(*mesh_, e, o, d);
        if (t > kMinRayT && t <= t_max) {
          RayHit<DIM> h;
          h.did_hit = true;
          h.t = t;
          h.point = o + t * d;
          h.normal = mesh_->normals[e];
          h.element = e;
          hits.push_back(h);
        }
      }
    }
    std::sort(hits.begin(), hits.end(), [](const RayHit<DIM>& a, const RayHit<DIM>& b) {
      return a.t < b.t || (a.t == b.t && a.element < b.element);
    });
    return hits;
  }

  // Hierarchical sample of a boundary point near the ball B(x, r). Children
  // are chosen with probability proportional to the 3D free-space Green's
  // function at their box centroid, boxes missing the ball get weight 0, and
  // leaves pick an element proportionally to area.
  BoundarySample<DIM> sample_point(const Vec<DIM>& x, double r, Sampler& sampler) const {
    BoundarySample<DIM> out;
    if (empty() || nodes_[0].box.distance2(x) > r * r) return out;
    int ni = 0;
    double pdf_tree = 1.0;
    while (!nodes_[ni].leaf()) {
      const SnchNode<DIM>& node = nodes_[ni];
      const double wl = child_weight(node.left, x, r);
      const double wr = child_weight(node.right, x, r);
      const double total = wl + wr;
      if (!(total > 0.0)) return out;
      const double pl = wl / total;
      if (sampler.uniform() < pl) {
        ni = node.left;
        pdf_tree *= pl;
      } else {
        ni = node.right;
        pdf_tree *= 1.0 - pl;
      }
    }
    const SnchNode<DIM>& leaf = nodes_[ni];
    double total_area = 0.0;
    int selected = -1;
    for (int i = leaf.begin; i < leaf.end; ++i) {
      const int e = element_order_[i];
      if ((closest_point_on_element(*mesh_, e, x) - x).squaredNorm() > r * r) continue;
      const double area = mesh_->measures[e];
      total_area += area;
      if (sampler.uniform() * total_area < area) selected = e;
    }
    if (selected < 0) return out;
    const double u1 = sampler.uniform();
    const double u2 = DIM == 3 ? sampler.uniform() : 0.0;
    out.point = sample_on_element(*mesh_, selected, u1, u2);
    out.normal = mesh_->normals[selected];
    out.pdf = pdf_tree / total_area;
    out.element = selected;
    return out;
  }

  // Exact probability that sample_point selects each element; the remaining
  // mass is the probability of returning the pdf = 0 sentinel.
  std::vector<double> selection_probabilities(const Vec<DIM>& x, double r) const {
    std::vector<double> p(mesh_ ? mesh_->size() : 0, 0.0);
    if (empty() || nodes_[0].box.distance2(x) > r * r) return p;
    enumerate_selection(0, 1.0, x, r, p);
    return p;
  }

 private:
  double child_weight(int ni, const Vec<DIM>& x, double r) const {
    const Aabb<DIM>& box = nodes_[ni].box;
    if (box.distance2(x) > r * r) return 0.0;
    const double d = std::max((box.centroid() - x).norm(), 1e-150);
    return 1.0 / (4.0 * kPi * d);
  }

  void enumerate_selection(int ni, double prob, const Vec<DIM>& x, double r, std::vector<double>& p) const {
    const SnchNode<DIM>& node = nodes_[ni];
    if (node.leaf()) {
      double total = 0.0;
      for (int i = node.begin; i < node.end; ++i) {
        const int e = element_order_[i];
        if ((closest_point_on_element(*mesh_, e, x) - x).squaredNorm() <= r * r) total += mesh_->measures[e];
      }
      if (total <= 0.0) return;
      for (int i = node.begin; i < node.end; ++i) {
        const int e = element_order_[i];
        if ((closest_point_on_element(*mesh_, e, x) - x).squaredNorm() <= r * r) {
          p[e] += prob * mesh_->measures[e] / total;
        }
      }
      return;
    }
    const double wl = child_weight(node.left, x, r), wr = child_weight(node.right, x, r);
    if (!(wl + wr > 0.0)) return;
    const double pl = wl / (wl + wr);
    if (pl > 0.0) enumerate_selection(node.left, prob * pl, x, r, p);
    if (pl < 1.0) enumerate_selection(node.right, prob * (1.0 - pl), x, r, p);
  }

  void visit_silhouette(int ni, const Vec<DIM>& x, SilhouetteResult<DIM>& res) const {
    ++res.nodes_visited;
    const SnchNode<DIM>& node = nodes_[ni];
    if (node.leaf()) {
      for (int i = node.cand_begin; i < node.cand_end; ++i) {
        const int c = candidate_order_[i];
        const Vec<DIM> v = closest_point_on_candidate(*mesh_, c, x) - x;
        const double d = v.norm();
        const bool closer = d < res.distance || (d == res.distance && res.candidate >= 0 && c < res.candidate);
        if (closer && is_silhouette(*mesh_, c, v)) {
          res.distance = d;
          res.candidate = c;
        }
      }
      return;
    }
    const SnchNode<DIM>& L = nodes_[node.left];
    const SnchNode<DIM>& R = nodes_[node.right];
    const double dl = L.box.distance(x), dr = R.box.distance(x);
    bool visit_l = dl <= res.distance && L.cand_begin < L.cand_end;
    bool visit_r = dr <= res.distance && R.cand_begin < R.cand_end;
    if (visit_l && dl > 0.0) visit_l = has_silhouette(L.box, L.cone, x);
    if (visit_r && dr > 0.0) visit_r = has_silhouette(R.box, R.cone, x);
    if (visit_l && visit_r) {
      const bool left_first = dl <= dr;
      visit_silhouette(left_first ? node.left : node.right, x, res);
      if ((left_first ? dr : dl) <= res.distance) visit_silhouette(left_first ? node.right : node.left, x, res);
    } else if (visit_l) {
      visit_silhouette(node.left, x, res);
    } else if (visit_r) {
      visit_silhouette(node.right, x, res);
    }
  }

  void build() {
    const BoundaryMesh<DIM>& mesh = *mesh_;
    const int n = mesh.size();
    boxes_.resize(n);
    centroids_.resize(n);
    for (int e = 0; e < n; ++e) {
      Aabb<DIM> b;
      for (int k = 0; k < DIM; ++k) b.expand(mesh.vertices[mesh.elements[e][k]]);
      boxes_[e] = b;
      centroids_[e] = b.centroid();
    }
    element_order_.resize(n);
    for (int e = 0; e < n; ++e) element_order_[e] = e;
    nodes_.reserve(2 * n);
    build_node(0, n);

    // Each candidate lives in the leaf of its lowest-index incident element.
    std::vector<int> element_leaf(n, -1);
    for (int ni = 0; ni < static_cast<int>(nodes_.size()); ++ni) {
      if (!nodes_[ni].leaf()) continue;
      for (int i = nodes_[ni].begin; i < nodes_[ni].end; ++i) element_leaf[element_order_[i]] = ni;
    }
    const int nc = static_cast<int>(mesh.candidates.size());
    std::vector<int> cand_leaf(nc);
    candidate_order_.resize(nc);
    for (int c = 0; c < nc; ++c) {
      cand_leaf[c] = element_leaf[mesh.candidates[c].elements.front()];
      candidate_order_[c] = c;
    }
    std::stable_sort(candidate_order_.begin(), candidate_order_.end(),
                     [&](int a, int b) { return cand_leaf[a] < cand_leaf[b]; });
    std::vector<int> leaf_begin(nodes_.size(), 0), leaf_count(nodes_.size(), 0);
    for (int i = nc - 1; i >= 0; --i) leaf_begin[cand_leaf[candidate_order_[i]]] = i;
    for (int c = 0; c < nc; ++c) ++leaf_count[cand_leaf[c]];
    int cursor = 0;
    for (int ni = 0; ni < static_cast<int>(nodes_.size()); ++ni) {
      if (!nodes_[ni].leaf()) continue;
      if (leaf_count[ni] > 0) cursor = leaf_begin[ni];
      nodes_[ni].cand_begin = cursor;
      nodes_[ni].cand_end = cursor + leaf_count[ni];
      cursor = nodes_[ni].cand_end;
    }
    for (int ni = static_cast<int>(nodes_.size()) - 1; ni >= 0; --ni) {
      SnchNode<DIM>& node = nodes_[ni];
      if (node.leaf()) continue;
      node.cand_begin = nodes_[node.left].cand_begin;
      node.cand_end = nodes_[node.right].cand_end;
    }
    for (auto& node : nodes_) node.cone = compute_cone(node);
    boxes_.clear();
    boxes_.shrink_to_fit();
    centroids_.clear();
    centroids_.shrink_to_fit();
  }

  NormalCone<DIM> compute_cone(const SnchNode<DIM>& node) const {
    const BoundaryMesh<DIM>& mesh = *mesh_;
    std::vector<int> elems;
    bool open_candidate = false;
    for (int i = node.begin; i < node.end; ++i) elems.push_back(element_order_[i]);
    for (int i = node.cand_begin; i < node.cand_end; ++i) {
      const auto& inc = mesh.candidates[candidate_order_[i]].elements;
      if (inc.size() < 2) open_candidate = true;
      elems.insert(elems.end(), inc.begin(), inc.end());
    }
    std::sort(elems.begin(), elems.end());
    elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
    NormalCone<DIM> cone;
    Vec<DIM> sum = Vec<DIM>::Zero();
    for (int e : elems) sum += mesh.normals[e];
    const double len = sum.norm();
    if (len < 1e-12 || elems.empty()) {
      cone.axis = elems.empty() ? Vec<DIM>::UnitX() : mesh.normals[elems.front()];
      cone.half_angle = kPi;
      return cone;
    }
    cone.axis = sum / len;
    double max_angle = 0.0;
    for (int e : elems) {
      max_angle = std::max(max_angle, std::acos(std::clamp(cone.axis.dot(mesh.normals[e]), -1.0, 1.0)));
    }
    // Small slack keeps the cone a strict bound under rounding.
    cone.half_angle = open_candidate ? kPi : max_angle > 0.0 ? std::min(kPi, max_angle + 1e-10) : 0.0;
    return cone;
  }

  int build_node(int begin, int end) {
    const int ni = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Aabb<DIM> box, cbox;
    for (int i = begin; i < end; ++i) {
      box.expand(boxes_[element_order_[i]]);
      cbox.expand(centroids_[element_order_[i]]);
    }
    nodes_[ni].box = box;
    nodes_[ni].begin = begin;
    nodes_[ni].end = end;
    const int count = end - begin;
    if (count <= max_leaf_size_) return ni;

    constexpr int kBins = 16;
    double best_cost = kInf;
    int best_axis = -1, best_split = -1;
    for (int axis = 0; axis < DIM; ++axis) {
      const double extent = cbox.hi[axis] - cbox.lo[axis];
      if (!(extent > 0.0)) continue;
      std::array<Aabb<DIM>, kBins> bin_box;
      std::array<int, kBins> bin_count{};
      for (int i = begin; i < end; ++i) {
        const int e = element_order_[i];
        const int b = bin_index(centroids_[e][axis], cbox.lo[axis], extent, kBins);
        ++bin_count[b];
        bin_box[b].expand(boxes_[e]);
      }
      std::array<double, kBins> left_cost{};
      Aabb<DIM> acc;
      int acc_count = 0;
      for (int b = 0; b < kBins - 1; ++b) {
        acc.expand(bin_box[b]);
        acc_count += bin_count[b];
        left_cost[b] = acc_count > 0 ? acc.surface_measure() * acc_count : 0.0;
      }
      acc = Aabb<DIM>();
      acc_count = 0;
      for (int b = kBins - 1; b > 0; --b) {
        acc.expand(bin_box[b]);
        acc_count += bin_count[b];
        const int left_n = count - acc_count;
        if (left_n == 0 || acc_count == 0) continue;
        const double cost = left_cost[b - 1] + acc.surface_measure() * acc_count;
        if (cost < best_cost) {
          best_cost = cost;
          best_axis = axis;
          best_split = b;
        }
      }
    }

    int mid;
    if (best_axis >= 0) {
      const double lo = cbox.lo[best_axis], extent = cbox.hi[best_axis] - cbox.lo[best_axis];
      auto it = std::partition(element_order_.begin() + begin, element_order_.begin() + end, [&](int e) {
        return bin_index(centroids_[e][best_axis], lo, extent, kBins) < best_split;
      });
      mid = static_cast<int>(it - element_order_.begin());
    } else {
      mid = begin + count / 2;
    }
    if (mid == begin || mid == end) mid = begin + count / 2;

    const int left = build_node(begin, mid);
    const int right = build_node(mid, end);
    nodes_[ni].left = left;
    nodes_[ni].right = right;
    return ni;
  }

  static int bin_index(double c, double lo, double extent, int bins) {
    const int b = static_cast<int>((c - lo) / extent * bins);
    return std::clamp(b, 0, bins - 1);
  }

  std::shared_ptr<const BoundaryMesh<DIM>> mesh_;
  int max_leaf_size_ = 4;
  std::vector<SnchNode<DIM>> nodes_;
  std::vector<int> element_order_;
  std::vector<int> candidate_order_;
  std::vector<Aabb<DIM>> boxes_;
  std::vector<Vec<DIM>> centroids_;
};

}  // namespace wost
