#pragma once

// Exhaustive reference implementations of the tree queries. Used by the
// validate command and the tests; tie-breaking matches SnchTree.

#include "wost/snch.hpp"

namespace wost::brute_force {

template <int DIM>
ClosestPointResult<DIM> closest_point(const BoundaryMesh<DIM>& mesh, const Vec<DIM>& x) {
  ClosestPointResult<DIM> best;
  double best_d2 = kInf;
  for (int e = 0; e < mesh.size(); ++e) {
    const Vec<DIM> cp = closest_point_on_element(mesh, e, x);
    const double d2 = (cp - x).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best.element = e;
      best.point = cp;
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

template <int DIM>
SilhouetteResult<DIM> closest_silhouette(const BoundaryMesh<DIM>& mesh, const Vec<DIM>& x, double r_max) {
  SilhouetteResult<DIM> best;
  best.distance = r_max;
  for (int c = 0; c < static_cast<int>(mesh.candidates.size()); ++c) {
    const Vec<DIM> v = closest_point_on_candidate(mesh, c, x) - x;
    const double d = v.norm();
    if (d < best.distance && is_silhouette(mesh, c, v)) {
      best.distance = d;
      best.candidate = c;
    }
  }
  return best;
}

template <int DIM>
RayHit<DIM> intersect(const BoundaryMesh<DIM>& mesh, const Vec<DIM>& o, const Vec<DIM>& d, double t_max) {
  RayHit<DIM> hit;
  double best_t = t_max;
  int best_e = -1;
  for (int e = 0; e < mesh.size(); ++e) {
    const double t = intersect_element(mesh, e, o, d);
    if (!(t > kMinRayT)) continue;
    if (t < best_t || (t == best_t && best_e < 0)) {
      best_t = t;
      best_e = e;
    }
  }
  if (best_e >= 0) {
    hit.did_hit = true;
    hit.t = best_t;
    hit.point = o + best_t * d;
    hit.normal = mesh.normals[best_e];
    hit.element = best_e;
  }
  return hit;
}

}  // namespace wost::brute_force
