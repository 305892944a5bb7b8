#pragma once

// Boundary meshes: polylines in 2D, triangle meshes in 3D.

#include "wost/errors.hpp"
#include "wost/math.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <string>
#include <vector>

namespace wost {

enum class BoundaryLabel { Dirichlet, Neumann };

// Edge (3D) or vertex (2D) where the visibility silhouette can occur.
template <int DIM>
struct SilhouetteCandidate {
  std::array<int, DIM - 1> vertices{};
  std::vector<int> elements;  // incident elements, ascending
};

template <int DIM>
struct BoundaryMesh {
  using Element = std::array<int, DIM>;

  std::vector<Vec<DIM>> vertices;
  std::vector<Element> elements;
  std::vector<Vec<DIM>> normals;  // unit, outward
  std::vector<double> measures;   // length or area
  std::vector<SilhouetteCandidate<DIM>> candidates;
  BoundaryLabel label = BoundaryLabel::Neumann;
  bool double_sided = false;
  bool non_manifold = false;

  int size() const { return static_cast<int>(elements.size()); }
  bool empty() const { return elements.empty(); }
};

// ---------------------------------------------------------------------------
// Element primitives

inline Vec<3> closest_point_on_triangle(const Vec<3>& p, const Vec<3>& a, const Vec<3>& b, const Vec<3>& c) {
  const Vec<3> ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec<3> bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec<3> cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

template <int DIM>
Vec<DIM> closest_point_on_segment(const Vec<DIM>& p, const Vec<DIM>& a, const Vec<DIM>& b) {
  const Vec<DIM> ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return a + t * ab;
}

template <int DIM>
Vec<DIM> closest_point_on_element(const BoundaryMesh<DIM>& mesh, int e, const Vec<DIM>& p) {
  const auto& el = mesh.elements[e];
  if constexpr (DIM == 2) {
    return closest_point_on_segment<2>(p, mesh.vertices[el[0]], mesh.vertices[el[1]]);
  } else {
    return closest_point_on_triangle(p, mesh.vertices[el[0]], mesh.vertices[el[1]], mesh.vertices[el[2]]);
  }
}

template <int DIM>
Vec<DIM> closest_point_on_candidate(const BoundaryMesh<DIM>& mesh, int c, const Vec<DIM>& p) {
  const auto& cand = mesh.candidates[c];
  if constexpr (DIM == 2) {
    (void)p;
    return mesh.vertices[cand.vertices[0]];
  } else {
    return closest_point_on_segment<3>(p, mesh.vertices[cand.vertices[0]], mesh.vertices[cand.vertices[1]]);
  }
}

// Ray parameter of the hit with segment [a, b], or a negative value on a miss.
inline double intersect_segment(const Vec<2>& o, const Vec<2>& d, const Vec<2>& a, const Vec<2>& b) {
  const Vec<2> e = b - a;
  const double denom = cross2(d, e);
  if (denom == 0.0) return -1.0;
  const Vec<2> ao = a - o;
  const double t = cross2(ao, e) / denom;
  const double s = cross2(ao, d) / denom;
  if (s < 0.0 || s > 1.0) return -1.0;
  return t;
}

// Watertight ray/triangle test (Woop, Benthin, Wald 2013).
inline double intersect_triangle(const Vec<3>& o, const Vec<3>& d, const Vec<3>& v0, const Vec<3>& v1,
                                 const Vec<3>& v2) {
  int kz = 0;
  d.cwiseAbs().maxCoeff(&kz);
  int kx = (kz + 1) % 3, ky = (kx + 1) % 3;
  if (d[kz] < 0.0) std::swap(kx, ky);
  const double sx = d[kx] / d[kz], sy = d[ky] / d[kz], sz = 1.0 / d[kz];
  const Vec<3> A = v0 - o, B = v1 - o, C = v2 - o;
  const double ax = A[kx] - sx * A[kz], ay = A[ky] - sy * A[kz];
  const double bx = B[kx] - sx * B[kz], by = B[ky] - sy * B[kz];
  const double cx = C[kx] - sx * C[kz], cy = C[ky] - sy * C[kz];
  const double U = cx * by - cy * bx;
  const double V = ax * cy - ay * cx;
  const double W = bx * ay - by * ax;
  if ((U < 0.0 || V < 0.0 || W < 0.0) && (U > 0.0 || V > 0.0 || W > 0.0)) return -1.0;
  const double det = U + V + W;
  if (det == 0.0) return -1.0;
  const double T = U * sz * A[kz] + V * sz * B[kz] + W * sz * C[kz];
  return T / det;
}

template <int DIM>
double intersect_element(const BoundaryMesh<DIM>& mesh, int e, const Vec<DIM>& o, const Vec<DIM>& d) {
  const auto& el = mesh.elements[e];
  if constexpr (DIM == 2) {
    return intersect_segment(o, d, mesh.vertices[el[0]], mesh.vertices[el[1]]);
  } else {
    return intersect_triangle(o, d, mesh.vertices[el[0]], mesh.vertices[el[1]], mesh.vertices[el[2]]);
  }
}

// Uniform point on element e from one or two uniforms.
template <int DIM>
Vec<DIM> sample_on_element(const BoundaryMesh<DIM>& mesh, int e, double u1, double u2) {
  const auto& el = mesh.elements[e];
  if constexpr (DIM == 2) {
    (void)u2;
    return mesh.vertices[el[0]] + u1 * (mesh.vertices[el[1]] - mesh.vertices[el[0]]);
  } else {
    const double s = std::sqrt(u1);
    return (1.0 - s) * mesh.vertices[el[0]] + s * (1.0 - u2) * mesh.vertices[el[1]] +
           s * u2 * mesh.vertices[el[2]];
  }
}

// Silhouette test for a candidate seen along `view`. Candidates with fewer
// than two incident elements always qualify; otherwise any incident pair
// with one front- and one back-facing element (or a grazing one) qualifies.
template <int DIM>
bool is_silhouette(const BoundaryMesh<DIM>& mesh, int c, const Vec<DIM>& view) {
  const auto& inc = mesh.candidates[c].elements;
  if (inc.size() < 2) return true;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    const double di = view.dot(mesh.normals[inc[i]]);
    for (std::size_t j = i + 1; j < inc.size(); ++j) {
      if (di * view.dot(mesh.normals[inc[j]]) <= 0.0) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Construction and validation

namespace detail {

inline std::string element_error(int e, const std::string& what) {
  return "element " + std::to_string(e) + ": " + what;
}

}  // namespace detail

// Builds normals, measures and silhouette candidates; throws
// Error(Invariant) on out-of-range indices, degenerate elements, or
// inconsistently oriented neighbours.
template <int DIM>
BoundaryMesh<DIM> make_mesh(std::vector<Vec<DIM>> vertices, std::vector<std::array<int, DIM>> elements,
                            BoundaryLabel label = BoundaryLabel::Neumann, bool double_sided = false) {
  BoundaryMesh<DIM> mesh;
  mesh.vertices = std::move(vertices);
  mesh.elements = std::move(elements);
  mesh.label = label;
  mesh.double_sided = double_sided;
  const int nv = static_cast<int>(mesh.vertices.size());
  const int ne = mesh.size();

  Vec<DIM> lo = Vec<DIM>::Constant(kInf), hi = Vec<DIM>::Constant(-kInf);
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite()) throw Error(ErrorCategory::Invariant, "non-finite vertex coordinate");
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double scale = nv > 0 ? (hi - lo).norm() : 0.0;

  mesh.normals.resize(ne);
  mesh.measures.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const auto& el = mesh.elements[e];
    for (int k = 0; k < DIM; ++k) {
      if (el[k] < 0 || el[k] >= nv) {
        throw Error(ErrorCategory::Invariant,
                    detail::element_error(e, "vertex index " + std::to_string(el[k]) + " out of range"));
      }
    }
    if constexpr (DIM == 2) {
      const Vec<2> d = mesh.vertices[el[1]] - mesh.vertices[el[0]];
      const double len = d.norm();
      if (!(len > 1e-14 * scale)) throw Error(ErrorCategory::Invariant, detail::element_error(e, "zero length"));
      mesh.normals[e] = Vec<2>(d.y(), -d.x()) / len;
      mesh.measures[e] = len;
    } else {
      const Vec<3> ab = mesh.vertices[el[1]] - mesh.vertices[el[0]];
      const Vec<3> ac = mesh.vertices[el[2]] - mesh.vertices[el[0]];
      const Vec<3> n = ab.cross(ac);
      const double twice_area = n.norm();
      if (!(twice_area > 1e-12 * ab.norm() * ac.norm()) || !(twice_area > 0.0)) {
        throw Error(ErrorCategory::Invariant, detail::element_error(e, "zero area"));
      }
      mesh.normals[e] = n / twice_area;
      mesh.measures[e] = 0.5 * twice_area;
    }
  }

  // Incidence: key -> (element, orientation sign).
  std::map<std::array<int, DIM - 1>, std::vector<std::pair<int, int>>> incidence;
  for (int e = 0; e < ne; ++e) {
    const auto& el = mesh.elements[e];
    if constexpr (DIM == 2) {
      incidence[{el[0]}].push_back({e, +1});  // segment leaves this vertex
      incidence[{el[1]}].push_back({e, -1});  // segment enters this vertex
    } else {
      for (int k = 0; k < 3; ++k) {
        const int a = el[k], b = el[(k + 1) % 3];
        incidence[{std::min(a, b), std::max(a, b)}].push_back({e, a < b ? +1 : -1});
      }
    }
  }
  mesh.candidates.reserve(incidence.size());
  for (auto& [key, inc] : incidence) {
    SilhouetteCandidate<DIM> cand;
    cand.vertices = key;
    if (inc.size() > 2) mesh.non_manifold = true;
    if (inc.size() == 2 && inc[0].second == inc[1].second) {
      throw Error(ErrorCategory::Invariant,
                  "inconsistent orientation between elements " + std::to_string(inc[0].first) + " and " +
                      std::to_string(inc[1].first));
    }
    for (const auto& [e, sign] : inc) cand.elements.push_back(e);
    std::sort(cand.elements.begin(), cand.elements.end());
    cand.elements.erase(std::unique(cand.elements.begin(), cand.elements.end()), cand.elements.end());
    mesh.candidates.push_back(std::move(cand));
  }
  return mesh;
}

// Axis-aligned bounds of all vertices referenced by elements.
template <int DIM>
std::pair<Vec<DIM>, Vec<DIM>> mesh_bounds(const BoundaryMesh<DIM>& mesh) {
  Vec<DIM> lo = Vec<DIM>::Constant(kInf), hi = Vec<DIM>::Constant(-kInf);
  for (const auto& el : mesh.elements) {
    for (int k = 0; k < DIM; ++k) {
      lo = lo.cwiseMin(mesh.vertices[el[k]]);
      hi = hi.cwiseMax(mesh.vertices[el[k]]);
    }
  }
  return {lo, hi};
}

}  // namespace wost
