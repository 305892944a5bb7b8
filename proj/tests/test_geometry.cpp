#include "support/meshes.hpp"
#include "wost/brute_force.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <set>

using namespace wost;
using namespace wost::testing;

namespace {

template <int DIM>
std::shared_ptr<const BoundaryMesh<DIM>> share(BoundaryMesh<DIM> m) {
  return std::make_shared<const BoundaryMesh<DIM>>(std::move(m));
}

template <int DIM>
Vec<DIM> random_point(std::mt19937_64& rng, const Vec<DIM>& lo, const Vec<DIM>& hi) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Vec<DIM> p;
  for (int i = 0; i < DIM; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * U(rng);
  return p;
}

template <int DIM>
Vec<DIM> random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  Vec<DIM> d;
  for (int i = 0; i < DIM; ++i) d[i] = N(rng);
  return d.normalized();
}

std::vector<BoundaryMesh<3>> oracle_meshes() {
  return {icosphere(3), l_extrusion(3), random_soup(400, 11)};
}

}  // namespace

TEST(Mesh, NormalsAreUnitAndOutward) {
  const auto m = icosphere(2);
  for (int e = 0; e < m.size(); ++e) {
    EXPECT_NEAR(m.normals[e].norm(), 1.0, 1e-12);
    const Vec<3> c = (m.vertices[m.elements[e][0]] + m.vertices[m.elements[e][1]] + m.vertices[m.elements[e][2]]) / 3;
    EXPECT_GT(m.normals[e].dot(c), 0.0);
  }
  for (const auto& c : m.candidates) EXPECT_EQ(c.elements.size(), 2u);
  EXPECT_FALSE(m.non_manifold);
}

TEST(Mesh, CounterclockwisePolygonHasOutwardNormals) {
  const auto sq = polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_TRUE(sq.normals[0].isApprox(Vec<2>(0, -1)));
  EXPECT_TRUE(sq.normals[1].isApprox(Vec<2>(1, 0)));
  EXPECT_EQ(sq.candidates.size(), 4u);
}

TEST(Mesh, RejectsDegenerateElementWithIndex) {
  std::vector<Vec<3>> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {2, 0, 0}};
  try {
    make_mesh<3>(v, {{0, 1, 2}, {0, 1, 3}});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::Invariant);
    EXPECT_NE(std::string(e.what()).find("element 1"), std::string::npos);
  }
}

TEST(Mesh, RejectsInconsistentOrientation) {
  std::vector<Vec<3>> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  EXPECT_THROW(make_mesh<3>(v, {{0, 1, 2}, {1, 2, 3}}), Error);
  EXPECT_NO_THROW(make_mesh<3>(v, {{0, 1, 2}, {2, 1, 3}}));
}

TEST(Mesh, FlagsNonManifoldEdges) {
  std::vector<Vec<3>> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}};
  const auto m = make_mesh<3>(v, {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}});
  EXPECT_TRUE(m.non_manifold);
}

TEST(Snch, SingleTriangleIsLeafWithZeroCone) {
  SnchTree<3> t(share(make_mesh<3>({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}})));
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_TRUE(t.nodes()[0].leaf());
  EXPECT_EQ(t.nodes()[0].cone.half_angle, kPi);  // boundary edges force a full cone
}

TEST(Snch, CoplanarTrianglesHaveZeroConeWithoutOpenEdges) {
  // Two coplanar triangles; the cone over elements alone is tight.
  const auto m = share(make_mesh<3>({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}, {{0, 1, 2}, {2, 1, 3}}));
  for (int e = 0; e < 2; ++e) EXPECT_DOUBLE_EQ(m->normals[e].dot(m->normals[0]), 1.0);
  // Closed box: every node's cone bounds its normals; a face pair is flat.
  SnchTree<3> t(share(box(Vec<3>(0, 0, 0), Vec<3>(1, 1, 1))), 2);
  for (const auto& node : t.nodes()) {
    if (node.cand_begin == node.cand_end && node.end - node.begin == 2) {
      const auto& n0 = t.mesh().normals[t.element_order()[node.begin]];
      const auto& n1 = t.mesh().normals[t.element_order()[node.begin + 1]];
      if (n0.dot(n1) == 1.0) {
        EXPECT_EQ(node.cone.half_angle, 0.0);
      }
    }
  }
}

TEST(Snch, StructuralInvariants) {
  for (int leaf : {1, 4, 8}) {
    SnchTree<3> t(share(icosphere(3)), leaf);
    const auto& mesh = t.mesh();
    std::multiset<int> seen;
    for (std::size_t ni = 0; ni < t.nodes().size(); ++ni) {
      const auto& node = t.nodes()[ni];
      // cone bounds every contained element normal
      for (int i = node.begin; i < node.end; ++i) {
        const int e = t.element_order()[i];
        const double ang = std::acos(std::clamp(node.cone.axis.dot(mesh.normals[e]), -1.0, 1.0));
        EXPECT_LE(ang, node.cone.half_angle);
      }
      if (node.leaf()) {
        EXPECT_LE(node.end - node.begin, leaf);
        for (int i = node.begin; i < node.end; ++i) seen.insert(t.element_order()[i]);
      } else {
        const auto& L = t.nodes()[node.left];
        const auto& R = t.nodes()[node.right];
        EXPECT_TRUE(node.box.contains(L.box));
        EXPECT_TRUE(node.box.contains(R.box));
      }
    }
    EXPECT_EQ(static_cast<int>(seen.size()), mesh.size());
    EXPECT_EQ(static_cast<int>(std::set<int>(seen.begin(), seen.end()).size()), mesh.size());
  }
}

TEST(Snch, EmptyMeshReturnsSentinels) {
  SnchTree<3> t(share(BoundaryMesh<3>{}));
  EXPECT_TRUE(t.empty());
  EXPECT_EQ(t.closest_point(Vec<3>::Zero()).distance, kInf);
  EXPECT_FALSE(t.closest_point(Vec<3>::Zero()).found());
  EXPECT_EQ(t.silhouette_distance(Vec<3>::Zero(), 2.5), 2.5);
  EXPECT_FALSE(t.intersect(Vec<3>::Zero(), Vec<3>::UnitX(), kInf).did_hit);
  Sampler s(1);
  EXPECT_EQ(t.sample_point(Vec<3>::Zero(), 1.0, s).pdf, 0.0);
}

TEST(ClosestPoint, UnitCubeCenter) {
  SnchTree<3> t(share(box(Vec<3>(0, 0, 0), Vec<3>(1, 1, 1))));
  EXPECT_DOUBLE_EQ(t.closest_point(Vec<3>(0.5, 0.5, 0.5)).distance, 0.5);
}

TEST(ClosestPoint, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (const auto& m : oracle_meshes()) {
    SnchTree<3> t(share(m));
    const auto [lo, hi] = mesh_bounds(m);
    const Vec<3> pad = 0.2 * (hi - lo);
    for (int q = 0; q < 1000; ++q) {
      const Vec<3> x = random_point<3>(rng, lo - pad, hi + pad);
      const auto a = t.closest_point(x);
      const auto b = brute_force::closest_point(m, x);
      ASSERT_EQ(a.element, b.element);
      ASSERT_LE(std::abs(a.distance - b.distance), 1e-12 * std::max(b.distance, 1e-300));
    }
  }
}

TEST(ClosestPoint, TwoDimensionalMatchesBruteForce) {
  std::mt19937_64 rng(6);
  const auto m = merge(circle(Vec<2>(0, 0), 2.0, 97, false), circle(Vec<2>(0.3, 0.1), 0.7, 41, true));
  SnchTree<2> t(share(m));
  for (int q = 0; q < 2000; ++q) {
    const Vec<2> x = random_point<2>(rng, Vec<2>(-2.5, -2.5), Vec<2>(2.5, 2.5));
    const auto a = t.closest_point(x);
    const auto b = brute_force::closest_point(m, x);
    ASSERT_EQ(a.element, b.element);
    ASSERT_EQ(a.distance, b.distance);
  }
}

TEST(Silhouette, IsSilhouetteExamples) {
  // planar grid: interior edge never a silhouette
  std::vector<Vec<3>> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  const auto flat = make_mesh<3>(v, {{0, 1, 2}, {2, 1, 3}});
  int interior = -1, boundary = -1;
  for (int c = 0; c < static_cast<int>(flat.candidates.size()); ++c) {
    (flat.candidates[c].elements.size() == 2 ? interior : boundary) = c;
  }
  ASSERT_GE(interior, 0);
  EXPECT_FALSE(is_silhouette(flat, interior, Vec<3>(0.3, 0.2, -1.0)));
  EXPECT_FALSE(is_silhouette(flat, interior, Vec<3>(-0.3, 0.9, 2.0)));
  EXPECT_TRUE(is_silhouette(flat, boundary, Vec<3>(0.3, 0.2, -1.0)));
  // cube edge seen along one face normal
  const auto cube = box(Vec<3>(0, 0, 0), Vec<3>(1, 1, 1));
  int edge = -1;
  for (int c = 0; c < static_cast<int>(cube.candidates.size()); ++c) {
    const auto& inc = cube.candidates[c].elements;
    if (std::abs(cube.normals[inc[0]].dot(cube.normals[inc[1]])) < 0.5) edge = c;
  }
  ASSERT_GE(edge, 0);
  const auto& inc = cube.candidates[edge].elements;
  EXPECT_TRUE(is_silhouette(cube, edge, Vec<3>(-cube.normals[inc[0]])));
}

TEST(Silhouette, HasSilhouetteExamples) {
  Aabb<3> b;
  b.expand(Vec<3>(-0.1, -0.1, 0.0));
  b.expand(Vec<3>(0.1, 0.1, 0.0));
  NormalCone<3> wide{Vec<3>::UnitZ(), 0.5 * kPi};
  EXPECT_TRUE(has_silhouette(b, wide, Vec<3>(0, 0, 5)));
  NormalCone<3> flat{Vec<3>::UnitZ(), 0.0};
  EXPECT_FALSE(has_silhouette(b, flat, Vec<3>(0, 0, 5)));
}

TEST(Silhouette, HasSilhouetteIsConservative) {
  std::mt19937_64 rng(9);
  for (const auto& m : oracle_meshes()) {
    SnchTree<3> t(share(m), 2);
    const auto [lo, hi] = mesh_bounds(m);
    const Vec<3> pad = 0.5 * (hi - lo);
    for (int q = 0; q < 200; ++q) {
      const Vec<3> x = random_point<3>(rng, lo - pad, hi + pad);
      for (const auto& node : t.nodes()) {
        bool any = false;
        for (int i = node.cand_begin; i < node.cand_end && !any; ++i) {
          const int c = t.candidate_order()[i];
          any = is_silhouette(m, c, Vec<3>(closest_point_on_candidate(m, c, x) - x));
        }
        if (any) {
          ASSERT_TRUE(has_silhouette(node.box, node.cone, x));
        }
      }
    }
  }
}

TEST(Silhouette, ConvexIcosphereCenterSeesNone) {
  const auto m = icosphere(3);
  SnchTree<3> t(share(m));
  EXPECT_EQ(t.silhouette_distance(Vec<3>::Zero(), 10.0), 10.0);
  EXPECT_EQ(brute_force::closest_silhouette(m, Vec<3>(Vec<3>::Zero()), 10.0).distance, 10.0);
  EXPECT_EQ(t.silhouette_distance(Vec<3>::Zero(), kInf), kInf);
}

TEST(Silhouette, ReentrantCornerOfLPolygon) {
  const auto m = polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  SnchTree<2> t(share(m));
  double prev = kInf;
  // approach from below the edge y = 1, x > 1, where the corner is on the silhouette
  for (double s : {0.5, 0.2, 0.05, 0.01}) {
    const Vec<2> x(1.0 + s, 1.0 - s);
    const double d = t.silhouette_distance(x, kInf);
    EXPECT_NEAR(d, std::sqrt(2.0) * s, 1e-12);
    EXPECT_LT(d, prev);
    prev = d;
  }
  // seen along the diagonal, both incident edges face the same way
  EXPECT_EQ(t.silhouette_distance(Vec<2>(0.9, 0.9), 1.0), 1.0);
}

TEST(Silhouette, MatchesBruteForce) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& m : oracle_meshes()) {
    SnchTree<3> t(share(m));
    const auto [lo, hi] = mesh_bounds(m);
    const Vec<3> pad = 0.3 * (hi - lo);
    const double diag = (hi - lo).norm();
    for (int q = 0; q < 1000; ++q) {
      const Vec<3> x = random_point<3>(rng, lo - pad, hi + pad);
      const double r_max = q % 4 == 0 ? kInf : U(rng) * diag;
      const auto a = t.closest_silhouette(x, r_max);
      const auto b = brute_force::closest_silhouette(m, x, r_max);
      ASSERT_EQ(a.candidate, b.candidate) << "query " << q;
      ASSERT_EQ(a.distance, b.distance);
    }
  }
}

TEST(Silhouette, VisitedNodesGrowSublinearly) {
  std::vector<double> ratio;
  for (int level : {3, 4, 5}) {
    const auto m = icosphere(level);
    SnchTree<3> t(share(m));
    std::mt19937_64 rng(2);
    double visited = 0;
    for (int q = 0; q < 200; ++q) {
      const Vec<3> x = random_direction<3>(rng) * 1.6;
      visited += t.closest_silhouette(x, kInf).nodes_visited;
    }
    ratio.push_back(visited / 200.0 / m.size());
  }
  EXPECT_LT(ratio[1], ratio[0]);
  EXPECT_LT(ratio[2], ratio[1]);
}

TEST(Ray, CubeCenterToFace) {
  SnchTree<3> t(share(box(Vec<3>(0, 0, 0), Vec<3>(1, 1, 1))));
  const auto h = t.intersect(Vec<3>(0.5, 0.5, 0.5), Vec<3>::UnitX(), kInf);
  ASSERT_TRUE(h.did_hit);
  EXPECT_DOUBLE_EQ(h.t, 0.5);
  EXPECT_TRUE(h.normal.isApprox(Vec<3>::UnitX()));
  EXPECT_FALSE(t.intersect(Vec<3>(0.5, 0.5, 2.0), Vec<3>::UnitX(), kInf).did_hit);
  // non-unit direction: t in units of |d|
  const auto h2 = t.intersect(Vec<3>(0.5, 0.5, 0.5), Vec<3>(2, 0, 0), kInf);
  EXPECT_DOUBLE_EQ(h2.t, 0.25);
  EXPECT_FALSE(t.intersect(Vec<3>(0.5, 0.5, 0.5), Vec<3>(2, 0, 0), 0.2).did_hit);
}

TEST(Ray, MatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (const auto& m : oracle_meshes()) {
    SnchTree<3> t(share(m));
    const auto [lo, hi] = mesh_bounds(m);
    const Vec<3> pad = 0.3 * (hi - lo);
    int hits = 0;
    for (int q = 0; q < 1000; ++q) {
      const Vec<3> o = random_point<3>(rng, lo - pad, hi + pad);
      const Vec<3> d = random_direction<3>(rng) * (q % 3 == 0 ? 0.37 : 1.0);
      const double t_max = q % 2 == 0 ? kInf : 1.5;
      const auto a = t.intersect(o, d, t_max);
      const auto b = brute_force::intersect(m, o, d, t_max);
      ASSERT_EQ(a.did_hit, b.did_hit);
      if (!a.did_hit) continue;
      ++hits;
      ASSERT_EQ(a.element, b.element);
      ASSERT_EQ(a.t, b.t);
      ASSERT_LE((a.point - (o + a.t * d)).norm(), 1e-9 * std::max(1.0, a.point.norm()));
    }
    EXPECT_GT(hits, 100);
  }
}

TEST(Ray, RaysThroughSharedEdgesAreNotLost) {
  // watertightness: rays from inside a closed mesh always hit
  const auto m = icosphere(2);
  SnchTree<3> t(share(m));
  for (int q = 0; q < 2000; ++q) {
    const Vec<3> target = m.vertices[q % m.vertices.size()];
    const Vec<3> o = Vec<3>::Zero();
    EXPECT_TRUE(t.intersect(o, target - o, kInf).did_hit);
  }
}

TEST(Sampling, SingleTriangleInsideBall) {
  const auto m = share(make_mesh<3>({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}));
  SnchTree<3> t(m);
  Sampler s(4);
  for (int i = 0; i < 100; ++i) {
    const auto smp = t.sample_point(Vec<3>(0.2, 0.2, 0.1), 5.0, s);
    EXPECT_DOUBLE_EQ(smp.pdf, 2.0);
    EXPECT_NEAR(smp.point.z(), 0.0, 1e-15);
  }
}

TEST(Sampling, SymmetricPairIsEquallyLikely) {
  const auto m = share(make_mesh<2>({{-2, -1}, {-2, 1}, {2, 1}, {2, -1}}, {{0, 1}, {2, 3}}));
  SnchTree<2> t(m, 1);
  const auto p = t.selection_probabilities(Vec<2>(0, 0), 5.0);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Sampling, SelectionProbabilitiesSumToOne) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (const auto& m : {icosphere(2), random_soup(60, 4)}) {
    SnchTree<3> t(share(m), 3);
    for (int q = 0; q < 50; ++q) {
      const Vec<3> x = random_point<3>(rng, Vec<3>::Constant(-0.2), Vec<3>::Constant(1.0));
      const double r = 0.1 + U(rng);
      const auto p = t.selection_probabilities(x, r);
      double total = 0.0;
      for (int e = 0; e < m.size(); ++e) {
        const bool inside = (closest_point_on_element(m, e, x) - x).norm() <= r;
        if (!inside) {
          EXPECT_EQ(p[e], 0.0);
        }
        total += p[e];
      }
      // the remaining mass is the dead-end probability; enumerate it directly
      double dead = 0.0;
      std::function<void(int, double)> walk = [&](int ni, double prob) {
        const auto& node = t.nodes()[ni];
        auto w = [&](int c) {
          const auto& b = t.nodes()[c].box;
          return b.distance(x) <= r ? 1.0 / (4.0 * kPi * std::max((b.centroid() - x).norm(), 1e-150)) : 0.0;
        };
        if (node.leaf()) {
          bool any = false;
          for (int i = node.begin; i < node.end; ++i) {
            any |= (closest_point_on_element(m, t.element_order()[i], x) - x).norm() <= r;
          }
          if (!any) dead += prob;
          return;
        }
        const double wl = w(node.left), wr = w(node.right);
        if (wl + wr == 0.0) {
          dead += prob;
          return;
        }
        if (wl > 0) walk(node.left, prob * wl / (wl + wr));
        if (wr > 0) walk(node.right, prob * wr / (wl + wr));
      };
      if (t.nodes()[0].box.distance(x) <= r) {
        walk(0, 1.0);
      } else {
        dead = 1.0;
      }
      EXPECT_NEAR(total + dead, 1.0, 1e-12);
    }
  }
}

TEST(Sampling, EmpiricalFrequenciesMatchProbabilities) {
  const auto m = icosphere(1);
  SnchTree<3> t(share(m), 2);
  const Vec<3> x(0.3, -0.2, 0.9);
  const double r = 0.8;
  const auto p = t.selection_probabilities(x, r);
  std::vector<int> counts(m.size(), 0);
  Sampler s(8);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto smp = t.sample_point(x, r, s);
    if (smp.pdf > 0) {
      ++counts[smp.element];
      EXPECT_NEAR(smp.pdf, p[smp.element] / m.measures[smp.element], 1e-12 * smp.pdf);
    }
  }
  for (int e = 0; e < m.size(); ++e) {
    const double expected = n * p[e];
    EXPECT_LE(std::abs(counts[e] - expected), 5.0 * std::sqrt(expected + 1.0));
  }
}

TEST(Sampling, IntegralMatchesQuadrature) {
  // integral over the part of a unit square in the plane z = 0 within the ball
  std::vector<Vec<3>> v;
  std::vector<Tri> f;
  const int n = 12;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) v.push_back(Vec<3>(double(i) / n, double(j) / n, 0.0));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = j * (n + 1) + i;
      f.push_back({a, a + 1, a + n + 2});
      f.push_back({a, a + n + 2, a + n + 1});
    }
  const auto m = make_mesh<3>(v, f);
  SnchTree<3> t(share(m));
  const Vec<3> x(0.4, 0.5, 0.2);
  const double r = 0.6;
  auto phi = [](const Vec<3>& z) { return 1.0 + z.x() * z.x() - 0.5 * z.y(); };
  // Every element meeting the ball is counted in full by the sampler; the
  // edge-midpoint rule is exact for quadratics.
  double quad = 0.0;
  for (int e = 0; e < m.size(); ++e) {
    if ((closest_point_on_element(m, e, x) - x).norm() > r) continue;
    const auto& el = m.elements[e];
    const Vec<3> a = m.vertices[el[0]], b = m.vertices[el[1]], c = m.vertices[el[2]];
    quad += m.measures[e] / 3.0 * (phi(0.5 * (a + b)) + phi(0.5 * (b + c)) + phi(0.5 * (c + a)));
  }
  Sampler s(12);
  const int N = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < N; ++i) {
    const auto smp = t.sample_point(x, r, s);
    const double val = smp.pdf > 0 ? phi(smp.point) / smp.pdf : 0.0;
    sum += val;
    sum2 += val * val;
  }
  const double mean = sum / N;
  const double se = std::sqrt((sum2 / N - mean * mean) / N);
  EXPECT_LE(std::abs(mean - quad), 3.0 * se) << mean << " vs " << quad;
}
