#pragma once

#include "wost/snch.hpp"

#include <functional>
#include <memory>

namespace wost {

template <int DIM>
struct Scene {
  static constexpr int kDim = DIM;
  using Point = Vec<DIM>;
  using ScalarField = std::function<double(const Point&)>;
  // Boundary data receives the point and the outward normal of the side it is read from.
  using BoundaryField = std::function<double(const Point&, const Point&)>;

  SnchTree<DIM> dirichlet;
  SnchTree<DIM> neumann;

  ScalarField g;        // Dirichlet values (the + side when double sided)
  ScalarField g_minus;  // optional, double sided only
  BoundaryField h;      // Neumann data, outward normal derivative
  BoundaryField h_minus;
  ScalarField f;        // source term of lap u - sigma u = f; empty means 0

  double sigma = 0.0;
  bool double_sided = false;

  Point center = Point::Zero();  // bounding sphere of all boundary geometry
  double radius = 0.0;

  bool has_dirichlet() const { return !dirichlet.empty(); }
  bool has_neumann() const { return !neumann.empty(); }
};

template <int DIM>
Scene<DIM> make_scene(BoundaryMesh<DIM> dirichlet, BoundaryMesh<DIM> neumann, int max_leaf_size = 4) {
  dirichlet.label = BoundaryLabel::Dirichlet;
  neumann.label = BoundaryLabel::Neumann;
  Scene<DIM> scene;
  Aabb<DIM> bounds;
  for (const auto* m : {&dirichlet, &neumann}) {
    if (m->empty()) continue;
    const auto [lo, hi] = mesh_bounds(*m);
    bounds.expand(lo);
    bounds.expand(hi);
  }
  if (bounds.valid()) {
    scene.center = bounds.centroid();
    scene.radius = bounds.bounding_radius();
  }
  scene.dirichlet = SnchTree<DIM>(std::make_shared<const BoundaryMesh<DIM>>(std::move(dirichlet)), max_leaf_size);
  scene.neumann = SnchTree<DIM>(std::make_shared<const BoundaryMesh<DIM>>(std::move(neumann)), max_leaf_size);
  return scene;
}

}  // namespace wost
