#pragma once

#include "wost/baselines.hpp"
#include "wost/estimator.hpp"
#include "wost/parallel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wost {

enum class Method { Wost, Wos, WosReflect, Sde, RandomIntersection };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Wost: return "wost";
    case Method::Wos: return "wos";
    case Method::WosReflect: return "wos_reflect";
    case Method::Sde: return "sde";
    case Method::RandomIntersection: return "random_intersection";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::Wost, Method::Wos, Method::WosReflect, Method::Sde, Method::RandomIntersection}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

struct SolverSettings {
  EstimatorConfig wost;
  BaselineConfig baseline;
};

template <int DIM>
WalkOutcome run_method(const Scene<DIM>& scene, const Vec<DIM>& x, Method m, const SolverSettings& s, Sampler& rng) {
  switch (m) {
    case Method::Wost: return run_walk(scene, x, s.wost, rng);
    case Method::Wos: return wos_dirichlet(scene, x, s.baseline, rng);
    case Method::WosReflect: return wos_reflect(scene, x, s.baseline, rng);
    case Method::Sde: return sde_walk(scene, x, s.baseline, rng);
    case Method::RandomIntersection: return random_intersection_estimate(scene, x, s.baseline, rng);
  }
  return {};
}

// Estimates at every point; point i uses substreams (seed, i, walk), so the
// result does not depend on the thread count.
template <int DIM>
std::vector<PointEstimate> estimate_points(const Scene<DIM>& scene, const std::vector<Vec<DIM>>& points, int n_walks,
                                           Method m, const SolverSettings& s, std::uint64_t seed, int threads = 1) {
  if (m == Method::Wos && scene.has_neumann()) {
    throw Error(ErrorCategory::Invariant, "wos requires a pure Dirichlet scene");
  }
  std::vector<PointEstimate> out(points.size());
  parallel_for(static_cast<int>(points.size()), threads, [&](int i) {
    out[i] = accumulate_walks(n_walks, seed, static_cast<std::uint64_t>(i),
                              [&](Sampler& rng) { return run_method(scene, points[i], m, s, rng); });
  });
  return out;
}

}  // namespace wost
