#pragma once

#include "wost/estimator.hpp"

#include <cmath>
#include <cstdint>

namespace wost {

struct BaselineConfig {
  double epsilon = 1e-3;
  double zeta = 0.01;       // reflection offset for wos_reflect
  double sde_step = 1e-4;   // time step l of the Euler-Maruyama walk
  int max_steps = 1000000;
  double escape_factor = 8.0;
  double tikhonov_sigma = 0.0;
  int regularize_after = 0;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCategory::Invariant, m); };
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (!(zeta > epsilon)) fail("zeta must exceed epsilon");
    if (!(sde_step > 0.0)) fail("sde_step must be > 0");
    if (max_steps < 1) fail("max_steps must be a positive integer");
    if (!(escape_factor > 1.0)) fail("escape_factor must be > 1");
    if (!(tikhonov_sigma >= 0.0)) fail("tikhonov_sigma must be >= 0");
    if (regularize_after < 0) fail("regularize_after must be >= 0");
  }
};

namespace detail {

template <int DIM>
double baseline_sigma(const Scene<DIM>& scene, int steps, const BaselineConfig& cfg) {
  if (scene.has_dirichlet()) return scene.sigma;
  return scene.sigma + (steps >= cfg.regularize_after ? cfg.tikhonov_sigma : 0.0);
}

// Applies the screening factor q. Returns true when roulette kills the walk.
template <int DIM>
bool screen(const Scene<DIM>& scene, double q, double& throughput, Sampler& rng) {
  if (uses_roulette(scene)) return rng.uniform() >= q;
  throughput *= q;
  return false;
}

template <int DIM>
bool escaped(const Scene<DIM>& scene, const Vec<DIM>& x, double factor) {
  return (x - scene.center).norm() > factor * scene.radius;
}

template <int DIM>
double cap_radius(const Scene<DIM>& scene, double r) {
  return std::isfinite(r) ? r : 2.0 * scene.radius;
}

// Source estimate over a ball of radius R, sampled along `dir`; `inside`
// decides whether the sample point belongs to the domain.
template <int DIM, class Inside>
double ball_source(const Scene<DIM>& scene, const Vec<DIM>& x, const Vec<DIM>& dir, double R, double sigma,
                   Sampler& rng, Inside&& inside) {
  if (!scene.f) return 0.0;
  const KernelContext harmonic{DIM, R, 0.0};
  const double t = sample_greens_radius(harmonic, rng);
  if (!inside(t)) return 0.0;
  double w = greens_ball_norm(harmonic);
  if (sigma > 0.0) {
    const double g0 = greens_ball(harmonic, t);
    if (!(g0 > 0.0)) return 0.0;
    w *= greens_ball({DIM, R, sigma}, t) / g0;
  }
  return w * scene.f(Vec<DIM>(x + t * dir));
}

}  // namespace detail

// Classic walk on spheres. Same random draw order as wost_step, so on a
// pure-Dirichlet scene both produce the same trajectory from the same stream.
template <int DIM>
WalkOutcome wos_dirichlet(const Scene<DIM>& scene, const Vec<DIM>& x0, const BaselineConfig& cfg, Sampler& rng,
                          std::vector<Vec<DIM>>* trajectory = nullptr) {
  if (scene.has_neumann()) throw Error(ErrorCategory::Invariant, "wos requires a pure Dirichlet scene");
  Vec<DIM> x = x0;
  double acc = 0.0, thr = 1.0;
  for (int steps = 0;; ++steps) {
    if (trajectory) trajectory->push_back(x);
    if (steps >= cfg.max_steps) return {acc, steps, 0, Terminal::StepCapHit};
    if (detail::escaped(scene, x, cfg.escape_factor)) return {acc, steps, 0, Terminal::Escaped};
    const ClosestPointResult<DIM> cp = scene.dirichlet.closest_point(x);
    if (cp.distance < cfg.epsilon) {
      return {acc + thr * (scene.g ? scene.g(cp.point) : 0.0), steps, 0, Terminal::DirichletShell};
    }
    const double R = detail::cap_radius(scene, cp.distance);
    const double sigma = scene.sigma;
    const Vec<DIM> dir = sample_unit_direction<DIM>(rng);
    acc -= thr * detail::ball_source(scene, x, dir, R, sigma, rng, [&](double t) { return t < R; });
    if (sigma > 0.0) thr *= q_factor({DIM, R, sigma}, R);
    x = x + R * dir;
  }
}

// Walk on spheres with discretized boundary reflections: inside the Neumann
// epsilon shell the walk pays zeta * h and jumps zeta into the domain.
template <int DIM>
WalkOutcome wos_reflect(const Scene<DIM>& scene, const Vec<DIM>& x0, const BaselineConfig& cfg, Sampler& rng) {
  Vec<DIM> x = x0;
  double acc = 0.0, thr = 1.0;
  for (int steps = 0;; ++steps) {
    if (steps >= cfg.max_steps) return {acc, steps, 0, Terminal::StepCapHit};
    if (detail::escaped(scene, x, cfg.escape_factor)) return {acc, steps, 0, Terminal::Escaped};
    double d_dirichlet = kInf;
    if (scene.has_dirichlet()) {
      const ClosestPointResult<DIM> cp = scene.dirichlet.closest_point(x);
      d_dirichlet = cp.distance;
      if (d_dirichlet < cfg.epsilon) {
        return {acc + thr * (scene.g ? scene.g(cp.point) : 0.0), steps, 0, Terminal::DirichletShell};
      }
    }
    double d_neumann = kInf;
    if (scene.has_neumann()) {
      const ClosestPointResult<DIM> cn = scene.neumann.closest_point(x);
      d_neumann = cn.distance;
      if (d_neumann < cfg.epsilon) {
        const Vec<DIM>& n = scene.neumann.mesh().normals[cn.element];
        if (scene.h) acc += thr * cfg.zeta * scene.h(cn.point, n);
        x = cn.point - cfg.zeta * n;
        continue;
      }
    }
    const double R = detail::cap_radius(scene, std::min(d_dirichlet, d_neumann));
    const double sigma = detail::baseline_sigma(scene, steps, cfg);
    const Vec<DIM> dir = sample_unit_direction<DIM>(rng);
    acc -= thr * detail::ball_source(scene, x, dir, R, sigma, rng, [&](double t) { return t < R; });
    if (sigma > 0.0 && detail::screen(scene, q_factor({DIM, R, sigma}, R), thr, rng)) {
      return {acc, steps + 1, 0, Terminal::RouletteKilled};
    }
    x = x + R * dir;
  }
}

// Euler-Maruyama walk x += sqrt(l) xi (time step l of standard Brownian
// motion). Leaving through the Neumann boundary projects back to the closest
// Neumann point and pays h times the projection distance (local time).
template <int DIM>
WalkOutcome sde_walk(const Scene<DIM>& scene, const Vec<DIM>& x0, const BaselineConfig& cfg, Sampler& rng) {
  const double l = cfg.sde_step;
  const double sl = std::sqrt(l);
  const double nudge = 1e-7 * std::max(scene.radius, 1e-300);
  Vec<DIM> x = x0;
  double acc = 0.0, thr = 1.0;
  for (int steps = 0;; ++steps) {
    if (steps >= cfg.max_steps) return {acc, steps, 0, Terminal::StepCapHit};
    if (detail::escaped(scene, x, cfg.escape_factor)) return {acc, steps, 0, Terminal::Escaped};
    if (scene.has_dirichlet()) {
      const ClosestPointResult<DIM> cp = scene.dirichlet.closest_point(x);
      if (cp.distance < cfg.epsilon) {
        return {acc + thr * (scene.g ? scene.g(cp.point) : 0.0), steps, 0, Terminal::DirichletShell};
      }
    }
    // Generator of the walk is lap/2, hence the factor 1/2 on f and sigma.
    if (scene.f) acc -= thr * 0.5 * l * scene.f(x);
    const double sigma = detail::baseline_sigma(scene, steps, cfg);
    if (sigma > 0.0 && detail::screen(scene, std::exp(-0.5 * sigma * l), thr, rng)) {
      return {acc, steps + 1, 0, Terminal::RouletteKilled};
    }
    Vec<DIM> xi;
    for (int i = 0; i < DIM; ++i) xi[i] = rng.normal();
    const Vec<DIM> step = sl * xi;
    RayHit<DIM> hd, hn;
    if (scene.has_dirichlet()) hd = scene.dirichlet.intersect(x, step, 1.0);
    if (scene.has_neumann()) hn = scene.neumann.intersect(x, step, 1.0);
    if (hd.did_hit && (!hn.did_hit || hd.t <= hn.t)) {
      return {acc + thr * (scene.g ? scene.g(hd.point) : 0.0), steps + 1, 0, Terminal::DirichletShell};
    }
    const Vec<DIM> y = x + step;
    if (hn.did_hit) {
      const ClosestPointResult<DIM> cn = scene.neumann.closest_point(y);
      const Vec<DIM>& n = scene.neumann.mesh().normals[cn.element];
      if (scene.h) acc += thr * scene.h(cn.point, n) * cn.distance;
      x = cn.point - nudge * n;
    } else {
      x = y;
    }
  }
}

// Naive estimator: ball of radius d_dirichlet, one intersection picked
// uniformly among all boundary crossings along the ray (plus the sphere point
// when it lies in the domain), reweighted by the count and the kernel sign.
template <int DIM>
WalkOutcome random_intersection_estimate(const Scene<DIM>& scene, const Vec<DIM>& x0, const BaselineConfig& cfg,
                                     Sampler& rng) {
  Vec<DIM> x = x0;
  Vec<DIM> normal = Vec<DIM>::Zero();
  bool on_boundary = false;
  double acc = 0.0, thr = 1.0;
  for (int steps = 0;; ++steps) {
    if (steps >= cfg.max_steps) return {acc, steps, 0, Terminal::StepCapHit};
    if (detail::escaped(scene, x, cfg.escape_factor)) return {acc, steps, 0, Terminal::Escaped};
    double d_dirichlet = kInf;
    if (scene.has_dirichlet()) {
      const ClosestPointResult<DIM> cp = scene.dirichlet.closest_point(x);
      d_dirichlet = cp.distance;
      if (d_dirichlet < cfg.epsilon) {
        return {acc + thr * (scene.g ? scene.g(cp.point) : 0.0), steps, 0, Terminal::DirichletShell};
      }
    }
    const double R = detail::cap_radius(scene, d_dirichlet);
    const double sigma = detail::baseline_sigma(scene, steps, cfg);
    const double inv_alpha = on_boundary ? 2.0 : 1.0;

    // Full-sphere direction; from a boundary point the ray starts outside
    // when it leaves through the local face.
    const Vec<DIM> dir = sample_unit_direction<DIM>(rng);
    const bool starts_inside = !on_boundary || dir.dot(normal) < 0.0;
    std::vector<RayHit<DIM>> hits;
    if (scene.has_neumann()) hits = scene.neumann.intersect_all(x, dir, R);

    // Neumann term over every Neumann point in the ball, no visibility test.
    double n_hat = 0.0;
    if (scene.h && scene.has_neumann()) {
      const BoundarySample<DIM> smp = scene.neumann.sample_point(x, R, rng);
      const double dist = (smp.point - x).norm();
      if (smp.pdf > 0.0 && dist < R && dist > 0.0) {
        n_hat = greens_ball({DIM, R, sigma}, dist) * scene.h(smp.point, smp.normal) / smp.pdf;
      }
    }
    const double s_hat = detail::ball_source(scene, x, dir, R, sigma, rng, [&](double t) {
      int crossings = 0;
      for (const auto& h : hits) crossings += h.t < t ? 1 : 0;
      return (crossings % 2 == 0) == starts_inside;
    });
    acc += thr * inv_alpha * (n_hat - s_hat);

    const bool sphere_inside = (hits.size() % 2 == 0) == starts_inside;
    const int count = static_cast<int>(hits.size()) + (sphere_inside ? 1 : 0);
    if (count == 0) return {acc, steps + 1, 0, Terminal::RouletteKilled};
    const int pick = std::min(count - 1, static_cast<int>(rng.uniform() * count));
    double factor = inv_alpha * count;
    double dist = R;
    if (pick < static_cast<int>(hits.size())) {
      const RayHit<DIM>& h = hits[pick];
      dist = h.t;
      factor *= h.normal.dot(dir) >= 0.0 ? 1.0 : -1.0;
      x = h.point;
      normal = h.normal;
      on_boundary = true;
    } else {
      x = x + R * dir;
      on_boundary = false;
    }
    if (sigma > 0.0) {
      const double q = q_factor({DIM, R, sigma}, dist);
      if (detail::screen(scene, q, thr, rng)) return {acc, steps + 1, 0, Terminal::RouletteKilled};
    }
    thr *= factor;
  }
}

}  // namespace wost
