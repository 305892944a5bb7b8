#pragma once

#include "wost/errors.hpp"
#include "wost/kernels.hpp"
#include "wost/scene.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace wost {

struct EstimatorConfig {
  double epsilon = 1e-3;
  double r_min = 1e-3;
  int max_steps = 10000;
  double tikhonov_sigma = 0.0;  // pure Neumann only
  int regularize_after = 0;
  double normal_offset = 1e-6;
  double escape_factor = 8.0;  // walks farther than this many bounding radii are Escaped
  std::uint64_t seed = 0;

  // Defaults for a scene whose bounding radius is `scale`.
  static EstimatorConfig scaled(double scale) {
    EstimatorConfig c;
    c.epsilon = 1e-3 * scale;
    c.r_min = 1e-3 * scale;
    c.normal_offset = 1e-6 * scale;
    return c;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCategory::Invariant, m); };
    if (!(epsilon > 0.0)) fail("epsilon must be > 0");
    if (!(r_min > 0.0)) fail("r_min must be > 0");
    if (max_steps < 1) fail("max_steps must be a positive integer");
    if (!(tikhonov_sigma >= 0.0)) fail("tikhonov_sigma must be >= 0");
    if (regularize_after < 0 || regularize_after > max_steps) fail("regularize_after must lie in [0, max_steps]");
    if (!(normal_offset >= 0.0)) fail("normal_offset must be >= 0");
    if (!(escape_factor > 1.0)) fail("escape_factor must be > 1");
  }
};

enum class Terminal { DirichletShell, RouletteKilled, StepCapHit, Escaped };

inline const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::DirichletShell: return "dirichlet_shell";
    case Terminal::RouletteKilled: return "roulette_killed";
    case Terminal::StepCapHit: return "step_cap_hit";
    case Terminal::Escaped: return "escaped";
  }
  return "?";
}

template <int DIM>
struct WalkState {
  Vec<DIM> position = Vec<DIM>::Zero();
  Vec<DIM> normal = Vec<DIM>::Zero();  // outward normal of the side the walker is on
  bool on_neumann = false;
  bool flipped = false;  // double sided: walker sits on the - side of the element
  int steps = 0;
  int clamped_steps = 0;
  double throughput = 1.0;
  double accumulator = 0.0;
  Vec<DIM> prev_direction = Vec<DIM>::Zero();
};

template <int DIM>
struct StarRegion {
  Vec<DIM> center = Vec<DIM>::Zero();
  double radius = 0.0;
  double d_dirichlet = kInf;
  double d_silhouette = kInf;
  bool clamped = false;
};

struct WalkOutcome {
  double value = 0.0;
  int steps = 0;
  int clamped_steps = 0;
  Terminal terminal = Terminal::DirichletShell;
};

// ---------------------------------------------------------------------------
// Star region

template <int DIM>
StarRegion<DIM> star_region_from(const Scene<DIM>& scene, const WalkState<DIM>& s, double d_dirichlet,
                                 const EstimatorConfig& cfg) {
  StarRegion<DIM> r;
  r.center = s.position;
  r.d_dirichlet = d_dirichlet;
  r.d_silhouette = kInf;
  if (scene.has_neumann()) {
    // On the boundary the query is nudged off the surface so the walker's own
    // face has a definite facing; flat continuations are then not silhouettes.
    const Vec<DIM> q = s.on_neumann ? Vec<DIM>(s.position - cfg.normal_offset * s.normal) : s.position;
    const SilhouetteResult<DIM> sil = scene.neumann.closest_silhouette(q, d_dirichlet);
    if (sil.candidate >= 0) r.d_silhouette = sil.distance;
  }
  const double m = std::min(r.d_dirichlet, r.d_silhouette);
  r.clamped = m < cfg.r_min;
  r.radius = std::max(cfg.r_min, m);
  if (!std::isfinite(r.radius)) r.radius = std::max(2.0 * scene.radius, cfg.r_min);
  return r;
}

template <int DIM>
StarRegion<DIM> star_region(const Scene<DIM>& scene, const WalkState<DIM>& s, const EstimatorConfig& cfg) {
  const double dd = scene.has_dirichlet() ? scene.dirichlet.closest_point(s.position).distance : kInf;
  return star_region_from(scene, s, dd, cfg);
}

template <int DIM>
StarRegion<DIM> star_region(const Scene<DIM>& scene, const Vec<DIM>& x, const EstimatorConfig& cfg) {
  WalkState<DIM> s;
  s.position = x;
  return star_region(scene, s, cfg);
}

// ---------------------------------------------------------------------------
// Per-step pieces

// Screening parameter for the current step. Pure-Neumann scenes pick up the
// Tikhonov term once the walk is long enough.
template <int DIM>
double effective_sigma(const Scene<DIM>& scene, const WalkState<DIM>& s, const EstimatorConfig& cfg) {
  if (scene.has_dirichlet()) return scene.sigma;
  return scene.sigma + (s.steps >= cfg.regularize_after ? cfg.tikhonov_sigma : 0.0);
}

// Screening acts as Russian roulette when there is no Dirichlet boundary,
// and as a throughput weight otherwise.
template <int DIM>
bool uses_roulette(const Scene<DIM>& scene) {
  return !scene.has_dirichlet();
}

namespace detail {

// Neumann data on the side of z that x looks at.
template <int DIM>
double neumann_value(const Scene<DIM>& scene, const Vec<DIM>& z, const Vec<DIM>& n_plus, bool plus_side) {
  if (plus_side || !scene.double_sided) return scene.h(z, n_plus);
  if (scene.h_minus) return scene.h_minus(z, -n_plus);
  return scene.h(z, -n_plus);
}

template <int DIM>
double dirichlet_value(const Scene<DIM>& scene, const ClosestPointResult<DIM>& cp, const Vec<DIM>& q) {
  if (!scene.g) return 0.0;
  if (!scene.double_sided || !scene.g_minus) return scene.g(cp.point);
  const Vec<DIM>& n = scene.dirichlet.mesh().normals[cp.element];
  return q.dot(n) > 0.0 ? scene.g(cp.point) : scene.g_minus(cp.point);
}

}  // namespace detail

// Single-sample estimate of the Neumann boundary term over the star region.
template <int DIM>
double neumann_contribution(const Scene<DIM>& scene, const StarRegion<DIM>& region, const WalkState<DIM>& s,
                            const EstimatorConfig& cfg, Sampler& rng, double sigma) {
  if (!scene.h || !scene.has_neumann()) return 0.0;
  const Vec<DIM>& x = s.position;
  const BoundarySample<DIM> smp = scene.neumann.sample_point(x, region.radius, rng);
  if (!(smp.pdf > 0.0)) return 0.0;
  const double dist = (smp.point - x).norm();
  if (!(dist < region.radius) || !(dist > 0.0)) return 0.0;
  const Vec<DIM> origin = s.on_neumann ? Vec<DIM>(x - cfg.normal_offset * s.normal) : x;
  if (scene.neumann.intersect(origin, smp.point - origin, 1.0 - 1e-6).did_hit) return 0.0;

  bool plus_side = true;
  if (scene.double_sided) {
    plus_side = s.on_neumann ? !s.flipped : (smp.point - x).dot(smp.normal) > 0.0;
  }
  const double alpha = s.on_neumann ? 0.5 : 1.0;
  const double G = greens_ball({DIM, region.radius, sigma}, dist);
  return G * detail::neumann_value(scene, smp.point, smp.normal, plus_side) / (alpha * smp.pdf);
}

// Single-sample estimate of the source term, reusing the step direction.
template <int DIM>
double source_contribution(const Scene<DIM>& scene, const StarRegion<DIM>& region, const WalkState<DIM>& s,
                           const Vec<DIM>& direction, double hit_t, Sampler& rng, double sigma) {
  if (!scene.f) return 0.0;
  const KernelContext harmonic{DIM, region.radius, 0.0};
  const double t = sample_greens_radius(harmonic, rng);
  if (!(t < hit_t)) return 0.0;
  double w = greens_ball_norm(harmonic);
  if (sigma > 0.0) {
    const double g0 = greens_ball(harmonic, t);
    if (!(g0 > 0.0)) return 0.0;
    w *= greens_ball({DIM, region.radius, sigma}, t) / g0;
  }
  return w * scene.f(Vec<DIM>(s.position + t * direction));
}

// ---------------------------------------------------------------------------
// Walk

namespace detail {

inline WalkOutcome finish(double value, int steps, int clamped, Terminal t) {
  return WalkOutcome{value, steps, clamped, t};
}

}  // namespace detail

// Advances the walk by one step, or returns the terminal outcome.
template <int DIM>
std::optional<WalkOutcome> wost_step(const Scene<DIM>& scene, WalkState<DIM>& s, const EstimatorConfig& cfg,
                                     Sampler& rng) {
  if (s.steps >= cfg.max_steps) {
    return detail::finish(s.accumulator, s.steps, s.clamped_steps,
                          scene.double_sided ? Terminal::Escaped : Terminal::StepCapHit);
  }
  if ((s.position - scene.center).norm() > cfg.escape_factor * scene.radius) {
    return detail::finish(s.accumulator, s.steps, s.clamped_steps, Terminal::Escaped);
  }

  double d_dirichlet = kInf;
  if (scene.has_dirichlet()) {
    const ClosestPointResult<DIM> cp = scene.dirichlet.closest_point(s.position);
    d_dirichlet = cp.distance;
    if (d_dirichlet < cfg.epsilon) {
      const double g = detail::dirichlet_value(scene, cp, s.prev_direction);
      return detail::finish(s.accumulator + s.throughput * g, s.steps, s.clamped_steps, Terminal::DirichletShell);
    }
  }

  const StarRegion<DIM> region = star_region_from(scene, s, d_dirichlet, cfg);
  if (region.clamped) ++s.clamped_steps;
  const double sigma = effective_sigma(scene, s, cfg);

  const Vec<DIM> dir = s.on_neumann ? sample_hemisphere_direction<DIM>(Vec<DIM>(-s.normal), rng)
                                    : sample_unit_direction<DIM>(rng);
  RayHit<DIM> hit;
  if (scene.has_neumann()) {
    const Vec<DIM> origin = s.on_neumann ? Vec<DIM>(s.position - cfg.normal_offset * s.normal) : s.position;
    hit = scene.neumann.intersect(origin, dir, region.radius);
  }
  const Vec<DIM> next = hit.did_hit ? hit.point : Vec<DIM>(s.position + region.radius * dir);
  const double hit_t = hit.did_hit ? (next - s.position).norm() : region.radius;

  const double n_hat = neumann_contribution(scene, region, s, cfg, rng, sigma);
  const double s_hat = source_contribution(scene, region, s, dir, hit_t, rng, sigma);
  // Positive Green's functions: u = E[u(next)] + N - S for lap u - sigma u = f.
  s.accumulator += s.throughput * (n_hat - s_hat);

  if (sigma > 0.0) {
    const double q = q_factor({DIM, region.radius, sigma}, hit_t);
    if (uses_roulette(scene)) {
      if (rng.uniform() >= q) {
        ++s.steps;
        return detail::finish(s.accumulator, s.steps, s.clamped_steps, Terminal::RouletteKilled);
      }
    } else {
      s.throughput *= q;
    }
  }

  s.position = next;
  s.prev_direction = dir;
  s.on_neumann = hit.did_hit;
  s.flipped = false;
  if (hit.did_hit) {
    s.normal = hit.normal;
    if (scene.double_sided && dir.dot(hit.normal) < 0.0) {
      s.normal = -hit.normal;
      s.flipped = true;
    }
  } else {
    s.normal.setZero();
  }
  ++s.steps;
  return std::nullopt;
}

// Default approach direction for double-sided walks: towards the closest
// boundary point, or along n+ when starting on the boundary.
template <int DIM>
Vec<DIM> initial_direction(const Scene<DIM>& scene, const Vec<DIM>& x) {
  ClosestPointResult<DIM> best;
  const BoundaryMesh<DIM>* mesh = nullptr;
  for (const auto* tree : {&scene.dirichlet, &scene.neumann}) {
    if (tree->empty()) continue;
    const ClosestPointResult<DIM> cp = tree->closest_point(x);
    if (cp.distance < best.distance) {
      best = cp;
      mesh = &tree->mesh();
    }
  }
  if (!mesh) return Vec<DIM>::Zero();
  const Vec<DIM> d = best.point - x;
  if (d.norm() > 0.0) return d.normalized();
  return mesh->normals[best.element];
}

template <int DIM>
WalkOutcome run_walk(const Scene<DIM>& scene, const Vec<DIM>& x, const EstimatorConfig& cfg, Sampler& rng,
                     std::vector<Vec<DIM>>* trajectory = nullptr) {
  WalkState<DIM> s;
  s.position = x;
  if (scene.double_sided) s.prev_direction = initial_direction(scene, x);
  while (true) {
    if (trajectory) trajectory->push_back(s.position);
    if (auto out = wost_step(scene, s, cfg, rng)) return *out;
  }
}

// ---------------------------------------------------------------------------
// Aggregation

struct PointEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_walks = 0;
  double mean_steps = 0.0;
  double clamp_rate = 0.0;    // clamped steps / steps
  double escaped_rate = 0.0;  // fraction of walks ending Escaped
  std::array<int, 4> terminals{};
};

// Runs walk(sampler) -> WalkOutcome n times on substreams (seed, point, i).
template <class WalkFn>
PointEstimate accumulate_walks(int n_walks, std::uint64_t seed, std::uint64_t point, WalkFn&& walk) {
  PointEstimate est;
  double mean = 0.0, m2 = 0.0;
  long long steps = 0, clamped = 0;
  for (int i = 0; i < n_walks; ++i) {
    Sampler rng = Sampler::for_walk(seed, point, static_cast<std::uint64_t>(i));
    const WalkOutcome w = walk(rng);
    const double delta = w.value - mean;
    mean += delta / (i + 1);
    m2 += delta * (w.value - mean);
    steps += w.steps;
    clamped += w.clamped_steps;
    ++est.terminals[static_cast<int>(w.terminal)];
  }
  est.n_walks = n_walks;
  est.mean = mean;
  est.std_error = n_walks > 1 ? std::sqrt(std::max(0.0, m2 / (n_walks - 1)) / n_walks) : 0.0;
  est.mean_steps = n_walks > 0 ? static_cast<double>(steps) / n_walks : 0.0;
  est.clamp_rate = steps > 0 ? static_cast<double>(clamped) / static_cast<double>(steps) : 0.0;
  est.escaped_rate =
      n_walks > 0 ? static_cast<double>(est.terminals[static_cast<int>(Terminal::Escaped)]) / n_walks : 0.0;
  return est;
}

template <int DIM>
PointEstimate estimate(const Scene<DIM>& scene, const Vec<DIM>& x, int n_walks, const EstimatorConfig& cfg,
                       std::uint64_t point = 0) {
  return accumulate_walks(n_walks, cfg.seed, point, [&](Sampler& rng) { return run_walk(scene, x, cfg, rng); });
}

}  // namespace wost
