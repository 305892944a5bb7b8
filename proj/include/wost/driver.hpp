#pragma once

// The solve / compare / validate commands, independent of argument parsing.

#include "wost/brute_force.hpp"
#include "wost/results.hpp"
#include "wost/solver.hpp"

#include <chrono>
#include <ostream>
#include <random>

namespace wost {

struct SolveOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value, applied after the file
  std::optional<int> walks;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = ".";
  Method method = Method::Wost;
};

struct RunReport {
  Method method = Method::Wost;
  std::vector<std::array<double, 3>> points;
  std::vector<PointEstimate> estimates;
  std::vector<double> reference;
  std::optional<double> rmse;
  int outside_points = 0;
  double wall_time = 0.0;
  double walks_per_second = 0.0;
  double ms_per_point_walk = 0.0;
  double mean_steps = 0.0;
  double clamp_rate = 0.0;
  double escaped_rate = 0.0;
  std::array<long long, 4> terminals{};
  std::vector<std::string> files;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline LoadedScene load_with_options(const std::string& path, std::vector<std::string> overrides,
                                     std::optional<int> walks, std::optional<std::uint64_t> seed) {
  if (walks) overrides.push_back("eval.walks=" + std::to_string(*walks));
  if (seed) overrides.push_back("estimator.seed=" + std::to_string(static_cast<long long>(*seed)));
  return load_scene(path, overrides);
}

template <int DIM>
std::vector<Vec<DIM>> to_vecs(const std::vector<std::array<double, 3>>& pts) {
  std::vector<Vec<DIM>> out;
  for (const auto& p : pts) {
    Vec<DIM> v;
    for (int k = 0; k < DIM; ++k) v[k] = p[k];
    out.push_back(v);
  }
  return out;
}

inline SolverSettings settings_of(const SceneConfig& c) { return {c.estimator, c.baseline}; }

inline std::vector<double> reference_values(const SceneConfig& c, const std::vector<std::array<double, 3>>& pts) {
  std::vector<double> ref;
  if (c.plan.exact) {
    for (const auto& p : pts) ref.push_back(evaluate_bc(*c.plan.exact, p.data(), nullptr, c.dimension));
  } else if (!c.plan.reference_path.empty()) {
    ref = read_reference(c.plan.reference_path);
    if (ref.size() != pts.size()) {
      throw Error(ErrorCategory::Invariant, c.plan.reference_path + ": " + std::to_string(ref.size()) +
                                                " reference values for " + std::to_string(pts.size()) + " points");
    }
  }
  return ref;
}

inline std::vector<PointEstimate> estimate_loaded(const LoadedScene& s, const std::vector<std::array<double, 3>>& pts,
                                                  int walks, Method m, std::uint64_t seed, int threads) {
  const SolverSettings settings = settings_of(s.config);
  return std::visit(
      [&](const auto& scene) {
        constexpr int D = std::decay_t<decltype(scene)>::kDim;
        return estimate_points(scene, to_vecs<D>(pts), walks, m, settings, seed, threads);
      },
      s.scene);
}

}  // namespace detail

inline RunReport run_solve(const SolveOptions& opt, std::ostream& log) {
  const LoadedScene s = detail::load_with_options(opt.config_path, opt.overrides, opt.walks, opt.seed);
  const SceneConfig& c = s.config;
  RunReport rep;
  rep.method = opt.method;
  rep.points = c.plan.generate(c.dimension);
  rep.reference = detail::reference_values(c, rep.points);

  if (!c.double_sided) {
    std::visit(
        [&](const auto& scene) {
          constexpr int D = std::decay_t<decltype(scene)>::kDim;
          const auto vecs = detail::to_vecs<D>(rep.points);
          for (std::size_t i = 0; i < vecs.size(); ++i) {
            if (point_inside(scene, vecs[i])) continue;
            ++rep.outside_points;
            if (rep.outside_points <= 10) {
              log << "warning: point " << i << " (" << detail::format_point(rep.points[i], D)
                  << ") appears to lie outside the domain\n";
            }
          }
        },
        s.scene);
    if (rep.outside_points > 10) log << "warning: " << rep.outside_points << " points appear to lie outside\n";
  }

  const auto t0 = std::chrono::steady_clock::now();
  rep.estimates = detail::estimate_loaded(s, rep.points, c.plan.walks, opt.method, c.estimator.seed, opt.threads);
  rep.wall_time = detail::seconds_since(t0);

  const double total_walks = static_cast<double>(c.plan.walks) * rep.points.size();
  double steps = 0.0, clamped = 0.0, escaped = 0.0;
  for (const auto& e : rep.estimates) {
    steps += e.mean_steps * e.n_walks;
    clamped += e.clamp_rate * e.mean_steps * e.n_walks;
    escaped += e.escaped_rate * e.n_walks;
    for (int k = 0; k < 4; ++k) rep.terminals[k] += e.terminals[k];
  }
  if (total_walks > 0) {
    rep.mean_steps = steps / total_walks;
    rep.clamp_rate = steps > 0 ? clamped / steps : 0.0;
    rep.escaped_rate = escaped / total_walks;
    rep.ms_per_point_walk = 1e3 * rep.wall_time / total_walks;
  }
  rep.walks_per_second = rep.wall_time > 0 ? total_walks / rep.wall_time : 0.0;
  if (!rep.reference.empty()) rep.rmse = rmse(rep.estimates, rep.reference);

  rep.files = write_results(opt.out_dir, c.plan, ResultTable{rep.points, rep.estimates, rep.reference});
  return rep;
}

inline std::string format_report(const RunReport& r) {
  std::ostringstream o;
  o << "method: " << to_string(r.method) << "\n";
  o << "points: " << r.points.size() << " (" << r.outside_points << " outside)\n";
  o << "walks per point: " << (r.estimates.empty() ? 0 : r.estimates[0].n_walks) << "\n";
  o << "wall time: " << r.wall_time << " s\n";
  o << "walks/s: " << r.walks_per_second << "\n";
  o << "ms per point per walk: " << r.ms_per_point_walk << "\n";
  o << "mean walk length: " << r.mean_steps << "\n";
  o << "clamp rate: " << r.clamp_rate << "\n";
  o << "escaped rate: " << r.escaped_rate << "\n";
  o << "terminals:";
  for (int k = 0; k < 4; ++k) o << " " << to_string(static_cast<Terminal>(k)) << "=" << r.terminals[k];
  o << "\n";
  if (r.rmse) o << "rmse: " << format_double(*r.rmse) << "\n";
  for (const auto& f : r.files) o << "wrote " << f << "\n";
  return o.str();
}

struct CompareOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::vector<Method> methods{Method::Wost, Method::WosReflect, Method::Sde};
  std::vector<int> walks{16, 64, 256, 1024, 4096};
  std::optional<std::uint64_t> seed;
  int threads = 1;
  int reference_walks = 1 << 16;
  std::string out_dir = ".";
};

struct CompareRow {
  Method method;
  int walks;
  double rmse, mean_steps, wall_time;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  std::optional<double> wost_slope;
  std::string reference_source;
  std::string csv_path;
};

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::string format_compare_csv(const CompareReport& r) {
  std::string s = "estimator,n_walks,rmse,mean_steps,wall_time\n";
  for (const auto& row : r.rows) {
    s += std::string(to_string(row.method)) + "," + std::to_string(row.walks) + "," + format_double(row.rmse) + "," +
         format_double(row.mean_steps) + "," + format_double(row.wall_time) + "\n";
  }
  if (r.wost_slope) s += "# wost_slope=" + format_double(*r.wost_slope) + "\n";
  return s;
}

inline CompareReport run_compare(const CompareOptions& opt, std::ostream& log) {
  if (opt.methods.empty()) throw Error(ErrorCategory::Usage, "no estimators given");
  if (opt.walks.empty()) throw Error(ErrorCategory::Usage, "no walk counts given");
  for (int n : opt.walks) {
    if (n < 1) throw Error(ErrorCategory::Usage, "walk counts must be >= 1");
  }
  const LoadedScene s = detail::load_with_options(opt.config_path, opt.overrides, std::nullopt, opt.seed);
  const SceneConfig& c = s.config;
  const auto pts = c.plan.generate(c.dimension);
  CompareReport rep;
  std::vector<double> ref = detail::reference_values(c, pts);
  if (c.plan.exact) {
    rep.reference_source = "eval.exact";
  } else if (!ref.empty()) {
    rep.reference_source = c.plan.reference_path;
  } else {
    rep.reference_source = "wost with " + std::to_string(opt.reference_walks) + " walks";
    log << "computing reference: " << rep.reference_source << " per point\n";
    const auto est = detail::estimate_loaded(s, pts, opt.reference_walks, Method::Wost,
                                             mix64(c.estimator.seed ^ 0x5245464552454e43ull), opt.threads);
    for (const auto& e : est) ref.push_back(e.mean);
  }

  std::vector<double> wn, we;
  for (Method m : opt.methods) {
    for (int n : opt.walks) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto est = detail::estimate_loaded(s, pts, n, m, c.estimator.seed, opt.threads);
      CompareRow row{m, n, rmse(est, ref), 0.0, detail::seconds_since(t0)};
      for (const auto& e : est) row.mean_steps += e.mean_steps / static_cast<double>(est.size());
      rep.rows.push_back(row);
      log << to_string(m) << " N=" << n << " rmse=" << row.rmse << " mean_steps=" << row.mean_steps << "\n";
      if (m == Method::Wost && row.rmse > 0) {
        wn.push_back(n);
        we.push_back(row.rmse);
      }
    }
  }
  if (wn.size() >= 2) rep.wost_slope = loglog_slope(wn, we);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(opt.out_dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create directory '" + opt.out_dir + "': " + ec.message());
  rep.csv_path = (fs::path(opt.out_dir) / "compare.csv").string();
  write_text_file(rep.csv_path, format_compare_csv(rep));
  return rep;
}

enum class QueryKind { Closest, Silhouette, Ray };

inline const char* to_string(QueryKind k) {
  switch (k) {
    case QueryKind::Closest: return "closest";
    case QueryKind::Silhouette: return "silhouette";
    case QueryKind::Ray: return "ray";
  }
  return "?";
}

struct ValidateOptions {
  std::string mesh_path;
  int dimension = 0;  // 0: 3 for .obj files, else 2
  std::vector<QueryKind> kinds{QueryKind::Closest, QueryKind::Silhouette, QueryKind::Ray};
  int queries = 1000;
  std::uint64_t seed = 0;
  double tolerance = 1e-12;  // relative to the mesh's bounding radius or the value
};

struct ValidateResult {
  QueryKind kind;
  int queries = 0;
  int mismatches = 0;
  double max_deviation = 0.0;  // relative
};

struct ValidateReport {
  std::vector<ValidateResult> results;
  int elements = 0;
  bool passed() const {
    for (const auto& r : results) {
      if (r.mismatches) return false;
    }
    return true;
  }
};

namespace detail {

template <int DIM>
ValidateReport validate_mesh(const BoundaryMesh<DIM>& mesh, const ValidateOptions& opt, std::ostream& log) {
  ValidateReport rep;
  rep.elements = mesh.size();
  if (mesh.empty()) {
    log << "warning: mesh has no elements; 0 queries executed\n";
    for (QueryKind k : opt.kinds) rep.results.push_back({k});
    return rep;
  }
  auto shared = std::make_shared<const BoundaryMesh<DIM>>(mesh);
  const SnchTree<DIM> tree(shared);
  Vec<DIM> lo = mesh.vertices[0], hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double scale = std::max(0.5 * (hi - lo).norm(), 1e-300);
  const Vec<DIM> pad = 0.3 * (hi - lo) + Vec<DIM>::Constant(1e-3 * scale);
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> G(0.0, 1.0);
  auto point = [&] {
    Vec<DIM> p;
    for (int k = 0; k < DIM; ++k) p[k] = lo[k] - pad[k] + U(rng) * (hi[k] - lo[k] + 2 * pad[k]);
    return p;
  };
  auto rel = [&](double a, double b) {
    if (a == b) return 0.0;
    if (!std::isfinite(a) || !std::isfinite(b)) return kInf;
    return std::abs(a - b) / std::max(scale, std::abs(b));
  };

  for (QueryKind kind : opt.kinds) {
    ValidateResult r{kind};
    for (int q = 0; q < opt.queries; ++q) {
      const Vec<DIM> x = point();
      bool bad = false;
      double dev = 0.0;
      if (kind == QueryKind::Closest) {
        const auto a = tree.closest_point(x);
        const auto b = brute_force::closest_point(mesh, x);
        dev = std::max(rel(a.distance, b.distance), (a.point - b.point).norm() / scale);
      } else if (kind == QueryKind::Silhouette) {
        const double r_max = q % 4 == 0 ? kInf : U(rng) * 4.0 * scale;
        const auto a = tree.closest_silhouette(x, r_max);
        const auto b = brute_force::closest_silhouette(mesh, x, r_max);
        bad = a.candidate != b.candidate;
        dev = rel(a.distance, b.distance);
      } else {
        Vec<DIM> d;
        for (int k = 0; k < DIM; ++k) d[k] = G(rng);
        d.normalize();
        const auto a = tree.intersect(x, d, kInf);
        const auto b = brute_force::intersect(mesh, x, d, kInf);
        bad = a.did_hit != b.did_hit;
        if (a.did_hit && b.did_hit) dev = std::max(rel(a.t, b.t), (a.point - b.point).norm() / scale);
      }
      r.max_deviation = std::max(r.max_deviation, dev);
      if (bad || dev > opt.tolerance) ++r.mismatches;
      ++r.queries;
    }
    rep.results.push_back(r);
  }
  return rep;
}

}  // namespace detail

inline ValidateReport run_validate(const ValidateOptions& opt, std::ostream& log) {
  if (opt.queries < 0) throw Error(ErrorCategory::Usage, "--queries must be >= 0");
  int dim = opt.dimension;
  if (dim == 0) dim = std::filesystem::path(opt.mesh_path).extension() == ".obj" ? 3 : 2;
  if (dim != 2 && dim != 3) throw Error(ErrorCategory::Usage, "dimension must be 2 or 3");
  ValidateReport rep;
  if (dim == 2) {
    rep = detail::validate_mesh(read_mesh<2>(opt.mesh_path, BoundaryLabel::Neumann), opt, log);
  } else {
    rep = detail::validate_mesh(read_mesh<3>(opt.mesh_path, BoundaryLabel::Neumann), opt, log);
  }
  return rep;
}

inline std::string format_validate_report(const ValidateReport& r) {
  std::ostringstream o;
  o << "elements: " << r.elements << "\n";
  for (const auto& q : r.results) {
    o << to_string(q.kind) << ": " << q.queries << " queries, " << q.mismatches
      << " mismatches, max relative deviation " << q.max_deviation << "\n";
  }
  o << (r.passed() ? "PASS" : "FAIL") << "\n";
  return o.str();
}

}  // namespace wost
