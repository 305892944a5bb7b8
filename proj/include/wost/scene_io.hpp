#pragma once

// Scene files. A scene is a flat config (see config.hpp) naming the meshes,
// the boundary data and the evaluation plan:
//
//   dimension = 2
//   mesh.dirichlet = square_dirichlet.txt
//   mesh.neumann = square_neumann.txt
//   bc.g = polynomial 1 1 0
//   bc.h = constant 0
//   eval.kind = points
//   eval.points = 0.5 0.5 ; 0.25 0.75
//   eval.walks = 1024
//
// Every recognized key is listed in parse_scene_config.

#include "wost/baselines.hpp"
#include "wost/bc.hpp"
#include "wost/mesh_io.hpp"

#include <optional>
#include <variant>

namespace wost {

struct EvaluationPlan {
  enum class Kind { Points, Grid };
  Kind kind = Kind::Points;
  std::vector<std::array<double, 3>> points;
  std::array<double, 3> origin{}, axis_u{}, axis_v{};
  int width = 1, height = 1;
  int walks = 1024;
  std::string reference_path;     // optional file with reference values
  std::optional<BcSpec> exact;    // optional closed-form reference

  // Evaluation points; grids are pixel centres, row j = 0 first.
  std::vector<std::array<double, 3>> generate(int dimension) const {
    if (kind == Kind::Points) return points;
    std::vector<std::array<double, 3>> out;
    out.reserve(static_cast<std::size_t>(width) * height);
    for (int j = 0; j < height; ++j) {
      for (int i = 0; i < width; ++i) {
        const double a = (i + 0.5) / width, b = (j + 0.5) / height;
        std::array<double, 3> p{};
        for (int k = 0; k < dimension; ++k) p[k] = origin[k] + a * axis_u[k] + b * axis_v[k];
        out.push_back(p);
      }
    }
    return out;
  }
};

struct SceneConfig {
  int dimension = 2;
  std::string dirichlet_path, neumann_path;
  bool double_sided = false;
  int max_leaf_size = 4;
  BcSpec g = ConstantBc{}, h = ConstantBc{};
  std::optional<BcSpec> g_minus, h_minus, f;
  double sigma = 0.0;
  EstimatorConfig estimator;
  bool epsilon_set = false, r_min_set = false, normal_offset_set = false;
  bool allow_unregularized = false;
  BaselineConfig baseline;
  bool zeta_set = false;
  EvaluationPlan plan;
};

namespace detail {

inline std::array<double, 3> parse_point(const std::string& text, int dimension, ConfigReader& r,
                                         const std::string& key) {
  const auto w = split_words(text);
  if (static_cast<int>(w.size()) != dimension) r.fail(key, "expected " + std::to_string(dimension) + " coordinates");
  std::array<double, 3> p{};
  for (int k = 0; k < dimension; ++k) {
    if (!parse_double(w[k], p[k])) r.fail(key, "bad coordinate '" + w[k] + "'");
  }
  return p;
}

inline std::string format_point(const std::array<double, 3>& p, int dimension) {
  std::string s;
  for (int k = 0; k < dimension; ++k) s += (k ? " " : "") + format_double(p[k]);
  return s;
}

}  // namespace detail

inline SceneConfig parse_scene_config(const ConfigFile& file) {
  ConfigReader r(file);
  SceneConfig c;
  if (!r.has("dimension")) throw Error(ErrorCategory::Parse, "missing required key 'dimension'");
  c.dimension = static_cast<int>(r.integer("dimension", 2));
  if (c.dimension != 2 && c.dimension != 3) r.fail("dimension", "must be 2 or 3");
  const int dim = c.dimension;
  const std::string& base = r.base_dir();

  auto path_key = [&](const std::string& key) {
    const std::string v = r.string(key);
    return v.empty() ? std::string() : resolve_path(base, v);
  };
  c.dirichlet_path = path_key("mesh.dirichlet");
  c.neumann_path = path_key("mesh.neumann");
  c.double_sided = r.boolean("mesh.double_sided", false);
  c.max_leaf_size = static_cast<int>(r.integer("mesh.max_leaf_size", 4));
  if (c.max_leaf_size < 1) r.fail("mesh.max_leaf_size", "must be >= 1");

  auto bc_key = [&](const std::string& key) -> std::optional<BcSpec> {
    if (!r.has(key)) return std::nullopt;
    return parse_bc(r.string(key), dim, base, file.where.at(key) + ": " + key);
  };
  if (auto v = bc_key("bc.g")) c.g = *v;
  if (auto v = bc_key("bc.h")) c.h = *v;
  c.g_minus = bc_key("bc.g_minus");
  c.h_minus = bc_key("bc.h_minus");
  c.f = bc_key("pde.f");
  c.sigma = r.real("pde.sigma", 0.0);

  EstimatorConfig& e = c.estimator;
  c.epsilon_set = r.has("estimator.epsilon");
  c.r_min_set = r.has("estimator.r_min");
  c.normal_offset_set = r.has("estimator.normal_offset");
  e.epsilon = r.real("estimator.epsilon", e.epsilon);
  e.r_min = r.real("estimator.r_min", e.r_min);
  e.normal_offset = r.real("estimator.normal_offset", e.normal_offset);
  e.max_steps = static_cast<int>(r.integer("estimator.max_steps", e.max_steps));
  e.tikhonov_sigma = r.real("estimator.tikhonov_sigma", e.tikhonov_sigma);
  e.regularize_after = static_cast<int>(r.integer("estimator.regularize_after", e.regularize_after));
  e.escape_factor = r.real("estimator.escape_factor", e.escape_factor);
  e.seed = static_cast<std::uint64_t>(r.integer("estimator.seed", 0));
  c.allow_unregularized = r.boolean("estimator.allow_unregularized", false);

  BaselineConfig& b = c.baseline;
  c.zeta_set = r.has("baseline.zeta");
  b.zeta = r.real("baseline.zeta", b.zeta);
  b.sde_step = r.real("baseline.sde_step", b.sde_step);
  b.max_steps = static_cast<int>(r.integer("baseline.max_steps", b.max_steps));

  EvaluationPlan& p = c.plan;
  const std::string kind = r.string("eval.kind", "points");
  if (kind == "points") {
    p.kind = EvaluationPlan::Kind::Points;
    for (const auto& item : split_on(r.string("eval.points"), ';')) {
      if (item.empty()) continue;
      p.points.push_back(detail::parse_point(item, dim, r, "eval.points"));
    }
  } else if (kind == "grid") {
    p.kind = EvaluationPlan::Kind::Grid;
    p.origin = detail::parse_point(r.string("eval.origin"), dim, r, "eval.origin");
    p.axis_u = detail::parse_point(r.string("eval.axis_u"), dim, r, "eval.axis_u");
    p.axis_v = detail::parse_point(r.string("eval.axis_v"), dim, r, "eval.axis_v");
    const auto res = r.reals("eval.resolution");
    if (res.size() != 2 || res[0] < 1 || res[1] < 1 || res[0] != std::floor(res[0]) || res[1] != std::floor(res[1])) {
      r.fail("eval.resolution", "expected two integers >= 1");
    }
    p.width = static_cast<int>(res[0]);
    p.height = static_cast<int>(res[1]);
  } else {
    r.fail("eval.kind", "must be 'points' or 'grid'");
  }
  p.walks = static_cast<int>(r.integer("eval.walks", p.walks));
  const std::string ref = r.string("eval.reference");
  p.reference_path = ref.empty() ? "" : resolve_path(base, ref);
  p.exact = bc_key("eval.exact");

  r.reject_unknown();
  return c;
}

// Checks that need the whole configuration.
inline void validate_scene_config(const SceneConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCategory::Invariant, m); };
  if (c.dirichlet_path.empty() && c.neumann_path.empty()) fail("scene needs mesh.dirichlet or mesh.neumann");
  if (!c.double_sided && (c.g_minus || c.h_minus)) fail("bc.g_minus and bc.h_minus require mesh.double_sided = true");
  if (depends_on_normal(c.g) || (c.g_minus && depends_on_normal(*c.g_minus))) fail("bc.g cannot be of kind 'normal'");
  if (c.f && depends_on_normal(*c.f)) fail("pde.f cannot be of kind 'normal'");
  if (c.plan.exact && depends_on_normal(*c.plan.exact)) fail("eval.exact cannot be of kind 'normal'");
  if (!(c.sigma >= 0.0)) fail("pde.sigma must be >= 0");
  if (c.dirichlet_path.empty() && !(c.estimator.tikhonov_sigma > 0.0) && !(c.sigma > 0.0) &&
      !c.allow_unregularized) {
    fail("pure Neumann scene needs estimator.tikhonov_sigma > 0 (or estimator.allow_unregularized = true)");
  }
  if (c.plan.walks < 1) fail("eval.walks must be >= 1");
  if (c.plan.kind == EvaluationPlan::Kind::Points && c.plan.points.empty()) fail("eval.points is empty");
  c.estimator.validate();
  c.baseline.validate();
}

struct LoadedScene {
  SceneConfig config;
  std::variant<Scene<2>, Scene<3>> scene;
  int dimension() const { return config.dimension; }
};

namespace detail {

template <int DIM>
Scene<DIM> build_scene(SceneConfig& c) {
  BoundaryMesh<DIM> dm, nm;
  if (!c.dirichlet_path.empty()) dm = read_mesh<DIM>(c.dirichlet_path, BoundaryLabel::Dirichlet, c.double_sided);
  if (!c.neumann_path.empty()) nm = read_mesh<DIM>(c.neumann_path, BoundaryLabel::Neumann, c.double_sided);
  if (dm.empty() && nm.empty()) throw Error(ErrorCategory::Invariant, "scene meshes contain no elements");
  Scene<DIM> s = make_scene<DIM>(std::move(dm), std::move(nm), c.max_leaf_size);
  s.double_sided = c.double_sided;
  s.sigma = c.sigma;

  auto scalar = [](const BcSpec& spec) { return [spec](const Vec<DIM>& x) { return evaluate_bc(spec, x); }; };
  auto flux = [](const BcSpec& spec) {
    return [spec](const Vec<DIM>& x, const Vec<DIM>& n) { return evaluate_bc(spec, x, n); };
  };
  s.g = scalar(c.g);
  if (c.g_minus) s.g_minus = scalar(*c.g_minus);
  if (s.has_neumann() && (!is_zero(c.h) || (c.h_minus && !is_zero(*c.h_minus)))) {
    s.h = flux(c.h);
    if (c.h_minus) s.h_minus = flux(*c.h_minus);
  }
  if (c.f && !is_zero(*c.f)) s.f = scalar(*c.f);

  // Tolerances default to fractions of the scene's bounding radius.
  const EstimatorConfig scaled = EstimatorConfig::scaled(s.radius);
  if (!c.epsilon_set) c.estimator.epsilon = scaled.epsilon;
  if (!c.r_min_set) c.estimator.r_min = scaled.r_min;
  if (!c.normal_offset_set) c.estimator.normal_offset = scaled.normal_offset;
  c.epsilon_set = c.r_min_set = c.normal_offset_set = true;
  c.baseline.epsilon = c.estimator.epsilon;
  c.baseline.seed = c.estimator.seed;
  c.baseline.escape_factor = c.estimator.escape_factor;
  c.baseline.tikhonov_sigma = c.estimator.tikhonov_sigma;
  c.baseline.regularize_after = c.estimator.regularize_after;
  if (!c.zeta_set) c.baseline.zeta = std::max(c.baseline.zeta, 10.0 * c.baseline.epsilon);
  c.zeta_set = true;
  return s;
}

}  // namespace detail

inline LoadedScene load_scene_config(ConfigFile file) {
  SceneConfig c = parse_scene_config(file);
  LoadedScene out;
  if (c.dimension == 2) {
    out.scene = detail::build_scene<2>(c);
  } else {
    out.scene = detail::build_scene<3>(c);
  }
  validate_scene_config(c);
  out.config = std::move(c);
  return out;
}

inline LoadedScene load_scene(const std::string& path, const std::vector<std::string>& overrides = {}) {
  ConfigFile file = read_config(path);
  for (const auto& o : overrides) apply_override(file, o);
  return load_scene_config(std::move(file));
}

// Normalized form: every key spelled out, meshes and grids copied next to the
// config. Returns the config path.
inline std::string save_scene(const LoadedScene& s, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create directory '" + dir + "': " + ec.message());
  const SceneConfig& c = s.config;
  const int dim = c.dimension;
  const std::string ext = dim == 3 ? ".obj" : ".txt";
  std::string cfg;
  auto put = [&](const std::string& k, const std::string& v) { cfg += k + " = " + v + "\n"; };
  put("dimension", std::to_string(dim));

  std::visit(
      [&](const auto& scene) {
        if (scene.has_dirichlet()) {
          write_text_file((fs::path(dir) / ("dirichlet" + ext)).string(), format_mesh(scene.dirichlet.mesh()));
          put("mesh.dirichlet", "dirichlet" + ext);
        }
        if (scene.has_neumann()) {
          write_text_file((fs::path(dir) / ("neumann" + ext)).string(), format_mesh(scene.neumann.mesh()));
          put("mesh.neumann", "neumann" + ext);
        }
      },
      s.scene);
  put("mesh.double_sided", c.double_sided ? "true" : "false");
  put("mesh.max_leaf_size", std::to_string(c.max_leaf_size));

  auto put_bc = [&](const std::string& key, const BcSpec& spec, const std::string& stem) {
    std::string grid_file;
    if (const auto* g = std::get_if<GridBc>(&spec)) {
      grid_file = stem + ".grid";
      write_text_file((fs::path(dir) / grid_file).string(), format_grid(*g));
    }
    put(key, format_bc(spec, dim, grid_file));
  };
  put_bc("bc.g", c.g, "g");
  if (c.g_minus) put_bc("bc.g_minus", *c.g_minus, "g_minus");
  put_bc("bc.h", c.h, "h");
  if (c.h_minus) put_bc("bc.h_minus", *c.h_minus, "h_minus");
  if (c.f) put_bc("pde.f", *c.f, "f");
  put("pde.sigma", format_double(c.sigma));

  const EstimatorConfig& e = c.estimator;
  put("estimator.epsilon", format_double(e.epsilon));
  put("estimator.r_min", format_double(e.r_min));
  put("estimator.normal_offset", format_double(e.normal_offset));
  put("estimator.max_steps", std::to_string(e.max_steps));
  put("estimator.tikhonov_sigma", format_double(e.tikhonov_sigma));
  put("estimator.regularize_after", std::to_string(e.regularize_after));
  put("estimator.escape_factor", format_double(e.escape_factor));
  put("estimator.seed", std::to_string(static_cast<long long>(e.seed)));
  put("estimator.allow_unregularized", c.allow_unregularized ? "true" : "false");
  put("baseline.zeta", format_double(c.baseline.zeta));
  put("baseline.sde_step", format_double(c.baseline.sde_step));
  put("baseline.max_steps", std::to_string(c.baseline.max_steps));

  const EvaluationPlan& p = c.plan;
  if (p.kind == EvaluationPlan::Kind::Points) {
    put("eval.kind", "points");
    std::string pts;
    for (std::size_t i = 0; i < p.points.size(); ++i) {
      pts += (i ? " ; " : "") + detail::format_point(p.points[i], dim);
    }
    put("eval.points", pts);
  } else {
    put("eval.kind", "grid");
    put("eval.origin", detail::format_point(p.origin, dim));
    put("eval.axis_u", detail::format_point(p.axis_u, dim));
    put("eval.axis_v", detail::format_point(p.axis_v, dim));
    put("eval.resolution", std::to_string(p.width) + " " + std::to_string(p.height));
  }
  put("eval.walks", std::to_string(p.walks));
  if (!p.reference_path.empty()) put("eval.reference", fs::absolute(p.reference_path).string());
  if (p.exact) put_bc("eval.exact", *p.exact, "exact");

  const std::string path = (fs::path(dir) / "scene.cfg").string();
  write_text_file(path, cfg);
  return path;
}

// Parity of boundary crossings along a fixed ray. Only meaningful for
// closed single-sided boundaries.
template <int DIM>
bool point_inside(const Scene<DIM>& scene, const Vec<DIM>& x) {
  Vec<DIM> d;
  if constexpr (DIM == 2) {
    d = Vec<2>(0.8191520442889918, 0.5735764363510461);
  } else {
    d = Vec<3>(0.6415002990995841, 0.5262139236518696, 0.5581955246065497);
  }
  std::size_t crossings = 0;
  for (const auto* tree : {&scene.dirichlet, &scene.neumann}) {
    crossings += tree->intersect_all(x, d, kInf).size();
  }
  return crossings % 2 == 1;
}

// Reference values, one per evaluation point: either a plain list of numbers
// or a CSV whose header has a `reference` or `mean` column.
inline std::vector<double> read_reference(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::vector<double> out;
  int column = -1;
  bool first = true;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_on(line, ',');
    if (first) {
      first = false;
      double probe;
      if (!parse_double(cells[0], probe)) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          if (cells[i] == "reference") column = static_cast<int>(i);
        }
        for (std::size_t i = 0; column < 0 && i < cells.size(); ++i) {
          if (cells[i] == "mean") column = static_cast<int>(i);
        }
        if (column < 0) {
          throw Error(ErrorCategory::Parse, path + ":" + std::to_string(lineno) + ": no 'reference' or 'mean' column");
        }
        continue;
      }
      column = 0;
    }
    double v;
    if (column >= static_cast<int>(cells.size()) || !parse_double(cells[column], v)) {
      throw Error(ErrorCategory::Parse, path + ":" + std::to_string(lineno) + ": bad reference value");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace wost
