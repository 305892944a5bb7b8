#pragma once

// Boundary-condition and source specifications:
//   constant <value>
//   polynomial <c e_x e_y [e_z]> ; <c e_x e_y [e_z]> ; ...   (total degree <= 4)
//   grid <file>                  multilinear, clamped outside the box
//   normal <a_x a_y [a_z]>       n . a at the boundary point (flux data only)

#include "wost/config.hpp"
#include "wost/math.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <variant>

namespace wost {

struct ConstantBc {
  double value = 0.0;
};

struct PolynomialBc {
  struct Term {
    double coefficient = 0.0;
    std::array<int, 3> exponents{};
  };
  std::vector<Term> terms;
};

struct GridBc {
  int dimension = 2;
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> lo{}, hi{};
  std::vector<double> values;  // x fastest
  std::string path;            // file it was read from, if any
};

struct NormalBc {
  std::array<double, 3> a{};
};

using BcSpec = std::variant<ConstantBc, PolynomialBc, GridBc, NormalBc>;

namespace detail {

inline double grid_value(const GridBc& g, const double* x) {
  std::array<int, 3> i0{}, i1{};
  std::array<double, 3> w{};
  for (int k = 0; k < g.dimension; ++k) {
    const int n = g.dims[k];
    double u = (x[k] - g.lo[k]) / (g.hi[k] - g.lo[k]) * (n - 1);
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    i0[k] = std::min(static_cast<int>(std::floor(u)), n - 2);
    i1[k] = i0[k] + 1;
    w[k] = u - i0[k];
  }
  double sum = 0.0;
  const int corners = 1 << g.dimension;
  for (int c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::size_t index = 0, stride = 1;
    for (int k = 0; k < g.dimension; ++k) {
      const bool upper = (c >> k) & 1;
      weight *= upper ? w[k] : 1.0 - w[k];
      index += stride * static_cast<std::size_t>(upper ? i1[k] : i0[k]);
      stride *= static_cast<std::size_t>(g.dims[k]);
    }
    if (weight != 0.0) sum += weight * g.values[index];
  }
  return sum;
}

}  // namespace detail

// x and n have `dim` entries; n may be null for interior quantities.
inline double evaluate_bc(const BcSpec& spec, const double* x, const double* n, int dim) {
  if (const auto* c = std::get_if<ConstantBc>(&spec)) return c->value;
  if (const auto* p = std::get_if<PolynomialBc>(&spec)) {
    double sum = 0.0;
    for (const auto& t : p->terms) {
      double v = t.coefficient;
      for (int k = 0; k < dim; ++k) {
        for (int e = 0; e < t.exponents[k]; ++e) v *= x[k];
      }
      sum += v;
    }
    return sum;
  }
  if (const auto* g = std::get_if<GridBc>(&spec)) return detail::grid_value(*g, x);
  const auto& a = std::get<NormalBc>(spec).a;
  if (!n) return 0.0;
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += a[k] * n[k];
  return s;
}

template <int DIM>
double evaluate_bc(const BcSpec& spec, const Vec<DIM>& x, const Vec<DIM>& n) {
  return evaluate_bc(spec, x.data(), n.data(), DIM);
}

template <int DIM>
double evaluate_bc(const BcSpec& spec, const Vec<DIM>& x) {
  return evaluate_bc(spec, x.data(), nullptr, DIM);
}

inline bool depends_on_normal(const BcSpec& spec) { return std::holds_alternative<NormalBc>(spec); }

inline bool is_zero(const BcSpec& spec) {
  if (const auto* c = std::get_if<ConstantBc>(&spec)) return c->value == 0.0;
  return false;
}

// Grid file: `dims nx ny [nz]`, `lo ...`, `hi ...`, then `values` followed by
// the samples, x fastest. `#` starts a comment.
inline GridBc parse_grid(const std::string& text, int dimension, const std::string& origin) {
  GridBc g;
  g.dimension = dimension;
  std::string cleaned;
  {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
      const auto h = line.find('#');
      cleaned += (h == std::string::npos ? line : line.substr(0, h)) + "\n";
    }
  }
  auto fail = [&](const std::string& m) { throw Error(ErrorCategory::Parse, origin + ": " + m); };
  const auto words = split_words(cleaned);
  std::size_t i = 0;
  auto next_number = [&](const char* what) {
    double v;
    if (i >= words.size() || !parse_double(words[i], v)) fail(std::string("expected ") + what);
    ++i;
    return v;
  };
  bool have_dims = false, have_lo = false, have_hi = false;
  while (i < words.size()) {
    const std::string w = words[i++];
    if (w == "dims") {
      for (int k = 0; k < dimension; ++k) {
        const double d = next_number("grid size");
        if (d != std::floor(d) || d < 2) fail("grid dimensions must be integers >= 2");
        g.dims[k] = static_cast<int>(d);
      }
      have_dims = true;
    } else if (w == "lo" || w == "hi") {
      auto& dst = w == "lo" ? g.lo : g.hi;
      for (int k = 0; k < dimension; ++k) dst[k] = next_number("coordinate");
      (w == "lo" ? have_lo : have_hi) = true;
    } else if (w == "values") {
      if (!have_dims) fail("'values' before 'dims'");
      std::size_t count = 1;
      for (int k = 0; k < dimension; ++k) count *= static_cast<std::size_t>(g.dims[k]);
      for (std::size_t k = 0; k < count; ++k) g.values.push_back(next_number("grid value"));
      if (i != words.size()) fail("trailing data after grid values");
    } else {
      fail("unexpected token '" + w + "'");
    }
  }
  if (!have_dims || !have_lo || !have_hi || g.values.empty()) fail("grid needs dims, lo, hi and values");
  for (int k = 0; k < dimension; ++k) {
    if (!(g.hi[k] > g.lo[k])) fail("grid box must have hi > lo on every axis");
  }
  return g;
}

inline std::string format_grid(const GridBc& g) {
  std::string s = "dims";
  for (int k = 0; k < g.dimension; ++k) s += " " + std::to_string(g.dims[k]);
  s += "\nlo";
  for (int k = 0; k < g.dimension; ++k) s += " " + format_double(g.lo[k]);
  s += "\nhi";
  for (int k = 0; k < g.dimension; ++k) s += " " + format_double(g.hi[k]);
  s += "\nvalues\n";
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    s += format_double(g.values[i]);
    s += (i + 1) % static_cast<std::size_t>(g.dims[0]) == 0 ? "\n" : " ";
  }
  return s;
}

inline BcSpec parse_bc(const std::string& text, int dimension, const std::string& base_dir,
                       const std::string& origin) {
  auto fail = [&](const std::string& m) { throw Error(ErrorCategory::Parse, origin + ": " + m); };
  const std::string t = trim(text);
  const auto sp = t.find_first_of(" \t");
  const std::string kind = t.substr(0, sp);
  const std::string rest = sp == std::string::npos ? "" : trim(t.substr(sp));
  if (kind == "constant") {
    ConstantBc c;
    if (!parse_double(rest, c.value)) fail("constant expects one number");
    return c;
  }
  if (kind == "polynomial") {
    PolynomialBc p;
    for (const auto& term : split_on(rest, ';')) {
      const auto w = split_words(term);
      if (static_cast<int>(w.size()) != 1 + dimension) {
        fail("polynomial term '" + term + "' needs a coefficient and " + std::to_string(dimension) + " exponents");
      }
      PolynomialBc::Term tm;
      if (!parse_double(w[0], tm.coefficient)) fail("bad coefficient '" + w[0] + "'");
      int degree = 0;
      for (int k = 0; k < dimension; ++k) {
        long long e;
        if (!parse_int(w[1 + k], e) || e < 0) fail("bad exponent '" + w[1 + k] + "'");
        tm.exponents[k] = static_cast<int>(e);
        degree += static_cast<int>(e);
      }
      if (degree > 4) fail("polynomial degree exceeds 4");
      p.terms.push_back(tm);
    }
    return p;
  }
  if (kind == "grid") {
    if (rest.empty()) fail("grid expects a file path");
    const std::string path = resolve_path(base_dir, rest);
    GridBc g = parse_grid(read_text_file(path), dimension, path);
    g.path = path;
    return g;
  }
  if (kind == "normal") {
    NormalBc nb;
    const auto w = split_words(rest);
    if (static_cast<int>(w.size()) != dimension) fail("normal expects " + std::to_string(dimension) + " numbers");
    for (int k = 0; k < dimension; ++k) {
      if (!parse_double(w[k], nb.a[k])) fail("bad number '" + w[k] + "'");
    }
    return nb;
  }
  fail("unknown condition kind '" + kind + "' (constant, polynomial, grid, normal)");
  return ConstantBc{};
}

// Text form; grids are referenced by `grid_file`, which the caller writes.
inline std::string format_bc(const BcSpec& spec, int dimension, const std::string& grid_file = "") {
  if (const auto* c = std::get_if<ConstantBc>(&spec)) return "constant " + format_double(c->value);
  if (const auto* p = std::get_if<PolynomialBc>(&spec)) {
    std::string s = "polynomial";
    for (std::size_t i = 0; i < p->terms.size(); ++i) {
      s += i == 0 ? " " : " ; ";
      s += format_double(p->terms[i].coefficient);
      for (int k = 0; k < dimension; ++k) s += " " + std::to_string(p->terms[i].exponents[k]);
    }
    return s;
  }
  if (std::holds_alternative<GridBc>(spec)) return "grid " + grid_file;
  std::string s = "normal";
  for (int k = 0; k < dimension; ++k) s += " " + format_double(std::get<NormalBc>(spec).a[k]);
  return s;
}

inline bool operator==(const PolynomialBc::Term& a, const PolynomialBc::Term& b) {
  return a.coefficient == b.coefficient && a.exponents == b.exponents;
}
inline bool operator==(const ConstantBc& a, const ConstantBc& b) { return a.value == b.value; }
inline bool operator==(const PolynomialBc& a, const PolynomialBc& b) { return a.terms == b.terms; }
inline bool operator==(const GridBc& a, const GridBc& b) {
  return a.dimension == b.dimension && a.dims == b.dims && a.lo == b.lo && a.hi == b.hi && a.values == b.values;
}
inline bool operator==(const NormalBc& a, const NormalBc& b) { return a.a == b.a; }

}  // namespace wost
