#pragma once

// Mesh files.
//   3D: OBJ subset, `v x y z` and triangular `f i j k` (1-indexed) lines.
//   2D: `v x y` and `s i j` (1-indexed). The outward normal is the
//       right-hand perpendicular of v_j - v_i, so counterclockwise loops
//       bound their interior.
// Blank lines and `#` comments are allowed; any other line is an error.

#include "wost/config.hpp"
#include "wost/mesh.hpp"

#include <filesystem>
#include <fstream>

namespace wost {

template <int DIM>
BoundaryMesh<DIM> parse_mesh(const std::string& text, const std::string& origin, BoundaryLabel label,
                             bool double_sided = false) {
  const char* element_tag = DIM == 3 ? "f" : "s";
  std::vector<Vec<DIM>> verts;
  std::vector<std::array<int, DIM>> elems;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto w = split_words(line);
    if (w.empty()) continue;
    const std::string loc = origin + ":" + std::to_string(lineno);
    if (w[0] == "v") {
      if (static_cast<int>(w.size()) != 1 + DIM) {
        throw Error(ErrorCategory::Parse, loc + ": vertex needs " + std::to_string(DIM) + " coordinates");
      }
      Vec<DIM> p;
      for (int k = 0; k < DIM; ++k) {
        if (!parse_double(w[1 + k], p[k]) || !std::isfinite(p[k])) {
          throw Error(ErrorCategory::Parse, loc + ": bad coordinate '" + w[1 + k] + "'");
        }
      }
      verts.push_back(p);
    } else if (w[0] == element_tag) {
      if (static_cast<int>(w.size()) != 1 + DIM) {
        throw Error(ErrorCategory::Parse,
                    loc + ": " + (DIM == 3 ? "only triangular faces are supported" : "segment needs 2 indices"));
      }
      std::array<int, DIM> e{};
      for (int k = 0; k < DIM; ++k) {
        long long idx;
        if (!parse_int(w[1 + k], idx) || idx < 1) {
          throw Error(ErrorCategory::Parse, loc + ": bad vertex index '" + w[1 + k] + "'");
        }
        e[k] = static_cast<int>(idx - 1);
      }
      elems.push_back(e);
    } else {
      throw Error(ErrorCategory::Parse, loc + ": unsupported line '" + w[0] + "'");
    }
  }
  try {
    return make_mesh<DIM>(std::move(verts), std::move(elems), label, double_sided);
  } catch (const Error& e) {
    throw Error(e.category(), origin + ": " + e.what());
  }
}

template <int DIM>
BoundaryMesh<DIM> read_mesh(const std::string& path, BoundaryLabel label, bool double_sided = false) {
  return parse_mesh<DIM>(read_text_file(path), path, label, double_sided);
}

template <int DIM>
std::string format_mesh(const BoundaryMesh<DIM>& mesh) {
  std::string s;
  for (const auto& v : mesh.vertices) {
    s += "v";
    for (int k = 0; k < DIM; ++k) s += " " + format_double(v[k]);
    s += "\n";
  }
  for (const auto& e : mesh.elements) {
    s += DIM == 3 ? "f" : "s";
    for (int k = 0; k < DIM; ++k) s += " " + std::to_string(e[k] + 1);
    s += "\n";
  }
  return s;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCategory::Io, "write failed for '" + path + "'");
}

}  // namespace wost
