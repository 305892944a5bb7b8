#pragma once

// Result files: results.csv always, plus mean.pfm / stderr.pfm for grids.

#include "wost/estimator.hpp"
#include "wost/mesh_io.hpp"
#include "wost/scene_io.hpp"

#include <cmath>
#include <cstring>

namespace wost {

inline constexpr const char* kResultsHeader = "px,py,pz,mean,stderr,n_walks,mean_steps,clamp_rate,escaped_rate";

struct ResultTable {
  std::vector<std::array<double, 3>> points;
  std::vector<PointEstimate> estimates;
  std::vector<double> reference;  // empty, or one per point
};

inline double rmse(const std::vector<PointEstimate>& est, const std::vector<double>& reference) {
  if (est.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double d = est[i].mean - reference[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(est.size()));
}

inline std::string format_results_csv(const ResultTable& t) {
  const bool ref = !t.reference.empty();
  if (ref && t.reference.size() != t.points.size()) {
    throw Error(ErrorCategory::Invariant, "reference has " + std::to_string(t.reference.size()) + " values for " +
                                              std::to_string(t.points.size()) + " points");
  }
  std::string s = kResultsHeader;
  if (ref) s += ",reference,abs_error";
  s += "\n";
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const auto& p = t.points[i];
    const auto& e = t.estimates[i];
    s += format_double(p[0]) + "," + format_double(p[1]) + "," + format_double(p[2]) + "," + format_double(e.mean) +
         "," + format_double(e.std_error) + "," + std::to_string(e.n_walks) + "," + format_double(e.mean_steps) + "," +
         format_double(e.clamp_rate) + "," + format_double(e.escaped_rate);
    if (ref) s += "," + format_double(t.reference[i]) + "," + format_double(std::abs(e.mean - t.reference[i]));
    s += "\n";
  }
  if (ref) s += "# rmse=" + format_double(rmse(t.estimates, t.reference)) + "\n";
  return s;
}

// values are row-major with row 0 at the bottom, which is also PFM order.
inline std::string format_pfm(int width, int height, const std::vector<double>& values) {
  std::string s = "Pf\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
  const std::size_t header = s.size();
  s.resize(header + values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    for (int b = 0; b < 4; ++b) s[header + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  return s;
}

// Returns the paths written.
inline std::vector<std::string> write_results(const std::string& out_dir, const EvaluationPlan& plan,
                                              const ResultTable& t) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::Io, "cannot create directory '" + out_dir + "': " + ec.message());
  std::vector<std::string> written;
  const std::string csv = (fs::path(out_dir) / "results.csv").string();
  write_text_file(csv, format_results_csv(t));
  written.push_back(csv);
  if (plan.kind == EvaluationPlan::Kind::Grid) {
    std::vector<double> mean, err;
    for (const auto& e : t.estimates) {
      mean.push_back(e.mean);
      err.push_back(e.std_error);
    }
    for (const auto& [name, values] : {std::pair{"mean.pfm", &mean}, std::pair{"stderr.pfm", &err}}) {
      const std::string path = (fs::path(out_dir) / name).string();
      write_text_file(path, format_pfm(plan.width, plan.height, *values));
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace wost
