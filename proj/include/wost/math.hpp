#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace wost {

template <int DIM>
using Vec = Eigen::Matrix<double, DIM, 1>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPi = std::numbers::pi;

// 2D cross product (z component).
inline double cross2(const Vec<2>& a, const Vec<2>& b) { return a.x() * b.y() - a.y() * b.x(); }

// splitmix64 finalizer, used to derive independent per-walk seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Random stream owned by a single walk.
class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : engine_(seed) {}

  // Substream for walk `walk` at evaluation point `point`.
  static Sampler for_walk(std::uint64_t seed, std::uint64_t point, std::uint64_t walk) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ point);
    h = mix64(h ^ (walk * 0xd1b54a32d192ed03ULL));
    return Sampler(h);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace wost
