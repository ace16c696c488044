#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace roba {

// Seedable generator with platform-independent output.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The std:: distributions are implementation-defined, so the
// real-valued transforms below are written out explicitly: uniforms take the
// top 53 bits of one engine draw, normals use the Box-Muller transform
// (one cached value per pair).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double Uniform();
  // Uniform in [lo, hi).
  double Uniform(double lo, double hi);
  double Normal(double mean, double stddev);
  // Uniform over the unit sphere.
  Eigen::Vector3d UnitVector();

  uint64_t NextU64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

// Derives an independent stream seed, e.g. for trial k of a sweep.
uint64_t DeriveSeed(uint64_t master, uint64_t stream);

}  // namespace roba
