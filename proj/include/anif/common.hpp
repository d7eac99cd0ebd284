// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace anif {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidArgumentError : Error {
  using Error::Error;
};
struct InvalidStateError : Error {
  using Error::Error;
};
struct SingularBlendError : Error {
  using Error::Error;
};
struct DegenerateWeightsError : Error {
  using Error::Error;
};
struct DegenerateDirectionError : Error {
  using Error::Error;
};
struct InvalidFrameError : Error {
  using Error::Error;
};
struct InvalidVariantError : Error {
  using Error::Error;
};
struct TrainingDivergedError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// PCG32 generator with hand-rolled variate mappings. std:: engines are
// portable but the distributions are not; every draw here is fully
// specified so seeded streams reproduce bitwise across platforms.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0x14057b7ef767814fULL) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // [0, n)
  int uniform_int(int n) {
    return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
  }

  // Box-Muller, one value per call (no cached spare, keeps state = 2 words)
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  uint64_t state() const { return state_; }
  uint64_t inc() const { return inc_; }
  void set_state(uint64_t state, uint64_t inc) {
    state_ = state;
    inc_ = inc;
  }

 private:
  uint64_t state_;
  uint64_t inc_;
};

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace anif
