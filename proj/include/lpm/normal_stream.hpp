#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace lpm {

// Deterministic stream of independent standard-normal deviates.
//
// std::mt19937_64 supplies the bit stream (its output is fully specified by
// the standard), and a Box-Muller transform maps uniform pairs to normals.
// std::normal_distribution is avoided on purpose: its algorithm is
// implementation-defined, which would break byte-identical results across
// standard libraries.
template <typename Scalar = double>
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

  Scalar operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so that log(u1) is finite; u2 in [0, 1).
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = static_cast<Scalar>(radius * std::sin(angle));
    have_spare_ = true;
    return static_cast<Scalar>(radius * std::cos(angle));
  }

 private:
  std::mt19937_64 gen_;
  Scalar spare_{};
  bool have_spare_ = false;
};

}  // namespace lpm
