#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace mdpopt {

// Counter-based random stream (SplitMix64 family).
//
// A stream is identified by a master seed plus up to three stream ids.
// Output n of a stream is a pure function of (master, id0, id1, id2, n),
// so distinct streams can be consumed in any order, from any thread,
// and always produce the same values.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t master, std::uint64_t id0 = 0,
                      std::uint64_t id1 = 0, std::uint64_t id2 = 0)
      : key_(derive(derive(derive(finalize(master ^ kKeyTag), id0), id1), id2)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() { return finalize(key_ + (++counter_) * kGolden); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Marsaglia-Tsang gamma variate, shape alpha > 0, unit scale.
  double gamma(double alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("gamma: alpha must be > 0");
    if (alpha < 1.0) {
      const double u = uniform_pos();
      return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * (x * x) * (x * x)) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Standard normal via Box-Muller (one value per call, no caching so the
  // stream position stays a simple function of the call count).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
  static constexpr std::uint64_t kKeyTag = 0x6D6470742D726E67ull;
  static constexpr double kPi = 3.14159265358979323846;

  static std::uint64_t finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive(std::uint64_t key, std::uint64_t id) {
    return finalize(key ^ (id * 0xD1B54A32D192ED03ull + 0x8BB84B93962EEFD9ull));
  }

  double uniform_pos() {
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    return u;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mdpopt
