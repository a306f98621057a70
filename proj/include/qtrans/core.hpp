// Common types, errors and small numerical helpers shared by every module.

#ifndef QTRANS_CORE_HPP_
#define QTRANS_CORE_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qtrans {

using Point = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Errors ---------------------------------------------------------------------

/// Argument outside the documented domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Degenerate simplex or singular affine system.
class SingularGeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested slice/ambient dimension outside the supported range.
class UnsupportedDimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value fell outside the range where an inverse is defined.
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// A numerical stage failed; carries the stage name for diagnostics.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Axis-aligned box -----------------------------------------------------------

struct Box {
  Point lo;
  Point hi;

  static Box unit(int d) { return Box{Point(d, 0.0), Point(d, 1.0)}; }
  static Box interval(double a, double b) { return Box{{a}, {b}}; }

  int dim() const { return static_cast<int>(lo.size()); }
  double side(int axis) const { return hi[axis] - lo[axis]; }
  double diameter() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += side(i) * side(i);
    return std::sqrt(s);
  }
  bool is_cube() const {
    for (int i = 1; i < dim(); ++i)
      if (std::abs(side(i) - side(0)) > 1e-14 * std::abs(side(0))) return false;
    return true;
  }
};

// Deterministic pseudo-random numbers ----------------------------------------

/// SplitMix64 step; used wherever results must be bit-identical across
/// platforms and standard-library implementations.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x632BE59BD9B4E019ull + (a << 6) + (a >> 2)));
}

/// Uniform double in [0, 1) from a 64-bit word.
inline double unit_double(std::uint64_t x) {
  return static_cast<double>(x >> 11) * (1.0 / 9007199254740992.0);
}

class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return unit_double(next()); }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  std::int64_t below(std::int64_t n) { return static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
};

// Compensated summation ------------------------------------------------------

class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace qtrans

#endif  // QTRANS_CORE_HPP_
