// Nested sawtooth on [0,1] whose zero count under any ε-perturbation grows
// like 1/ε, and a sign-change counter used as a zero oracle.

#ifndef QTRANS_SHARPNESS_HPP_
#define QTRANS_SHARPNESS_HPP_

#include <cmath>
#include <cstdint>
#include <string>

#include "qtrans/core.hpp"
#include "qtrans/sampled_function.hpp"

namespace qtrans {

inline constexpr int kMaxSharpDepth = 4;

/// Block n occupies [s_n, s_{n+1}] with s_n = 1 - 2^{1-n} and holds 2^{n²}
/// teeth of width 2^{-(n²+n)}.
class SharpExample {
 public:
  explicit SharpExample(int depth) : depth_(depth) {
    if (depth < 1 || depth > kMaxSharpDepth)
      throw DomainError("sharp: depth must lie in [1, " + std::to_string(kMaxSharpDepth) + "]");
  }

  int depth() const { return depth_; }

  static double breakpoint(int n) { return 1.0 - std::ldexp(1.0, 1 - n); }
  static double tooth_width(int n) { return std::ldexp(1.0, -(n * n + n)); }
  static std::int64_t teeth(int n) { return std::int64_t{1} << (n * n); }

  /// Base tooth: up to 1/4 on [0,1/2], down to -1/4 on [1/2,1].
  static double tooth(double t) {
    if (t <= 0.5) return 0.25 - std::abs(t - 0.25);
    return std::abs(t - 0.75) - 0.25;
  }

  double operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("sharp_eval: x must lie in [0,1]");
    for (int n = 1; n <= depth_; ++n) {
      const double a = breakpoint(n), b = breakpoint(n + 1);
      if (x > b) continue;
      const double w = tooth_width(n);
      const double r = (x - a) / w;  // exact: dyadic scaling
      auto k = static_cast<std::int64_t>(std::floor(r));
      if (k >= teeth(n)) k = teeth(n) - 1;
      return w * tooth(r - static_cast<double>(k));
    }
    return 0.0;
  }

  /// Total teeth up to the depth.
  std::int64_t total_teeth() const {
    std::int64_t s = 0;
    for (int n = 1; n <= depth_; ++n) s += teeth(n);
    return s;
  }

 private:
  int depth_;
};

inline double sharp_eval(double x, int depth) { return SharpExample(depth)(x); }

/// Window n: eps ∈ [2^{-(n+1)²-(n+1)}, 2^{-(n²+n)}).
inline int sharp_window(double eps) {
  if (!(eps > 0.0)) throw DomainError("forced_zero_lower_bound: eps must be > 0");
  for (int n = 1; n <= 7; ++n) {
    const double hi = std::ldexp(1.0, -(n * n + n));
    const double lo = std::ldexp(1.0, -((n + 1) * (n + 1) + (n + 1)));
    if (eps >= lo && eps < hi) return n;
  }
  const int nearest = eps >= 0.25 ? 1 : 7;
  throw DomainError("forced_zero_lower_bound: eps outside all windows; nearest n = " + std::to_string(nearest));
}

/// 2^{n²} for the window containing eps.
inline double forced_zero_lower_bound(double eps) {
  const int n = sharp_window(eps);
  return std::ldexp(1.0, n * n);
}

/// Sign changes between consecutive samples, skipping exact zeros.
inline std::int64_t count_sign_changes(const double* v, std::int64_t n) {
  std::int64_t count = 0;
  int last = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const int s = (v[i] > 0.0) - (v[i] < 0.0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

/// Sign changes of h on `resolution` equispaced points of its interval.
inline std::int64_t count_zeros_oracle(const SampledFunction& h, std::int64_t resolution) {
  if (h.dim() != 1 || h.out_dim() != 1) throw DomainError("count_zeros_oracle: needs a scalar function on an interval");
  if (resolution < 2) throw DomainError("count_zeros_oracle: resolution must be >= 2");
  const double a = h.domain().lo[0], b = h.domain().hi[0];
  std::int64_t count = 0;
  int last = 0;
  for (std::int64_t i = 0; i < resolution; ++i) {
    const double x = i + 1 == resolution ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(resolution - 1);
    const double y = h(x);
    const int s = (y > 0.0) - (y < 0.0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++count;
    last = s;
  }
  return count;
}

}  // namespace qtrans

#endif  // QTRANS_SHARPNESS_HPP_
