// Uniformly convex fluxes with derivatives, norms on the working range and
// the monotone inverse of f'.

#ifndef QTRANS_CONSLAW_FLUX_HPP_
#define QTRANS_CONSLAW_FLUX_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qtrans/core.hpp"

namespace qtrans {

class FluxFunction {
 public:
  using Fn = std::function<double(double)>;

  FluxFunction() : FluxFunction(burgers()) {}

  /// d[k] is the k-th derivative, k = 0..4 (d[4] may be empty).
  FluxFunction(std::string name, std::vector<Fn> d) : name_(std::move(name)), d_(std::move(d)) {
    if (d_.size() < 4) throw DomainError("flux: need f, f', f'', f'''");
    d_.resize(5);
  }

  static FluxFunction burgers() {
    FluxFunction f("burgers", {[](double u) { return 0.5 * u * u; }, [](double u) { return u; },
                               [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }});
    f.inverse_ = [](double q) { return q; };
    f.conjugate_ = [](double q) { return 0.5 * q * q; };
    return f;
  }

  /// f = u²/2 + u³/30, convex for u > -5.
  static FluxFunction cubic() {
    return FluxFunction("cubic", {[](double u) { return 0.5 * u * u + u * u * u / 30.0; },
                                  [](double u) { return u + u * u / 10.0; }, [](double u) { return 1.0 + u / 5.0; },
                                  [](double) { return 0.2; }, [](double) { return 0.0; }});
  }

  static FluxFunction exponential() {
    auto e = [](double u) { return std::exp(u); };
    FluxFunction f("exp", {e, e, e, e, e});
    f.inverse_ = [](double q) { return std::log(q); };
    f.conjugate_ = [](double q) { return q * std::log(q) - q; };
    return f;
  }

  /// f = c2 u²/2 + c3 u³/6 + c4 u⁴/24.
  static FluxFunction polynomial(double c2, double c3, double c4) {
    std::ostringstream name;
    name << "poly:" << c2 << "," << c3 << "," << c4;
    return FluxFunction(name.str(),
                        {[=](double u) { return c2 * u * u / 2 + c3 * u * u * u / 6 + c4 * u * u * u * u / 24; },
                         [=](double u) { return c2 * u + c3 * u * u / 2 + c4 * u * u * u / 6; },
                         [=](double u) { return c2 + c3 * u + c4 * u * u / 2; }, [=](double u) { return c3 + c4 * u; },
                         [=](double) { return c4; }});
  }

  /// burgers | cubic | exp | poly:c2,c3,c4
  static FluxFunction parse(const std::string& spec) {
    if (spec == "burgers") return burgers();
    if (spec == "cubic") return cubic();
    if (spec == "exp") return exponential();
    if (spec.rfind("poly:", 0) == 0) {
      std::vector<double> c;
      std::stringstream ss(spec.substr(5));
      std::string item;
      while (std::getline(ss, item, ',')) c.push_back(std::stod(item));
      if (c.size() != 3) throw DomainError("flux: poly needs three coefficients c2,c3,c4");
      return polynomial(c[0], c[1], c[2]);
    }
    throw DomainError("flux: unknown flux '" + spec + "'");
  }

  const std::string& name() const { return name_; }
  double f(double u) const { return d_[0](u); }
  double d1(double u) const { return d_[1](u); }
  double d2(double u) const { return d_[2](u); }
  double d3(double u) const { return d_[3](u); }
  bool has_d4() const { return static_cast<bool>(d_[4]); }
  double d4(double u) const { return d_[4](u); }
  double derivative(int k, double u) const { return d_.at(k)(u); }

  /// sup over [a, b] of |f^{(k)}| for k <= order, from a dense sample.
  double norm(int order, double a, double b, int samples = 4097) const {
    if (order > 4 || (order == 4 && !has_d4())) throw DomainError("flux: derivative order not available");
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
      const double u = a + (b - a) * i / (samples - 1);
      for (int k = 0; k <= order; ++k) best = std::max(best, std::abs(d_[k](u)));
    }
    return best;
  }

  /// min f'' on [a, b].
  double convexity(double a, double b, int samples = 4097) const {
    double best = kInf;
    for (int i = 0; i < samples; ++i) best = std::min(best, d2(a + (b - a) * i / (samples - 1)));
    return best;
  }

  /// Solves f'(v) = q on [a, b]: bisection to width 1e-14 and one Newton step.
  double inverse_derivative(double q, double a, double b) const {
    if (inverse_) {
      const double v = inverse_(q);
      if (!std::isfinite(v)) throw RangeError("invert_speed: value outside the range of f'");
      return v;
    }
    double fa = d1(a) - q, fb = d1(b) - q;
    if (fa > 0.0 || fb < 0.0) throw RangeError("invert_speed: value outside f'([a,b])");
    double lo = a, hi = b;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (d1(mid) - q < 0.0)
        lo = mid;
      else
        hi = mid;
    }
    double v = 0.5 * (lo + hi);
    const double s = d2(v);
    if (s > 0.0) {
      const double w = v - (d1(v) - q) / s;
      if (w >= a && w <= b) v = w;
    }
    return v;
  }

  bool has_closed_inverse() const { return static_cast<bool>(inverse_); }

  /// f*(q) = q·v - f(v) with f'(v) = q.
  double conjugate(double q, double a, double b) const {
    if (conjugate_) return conjugate_(q);
    const double v = inverse_derivative(q, a, b);
    return q * v - f(v);
  }

 private:
  std::string name_ = "burgers";
  std::vector<Fn> d_;
  Fn inverse_;
  Fn conjugate_;
};

/// Nominal and padded working ranges for a total-variation bound V.
struct WorkingRange {
  double lo, hi;          // (-V/2, V/2)
  double pad_lo, pad_hi;  // widened by 0.1 V on each side
  explicit WorkingRange(double V) : lo(-V / 2), hi(V / 2), pad_lo(-0.6 * V), pad_hi(0.6 * V) {}
};

}  // namespace qtrans

#endif  // QTRANS_CONSLAW_FLUX_HPP_
