// Entropy solutions of u_t + f(u)_x = 0 by the Lax–Oleinik formula, with
// shock detection and tracking of shock curves over a time grid.

#ifndef QTRANS_CONSLAW_LAX_OLEINIK_HPP_
#define QTRANS_CONSLAW_LAX_OLEINIK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "qtrans/conslaw/flux.hpp"
#include "qtrans/conslaw/mollifier.hpp"
#include "qtrans/conslaw/pipeline.hpp"
#include "qtrans/core.hpp"

namespace qtrans {

struct Shock {
  double x = 0.0;
  double u_minus = 0.0, u_plus = 0.0;
  double ystar_jump = 0.0;
};

/// u(t, x) = (f')^{-1}((x - y*)/t) where y* minimizes U(y) + t f*((x-y)/t)
/// and U is an antiderivative of the initial datum.
class EntropySolution {
 public:
  static constexpr int kScanNodes = 4096;
  static constexpr double kGoldenTol = 1e-10;

  struct Query {
    double u = 0.0;
    double ystar = 0.0;
  };

  /// `vmin`, `vmax` bound the datum; [supp_lo, supp_hi] contains its support.
  EntropySolution(FluxFunction flux, std::function<double(double)> U, double vmin, double vmax, double supp_lo,
                  double supp_hi)
      : flux_(std::move(flux)), U_(std::move(U)), vmin_(std::min(vmin, 0.0)), vmax_(std::max(vmax, 0.0)),
        supp_lo_(supp_lo), supp_hi_(supp_hi) {
    const double pad = 0.1 * (vmax_ - vmin_) + 1e-9;
    range_lo_ = vmin_ - pad;
    range_hi_ = vmax_ + pad;
    if (!(flux_.convexity(range_lo_, range_hi_) > 0.0))
      throw DomainError("solve_entropy: flux is not uniformly convex on the datum range");
    smin_ = flux_.d1(vmin_);
    smax_ = flux_.d1(vmax_);
    d2max_ = 0.0;
    for (int i = 0; i <= 256; ++i) d2max_ = std::max(d2max_, std::abs(flux_.d2(vmin_ + (vmax_ - vmin_) * i / 256.0)));
  }

  static EntropySolution from_piecewise(const FluxFunction& flux, const PiecewiseConstant& u) {
    double lo = 0.0, hi = 0.0;
    for (const auto& s : u.segments()) {
      if (std::isfinite(s.left)) lo = std::min(lo, s.left);
      if (std::isfinite(s.right)) hi = std::max(hi, s.right);
    }
    return EntropySolution(flux, [u](double y) { return u.antiderivative(y); }, u.value_min(), u.value_max(), lo, hi);
  }

  /// Riemann datum u_L on (-∞, x0), u_R on [x0, ∞).
  static EntropySolution riemann(const FluxFunction& flux, double uL, double uR, double x0 = 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return from_piecewise(flux, PiecewiseConstant({{-inf, x0, uL}, {x0, inf, uR}}));
  }

  /// From v̄: cumulative Gauss–Legendre integrals at `nodes` points and cubic
  /// Hermite interpolation with U' = v̄.
  static EntropySolution from_reconstruction(const ReconstructedDatum& rd, int nodes = (1 << 16) + 1) {
    const double a = -rd.b, b = rd.b;
    const int n = std::max(nodes, 3);
    auto tab = std::make_shared<Table>();
    tab->a = a;
    tab->h = (b - a) / (n - 1);
    tab->U.resize(n);
    tab->v.resize(n);
    double vmin = 0.0, vmax = 0.0;
    KahanSum acc;
    for (int i = 0; i < n; ++i) {
      const double x = a + tab->h * i;
      if (i > 0) {
        const double lo = x - tab->h;
        for (int q = 0; q < 8; ++q) acc.add(0.5 * tab->h * kGaussW[q] * rd.vbar(lo + 0.5 * tab->h * (1.0 + kGaussX[q])));
      }
      tab->U[i] = acc.value();
      tab->v[i] = rd.vbar(x);
      vmin = std::min(vmin, tab->v[i]);
      vmax = std::max(vmax, tab->v[i]);
    }
    return EntropySolution(rd.flux, [tab](double y) { return tab->eval(y); }, vmin, vmax, a, b);
  }

  const FluxFunction& flux() const { return flux_; }
  double speed_min() const { return smin_; }
  double speed_max() const { return smax_; }
  double support_lo(double t) const { return supp_lo_ + t * std::min(smin_, 0.0); }
  double support_hi(double t) const { return supp_hi_ + t * std::max(smax_, 0.0); }

  double scan_step(double t) const { return t * std::max(smax_ - smin_, 1e-12) / kScanNodes; }
  double jump_tol(double t) const { return 10.0 * scan_step(t) * std::max(d2max_, 1e-12) * (vmax_ - vmin_); }

  double U(double y) const { return U_(y); }

  Query query(double t, double x) const {
    if (!(t > 0.0)) throw DomainError("solve_entropy: t must be > 0");
    const double lo = x - t * smax_, hi = x - t * smin_;
    if (!(hi > lo)) return {vmin_, x - t * smin_};
    auto cost = [&](double y) { return U_(y) + t * conj((x - y) / t); };
    const double step = (hi - lo) / kScanNodes;
    int best = 0;
    double bv = cost(lo);
    for (int j = 1; j <= kScanNodes; ++j) {
      const double v = cost(lo + step * j);
      if (v < bv) {
        bv = v;
        best = j;
      }
    }
    double a = lo + step * std::max(0, best - 1), b = lo + step * std::min(kScanNodes, best + 1);
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = cost(c), fd = cost(d);
    while (b - a > kGoldenTol) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = cost(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = cost(d);
      }
    }
    double y = 0.5 * (a + b);
    // Endpoints of the scan range can beat the interior bracket.
    if (cost(lo) < cost(y)) y = lo;
    if (cost(hi) < cost(y)) y = hi;
    Query out;
    out.ystar = y;
    out.u = inverse((x - y) / t);
    return out;
  }

  double operator()(double t, double x) const { return query(t, x).u; }

  /// Shocks at time t on [xmin, xmax] from n+1 samples.
  std::vector<Shock> shocks(double t, double xmin, double xmax, int n) const {
    if (n < 2 || !(xmax > xmin)) throw DomainError("count_shocks: need n >= 2 and xmax > xmin");
    const double dx = (xmax - xmin) / n;
    const double tol = jump_tol(t), ytol = scan_step(t) / 4.0;
    std::vector<Query> q(n + 1);
    for (int j = 0; j <= n; ++j) q[j] = query(t, xmin + dx * j);
    std::vector<Shock> out;
    for (int j = 0; j < n; ++j) {
      if (!(q[j].u - q[j + 1].u > tol)) continue;
      double a = xmin + dx * j, b = a + dx;
      Query qa = q[j], qb = q[j + 1];
      for (int it = 0; it < 60 && b - a > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        const Query qm = query(t, m);
        if (qm.ystar - qa.ystar >= qb.ystar - qm.ystar) {
          b = m;
          qb = qm;
        } else {
          a = m;
          qa = qm;
        }
      }
      if (!(qb.ystar - qa.ystar > ytol)) continue;
      Shock s{0.5 * (a + b), qa.u, qb.u, qb.ystar - qa.ystar};
      if (!out.empty() && s.x - out.back().x <= 4.0 * dx) {
        if (s.ystar_jump > out.back().ystar_jump) out.back() = s;
        continue;
      }
      out.push_back(s);
    }
    return out;
  }

  std::int64_t count_shocks(double t, double xmin, double xmax, int n) const {
    return static_cast<std::int64_t>(shocks(t, xmin, xmax, n).size());
  }

  /// Rankine–Hugoniot speed.
  double rh_speed(double um, double up) const {
    if (std::abs(um - up) < 1e-14) return flux_.d1(um);
    return (flux_.f(um) - flux_.f(up)) / (um - up);
  }

 private:
  struct Table {
    double a = 0.0, h = 1.0;
    std::vector<double> U, v;
    double eval(double y) const {
      const auto n = static_cast<std::int64_t>(U.size());
      const double s = (y - a) / h;
      if (s <= 0.0) return U.front() + (y - a) * v.front();
      if (s >= static_cast<double>(n - 1)) return U.back() + (y - (a + h * (n - 1))) * v.back();
      const auto i = std::min<std::int64_t>(static_cast<std::int64_t>(s), n - 2);
      const double t = s - static_cast<double>(i);
      const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
      const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
      return h00 * U[i] + h10 * h * v[i] + h01 * U[i + 1] + h11 * h * v[i + 1];
    }
  };

  double conj(double q) const { return flux_.conjugate(q, range_lo_, range_hi_); }
  double inverse(double q) const { return flux_.inverse_derivative(q, range_lo_, range_hi_); }

  FluxFunction flux_;
  std::function<double(double)> U_;
  double vmin_, vmax_, supp_lo_, supp_hi_;
  double range_lo_ = 0.0, range_hi_ = 0.0;
  double smin_ = 0.0, smax_ = 0.0, d2max_ = 0.0;
};

/// `count` geometrically spaced times in [tmin, tmax].
inline std::vector<double> geometric_times(double tmin, double tmax, int count = 64) {
  if (!(tmin > 0.0) || !(tmax >= tmin) || count < 1) throw DomainError("shocks: need 0 < tmin <= tmax, count >= 1");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i)
    out[i] = count == 1 ? tmin : tmin * std::pow(tmax / tmin, static_cast<double>(i) / (count - 1));
  return out;
}

struct ShockCurve {
  int id = 0;
  std::vector<double> t, x, u_minus, u_plus;
};

struct ShockScan {
  std::vector<double> times;
  std::vector<std::vector<Shock>> per_time;
  std::vector<ShockCurve> curves;
  std::int64_t births = 0;
  std::int64_t max_simultaneous = 0;
  std::int64_t speed_checks = 0, speed_failures = 0;
  double max_speed_error = 0.0;  // relative to the allowed 2Δx/Δt
  std::int64_t entropy_violations = 0;
};

/// Tracks shocks over the time grid: a shock continues the nearest active
/// curve whose predicted position is within the speed cone plus 4Δx; unmatched
/// shocks start new curves. Merges end curves without counting.
inline ShockScan shock_generation_scan(const EntropySolution& sol, const std::vector<double>& times, int n = 2000) {
  ShockScan scan;
  scan.times = times;
  const double cone = std::max(std::abs(sol.speed_min()), std::abs(sol.speed_max()));
  std::vector<int> active;  // indices into scan.curves
  double prev_t = 0.0, prev_dx = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const double xmin = sol.support_lo(t), xmax = sol.support_hi(t);
    const double dx = (xmax - xmin) / n;
    auto sh = sol.shocks(t, xmin, xmax, n);
    for (const auto& s : sh)
      if (!(s.u_minus > s.u_plus)) ++scan.entropy_violations;
    scan.max_simultaneous = std::max<std::int64_t>(scan.max_simultaneous, static_cast<std::int64_t>(sh.size()));
    std::vector<int> next;
    std::vector<char> used(scan.curves.size(), 0);
    for (const auto& s : sh) {
      int best = -1;
      double bd = kInf;
      for (int c : active) {
        if (used[c]) continue;
        const auto& cv = scan.curves[c];
        const double dt = t - cv.t.back();
        const double pred = cv.x.back() + dt * sol.rh_speed(cv.u_minus.back(), cv.u_plus.back());
        const double gap = std::abs(s.x - pred);
        if (std::abs(s.x - cv.x.back()) <= cone * dt + 4.0 * std::max(dx, prev_dx) && gap < bd) {
          bd = gap;
          best = c;
        }
      }
      if (best < 0) {
        ShockCurve cv;
        cv.id = static_cast<int>(scan.curves.size());
        scan.curves.push_back(cv);
        used.push_back(0);
        best = cv.id;
        ++scan.births;
      } else {
        auto& cv = scan.curves[best];
        const double dt = t - prev_t;
        const double fd = (s.x - cv.x.back()) / dt;
        const double rh = 0.5 * (sol.rh_speed(cv.u_minus.back(), cv.u_plus.back()) + sol.rh_speed(s.u_minus, s.u_plus));
        const double allowed = 2.0 * std::max(dx, prev_dx) / dt;
        const double err = std::abs(fd - rh) / allowed;
        ++scan.speed_checks;
        if (err > 1.0) ++scan.speed_failures;
        scan.max_speed_error = std::max(scan.max_speed_error, err);
      }
      used[best] = 1;
      auto& cv = scan.curves[best];
      cv.t.push_back(t);
      cv.x.push_back(s.x);
      cv.u_minus.push_back(s.u_minus);
      cv.u_plus.push_back(s.u_plus);
      next.push_back(best);
    }
    scan.per_time.push_back(std::move(sh));
    active = std::move(next);
    prev_t = t;
    prev_dx = dx;
  }
  return scan;
}

/// Largest value of f'(u(t,y)) - f'(u(t,x)) - (y - x)/t over random x < y;
/// the Oleinik inequality says it is <= 0.
inline double oleinik_violation(const EntropySolution& sol, double t, double xmin, double xmax, int probes,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(xmin, xmax);
  double worst = -kInf;
  const auto& f = sol.flux();
  for (int i = 0; i < probes; ++i) {
    double x = U(rng), y = U(rng);
    if (x > y) std::swap(x, y);
    if (y == x) continue;
    const double lhs = f.d1(sol(t, y)) - f.d1(sol(t, x));
    worst = std::max(worst, lhs - (y - x) / t);
  }
  return worst;
}

/// Sign changes of 1 + t F' on the support: folds of the characteristic map.
inline std::int64_t characteristic_folds(const ReconstructedDatum& rd, double t, int samples = 20001) {
  if (rd.trivial) return 0;
  std::vector<double> v(samples);
  for (int i = 0; i < samples; ++i) {
    const double x = -rd.b + 2.0 * rd.b * i / (samples - 1);
    v[i] = 1.0 + t * rd.F(x, 1);
  }
  return count_sign_changes(v.data(), samples);
}

}  // namespace qtrans

#endif  // QTRANS_CONSLAW_LAX_OLEINIK_HPP_
