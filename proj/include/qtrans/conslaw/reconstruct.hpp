// Bounds of the shock-count estimate and the C² speed profile F built from
// the thinned h̃ by double integration plus a cubic/quintic closing patch.

#ifndef QTRANS_CONSLAW_RECONSTRUCT_HPP_
#define QTRANS_CONSLAW_RECONSTRUCT_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "qtrans/conslaw/flux.hpp"
#include "qtrans/conslaw/mollifier.hpp"
#include "qtrans/core.hpp"
#include "qtrans/moduli.hpp"
#include "qtrans/sampled_function.hpp"
#include "qtrans/transversal.hpp"

namespace qtrans {

struct FluxNorms {
  double c3 = 0.0;      // ‖f‖_{C³} on (-V/2, V/2)
  double c4 = kInf;     // ‖f‖_{C⁴} on (-V/2, V/2) when f⁗ is known
  double lambda = 0.0;  // min f'' on the padded range
  double lambda_nominal = 0.0;
};

inline FluxNorms flux_norms(const FluxFunction& flux, double V) {
  const WorkingRange r(V);
  FluxNorms n;
  n.c3 = flux.norm(3, r.lo, r.hi);
  if (flux.has_d4()) n.c4 = flux.norm(4, r.lo, r.hi);
  n.lambda = flux.convexity(r.pad_lo, r.pad_hi);
  n.lambda_nominal = flux.convexity(r.lo, r.hi);
  if (!(n.lambda > 0.0)) throw DomainError("flux: not uniformly convex on the working range");
  return n;
}

/// Ψ of f''' restricted to (-V/2, V/2): the sampled estimate, raised to the
/// C⁴ lower bound s/‖f‖_{C⁴} when available.
inline double psi_f3(const FluxFunction& flux, double V, double s) {
  const WorkingRange r(V);
  if (V <= 0.0) return kInf;
  auto f3 = SampledFunction::scalar(r.lo, r.hi, 4097, [&flux](double u) { return flux.d3(u); });
  double psi = ModulusEstimator(f3).psi(s);
  if (flux.has_d4()) psi = std::max(psi, s / flux.norm(4, r.lo, r.hi));
  return psi;
}

/// Lower bound for Ψ_{h_δ}(s).
inline double psi_hdelta_lower_bound(const FluxFunction& flux, double V, double delta, double s) {
  if (!(s > 0.0)) throw DomainError("psi_hdelta_lower_bound: s must be > 0");
  if (!(V > 0.0) || !(delta > 0.0)) throw DomainError("psi_hdelta_lower_bound: V and delta must be > 0");
  const double c3 = flux.norm(3, -V / 2, V / 2);
  const double a = delta * delta * delta * s / (45.0 * V * (V + 1.0) * c3);
  const double b = 4.0 * delta / (5.0 * V) * psi_f3(flux, V, 5.0 * delta * delta * s / (16.0 * V * V));
  return std::min(a, b);
}

struct PhiBound {
  double phi = 0.0;
  double branch_c3 = 0.0;   // 2^12·45(1+1/V)‖f‖_{C³}
  double branch_psi = 0.0;  // 2^12·4β/Ψ(β)
  double beta = 0.0;
  double c4_constant = kInf;  // 2^12·45(1+1/V)‖f‖_{C⁴}
  double lambda = 0.0;
};

inline PhiBound phi_bound(const FluxFunction& flux, double V, double R, double eps) {
  if (!(eps > 0.0) || eps > R * V / 4.0 * (1 + 1e-12)) throw DomainError("phi_bound: requires 0 < eps <= R V / 4");
  const FluxNorms n = flux_norms(flux, V);
  PhiBound p;
  p.lambda = n.lambda;
  p.beta = 5.0 * n.lambda * eps * eps * eps / (512.0 * V * V * V * V * R * R * R);
  p.branch_c3 = 4096.0 * 45.0 * (1.0 + 1.0 / V) * n.c3;
  const double psi = psi_f3(flux, V, p.beta);
  p.branch_psi = std::isfinite(psi) ? 4096.0 * 4.0 * p.beta / psi : 0.0;
  p.phi = std::max(p.branch_c3, p.branch_psi);
  if (std::isfinite(n.c4)) p.c4_constant = 4096.0 * 45.0 * (1.0 + 1.0 / V) * n.c4;
  return p;
}

/// Φ/λ·R⁴V⁵/ε⁴ + 4.
inline double shock_bound(const PhiBound& p, double V, double R, double eps) {
  return p.phi / p.lambda * std::pow(R, 4) * std::pow(V, 5) / std::pow(eps, 4) + 4.0;
}

/// 2³·45^{1/4}·[(V+1)/λ·‖f‖_{C⁴}]^{1/4}·R V/(N-4)^{1/4}.
inline double corollary_budget(const FluxFunction& flux, double V, double R, std::int64_t N) {
  if (N <= 4) throw DomainError("corollary_budget: N must be > 4");
  if (!flux.has_d4()) throw DomainError("corollary_budget: needs a C4 flux");
  const FluxNorms n = flux_norms(flux, V);
  return 8.0 * std::pow(45.0, 0.25) * std::pow((V + 1.0) / n.lambda * n.c4, 0.25) * R * V /
         std::pow(static_cast<double>(N - 4), 0.25);
}

/// h_δ = f'''(u_δ)(u_δ')² + f''(u_δ)u_δ'' sampled on [a, b].
inline SampledFunction speed_second_derivative(const SmoothDatum& u, const FluxFunction& flux, double a, double b,
                                               int n = (1 << 18) + 1) {
  auto ud = std::make_shared<SmoothDatum>(u);
  auto fl = std::make_shared<FluxFunction>(flux);
  return SampledFunction::scalar(a, b, n, [ud, fl](double x) {
    const double v = (*ud)(x, 0), v1 = (*ud)(x, 1), v2 = (*ud)(x, 2);
    return fl->d3(v) * v1 * v1 + fl->d2(v) * v2;
  });
}

/// Running first and second integrals of h̃ from the left end of the
/// perturbation grid, with checkpoints every 64 cells. Marked cells integrate
/// the linear interpolant exactly; unmarked stretches telescope through
/// T = f'(u_δ) and T' = f''(u_δ)u_δ'.
class SpeedProfile {
 public:
  static constexpr std::int64_t kStride = 64;

  SpeedProfile(FluxFunction flux, SmoothDatum u, std::shared_ptr<const PLApproximation> pl, double lo, double hi)
      : flux_(std::move(flux)), u_(std::move(u)), pl_(std::move(pl)), lo_(lo), hi_(hi) {
    if (pl_) K_ = pl_->per_axis();
  }

  void set_grid(std::shared_ptr<const PLApproximation> pl) {
    pl_ = std::move(pl);
    if (K_ != 0 && K_ != pl_->per_axis()) throw StageError("reconstruct_speed", "grid mismatch");
    K_ = pl_->per_axis();
  }

  std::int64_t per_axis() const { return K_; }

  double node(std::int64_t i) const {
    return lo_ + (hi_ - lo_) * (static_cast<double>(2 * i) / (2.0 * static_cast<double>(K_)));
  }

  double T(double x) const { return flux_.d1(u_(x, 0)); }
  double Tp(double x) const { return flux_.d2(u_(x, 0)) * u_(x, 1); }

  /// Streams one cell (in increasing order).
  void visit(const LineCell& c) {
    if (K_ == 0) K_ = c.per_axis;
    const double x0 = node(c.index);
    if (c.index % kStride == 0) {
      flush(x0);
      ck1_.push_back(s1_.value());
      ck2_.push_back(s2_.value());
    }
    if (c.marked) {
      flush(x0);
      open_ = false;
      const double L = node(c.index + 1) - x0;
      s2_.add(s1_.value() * L + L * L * (2.0 * c.n0 + c.n1) / 6.0);
      s1_.add(L * (c.n0 + c.n1) / 2.0);
    } else if (!open_) {
      open_ = true;
      run_x_ = x0;
    }
  }

  void finish() {
    flush(hi_);
    open_ = false;
    I1_end_ = s1_.value();
    I2_end_ = s2_.value();
  }

  /// Replays all cells from the grid (when no streaming visit happened).
  void replay() {
    const CellSet& marked = pl_->marked();
    for (std::int64_t i = 0; i < K_; ++i) {
      LineCell c;
      c.index = i;
      c.marked = marked.contains(i);
      if (c.marked) {
        std::array<double, 3> v{};
        std::int64_t a = 2 * i, b = 2 * i + 2;
        pl_->vertex_value(&a, v.data());
        c.n0 = v[0];
        pl_->vertex_value(&b, v.data());
        c.n1 = v[0];
      }
      visit(c);
    }
    finish();
  }

  double I1_end() const { return I1_end_; }
  double I2_end() const { return I2_end_; }

  /// (I1, I2, h̃) at x ∈ [lo, hi].
  void state(double x, double& I1, double& I2, double& h) const {
    x = std::clamp(x, lo_, hi_);
    std::int64_t i = static_cast<std::int64_t>(std::floor((x - lo_) / (hi_ - lo_) * static_cast<double>(K_)));
    i = std::clamp<std::int64_t>(i, 0, K_ - 1);
    while (i > 0 && node(i) > x) --i;
    while (i + 1 < K_ && node(i + 1) <= x) ++i;
    const std::int64_t c = (i / kStride) * kStride;
    KahanSum s1, s2;
    s1.add(ck1_[c / kStride]);
    s2.add(ck2_[c / kStride]);
    const CellSet& marked = pl_->marked();
    std::int64_t j = c;
    while (j < i) {
      if (marked.contains(j)) {
        double n0, n1;
        vertex_pair(j, n0, n1);
        const double L = node(j + 1) - node(j);
        s2.add(s1.value() * L + L * L * (2.0 * n0 + n1) / 6.0);
        s1.add(L * (n0 + n1) / 2.0);
        ++j;
      } else {
        const std::int64_t e = std::min(marked.next_member(j), i);
        telescope(node(j), node(e), s1, s2);
        j = e;
      }
    }
    const double x0 = node(i);
    if (marked.contains(i)) {
      double n0, n1;
      vertex_pair(i, n0, n1);
      const double L = node(i + 1) - x0;
      const double t = L > 0.0 ? (x - x0) / L : 0.0;
      s2.add(s1.value() * (x - x0) + L * L * (n0 * t * t / 2.0 + (n1 - n0) * t * t * t / 6.0));
      s1.add(L * (n0 * t + (n1 - n0) * t * t / 2.0));
      h = n0 + (n1 - n0) * t;
    } else {
      telescope(x0, x, s1, s2);
      const double v = u_(x, 0), v1 = u_(x, 1), v2 = u_(x, 2);
      h = flux_.d3(v) * v1 * v1 + flux_.d2(v) * v2;
    }
    I1 = s1.value();
    I2 = s2.value();
  }

 private:
  void vertex_pair(std::int64_t j, double& n0, double& n1) const {
    std::array<double, 3> v{};
    std::int64_t a = 2 * j, b = 2 * j + 2;
    pl_->vertex_value(&a, v.data());
    n0 = v[0];
    pl_->vertex_value(&b, v.data());
    n1 = v[0];
  }

  void telescope(double xa, double xb, KahanSum& s1, KahanSum& s2) const {
    if (!(xb > xa)) return;
    const double ta = T(xa), tb = T(xb), pa = Tp(xa), pb = Tp(xb);
    s2.add(s1.value() * (xb - xa) + (tb - ta) - (xb - xa) * pa);
    s1.add(pb - pa);
  }

  void flush(double x) {
    if (!open_) return;
    telescope(run_x_, x, s1_, s2_);
    run_x_ = x;
  }

  FluxFunction flux_;
  SmoothDatum u_;
  std::shared_ptr<const PLApproximation> pl_;
  double lo_, hi_;
  std::int64_t K_ = 0;
  std::vector<double> ck1_, ck2_;
  KahanSum s1_, s2_;
  bool open_ = false;
  double run_x_ = 0.0;
  double I1_end_ = 0.0, I2_end_ = 0.0;
};

/// Quintic G on [R1, R1+θ] with G(R1) = 0, G'(R1) = α₂, G''(R1) = α₃ and a
/// triple zero at R2, from the six Hermite conditions in s = (x-R1)/θ.
struct ClosingPatch {
  double R1 = 0.0, theta = 1.0;
  double alpha2 = 0.0, alpha3 = 0.0;
  std::array<double, 6> c{};

  ClosingPatch() = default;
  ClosingPatch(double r1, double th, double a2, double a3) : R1(r1), theta(th), alpha2(a2), alpha3(a3) {
    Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> rhs;
    // rows: g(0), g'(0), g''(0), g(1), g'(1), g''(1)
    A(0, 0) = 1;
    A(1, 1) = 1;
    A(2, 2) = 2;
    for (int k = 0; k < 6; ++k) {
      A(3, k) = 1;
      A(4, k) = k;
      A(5, k) = k * (k - 1);
    }
    rhs << 0, a2 * th, a3 * th * th, 0, 0, 0;
    Eigen::Matrix<double, 6, 1> sol = A.fullPivLu().solve(rhs);
    for (int k = 0; k < 6; ++k) c[k] = sol(k);
  }

  double R2() const { return R1 + theta; }

  /// k-th derivative of G at x (zero outside [R1, R2]).
  double operator()(double x, int k = 0) const {
    if (x < R1 || x > R2()) return 0.0;
    const double s = (x - R1) / theta;
    double v = 0.0;
    for (int j = 5; j >= k; --j) {
      double coef = c[j];
      for (int r = 0; r < k; ++r) coef *= (j - r);
      v = v * s + coef;
    }
    return v / std::pow(theta, k);
  }

  /// Closed form (x-R1)(x-R2)³(a + (x-R1)b) with the same α₂, α₃.
  double closed_form(double x, double a2, double a3) const {
    const double d = R1 - R2();
    return (x - R1) * std::pow(x - R2(), 3) *
           (a2 / std::pow(d, 3) + (x - R1) * (a3 / (2.0 * std::pow(d, 3)) - 3.0 * a2 / std::pow(d, 4)));
  }
};

}  // namespace qtrans

#endif  // QTRANS_CONSLAW_RECONSTRUCT_HPP_
