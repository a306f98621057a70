// BV datum -> C² datum v̄ with ‖v̄ - ū‖_{L¹} <= ε whose speed profile f'(v̄)
// has a controlled number of inflection points.

#ifndef QTRANS_CONSLAW_PIPELINE_HPP_
#define QTRANS_CONSLAW_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qtrans/conslaw/flux.hpp"
#include "qtrans/conslaw/mollifier.hpp"
#include "qtrans/conslaw/reconstruct.hpp"
#include "qtrans/core.hpp"
#include "qtrans/graph_manifold.hpp"
#include "qtrans/sharpness.hpp"
#include "qtrans/transversal.hpp"

namespace qtrans {

struct PipelineOptions {
  std::uint64_t seed = 1;
  int h_samples = (1 << 18) + 1;    // sample grid of h_δ for the modulus estimate
  std::int64_t probe = 1000000;     // sup-distance probe of the perturbation
  int check_samples = 20001;        // dense scans of F and F''
  int patch_samples = 20001;
};

/// F and v̄ = (f')^{-1}∘F with all parameters of the construction.
class ReconstructedDatum {
 public:
  FluxFunction flux;
  BVDatum datum;
  double eps = 0.0, delta = 0.0, sigma = 0.0, theta = 0.0;
  double lambda = 0.0;
  double R1 = 0.0, R2 = 0.0, b = 0.0;  // b = R + 2δ
  double alpha0 = 0.0, alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
  double alpha3_closed_form = 0.0;  // -6β₁/(R+2δ-R₁) as printed, for comparison
  double fprime0 = 0.0;
  bool trivial = false;
  std::shared_ptr<SpeedProfile> profile;
  ClosingPatch patch;
  std::int64_t grid_zero_crossings = 0;  // sign changes of h̃ on the grid

  /// k-th derivative of F, k = 0..2.
  double F(double x, int k = 0) const {
    if (trivial || x <= -b || x >= b) return k == 0 ? fprime0 : 0.0;
    if (x < R1) {
      if (x <= -datum.R - delta) return k == 0 ? fprime0 : 0.0;
      return streamed(x, k);
    }
    return tail(x, k) + patch(x, k);
  }

  /// F^{(k)} from the integrals of h̃, valid on [-R-δ, R1].
  double streamed(double x, int k) const {
    double I1, I2, h;
    profile->state(x, I1, I2, h);
    return k == 0 ? fprime0 + I2 : (k == 1 ? I1 : h);
  }

  /// f'(0) + α₀((b-x)/(b-R₁))³ and its derivatives.
  double tail(double x, int k) const {
    const double w = b - R1;
    const double r = (b - x) / w;
    if (k == 0) return fprime0 + alpha0 * r * r * r;
    if (k == 1) return -3.0 * alpha0 * r * r / w;
    return 6.0 * alpha0 * r / (w * w);
  }

  double vbar(double x) const {
    const double q = F(x);
    if (q == fprime0) return 0.0;
    const WorkingRange r(datum.V);
    return flux.inverse_derivative(q, r.pad_lo, r.pad_hi);
  }
};

/// Zeros of h̃ on the perturbation grid: a finite set for sup budget σ.
struct ThinResult {
  PerturbationResult perturbation;
  std::int64_t zero_count = 0;    // all zero points
  std::int64_t sign_changes = 0;  // transversal crossings
};

inline ThinResult thin_zero_set(const SampledFunction& h, double sigma, PerturbOptions opts = {},
                                const std::function<void(const LineCell&)>& visit = nullptr) {
  if (!(sigma > 0.0)) throw DomainError("thin_zero_set: sigma must be > 0");
  opts.pin_boundary = true;
  ThinResult out;
  out.perturbation = perturb(h, GraphManifold::zero(1), sigma, opts, visit);
  out.zero_count = static_cast<std::int64_t>(out.perturbation.slices.size());
  for (const auto& z : out.perturbation.slices)
    if (z.crossing != 0) ++out.sign_changes;
  return out;
}

/// F from the streamed integrals of h̃ and the closing patch on [R₁, R+2δ).
inline ReconstructedDatum reconstruct_speed(const ThinResult& thin, std::shared_ptr<SpeedProfile> profile,
                                            const FluxFunction& flux, const BVDatum& datum, double delta, double sigma) {
  ReconstructedDatum rd;
  rd.flux = flux;
  rd.datum = datum;
  rd.delta = delta;
  rd.sigma = sigma;
  rd.fprime0 = flux.d1(0.0);
  rd.b = datum.R + 2.0 * delta;
  rd.R1 = datum.R + delta;
  rd.profile = std::move(profile);
  rd.alpha0 = rd.profile->I2_end();
  rd.alpha1 = rd.profile->I1_end();
  const double w = rd.b - rd.R1;
  rd.alpha2 = rd.alpha1 + 3.0 * rd.alpha0 / w;
  rd.alpha3 = -6.0 * rd.alpha0 / (w * w);
  rd.alpha3_closed_form = -6.0 * rd.alpha0 / w;
  const double denom = 2.0 * (4.0 * std::abs(rd.alpha2) + std::abs(rd.alpha3) / 2.0);
  rd.theta = std::min(delta / 4.0, denom > 0.0 ? sigma * rd.b * rd.b / denom : kInf);
  rd.patch = ClosingPatch(rd.R1, rd.theta, rd.alpha2, rd.alpha3);
  rd.R2 = rd.patch.R2();
  rd.grid_zero_crossings = thin.sign_changes;
  return rd;
}

/// Sign changes of F'' on R: the transversal crossings of h̃ on the grid plus
/// those from the last grid value through the closing patch.
inline std::int64_t count_inflections(const ReconstructedDatum& rd, int patch_samples = 20001) {
  if (rd.trivial) return 0;
  std::int64_t count = rd.grid_zero_crossings;
  std::vector<double> seq;
  // h̃ just left of R₁, then F'' across the patch and the cubic tail.
  const double L = (rd.R1 + rd.datum.R + rd.delta) / static_cast<double>(rd.profile->per_axis());
  seq.push_back(rd.F(rd.R1 - 0.5 * L, 2));
  for (int i = 0; i <= patch_samples; ++i) seq.push_back(rd.F(rd.R1 + rd.theta * i / patch_samples, 2));
  for (int i = 1; i < 2001; ++i) seq.push_back(rd.F(rd.R2 + (rd.b - rd.R2) * i / 2001.0, 2));
  count += count_sign_changes(seq.data(), static_cast<std::int64_t>(seq.size()));
  return count;
}

struct PipelineResult {
  ReconstructedDatum datum;
  ThinResult thin;
  PhiBound phi;
  double theorem_bound = 0.0;       // Φ/λ·R⁴V⁵/ε⁴ + 4
  double psi_h = 0.0;               // estimated Ψ_{h_δ}(σ)
  double psi_h_lower = 0.0;         // lower bound from the flux data
  double zero_bound = 0.0;          // 4(R+δ)/Ψ_{h_δ}(σ) with the lower bound
  double inflection_bound = 0.0;    // zero_bound + 4
  std::int64_t inflections = 0;
  double l1_error = 0.0;
  double l1_budget = 0.0;           // Vδ + 4(R+2δ)³σ/λ
  double sup_speed_error = 0.0;     // ‖F - f'(u_δ)‖∞
  double sup_speed_budget = 0.0;    // 2(R+2δ)²σ
  std::array<double, 3> gluing_R1{}, gluing_R2{};  // relative residuals of F, F', F''
  std::array<double, 3> gluing_outer{};             // worst of the two constant ends
  double gluing_max = 0.0;
  double closed_form_gap = 0.0;     // max |G - closed form| on the patch
  double support_lo = 0.0, support_hi = 0.0;
  double mollifier_l1 = 0.0;
};

namespace detail {
inline double rel_gap(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }
}  // namespace detail

inline PipelineResult pipeline(const BVDatum& ubar, const FluxFunction& flux, double eps,
                               const PipelineOptions& opts = {}) {
  const double R = ubar.R, V = ubar.V;
  if (!(eps > 0.0) || eps > R * V / 4.0 * (1 + 1e-12))
    throw DomainError("pipeline: eps must satisfy 0 < eps <= R V / 4");
  PipelineResult res;
  FluxNorms norms;
  try {
    norms = flux_norms(flux, V);
    res.phi = phi_bound(flux, V, R, eps);
  } catch (const std::exception& e) {
    throw StageError("bounds", e.what());
  }
  res.theorem_bound = shock_bound(res.phi, V, R, eps);
  const double delta = eps / (2.0 * V);
  const double sigma = norms.lambda * eps / (8.0 * std::pow(R + 2.0 * delta, 3));
  res.l1_budget = V * delta + 4.0 * std::pow(R + 2.0 * delta, 3) * sigma / norms.lambda;
  res.sup_speed_budget = 2.0 * std::pow(R + 2.0 * delta, 2) * sigma;

  ReconstructedDatum& rd = res.datum;
  bool zero_datum = true;
  for (const auto& s : ubar.u.segments()) zero_datum = zero_datum && s.value == 0.0;
  if (zero_datum) {
    rd.flux = flux;
    rd.datum = ubar;
    rd.eps = eps;
    rd.delta = delta;
    rd.sigma = sigma;
    rd.lambda = norms.lambda;
    rd.fprime0 = flux.d1(0.0);
    rd.b = R + 2.0 * delta;
    rd.trivial = true;
    return res;
  }

  SmoothDatum u;
  SampledFunction h;
  try {
    u = mollify(ubar, delta);
    res.mollifier_l1 = u.l1_error();
    h = speed_second_derivative(u, flux, -R - delta, R + delta, opts.h_samples);
  } catch (const std::exception& e) {
    throw StageError("mollify", e.what());
  }

  auto profile = std::make_shared<SpeedProfile>(flux, u, nullptr, -R - delta, R + delta);
  try {
    ModulusEstimator mod(h, opts.seed);
    res.psi_h = mod.psi(sigma);
    res.psi_h_lower = psi_hdelta_lower_bound(flux, V, delta, sigma);
    res.zero_bound = 4.0 * (R + delta) / res.psi_h_lower;
    res.inflection_bound = res.zero_bound + 4.0;
    PerturbOptions po;
    po.seed = opts.seed;
    po.probe = opts.probe;
    res.thin = thin_zero_set(h, sigma, po, [&](const LineCell& c) { profile->visit(c); });
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("thin_zero_set", e.what());
  }

  try {
    if (res.thin.perturbation.trivial)
      throw StageError("thin_zero_set", "sigma exceeds the range of h_delta; no grid was built");
    profile->set_grid(res.thin.perturbation.pl);
    profile->finish();
    rd = reconstruct_speed(res.thin, profile, flux, ubar, delta, sigma);
    rd.eps = eps;
    rd.lambda = norms.lambda;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("reconstruct_speed", e.what());
  }

  try {
    // C² gluing at every junction.
    // Both one-sided formulas evaluated at the junction itself.
    for (int k = 0; k < 3; ++k) {
      res.gluing_R1[k] = detail::rel_gap(rd.streamed(rd.R1, k), rd.tail(rd.R1, k) + rd.patch(rd.R1, k));
      res.gluing_R2[k] = detail::rel_gap(rd.tail(rd.R2, k) + rd.patch(rd.R2, k), rd.tail(rd.R2, k));
      const double flat = k == 0 ? rd.fprime0 : 0.0;
      res.gluing_outer[k] = std::max(detail::rel_gap(rd.streamed(-rd.datum.R - rd.delta, k), flat),
                                     detail::rel_gap(rd.tail(rd.b, k), flat));
      res.gluing_max = std::max({res.gluing_max, res.gluing_R1[k], res.gluing_R2[k], res.gluing_outer[k]});
    }
    for (int i = 0; i <= 200; ++i) {
      const double x = rd.R1 + rd.theta * i / 200.0;
      res.closed_form_gap =
          std::max(res.closed_form_gap, std::abs(rd.patch(x) - rd.patch.closed_form(x, rd.alpha2, rd.alpha3)));
    }

    // ‖F - f'(u_δ)‖∞ on a dense grid plus the nodes.
    const double lo = -R - 2.0 * delta, hi = rd.b;
    const int n = opts.check_samples;
    for (int i = 0; i <= n; ++i) {
      const double x = lo + (hi - lo) * i / n;
      res.sup_speed_error = std::max(res.sup_speed_error, std::abs(rd.F(x) - flux.d1(u(x, 0))));
    }

    // Support of v̄: F = f'(0) outside [lo, b].
    res.support_lo = -R - delta;
    res.support_hi = rd.b;

    auto cuts = ubar.u.breakpoints();
    for (double c : u.breakpoints()) cuts.push_back(c);
    cuts.push_back(rd.R1);
    cuts.push_back(rd.R2);
    res.l1_error =
        integrate([&](double x) { return std::abs(rd.vbar(x) - ubar.u(x)); }, -R - 2.0 * delta, rd.b, cuts, 64);
  } catch (const std::exception& e) {
    throw StageError("invert_speed", e.what());
  }

  res.inflections = count_inflections(rd, opts.patch_samples);
  return res;
}

}  // namespace qtrans

#endif  // QTRANS_CONSLAW_PIPELINE_HPP_
