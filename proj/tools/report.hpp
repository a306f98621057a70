// result.json payloads shared by the CLI and the acceptance run.

#ifndef QTRANS_TOOLS_REPORT_HPP_
#define QTRANS_TOOLS_REPORT_HPP_

#include <array>
#include <cmath>
#include <string>

#include "json.hpp"
#include "qtrans/conslaw/lax_oleinik.hpp"
#include "qtrans/conslaw/pipeline.hpp"
#include "qtrans/transversal.hpp"

namespace qtrans::report {

using nlohmann::json;

/// JSON has no infinity; non-finite values become strings.
inline json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

/// A measured value next to the bound it is compared against.
inline json checked(double value, double bound, bool le = true) {
  return json{{"value", num(value)}, {"bound", num(bound)}, {"ok", le ? value <= bound : value >= bound}};
}

inline json bounds_json(const BoundComponents& b) {
  return json{{"gamma", num(b.gamma)},
              {"lambda1", num(b.lambda1)},
              {"lambda2", num(b.lambda2)},
              {"psi", num(b.psi)},
              {"psi_unit", num(b.psi_unit)},
              {"delta", num(b.delta)},
              {"K", b.K},
              {"ell_delta", num(b.ell_delta)},
              {"ell_ideal", num(b.ell_ideal)},
              {"margin", num(b.margin)},
              {"eta", num(b.eta)},
              {"C", num(b.constant_C)},
              {"covering_ideal", b.covering_ideal},
              {"covering_realized", b.covering_realized},
              {"Lambda_ideal", num(b.lambda_ideal)},
              {"Lambda_realized", num(b.lambda_realized)},
              {"theoretical_bound", num(b.theoretical_bound)},
              {"realized_bound", num(b.realized_bound)},
              {"step_bound", num(b.step_bound)},
              {"ed1_bound", num(b.ed1_bound)},
              {"card_bound", num(b.card_bound)},
              {"marked_cells", b.marked_count}};
}

inline json perturb_json(const PerturbationResult& r, const std::string& g_spec, const std::string& w_spec) {
  json j;
  j["g"] = g_spec;
  j["W"] = w_spec;
  j["eps"] = num(r.eps);
  j["d"] = r.g.dim();
  j["m"] = r.W.m();
  j["p"] = r.W.p();
  j["slice_dim"] = r.slice_dim;
  j["trivial"] = r.trivial;
  if (r.trivial) {
    json s = json::array();
    for (double v : r.shift) s.push_back(num(v));
    j["shift"] = s;
  }
  j["slice_count"] = static_cast<std::int64_t>(r.slices.size());
  j["total_measure"] = checked(r.total_measure, r.bounds.theoretical_bound);
  j["total_measure_realized"] = checked(r.total_measure, r.bounds.realized_bound);
  j["max_slice_measure"] = num(r.max_slice_measure);
  j["sup_distance"] = checked(r.achieved_sup_distance, r.eps);
  j["boundary_min_distance"] = num(r.boundary_min_distance);
  j["outside_min_distance"] = num(r.outside_min_distance);
  j["override_count"] = r.override_count;
  j["rule_nudges"] = r.rule_nudges;
  j["bounds"] = bounds_json(r.bounds);
  return j;
}

inline json pipeline_json(const PipelineResult& p, const std::string& datum_name, double eps) {
  const auto& rd = p.datum;
  json j;
  j["datum"] = datum_name;
  j["flux"] = rd.flux.name();
  j["R"] = num(rd.datum.R);
  j["V"] = num(rd.datum.V);
  j["eps"] = num(eps);
  j["trivial"] = rd.trivial;
  j["delta"] = num(rd.delta);
  j["sigma"] = num(rd.sigma);
  j["theta"] = num(rd.theta);
  j["lambda"] = num(rd.lambda);
  j["R1"] = num(rd.R1);
  j["R2"] = num(rd.R2);
  j["alpha"] = {{"alpha0", num(rd.alpha0)},
                {"alpha1", num(rd.alpha1)},
                {"alpha2", num(rd.alpha2)},
                {"alpha3", num(rd.alpha3)},
                {"alpha3_closed_form", num(rd.alpha3_closed_form)}};
  j["phi"] = {{"phi", num(p.phi.phi)},
              {"branch_c3", num(p.phi.branch_c3)},
              {"branch_psi", num(p.phi.branch_psi)},
              {"beta", num(p.phi.beta)},
              {"c4_constant", num(p.phi.c4_constant)}};
  j["inflections"] = checked(static_cast<double>(p.inflections), p.theorem_bound);
  j["inflections_vs_zero_bound"] = checked(static_cast<double>(p.inflections), p.inflection_bound);
  j["thin_zero_count"] = p.thin.zero_count;
  j["thin_sign_changes"] = p.thin.sign_changes;
  j["psi_h"] = num(p.psi_h);
  j["psi_h_lower"] = num(p.psi_h_lower);
  j["grid_K"] = p.thin.perturbation.bounds.K;
  j["l1_error"] = checked(p.l1_error, eps);
  j["l1_error_vs_budget"] = checked(p.l1_error, p.l1_budget);
  j["mollifier_l1"] = checked(p.mollifier_l1, rd.datum.V * rd.delta);
  j["sup_speed_error"] = checked(p.sup_speed_error, p.sup_speed_budget);
  j["gluing_residual"] = checked(p.gluing_max, 1e-9);
  auto arr = [](const std::array<double, 3>& a) { return json{num(a[0]), num(a[1]), num(a[2])}; };
  j["gluing"] = {{"R1", arr(p.gluing_R1)}, {"R2", arr(p.gluing_R2)}, {"outer", arr(p.gluing_outer)}};
  j["closed_form_gap"] = num(p.closed_form_gap);
  j["support"] = {num(p.support_lo), num(p.support_hi)};
  return j;
}

inline json shock_scan_json(const ShockScan& s, std::int64_t inflections, double theorem_bound) {
  json j;
  json curves = json::array();
  for (const auto& c : s.curves) {
    json pts = json::array();
    for (std::size_t i = 0; i < c.t.size(); ++i)
      pts.push_back({{"t", num(c.t[i])}, {"x", num(c.x[i])}, {"u_minus", num(c.u_minus[i])}, {"u_plus", num(c.u_plus[i])}});
    curves.push_back({{"id", c.id}, {"points", pts}});
  }
  json times = json::array();
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    json sh = json::array();
    for (const auto& z : s.per_time[k])
      sh.push_back({{"x", num(z.x)}, {"u_minus", num(z.u_minus)}, {"u_plus", num(z.u_plus)}});
    times.push_back({{"t", num(s.times[k])}, {"shocks", sh}});
  }
  j["curves"] = curves;
  j["times"] = times;
  j["curve_count"] = checked(static_cast<double>(s.curves.size()), theorem_bound);
  j["max_simultaneous"] = checked(static_cast<double>(s.max_simultaneous), static_cast<double>(inflections));
  j["speed_checks"] = s.speed_checks;
  j["speed_failures"] = s.speed_failures;
  j["max_speed_error_ratio"] = num(s.max_speed_error);
  j["entropy_violations"] = s.entropy_violations;
  return j;
}

}  // namespace qtrans::report

#endif  // QTRANS_TOOLS_REPORT_HPP_
