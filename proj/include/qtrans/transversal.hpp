// Piecewise-linear perturbation of g: [0,1]^d -> R^m whose preimage of a
// graph manifold W is a finite union of affine slices, with the measured
// slice content and the theoretical upper bound.

#ifndef QTRANS_TRANSVERSAL_HPP_
#define QTRANS_TRANSVERSAL_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qtrans/core.hpp"
#include "qtrans/cubesimplex.hpp"
#include "qtrans/entropy.hpp"
#include "qtrans/graph_manifold.hpp"
#include "qtrans/moduli.hpp"
#include "qtrans/sampled_function.hpp"

namespace qtrans {

struct PerturbOptions {
  std::uint64_t seed = 1;
  bool pin_boundary = false;   // never nudge vertices on the boundary of the cube
  std::int64_t probe = 1000000;  // total dense-probe points for the sup-distance check
  double eta_rel = 1e-6;       // nudge size relative to eps
  int max_attempts = 32;
  std::int64_t max_cells = 4000000000LL;
};

struct ZeroSlice {
  std::int64_t cell = 0;
  int simplex = 0;
  int dim = 0;
  double measure = 0.0;
  std::vector<Point> points;  // unit-cube coordinates
  int crossing = 0;           // d = 1 only: sign of h̃(right) - h̃(left) at a sign change, else 0
};

struct BoundComponents {
  double gamma = 1.0, lambda1 = 1.0, lambda2 = 1.0;
  double psi = 0.0;       // Ψ_g(γε) in physical units
  double psi_unit = 0.0;  // same on the unit cube
  double delta = 0.0;
  std::int64_t K = 0;
  double ell_delta = 0.0;
  double ell_ideal = 0.0;  // Ψ_unit / (2√d)
  double margin = 0.0;     // ω_g(√d ℓ_δ / 4), unit-cube argument
  double eta = 0.0;
  double constant_C = 0.0;
  std::int64_t covering_ideal = 0, covering_realized = 0;
  double lambda_ideal = 0.0, lambda_realized = 0.0;
  double theoretical_bound = kInf;  // C·Λ(ℓ(ε))·Ψ^{-(m-p)}
  double realized_bound = kInf;     // same with Λ evaluated at ℓ_δ
  double step_bound = kInf;         // (2^{d-1} d! d^{k} / ℓ_δ^{m-p})·min{2^d ℓ_δ^d 2^{H_{ℓ_δ}}, 1}
  double ed1_bound = kInf;          // #I · 2^{d-1} d! (d ℓ_δ)^k
  double card_bound = kInf;         // min{2^d 2^{H_{ℓ_δ}}, K^d}
  std::int64_t marked_count = 0;
};

/// Constant of the main estimate: 2^{d+m-p-1} d! d^{d+(p-m)/2}.
inline double transversality_constant(int d, int m, int p) {
  return std::ldexp(1.0, d + m - p - 1) * factorial(d) * std::pow(static_cast<double>(d), d + 0.5 * (p - m));
}

/// C_W (norm/ε)^{(m-p)/α} with C_W = C·(1/γ_W)^{(m-p)/α}.
inline double holder_bound(double holder_norm, double alpha, const GraphManifold& W, double eps, int d) {
  const int m = W.m(), p = W.p();
  if (p + d < m) throw DomainError("holder_bound: requires p + d >= m");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("holder_bound: alpha must lie in (0,1]");
  if (!(eps > 0.0) || !(holder_norm > 0.0)) throw DomainError("holder_bound: eps and norm must be > 0");
  const double e = (m - p) / alpha;
  return transversality_constant(d, m, p) * std::pow(1.0 / W.gamma(), e) * std::pow(holder_norm / eps, e);
}

namespace detail {
inline int ipow3(int d) {
  int r = 1;
  for (int i = 0; i < d; ++i) r *= 3;
  return r;
}
}  // namespace detail

/// Grid, nudges and piecewise-linear interpolant h̃_δ of the straightened map
/// g̃ = Φ∘g on the marked cells. All coordinates are unit-cube coordinates;
/// vertices live on the half-step lattice {0, .., 2K}^d.
class PLApproximation {
 public:
  PLApproximation(SampledFunction g, GraphManifold W, double eps, std::int64_t K, double margin,
                  const PerturbOptions& opts)
      : g_(std::move(g)), W_(std::move(W)), eps_(eps), K_(K), margin_(margin), opts_(opts),
        dec_(g_.dim()), marked_(g_.dim(), K) {
    d_ = g_.dim();
    m_ = W_.m();
    c_ = W_.codim();
    if (g_.out_dim() != m_) throw DomainError("perturb: g and W have different ambient dimensions");
    if (d_ > 3 || m_ > 3) throw UnsupportedDimensionError("perturb: supports d <= 3 and m <= 3");
    if (c_ < 1) throw UnsupportedDimensionError("perturb: W must have positive codimension");
    if (d_ + W_.p() < m_) throw DomainError("perturb: requires p + d >= m");
    if (d_ - c_ > 2) throw UnsupportedDimensionError("perturb: slice dimension d + p - m must be <= 2");
    if (!g_.domain().is_cube()) throw DomainError("perturb: domain must be a cube");
    ell_ = 1.0 / static_cast<double>(K_);
    eta_ = eps_ * opts_.eta_rel * W_.lambda1();
  }

  int dim() const { return d_; }
  int ambient() const { return m_; }
  int codim() const { return c_; }
  int slice_dim() const { return d_ - c_; }
  std::int64_t per_axis() const { return K_; }
  double ell() const { return ell_; }
  double eta() const { return eta_; }
  double eps() const { return eps_; }
  double margin() const { return margin_; }
  const CellSet& marked() const { return marked_; }
  const std::map<std::int64_t, int>& overrides() const { return overrides_; }
  const Decomposition& decomposition() const { return dec_; }
  const SampledFunction& g() const { return g_; }
  const GraphManifold& manifold() const { return W_; }
  std::int64_t nudged_by_rule() const { return nudged_by_rule_; }

  /// g at a unit-cube point.
  void g_unit(const double* x, double* out) const {
    std::array<double, 3> phys{};
    const Box& b = g_.domain();
    for (int a = 0; a < d_; ++a) phys[a] = b.lo[a] + b.side(a) * x[a];
    g_.evaluate(std::span<const double>(phys.data(), d_), std::span<double>(out, m_));
  }

  double vertex_coord(std::int64_t v) const {
    return static_cast<double>(v) / (2.0 * static_cast<double>(K_));
  }

  std::int64_t vertex_id(const std::int64_t* v) const {
    std::int64_t id = 0;
    for (int a = 0; a < d_; ++a) id = id * (2 * K_ + 1) + v[a];
    return id;
  }

  bool on_boundary(const std::int64_t* v) const {
    for (int a = 0; a < d_; ++a)
      if (v[a] == 0 || v[a] == 2 * K_) return true;
    return false;
  }

  /// Raw g and g̃ at a lattice vertex.
  void vertex_raw(const std::int64_t* v, double* graw, double* gt) const {
    std::array<double, 3> x{};
    for (int a = 0; a < d_; ++a) x[a] = vertex_coord(v[a]);
    g_unit(x.data(), graw);
    W_.straighten(graw, gt);
  }

  /// Nudge attempt in effect at a vertex: an explicit override, 0 when the
  /// vertex is eligible by rule (small normal part, not pinned), else -1.
  int attempt_of(std::int64_t id, bool pinned, const double* gt) const {
    auto it = overrides_.find(id);
    if (it != overrides_.end()) return it->second;
    if (pinned) return -1;
    return normal_norm(gt) < 0.5 * eta_ ? 0 : -1;
  }

  /// Adds the nudge of the given attempt to the normal components of gt:
  /// η(3/4·e_1 + 1/4·ξ) with ξ ∈ [-1,1]^c/√c from a seeded generator.
  void add_nudge(std::int64_t id, int attempt, double* gt) const {
    if (attempt < 0) return;
    SplitMix rng(hash_combine(hash_combine(opts_.seed, static_cast<std::uint64_t>(attempt)),
                              static_cast<std::uint64_t>(id)));
    const double inv = 1.0 / std::sqrt(static_cast<double>(c_));
    const int p = m_ - c_;
    for (int i = 0; i < c_; ++i) {
      const double xi = (2.0 * rng.uniform() - 1.0) * inv;
      gt[p + i] += eta_ * ((i == 0 ? 0.75 : 0.0) + 0.25 * xi);
    }
  }

  /// Nudged straightened value at a vertex.
  void vertex_value(const std::int64_t* v, double* gt) const {
    std::array<double, 3> graw{};
    vertex_raw(v, graw.data(), gt);
    add_nudge(vertex_id(v), attempt_of(vertex_id(v), opts_.pin_boundary && on_boundary(v), gt), gt);
  }

  double normal_norm(const double* gt) const {
    double s = 0.0;
    for (int i = m_ - c_; i < m_; ++i) s += gt[i] * gt[i];
    return std::sqrt(s);
  }

  bool cell_marked(std::int64_t cell) const { return marked_.contains(cell); }

  std::int64_t cell_of(const double* x, std::int64_t* iota, double* local) const {
    for (int a = 0; a < d_; ++a) {
      const double t = x[a] * static_cast<double>(K_);
      std::int64_t i = static_cast<std::int64_t>(std::floor(t));
      i = std::clamp<std::int64_t>(i, 0, K_ - 1);
      iota[a] = i;
      local[a] = std::clamp(t - static_cast<double>(i), 0.0, 1.0);
    }
    return marked_.linear(iota);
  }

  /// h̃_δ(x) on marked cells; g̃(x) elsewhere. Returns whether x is in a marked cell.
  bool htilde(const double* x, double* out) const {
    std::array<std::int64_t, 3> iota{};
    std::array<double, 3> local{};
    const std::int64_t cell = cell_of(x, iota.data(), local.data());
    if (!cell_marked(cell)) {
      std::array<double, 3> graw{};
      g_unit(x, graw.data());
      W_.straighten(graw.data(), out);
      return false;
    }
    const std::size_t k = dec_.locate(local.data());
    std::array<double, kMaxCubeDim + 1> alpha{};
    dec_.barycentric_fast(k, local.data(), alpha.data());
    for (int j = 0; j < m_; ++j) out[j] = 0.0;
    const Simplex& s = dec_[k];
    for (int j = 0; j <= d_; ++j) {
      std::array<std::int64_t, 3> v{};
      for (int a = 0; a < d_; ++a) v[a] = 2 * iota[a] + static_cast<std::int64_t>(std::lround(2.0 * s.vertices[j][a]));
      std::array<double, 3> val{};
      vertex_value(v.data(), val.data());
      for (int i = 0; i < m_; ++i) out[i] += alpha[j] * val[i];
    }
    return true;
  }

  /// g_δ(x) = Φ^{-1}(h̃_δ(x)) on marked cells, g(x) elsewhere.
  bool perturbed(const double* x, double* out) const {
    std::array<double, 3> h{};
    if (!htilde(x, h.data())) {
      g_unit(x, out);
      return false;
    }
    W_.unstraighten(h.data(), out);
    return true;
  }

  // Mutators used by the drivers.
  CellSet& mutable_marked() { return marked_; }
  std::map<std::int64_t, int>& mutable_overrides() { return overrides_; }
  void count_rule_nudge(std::int64_t n) { nudged_by_rule_ += n; }
  const PerturbOptions& options() const { return opts_; }

 private:
  SampledFunction g_;
  GraphManifold W_;
  double eps_;
  std::int64_t K_;
  double margin_;
  PerturbOptions opts_;
  Decomposition dec_;
  CellSet marked_;
  std::map<std::int64_t, int> overrides_;
  std::int64_t nudged_by_rule_ = 0;
  int d_ = 1, m_ = 1, c_ = 1;
  double ell_ = 1.0;
  double eta_ = 0.0;
};

namespace detail {

/// Half-open attribution of slices lying on a shared facet: the first
/// (lexicographically smallest cell, simplex) occurrence wins.
class SliceDedup {
 public:
  explicit SliceDedup(double ell) : q_(ell * 1e-9) {}
  bool first(const std::vector<Point>& pts) {
    std::vector<std::vector<std::int64_t>> key;
    for (const auto& p : pts) {
      std::vector<std::int64_t> k;
      for (double x : p) k.push_back(std::llround(x / q_));
      key.push_back(std::move(k));
    }
    std::sort(key.begin(), key.end());
    return seen_.insert(std::move(key)).second;
  }

 private:
  double q_;
  std::set<std::vector<std::vector<std::int64_t>>> seen_;
};

/// Sutherland–Hodgman clip of a convex polygon by a·t + b >= 0.
inline std::vector<Eigen::Vector2d> clip(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& a,
                                         double b) {
  std::vector<Eigen::Vector2d> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % n];
    const double fp = a.dot(p) + b, fq = a.dot(q) + b;
    if (fp >= 0.0) out.push_back(p);
    if ((fp >= 0.0) != (fq >= 0.0)) {
      const double t = fp / (fp - fq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

/// Slice of one simplex given vertex positions P_j (unit coords) and normal
/// values N_j. Returns false when the simplex cannot meet the slice.
inline bool simplex_slice(int d, int c, const std::vector<Point>& P, const std::vector<std::vector<double>>& N,
                          ZeroSlice& out, bool& on_facet) {
  on_facet = false;
  for (int i = 0; i < c; ++i) {
    bool pos = true, neg = true;
    for (int j = 0; j <= d; ++j) {
      pos = pos && N[j][i] > 0.0;
      neg = neg && N[j][i] < 0.0;
    }
    if (pos || neg) return false;
  }
  Eigen::MatrixXd A(c, d);
  Eigen::VectorXd rhs(c);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < d; ++j) A(i, j) = N[j][i] - N[d][i];
    rhs(i) = -N[d][i];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sv = svd.singularValues();
  if (sv.size() < c || sv(c - 1) <= 0.0) return false;
  // Particular solution from the first c singular directions.
  Eigen::VectorXd ut = svd.matrixU().transpose() * rhs;
  Eigen::VectorXd alpha0 = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < c; ++i) alpha0 += svd.matrixV().col(i) * (ut(i) / sv(i));
  const int k = d - c;
  Eigen::MatrixXd Z(d, k);
  for (int i = 0; i < k; ++i) Z.col(i) = svd.matrixV().col(c + i);

  // Constraints rows: α_i >= 0 and 1 - Σα >= 0, as a_r·t + b_r >= 0.
  std::vector<Eigen::VectorXd> ar;
  std::vector<double> br;
  for (int i = 0; i < d; ++i) {
    ar.push_back(Z.row(i).transpose());
    br.push_back(alpha0(i));
  }
  ar.push_back(-Z.colwise().sum().transpose());
  br.push_back(1.0 - alpha0.sum());

  auto to_x = [&](const Eigen::VectorXd& alpha) {
    Point x(d);
    for (int a = 0; a < d; ++a) {
      double v = P[d][a];
      for (int j = 0; j < d; ++j) v += alpha(j) * (P[j][a] - P[d][a]);
      x[a] = v;
    }
    return x;
  };
  const double tol = 1e-12;
  out.dim = k;
  out.points.clear();
  if (k == 0) {
    for (int r = 0; r <= d; ++r)
      if (br[r] < -tol) return false;
    for (int r = 0; r <= d; ++r)
      if (br[r] <= tol) on_facet = true;
    out.points.push_back(to_x(alpha0));
    out.measure = 1.0;
    return true;
  }
  if (k == 1) {
    double lo = -kInf, hi = kInf;
    for (int r = 0; r <= d; ++r) {
      const double a = ar[r](0), b = br[r];
      if (std::abs(a) < 1e-300) {
        if (b < -tol) return false;
        continue;
      }
      const double t = -b / a;
      if (a > 0)
        lo = std::max(lo, t);
      else
        hi = std::min(hi, t);
    }
    if (!(hi > lo)) return false;
    const Eigen::VectorXd a0 = alpha0 + Z.col(0) * lo, a1 = alpha0 + Z.col(0) * hi;
    const Point x0 = to_x(a0), x1 = to_x(a1);
    double len = 0.0;
    for (int a = 0; a < d; ++a) len += (x1[a] - x0[a]) * (x1[a] - x0[a]);
    len = std::sqrt(len);
    if (len <= 0.0) return false;
    for (int r = 0; r <= d; ++r) {
      const double v0 = ar[r](0) * lo + br[r], v1 = ar[r](0) * hi + br[r];
      if (std::abs(v0) <= 1e-10 && std::abs(v1) <= 1e-10) on_facet = true;
    }
    out.points = {x0, x1};
    out.measure = len;
    return true;
  }
  // k == 2: clip a square containing the feasible set in t-space.
  const double R = std::sqrt(static_cast<double>(d)) + alpha0.norm() + 1.0;
  std::vector<Eigen::Vector2d> poly{{-R, -R}, {R, -R}, {R, R}, {-R, R}};
  for (int r = 0; r <= d && !poly.empty(); ++r) poly = clip(poly, Eigen::Vector2d(ar[r](0), ar[r](1)), br[r]);
  if (poly.size() < 3) return false;
  double area_t = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    area_t += p.x() * q.y() - q.x() * p.y();
  }
  area_t = 0.5 * std::abs(area_t);
  if (area_t <= 0.0) return false;
  Eigen::MatrixXd T(d, d);
  for (int j = 0; j < d; ++j)
    for (int a = 0; a < d; ++a) T(a, j) = P[j][a] - P[d][a];
  const Eigen::MatrixXd TZ = T * Z;
  const double jac = std::sqrt(std::max(0.0, (TZ.transpose() * TZ).determinant()));
  for (int r = 0; r <= d; ++r) {
    bool all = true;
    for (const auto& p : poly) all = all && std::abs(ar[r](0) * p.x() + ar[r](1) * p.y() + br[r]) <= 1e-10;
    if (all) on_facet = true;
  }
  for (const auto& p : poly) out.points.push_back(to_x(alpha0 + Z * p));
  out.measure = area_t * jac;
  return true;
}

/// Smallest singular value of the c×d matrix of normal differences.
inline double normal_sigma_min(int d, int c, const std::vector<std::vector<double>>& N) {
  if (c == 1) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += (N[j][0] - N[d][0]) * (N[j][0] - N[d][0]);
    return std::sqrt(s);
  }
  Eigen::MatrixXd A(c, d);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < d; ++j) A(i, j) = N[j][i] - N[d][i];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  return svd.singularValues()(std::min(c, d) - 1);
}

inline bool uniform_sign(int d, int c, const std::vector<std::vector<double>>& N) {
  for (int i = 0; i < c; ++i) {
    bool pos = true, neg = true;
    for (int j = 0; j <= d; ++j) {
      pos = pos && N[j][i] > 0.0;
      neg = neg && N[j][i] < 0.0;
    }
    if (pos || neg) return true;
  }
  return false;
}

/// Processes one marked cell: enforces the span condition by nudging and,
/// when `slices` is given, appends the zero slices of its simplices.
/// `raw` holds g̃ at the 3^d local half-lattice points (last axis fastest).
/// Returns the vertex ids that received a new override.
inline std::vector<std::int64_t> process_cell(PLApproximation& pl, const std::int64_t* iota,
                                              const std::vector<double>& raw, std::vector<ZeroSlice>* slices) {
  const int d = pl.dim(), m = pl.ambient(), c = pl.codim();
  const int npts = ipow3(d);
  const Decomposition& dec = pl.decomposition();
  const bool pin = pl.options().pin_boundary;
  std::vector<std::int64_t> ids(npts);
  std::vector<char> pinned(npts);
  std::vector<std::array<std::int64_t, 3>> verts(npts);
  for (int q = 0; q < npts; ++q) {
    int r = q;
    for (int a = d - 1; a >= 0; --a) {
      verts[q][a] = 2 * iota[a] + r % 3;
      r /= 3;
    }
    ids[q] = pl.vertex_id(verts[q].data());
    pinned[q] = pin && pl.on_boundary(verts[q].data());
  }
  auto local_index = [&](const Point& v) {
    int q = 0;
    for (int a = 0; a < d; ++a) q = q * 3 + static_cast<int>(std::lround(2.0 * v[a]));
    return q;
  };
  std::vector<std::int64_t> bumped;
  std::vector<std::vector<double>> values(npts, std::vector<double>(m));
  std::vector<std::vector<double>> N(d + 1, std::vector<double>(c));
  for (int round = 0;; ++round) {
    for (int q = 0; q < npts; ++q) {
      for (int i = 0; i < m; ++i) values[q][i] = raw[q * m + i];
      pl.add_nudge(ids[q], pl.attempt_of(ids[q], pinned[q], values[q].data()), values[q].data());
    }
    int failing = -1;
    for (std::size_t k = 0; k < dec.size() && failing < 0; ++k) {
      const Simplex& s = dec[k];
      for (int j = 0; j <= d; ++j) {
        const int q = local_index(s.vertices[j]);
        for (int i = 0; i < c; ++i) N[j][i] = values[q][m - c + i];
      }
      if (uniform_sign(d, c, N)) continue;
      if (normal_sigma_min(d, c, N) < 0.5 * pl.eta()) failing = static_cast<int>(k);
    }
    if (failing < 0) break;
    bool progressed = false;
    for (const auto& v : dec[failing].vertices) {
      const int q = local_index(v);
      if (pinned[q]) continue;
      const int cur = pl.attempt_of(ids[q], false, values[q].data());
      // attempt_of on the nudged value may misreport eligibility; use the raw value.
      const int base = std::max(pl.attempt_of(ids[q], false, &raw[q * m]), cur);
      const int next = std::max(base, 0) + 1;
      if (next >= pl.options().max_attempts)
        throw StageError("build_pl", "nudge budget exhausted at cell " + std::to_string(pl.marked().linear(iota)) +
                                         ", simplex " + std::to_string(failing));
      pl.mutable_overrides()[ids[q]] = next;
      bumped.push_back(ids[q]);
      progressed = true;
    }
    if (!progressed)
      throw StageError("build_pl", "rank condition fails on a pinned simplex at cell " +
                                       std::to_string(pl.marked().linear(iota)));
  }
  if (slices) {
    std::vector<Point> P(d + 1);
    for (std::size_t k = 0; k < dec.size(); ++k) {
      const Simplex& s = dec[k];
      for (int j = 0; j <= d; ++j) {
        const int q = local_index(s.vertices[j]);
        P[j].assign(d, 0.0);
        for (int a = 0; a < d; ++a) P[j][a] = pl.vertex_coord(verts[q][a]);
        for (int i = 0; i < c; ++i) N[j][i] = values[q][m - c + i];
      }
      ZeroSlice z;
      bool facet = false;
      if (!simplex_slice(d, c, P, N, z, facet)) continue;
      z.cell = pl.marked().linear(iota);
      z.simplex = static_cast<int>(k);
      if (facet) z.crossing = 2;  // marker, resolved by the caller
      slices->push_back(std::move(z));
    }
  }
  return bumped;
}

}  // namespace detail

/// Streaming view of a cell of the 1-D driver, emitted in increasing order
/// once final. n0, n1 are the nudged normal values at the cell ends (marked
/// cells only).
struct LineCell {
  std::int64_t index = 0;
  bool marked = false;
  double n0 = 0.0, n1 = 0.0;
  std::int64_t per_axis = 0;
};

struct PerturbationResult {
  std::shared_ptr<const PLApproximation> pl;
  bool trivial = false;  // g_δ = g + shift, no grid
  Point shift;
  int slice_dim = 0;
  std::vector<ZeroSlice> slices;
  double total_measure = 0.0;
  double max_slice_measure = 0.0;
  double achieved_sup_distance = 0.0;
  double boundary_min_distance = kInf;  // min dist(g_δ, W) on ∂O_δ away from ∂[0,1]^d
  double outside_min_distance = kInf;   // min dist(g, W) at probes outside O_δ
  std::int64_t override_count = 0;
  std::int64_t rule_nudges = 0;
  BoundComponents bounds;
  double eps = 0.0;
  SampledFunction g;
  GraphManifold W;

  /// g_δ at a unit-cube point.
  void evaluate_unit(const double* x, double* out) const {
    if (pl) {
      pl->perturbed(x, out);
      return;
    }
    std::array<double, 3> phys{};
    const Box& b = g.domain();
    for (int a = 0; a < g.dim(); ++a) phys[a] = b.lo[a] + b.side(a) * x[a];
    g.evaluate(std::span<const double>(phys.data(), g.dim()), std::span<double>(out, g.out_dim()));
    for (std::size_t i = 0; i < shift.size(); ++i) out[i] += shift[i];
  }

  /// g_δ at a physical point.
  void evaluate(std::span<const double> x, std::span<double> out) const {
    std::array<double, 3> u{};
    const Box& b = g.domain();
    for (int a = 0; a < g.dim(); ++a) u[a] = b.side(a) > 0 ? (x[a] - b.lo[a]) / b.side(a) : 0.0;
    evaluate_unit(u.data(), out.data());
  }

  /// g_δ sampled on the same box.
  SampledFunction perturbed(int n) const {
    auto self = std::make_shared<PerturbationResult>(*this);
    return SampledFunction(g.domain(), n, g.out_dim(),
                           [self](std::span<const double> x, std::span<double> out) { self->evaluate(x, out); });
  }
};

namespace detail {

/// Generic driver: visits all K^d cells, marks them from the 3^d half-lattice
/// samples, then enforces the span condition over the marked cells until no
/// override changes, and finally collects slices.
inline void run_grid(PLApproximation& pl, std::vector<ZeroSlice>* slices) {
  const int d = pl.dim(), m = pl.ambient();
  const std::int64_t K = pl.per_axis();
  const int npts = ipow3(d);
  const double eps = pl.eps(), margin = pl.margin();
  std::int64_t total = 1;
  for (int a = 0; a < d; ++a) total *= K;
  if (total > pl.options().max_cells) throw StageError("mark_cells", "grid exceeds max_cells");
  std::vector<std::int64_t> iota(d);
  std::vector<double> raw(npts * m);
  std::array<double, 3> graw{};
  auto fill = [&](std::int64_t cell, bool* marked) {
    pl.marked().multi_index(cell, iota.data());
    double best = kInf;
    for (int q = 0; q < npts; ++q) {
      std::array<std::int64_t, 3> v{};
      int r = q;
      for (int a = d - 1; a >= 0; --a) {
        v[a] = 2 * iota[a] + r % 3;
        r /= 3;
      }
      pl.vertex_raw(v.data(), graw.data(), &raw[q * m]);
      if (marked) best = std::min(best, pl.manifold().distance(graw.data()));
    }
    if (marked) *marked = best < eps + margin;
  };
  if (pl.marked().empty()) {
    for (std::int64_t cell = 0; cell < total; ++cell) {
      bool mk = false;
      fill(cell, &mk);
      if (mk) pl.mutable_marked().append(cell);
    }
  }
  const std::vector<std::int64_t> cells = pl.marked().indices();
  std::set<std::int64_t> pending(cells.begin(), cells.end());
  for (int sweep = 0; !pending.empty(); ++sweep) {
    if (sweep > pl.options().max_attempts + 2) throw StageError("build_pl", "nudge overrides did not settle");
    std::set<std::int64_t> next;
    for (std::int64_t cell : pending) {
      fill(cell, nullptr);
      const auto bumped = process_cell(pl, iota.data(), raw, nullptr);
      for (std::int64_t id : bumped) {
        // Every cell containing the vertex must be rechecked.
        std::array<std::int64_t, 3> v{};
        std::int64_t r = id;
        for (int a = d - 1; a >= 0; --a) {
          v[a] = r % (2 * K + 1);
          r /= (2 * K + 1);
        }
        std::vector<std::vector<std::int64_t>> opts(d);
        for (int a = 0; a < d; ++a) {
          if (v[a] % 2 == 1) {
            opts[a] = {v[a] / 2};
          } else {
            if (v[a] / 2 - 1 >= 0) opts[a].push_back(v[a] / 2 - 1);
            if (v[a] / 2 < K) opts[a].push_back(v[a] / 2);
          }
        }
        std::vector<std::size_t> pos(d, 0);
        while (true) {
          std::array<std::int64_t, 3> nb{};
          for (int a = 0; a < d; ++a) nb[a] = opts[a][pos[a]];
          const std::int64_t lin = pl.marked().linear(nb.data());
          if (lin != cell && pl.cell_marked(lin)) next.insert(lin);
          int a = d - 1;
          while (a >= 0 && ++pos[a] == opts[a].size()) pos[a--] = 0;
          if (a < 0) break;
        }
      }
    }
    pending.swap(next);
  }
  if (slices) {
    SliceDedup dedup(pl.ell());
    for (std::int64_t cell : cells) {
      fill(cell, nullptr);
      std::vector<ZeroSlice> local;
      process_cell(pl, iota.data(), raw, &local);
      for (auto& z : local) {
        const bool facet = z.crossing == 2;
        z.crossing = 0;
        if (facet && !dedup.first(z.points)) continue;
        slices->push_back(std::move(z));
      }
    }
  }
}

/// 1-D driver for codimension one. Streams over the K cells once, reusing the
/// shared corner evaluation, and emits each cell after its right neighbour is
/// final.
inline void run_line(PLApproximation& pl, std::vector<ZeroSlice>* slices, const std::function<void(const LineCell&)>& visit,
                     double* boundary_min) {
  const int m = pl.ambient();
  const int p = m - 1;
  const std::int64_t K = pl.per_axis();
  if (K > pl.options().max_cells) throw StageError("mark_cells", "grid exceeds max_cells");
  const double eps = pl.eps(), margin = pl.margin();
  const double half_eta = 0.5 * pl.eta();
  const bool pin = pl.options().pin_boundary;
  const GraphManifold& W = pl.manifold();
  const bool point_w = W.p() == 0;

  struct Corner {
    std::array<double, 3> g{}, gt{};
    double dist = 0.0;
  };
  auto eval = [&](std::int64_t v, Corner& c) {
    pl.vertex_raw(&v, c.g.data(), c.gt.data());
    c.dist = point_w ? pl.normal_norm(c.gt.data()) : W.distance(c.g.data());
  };
  auto nudged = [&](std::int64_t v, const Corner& c) {
    std::array<double, 3> t = c.gt;
    const bool pinned = pin && (v == 0 || v == 2 * K);
    pl.add_nudge(v, pl.attempt_of(v, pinned, t.data()), t.data());
    return t[p];
  };

  struct State {
    std::int64_t i = -1;
    bool marked = false;
    Corner left, right;
    double n0 = 0.0, n1 = 0.0;
  };
  // Checks the rank condition, bumping the unpinned vertices until it holds.
  auto settle = [&](State& s, bool allow_left) {
    for (int round = 0;; ++round) {
      s.n0 = nudged(2 * s.i, s.left);
      s.n1 = nudged(2 * s.i + 2, s.right);
      const bool exempt = (s.n0 > 0 && s.n1 > 0) || (s.n0 < 0 && s.n1 < 0);
      if (exempt || std::abs(s.n0 - s.n1) >= half_eta) return false;
      bool left_bumped = false;
      bool any = false;
      for (int side = 0; side < 2; ++side) {
        const std::int64_t v = 2 * s.i + 2 * side;
        if (pin && (v == 0 || v == 2 * K)) continue;
        if (side == 0 && !allow_left) continue;
        const Corner& c = side == 0 ? s.left : s.right;
        const int cur = pl.attempt_of(v, false, c.gt.data());
        const int next = std::max(cur, 0) + 1;
        if (next >= pl.options().max_attempts)
          throw StageError("build_pl", "nudge budget exhausted at cell " + std::to_string(s.i));
        pl.mutable_overrides()[v] = next;
        any = true;
        left_bumped = left_bumped || side == 0;
      }
      if (!any) throw StageError("build_pl", "rank condition fails on a pinned cell " + std::to_string(s.i));
      if (left_bumped) return true;
    }
  };

  SliceDedup dedup(pl.ell());
  std::int64_t rule = 0;
  auto emit = [&](const State& s) {
    if (s.marked) {
      if (std::abs(s.left.gt[p]) < half_eta && !(pin && s.i == 0)) ++rule;
      const double x0 = pl.vertex_coord(2 * s.i), x1 = pl.vertex_coord(2 * s.i + 2);
      if (slices) {
        auto add = [&](double x, int crossing, bool facet) {
          ZeroSlice z;
          z.cell = s.i;
          z.dim = 0;
          z.measure = 1.0;
          z.points = {Point{x}};
          z.crossing = crossing;
          if (facet && !dedup.first(z.points)) return;
          slices->push_back(std::move(z));
        };
        if (s.n0 == 0.0) add(x0, 0, true);
        if ((s.n0 < 0 && s.n1 > 0) || (s.n0 > 0 && s.n1 < 0))
          add(x0 + (x1 - x0) * (s.n0 / (s.n0 - s.n1)), s.n1 > s.n0 ? 1 : -1, false);
        if (s.n1 == 0.0) add(x1, 0, true);
      }
    }
    if (visit) visit(LineCell{s.i, s.marked, s.n0, s.n1, pl.per_axis()});
  };

  State prev, cur;
  Corner right_of_prev;
  eval(0, right_of_prev);
  for (std::int64_t i = 0; i < K; ++i) {
    cur = State{};
    cur.i = i;
    cur.left = right_of_prev;
    Corner mid;
    eval(2 * i + 1, mid);
    eval(2 * i + 2, cur.right);
    right_of_prev = cur.right;
    cur.marked = std::min({cur.left.dist, mid.dist, cur.right.dist}) < eps + margin;
    if (cur.marked) {
      pl.mutable_marked().append(i);
      if (settle(cur, true) && prev.i == i - 1 && prev.marked) {
        prev.right = cur.left;
        if (settle(prev, false)) throw StageError("build_pl", "nudge cascade at cell " + std::to_string(prev.i));
        // the shared vertex may have moved again through prev; recheck cur once more
        if (settle(cur, false)) throw StageError("build_pl", "nudge cascade at cell " + std::to_string(i));
      }
    }
    if (prev.i >= 0) {
      if (boundary_min && prev.marked != cur.marked) {
        const double v = prev.marked ? prev.n1 : cur.n0;
        *boundary_min = std::min(*boundary_min, std::abs(v) / W.lambda2());
      }
      emit(prev);
    }
    prev = cur;
  }
  if (prev.i >= 0) emit(prev);
  pl.count_rule_nudge(rule);
}

}  // namespace detail

/// Cells whose interior may meet g^{-1}(B(W, eps)), decided from the
/// half-step lattice samples with margin ω_g(√d ℓ/4).
inline CellSet mark_cells(const SampledFunction& g, const GraphManifold& W, double eps, double delta,
                          const PerturbOptions& opts = {}) {
  if (!(eps > 0.0) || !(delta > 0.0)) throw DomainError("mark_cells: eps and delta must be > 0");
  const int d = g.dim();
  const double side = g.domain().side(0);
  ModulusEstimator mod(g);
  const double sd = std::sqrt(static_cast<double>(d));
  const double arg = std::min(sd * delta * side, mod.diameter());
  if (mod.omega(arg) > W.gamma() * eps * (1 + 1e-12))
    throw DomainError("mark_cells: delta violates omega_g(sqrt(d) delta) <= gamma_W eps");
  const auto K = static_cast<std::int64_t>(std::floor(1.0 / delta)) + 1;
  const double ell = 1.0 / static_cast<double>(K);
  const double margin = mod.omega(std::min(sd * ell * side / 4.0, mod.diameter()));
  PLApproximation pl(g, W, eps, K, margin, opts);
  CellSet& marked = pl.mutable_marked();
  std::vector<std::int64_t> iota(d);
  std::array<double, 3> graw{}, gt{};
  const int npts = detail::ipow3(d);
  std::int64_t total = 1;
  for (int a = 0; a < d; ++a) total *= K;
  for (std::int64_t cell = 0; cell < total; ++cell) {
    marked.multi_index(cell, iota.data());
    double best = kInf;
    for (int q = 0; q < npts; ++q) {
      std::array<std::int64_t, 3> v{};
      int r = q;
      for (int a = d - 1; a >= 0; --a) {
        v[a] = 2 * iota[a] + r % 3;
        r /= 3;
      }
      pl.vertex_raw(v.data(), graw.data(), gt.data());
      best = std::min(best, W.distance(graw.data()));
    }
    if (best < eps + margin) marked.append(cell);
  }
  return marked;
}

/// Builds the nudged piecewise-linear approximation on the given cells.
inline std::shared_ptr<PLApproximation> build_pl(const SampledFunction& g, const GraphManifold& W, double eps,
                                                 const CellSet& cells, const PerturbOptions& opts = {}) {
  auto pl = std::make_shared<PLApproximation>(g, W, eps, cells.per_axis(), 0.0, opts);
  pl->mutable_marked() = cells;
  detail::run_grid(*pl, nullptr);
  return pl;
}

/// Zero slices of h̃ on the marked cells of a built approximation.
inline std::vector<ZeroSlice> zero_slices(PLApproximation& pl) {
  std::vector<ZeroSlice> out;
  detail::run_grid(pl, &out);
  return out;
}

namespace detail {

inline void fill_bounds(BoundComponents& b, const CellSet& marked, int d, int m, int p) {
  const double sd = std::sqrt(static_cast<double>(d));
  const int k = d + p - m;
  b.constant_C = transversality_constant(d, m, p);
  b.marked_count = marked.size();
  b.ell_ideal = b.psi_unit / (2.0 * sd);
  b.covering_realized = covering_number(marked, b.ell_delta);
  b.lambda_realized = lambda_epsilon(marked, b.ell_delta);
  if (b.ell_ideal > 0.0 && std::isfinite(b.ell_ideal)) {
    b.covering_ideal = covering_number(marked, b.ell_ideal);
    b.lambda_ideal = lambda_epsilon(marked, b.ell_ideal);
    b.theoretical_bound = b.constant_C * b.lambda_ideal * std::pow(1.0 / b.psi_unit, m - p);
    b.realized_bound = b.constant_C * b.lambda_realized * std::pow(1.0 / b.psi_unit, m - p);
  }
  const double pre = std::ldexp(factorial(d), d - 1);
  const double two_h = static_cast<double>(b.covering_realized);
  b.step_bound = pre * std::pow(static_cast<double>(d), k) / std::pow(b.ell_delta, m - p) *
                 std::min(std::ldexp(std::pow(b.ell_delta, d), d) * two_h, 1.0);
  b.card_bound = std::min(std::ldexp(two_h, d), std::pow(static_cast<double>(b.K), d));
  b.ed1_bound = static_cast<double>(b.marked_count) * pre * std::pow(d * b.ell_delta, k);
}

}  // namespace detail

/// Theorem-style perturbation: δ = Ψ_g(γ_W ε)/√d on the unit cube, marking,
/// nudged PL interpolation and slice extraction, with a posteriori checks.
/// `visit` (1-D only) receives every cell in increasing order.
inline PerturbationResult perturb(const SampledFunction& g, const GraphManifold& W, double eps,
                                  const PerturbOptions& opts = {},
                                  const std::function<void(const LineCell&)>& visit = nullptr) {
  if (!(eps > 0.0)) throw DomainError("perturb: eps must be > 0");
  const int d = g.dim(), m = W.m(), p = W.p();
  if (g.out_dim() != m) throw DomainError("perturb: g and W have different ambient dimensions");
  if (p + d < m) throw DomainError("perturb: requires p + d >= m");
  if (!g.domain().is_cube()) throw DomainError("perturb: domain must be a cube");
  const double side = g.domain().side(0);
  const double sd = std::sqrt(static_cast<double>(d));

  PerturbationResult res;
  res.eps = eps;
  res.g = g;
  res.W = W;
  res.slice_dim = d + p - m;
  BoundComponents& b = res.bounds;
  b.gamma = W.gamma();
  b.lambda1 = W.lambda1();
  b.lambda2 = W.lambda2();

  ModulusEstimator mod(g, opts.seed);
  b.psi = mod.psi(b.gamma * eps);
  // Reserve the nudge budget so that ‖g_δ - g‖ stays within eps.
  const double psi_step = mod.psi(b.gamma * eps * (1.0 - 2.0 * opts.eta_rel));
  b.psi_unit = b.psi / side;
  const double psi_unit_step = psi_step / side;
  b.eta = eps * opts.eta_rel * b.lambda1;

  const bool clamp = !(psi_unit_step <= sd);
  b.delta = clamp ? 1.0 : psi_unit_step / sd;
  b.K = static_cast<std::int64_t>(std::floor(1.0 / b.delta)) + 1;
  b.ell_delta = 1.0 / static_cast<double>(b.K);
  b.margin = mod.omega(std::min(sd * b.ell_delta * side / 4.0, mod.diameter()));

  auto pl = std::make_shared<PLApproximation>(g, W, eps, b.K, b.margin, opts);
  if (clamp) {
    // Outside the theorem's range: only the trivial outcomes are offered.
    CellSet probe_cells = mark_cells(g, W, eps, 1.0 - 1e-12, opts);
    if (probe_cells.empty()) {
      res.trivial = true;
      res.shift.assign(m, 0.0);
    } else if (W.codim() == 1) {
      // Constant shift along the normal coordinate by at most eps.
      double lo = kInf, hi = -kInf;
      const double pad = mod.omega(std::min(mod.diameter(), g.step(0) * sd));
      std::array<double, 3> gt{};
      for (std::int64_t k = 0; k < g.node_count(); ++k) {
        W.straighten(g.sample(k).data(), gt.data());
        lo = std::min(lo, gt[m - 1]);
        hi = std::max(hi, gt[m - 1]);
      }
      lo -= pad;
      hi += pad;
      double c = 0.0;
      if (lo > -eps && (hi >= eps || -lo <= hi))
        c = eps;
      else if (hi < eps)
        c = -eps;
      else
        throw DomainError("perturb: Psi_g(gamma_W eps) <= sqrt(d) violated and no constant shift avoids W");
      res.trivial = true;
      res.shift.assign(m, 0.0);
      res.shift[m - 1] = c;
    } else {
      throw DomainError("perturb: Psi_g(gamma_W eps) <= sqrt(d) violated");
    }
    res.achieved_sup_distance = 0.0;
    for (double s : res.shift) res.achieved_sup_distance = std::max(res.achieved_sup_distance, std::abs(s));
    b.K = 0;
    return res;
  }

  if (d == 1) {
    detail::run_line(*pl, &res.slices, visit, &res.boundary_min_distance);
  } else {
    detail::run_grid(*pl, &res.slices);
  }
  res.override_count = static_cast<std::int64_t>(pl->overrides().size());
  res.rule_nudges = pl->nudged_by_rule();
  for (const auto& z : res.slices) {
    res.total_measure += z.measure;
    res.max_slice_measure = std::max(res.max_slice_measure, z.measure);
  }
  detail::fill_bounds(b, pl->marked(), d, m, p);

  // Dense probe of ‖g_δ - g‖ and of dist(g, W) off the marked cells.
  const auto per = static_cast<std::int64_t>(std::max(2.0, std::floor(std::pow(static_cast<double>(opts.probe), 1.0 / d))));
  std::int64_t total = 1;
  for (int a = 0; a < d; ++a) total *= per;
  std::array<double, 3> x{}, gd{}, gg{};
  for (std::int64_t k = 0; k < total; ++k) {
    std::int64_t r = k;
    for (int a = d - 1; a >= 0; --a) {
      x[a] = (static_cast<double>(r % per) + 0.5) / static_cast<double>(per);
      r /= per;
    }
    const bool in = pl->perturbed(x.data(), gd.data());
    pl->g_unit(x.data(), gg.data());
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += (gd[i] - gg[i]) * (gd[i] - gg[i]);
    res.achieved_sup_distance = std::max(res.achieved_sup_distance, std::sqrt(s));
    if (!in) res.outside_min_distance = std::min(res.outside_min_distance, W.distance(gg.data()));
  }
  // Vertices are where the interpolation error peaks for nudged values.
  if (d >= 2) {
    // Boundary safety: faces between marked and unmarked cells.
    const std::int64_t K = b.K;
    std::vector<std::int64_t> iota(d), nb(d);
    for (std::int64_t cell : pl->marked().indices()) {
      pl->marked().multi_index(cell, iota.data());
      for (int a = 0; a < d; ++a)
        for (int s = -1; s <= 1; s += 2) {
          nb = iota;
          nb[a] += s;
          if (nb[a] < 0 || nb[a] >= K) continue;
          if (pl->cell_marked(pl->marked().linear(nb.data()))) continue;
          // Sample the shared face on a 5^{d-1} grid from the marked side.
          const int fp = 5;
          int cnt = 1;
          for (int t = 0; t < d - 1; ++t) cnt *= fp;
          for (int q = 0; q < cnt; ++q) {
            int r = q, w = 0;
            for (int t = 0; t < d; ++t) {
              if (t == a) {
                x[t] = (static_cast<double>(iota[t]) + (s > 0 ? 1.0 - 1e-12 : 1e-12)) * b.ell_delta;
                continue;
              }
              x[t] = (static_cast<double>(iota[t]) + static_cast<double>(r % fp) / (fp - 1)) * b.ell_delta;
              x[t] = std::min(x[t], 1.0);
              r /= fp;
              ++w;
            }
            pl->perturbed(x.data(), gd.data());
            res.boundary_min_distance = std::min(res.boundary_min_distance, W.distance(gd.data()));
          }
        }
    }
  }
  res.pl = pl;
  return res;
}

}  // namespace qtrans

#endif  // QTRANS_TRANSVERSAL_HPP_
