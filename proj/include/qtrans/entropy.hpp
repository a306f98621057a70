// Covering numbers and ε-entropy of unions of grid cells in [0,1]^d.

#ifndef QTRANS_ENTROPY_HPP_
#define QTRANS_ENTROPY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <unordered_set>
#include <utility>
#include <vector>

#include "qtrans/core.hpp"

namespace qtrans {

/// Set of closed cells of side 1/K in [0,1]^d. Cells are identified by their
/// linear index (last axis fastest) and stored as sorted half-open runs, which
/// keeps very long 1-D runs compact.
class CellSet {
 public:
  using Run = std::pair<std::int64_t, std::int64_t>;

  CellSet() = default;
  CellSet(int d, std::int64_t K) : d_(d), K_(K) {
    if (d < 1 || K < 1) throw DomainError("CellSet: need d >= 1 and K >= 1");
    total_ = 1;
    for (int i = 0; i < d; ++i) total_ *= K;
  }

  static CellSet from_indices(int d, std::int64_t K, std::vector<std::int64_t> idx) {
    CellSet c(d, K);
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    for (auto i : idx) c.append(i);
    return c;
  }

  static CellSet full(int d, std::int64_t K) {
    CellSet c(d, K);
    c.append_run(0, c.total_);
    return c;
  }

  int dim() const { return d_; }
  std::int64_t per_axis() const { return K_; }
  double side() const { return 1.0 / static_cast<double>(K_); }
  std::int64_t total_cells() const { return total_; }
  const std::vector<Run>& runs() const { return runs_; }
  bool empty() const { return runs_.empty(); }

  std::int64_t size() const {
    std::int64_t n = 0;
    for (const auto& r : runs_) n += r.second - r.first;
    return n;
  }

  /// Appends a cell; indices must arrive in nondecreasing order.
  void append(std::int64_t i) { append_run(i, i + 1); }

  void append_run(std::int64_t b, std::int64_t e) {
    if (b < 0 || e > total_ || b >= e) throw DomainError("CellSet: index out of range");
    if (!runs_.empty() && b < runs_.back().second) {
      if (b < runs_.back().first) throw DomainError("CellSet: indices must be appended in order");
      runs_.back().second = std::max(runs_.back().second, e);
      return;
    }
    if (!runs_.empty() && b == runs_.back().second)
      runs_.back().second = e;
    else
      runs_.emplace_back(b, e);
  }

  bool contains(std::int64_t i) const {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), i, [](std::int64_t v, const Run& r) { return v < r.first; });
    if (it == runs_.begin()) return false;
    --it;
    return i < it->second;
  }

  /// Smallest member >= i, or total_cells() when none.
  std::int64_t next_member(std::int64_t i) const {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), i, [](std::int64_t v, const Run& r) { return v < r.first; });
    if (it != runs_.begin() && i < std::prev(it)->second) return i;
    return it == runs_.end() ? total_ : it->first;
  }

  std::vector<std::int64_t> indices() const {
    std::vector<std::int64_t> out;
    for (const auto& r : runs_)
      for (auto i = r.first; i < r.second; ++i) out.push_back(i);
    return out;
  }

  void multi_index(std::int64_t k, std::int64_t* idx) const {
    for (int a = d_ - 1; a >= 0; --a) {
      idx[a] = k % K_;
      k /= K_;
    }
  }

  std::int64_t linear(const std::int64_t* idx) const {
    std::int64_t k = 0;
    for (int a = 0; a < d_; ++a) k = k * K_ + idx[a];
    return k;
  }

 private:
  int d_ = 0;
  std::int64_t K_ = 0;
  std::int64_t total_ = 0;
  std::vector<Run> runs_;
};

namespace detail {

// Exact greedy for unions of intervals: place [a, a+2r] at the leftmost
// uncovered point. Optimal in one dimension.
inline std::int64_t cover_line(const CellSet& cells, double r) {
  const double l = cells.side();
  const double w = 2.0 * r;
  std::int64_t count = 0;
  double covered = -kInf;
  for (const auto& run : cells.runs()) {
    const double s = static_cast<double>(run.first) * l;
    const double e = static_cast<double>(run.second) * l;
    if (e <= covered) continue;
    const double start = std::max(s, covered);
    const double len = e - start;
    std::int64_t n = static_cast<std::int64_t>(std::ceil(len / w - 1e-12));
    if (n < 1) n = 1;
    count += n;
    covered = start + static_cast<double>(n) * w;
  }
  return count;
}

// Greedy over sub-cells of side <= r/(2√d): every ball must contain whole
// sub-cells, so the result covers the union of cells.
inline std::int64_t cover_grid(const CellSet& cells, double r) {
  const int d = cells.dim();
  const std::int64_t K = cells.per_axis();
  const double l = cells.side();
  const double sqd = std::sqrt(static_cast<double>(d));
  const auto q = static_cast<std::int64_t>(std::max(1.0, std::ceil(l * 2.0 * sqd / r)));
  const std::int64_t G = K * q;  // sub-cells per axis
  const double s = l / static_cast<double>(q);
  const double reach = r - 0.5 * s * sqd;  // max center offset keeping a sub-cell inside the ball

  std::set<std::int64_t> open;
  std::vector<std::int64_t> ci(d), si(d);
  for (const auto& run : cells.runs())
    for (auto k = run.first; k < run.second; ++k) {
      cells.multi_index(k, ci.data());
      std::int64_t sub = 1;
      for (int a = 0; a < d; ++a) sub *= q;
      for (std::int64_t t = 0; t < sub; ++t) {
        std::int64_t u = t;
        std::int64_t lin = 0;
        for (int a = d - 1; a >= 0; --a) {
          si[a] = ci[a] * q + u % q;
          u /= q;
        }
        for (int a = 0; a < d; ++a) lin = lin * G + si[a];
        open.insert(lin);
      }
    }

  auto decode = [&](std::int64_t lin, std::vector<std::int64_t>& idx) {
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = lin % G;
      lin /= G;
    }
  };

  // Candidate center offsets: 0 and the normalized {-1,0,1}^d directions at
  // full and half reach.
  std::vector<std::vector<double>> shifts{std::vector<double>(d, 0.0)};
  int dirs = 1;
  for (int a = 0; a < d; ++a) dirs *= 3;
  for (int code = 0; code < dirs; ++code) {
    std::vector<double> v(d);
    int c = code;
    double n2 = 0.0;
    for (int a = 0; a < d; ++a) {
      v[a] = c % 3 - 1;
      c /= 3;
      n2 += v[a] * v[a];
    }
    if (n2 == 0.0) continue;
    for (double frac : {1.0, 0.5}) {
      std::vector<double> w(d);
      for (int a = 0; a < d; ++a) w[a] = v[a] / std::sqrt(n2) * reach * frac * (1 - 1e-12);
      shifts.push_back(w);
    }
  }

  std::vector<std::int64_t> idx(d), lo(d), hi(d), cur(d);
  std::vector<double> center(d);
  auto visit = [&](const std::vector<double>& c, bool erase) {
    std::int64_t hits = 0;
    for (int a = 0; a < d; ++a) {
      lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((c[a] - r) / s)));
      hi[a] = std::min<std::int64_t>(G - 1, static_cast<std::int64_t>(std::floor((c[a] + r) / s)));
      if (lo[a] > hi[a]) return hits;
    }
    cur = lo;
    while (true) {
      double dist2 = 0.0;
      for (int a = 0; a < d; ++a) {
        const double t = (static_cast<double>(cur[a]) + 0.5) * s - c[a];
        dist2 += t * t;
      }
      if (dist2 <= reach * reach) {
        std::int64_t lin = 0;
        for (int a = 0; a < d; ++a) lin = lin * G + cur[a];
        auto it = open.find(lin);
        if (it != open.end()) {
          ++hits;
          if (erase) open.erase(it);
        }
      }
      int a = d - 1;
      while (a >= 0 && cur[a] == hi[a]) {
        cur[a] = lo[a];
        --a;
      }
      if (a < 0) break;
      ++cur[a];
    }
    return hits;
  };

  std::int64_t count = 0;
  while (!open.empty()) {
    decode(*open.begin(), idx);
    std::vector<double> best_c;
    std::int64_t best = -1;
    for (const auto& sh : shifts) {
      for (int a = 0; a < d; ++a) center[a] = (static_cast<double>(idx[a]) + 0.5) * s + sh[a];
      const auto h = visit(center, false);
      if (h > best) {
        best = h;
        best_c = center;
      }
    }
    visit(best_c, true);
    ++count;
  }
  return count;
}

// Axis-aligned cubes of side 2r/√d inscribed in the balls, at a few lattice
// offsets; counts the cubes whose interior meets a cell.
inline std::int64_t cover_lattice(const CellSet& cells, double r) {
  const int d = cells.dim();
  const double l = cells.side();
  const double a = 2.0 * r / std::sqrt(static_cast<double>(d)) * (1 - 1e-12);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<std::int64_t> ci(d), lo(d), hi(d), cur(d);
  for (double off : {0.0, 0.25, 0.5, 0.75}) {
    const double o = -off * a;
    std::set<std::vector<std::int64_t>> hit;
    for (const auto& run : cells.runs())
      for (auto k = run.first; k < run.second; ++k) {
        cells.multi_index(k, ci.data());
        for (int t = 0; t < d; ++t) {
          const double x0 = static_cast<double>(ci[t]) * l - o, x1 = x0 + l;
          lo[t] = static_cast<std::int64_t>(std::floor(x0 / a));
          hi[t] = static_cast<std::int64_t>(std::ceil(x1 / a)) - 1;
        }
        cur = lo;
        while (true) {
          hit.insert(cur);
          int t = d - 1;
          while (t >= 0 && cur[t] == hi[t]) {
            cur[t] = lo[t];
            --t;
          }
          if (t < 0) break;
          ++cur[t];
        }
        if (static_cast<std::int64_t>(hit.size()) >= best) break;
      }
    best = std::min(best, static_cast<std::int64_t>(hit.size()));
  }
  return best;
}

}  // namespace detail

/// Upper bound on the number of radius-r balls needed to cover the union of
/// the cells (best of a greedy and a lattice cover, deterministic).
inline std::int64_t covering_number(const CellSet& cells, double radius) {
  if (!(radius > 0.0)) throw DomainError("covering_number: radius must be > 0");
  if (cells.empty()) return 0;
  if (cells.dim() == 1) return detail::cover_line(cells, radius);
  return std::min(detail::cover_grid(cells, radius), detail::cover_lattice(cells, radius));
}

/// log2 of the covering number; -∞ for the empty set.
inline double epsilon_entropy(const CellSet& cells, double radius) {
  const auto n = covering_number(cells, radius);
  if (n == 0) return -kInf;
  return std::log2(static_cast<double>(n));
}

/// min{(4ℓ)^d · 2^{H_ℓ}, 1}.
inline double lambda_epsilon(const CellSet& marked, double ell) {
  if (!(ell > 0.0)) throw DomainError("lambda_epsilon: ell must be > 0");
  const auto n = covering_number(marked, ell);
  if (n == 0) return 0.0;
  return std::min(std::pow(4.0 * ell, marked.dim()) * static_cast<double>(n), 1.0);
}

}  // namespace qtrans

#endif  // QTRANS_ENTROPY_HPP_
