// Minimal modulus of continuity, its generalized inverse and the Hölder
// lower bound, estimated from the sample grid of a SampledFunction.

#ifndef QTRANS_MODULI_HPP_
#define QTRANS_MODULI_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "qtrans/core.hpp"
#include "qtrans/sampled_function.hpp"

namespace qtrans {

struct ModulusProfile {
  std::vector<double> deltas;
  std::vector<double> omegas;
  double max_oscillation = 0.0;
};

/// Lower estimate of ω_f built from grid pairs.
///
/// d = 1, m = 1: ω at grid multiples k·h is the exact sliding-window
/// oscillation of the samples; between multiples it is linearly interpolated.
/// Otherwise: axis and diagonal offsets of the index grid plus a fixed set of
/// seeded random pairs evaluated exactly; ω is the running max over pair
/// lengths, extended linearly below the finest grid offset.
///
/// Caches are filled lazily, so an instance is not safe for concurrent use.
class ModulusEstimator {
 public:
  explicit ModulusEstimator(const SampledFunction& f, std::uint64_t seed = 0x5eedULL,
                            int random_pairs = 4096)
      : f_(&f), diam_(f.domain().diameter()) {
    scalar_line_ = f.dim() == 1 && f.out_dim() == 1;
    if (scalar_line_) {
      const auto& s = f.samples();
      auto [mn, mx] = std::minmax_element(s.begin(), s.end());
      max_osc_ = *mx - *mn;
      window_.assign(f.resolution(), -1.0);
      window_[0] = 0.0;
    } else {
      build_offsets();
      build_random_pairs(seed, random_pairs);
      max_osc_ = step_omega(diam_ * (1 + 1e-12));
    }
  }

  double diameter() const { return diam_; }
  double max_oscillation() const { return max_osc_; }

  /// ω_f(delta); delta must lie in [0, diam].
  double omega(double delta) const {
    if (!(delta >= 0.0)) throw DomainError("estimate_modulus: delta must be >= 0");
    if (delta > diam_ * (1 + 1e-12)) throw DomainError("estimate_modulus: delta exceeds the domain diameter");
    if (delta == 0.0) return 0.0;
    if (scalar_line_) return line_omega(delta);
    double w = step_omega(delta);
    if (finest_ > 0.0 && delta < finest_) w = std::max(w, delta / finest_ * finest_omega_);
    return w;
  }

  /// Ψ_f(s) = sup{δ : ω_f(δ) <= s}; +∞ when s >= M_f.
  double psi(double s) const {
    if (!(s >= 0.0)) throw DomainError("inverse_modulus: s must be >= 0");
    if (s >= max_osc_) return kInf;
    double lo = 0.0, hi = diam_;
    for (int it = 0; it < 400 && hi - lo > 1e-9 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (omega(mid) <= s)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  }

  /// δ = 0 followed by 64 dyadic levels diam·2^{-j}, increasing.
  ModulusProfile profile() const {
    ModulusProfile p;
    p.max_oscillation = max_osc_;
    p.deltas.push_back(0.0);
    p.omegas.push_back(0.0);
    for (int j = 63; j >= 0; --j) {
      const double d = std::ldexp(diam_, -j);
      p.deltas.push_back(d);
      p.omegas.push_back(omega(std::min(d, diam_)));
    }
    return p;
  }

 private:
  struct Offset {
    std::vector<int> dir;
    int j;
    double length;
  };

  struct Pair {
    double length;
    double value;
  };

  // Max over windows of k+1 consecutive samples of (max - min).
  double window_osc(std::int64_t k) const {
    const auto& s = f_->samples();
    const std::int64_t n = static_cast<std::int64_t>(s.size());
    if (k >= n - 1) return max_osc_;
    if (window_[k] >= 0.0) return window_[k];
    std::deque<std::int64_t> qmax, qmin;
    double best = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      while (!qmax.empty() && s[qmax.back()] <= s[i]) qmax.pop_back();
      while (!qmin.empty() && s[qmin.back()] >= s[i]) qmin.pop_back();
      qmax.push_back(i);
      qmin.push_back(i);
      if (qmax.front() < i - k) qmax.pop_front();
      if (qmin.front() < i - k) qmin.pop_front();
      if (i >= k) best = std::max(best, s[qmax.front()] - s[qmin.front()]);
    }
    window_[k] = best;
    return best;
  }

  double line_omega(double delta) const {
    const double h = f_->step(0);
    if (h <= 0.0) return 0.0;
    const double t = delta / h;
    const double r = std::round(t);
    if (std::abs(t - r) < 1e-9 * std::max(1.0, r)) return window_osc(static_cast<std::int64_t>(r));
    const auto k = static_cast<std::int64_t>(std::floor(t));
    const double a = window_osc(k), b = window_osc(k + 1);
    return a + (t - static_cast<double>(k)) * (b - a);
  }

  void build_offsets() {
    const int d = f_->dim();
    const int n = f_->resolution();
    int dirs = 1;
    for (int i = 0; i < d; ++i) dirs *= 3;
    for (int code = 0; code < dirs; ++code) {
      std::vector<int> o(d);
      int c = code, first = 0;
      for (int a = 0; a < d; ++a) {
        o[a] = c % 3 - 1;
        c /= 3;
      }
      for (int a = 0; a < d; ++a)
        if (o[a] != 0) {
          first = o[a];
          break;
        }
      if (first <= 0) continue;  // zero vector, or the negative of another direction
      double unit = 0.0;
      for (int a = 0; a < d; ++a) unit += o[a] * o[a] * f_->step(a) * f_->step(a);
      unit = std::sqrt(unit);
      for (int j = 1; j < n; ++j) offsets_.push_back({o, j, unit * j});
    }
    std::stable_sort(offsets_.begin(), offsets_.end(),
                     [](const Offset& a, const Offset& b) { return a.length < b.length; });
    finest_ = offsets_.empty() ? 0.0 : offsets_.front().length;
  }

  double offset_value(const Offset& off) const {
    const int d = f_->dim(), m = f_->out_dim();
    const std::int64_t n = f_->resolution();
    std::vector<std::int64_t> idx(d), lo(d), hi(d);
    std::int64_t shift = 0;
    for (int a = 0; a < d; ++a) {
      const std::int64_t s = static_cast<std::int64_t>(off.dir[a]) * off.j;
      lo[a] = std::max<std::int64_t>(0, -s);
      hi[a] = std::min<std::int64_t>(n, n - s);
      if (lo[a] >= hi[a]) return 0.0;
      shift = shift * n + s;
    }
    double best = 0.0;
    const std::int64_t total = f_->node_count();
    for (std::int64_t k = 0; k < total; ++k) {
      f_->multi_index(k, idx);
      bool ok = true;
      for (int a = 0; a < d && ok; ++a) ok = idx[a] >= lo[a] && idx[a] < hi[a];
      if (!ok) continue;
      auto x = f_->sample(k), y = f_->sample(k + shift);
      double s2 = 0.0;
      for (int j = 0; j < m; ++j) s2 += (x[j] - y[j]) * (x[j] - y[j]);
      best = std::max(best, s2);
    }
    return std::sqrt(best);
  }

  void build_random_pairs(std::uint64_t seed, int count) {
    const int d = f_->dim(), m = f_->out_dim();
    const Box& box = f_->domain();
    SplitMix rng(seed);
    Point x(d), y(d), fx(m), fy(m);
    const int strata = 16;
    for (int i = 0; i < count; ++i) {
      const double scale = diam_ * std::ldexp(1.0, -(i % strata));
      for (int a = 0; a < d; ++a) x[a] = rng.uniform(box.lo[a], box.hi[a]);
      double len2 = 0.0;
      for (int a = 0; a < d; ++a) {
        y[a] = std::clamp(x[a] + rng.uniform(-scale, scale) / std::sqrt(static_cast<double>(d)),
                          box.lo[a], box.hi[a]);
        len2 += (y[a] - x[a]) * (y[a] - x[a]);
      }
      f_->evaluate(x, fx);
      f_->evaluate(y, fy);
      double v2 = 0.0;
      for (int j = 0; j < m; ++j) v2 += (fx[j] - fy[j]) * (fx[j] - fy[j]);
      random_.push_back({std::sqrt(len2), std::sqrt(v2)});
    }
    std::sort(random_.begin(), random_.end(), [](const Pair& a, const Pair& b) { return a.length < b.length; });
    for (std::size_t i = 1; i < random_.size(); ++i) random_[i].value = std::max(random_[i].value, random_[i - 1].value);
  }

  double step_omega(double delta) const {
    while (computed_ < offsets_.size() && offsets_[computed_].length <= delta) {
      const double v = offset_value(offsets_[computed_]);
      running_ = std::max(running_, v);
      prefix_.push_back(running_);
      if (computed_ == 0) finest_omega_ = v;
      ++computed_;
    }
    auto it = std::upper_bound(offsets_.begin(), offsets_.begin() + static_cast<std::ptrdiff_t>(computed_), delta,
                               [](double v, const Offset& o) { return v < o.length; });
    const auto cnt = static_cast<std::size_t>(it - offsets_.begin());
    double w = cnt == 0 ? 0.0 : prefix_[cnt - 1];
    auto rt = std::upper_bound(random_.begin(), random_.end(), delta,
                               [](double v, const Pair& p) { return v < p.length; });
    if (rt != random_.begin()) w = std::max(w, std::prev(rt)->value);
    return w;
  }

  const SampledFunction* f_;
  double diam_;
  bool scalar_line_ = false;
  double max_osc_ = 0.0;
  mutable std::vector<double> window_;

  std::vector<Offset> offsets_;
  std::vector<Pair> random_;
  double finest_ = 0.0;
  mutable double finest_omega_ = 0.0;
  mutable std::size_t computed_ = 0;
  mutable double running_ = 0.0;
  mutable std::vector<double> prefix_;
};

inline double estimate_modulus(const SampledFunction& f, double delta) {
  return ModulusEstimator(f).omega(delta);
}

inline double inverse_modulus(const SampledFunction& f, double s) {
  return ModulusEstimator(f).psi(s);
}

inline ModulusProfile modulus_profile(const SampledFunction& f) {
  return ModulusEstimator(f).profile();
}

/// (s / holder_norm)^{1/alpha}; a lower bound for Ψ_f(s) whenever f is
/// α-Hölder with that norm.
inline double holder_psi_lower_bound(double holder_norm, double alpha, double s) {
  if (!(holder_norm > 0.0)) throw DomainError("holder_psi_lower_bound: norm must be > 0");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("holder_psi_lower_bound: alpha must lie in (0,1]");
  if (!(s > 0.0)) throw DomainError("holder_psi_lower_bound: s must be > 0");
  return std::pow(s / holder_norm, 1.0 / alpha);
}

}  // namespace qtrans

#endif  // QTRANS_MODULI_HPP_
