// W ⊂ R^m given as the graph {(a, φ(a)) : a ∈ R^p} of a C¹ map, with the
// straightening diffeomorphism (a, b) -> (a, b - φ(a)).

#ifndef QTRANS_GRAPH_MANIFOLD_HPP_
#define QTRANS_GRAPH_MANIFOLD_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtrans/core.hpp"

namespace qtrans {

inline constexpr int kMaxAmbient = 3;

class GraphManifold {
 public:
  using Phi = std::function<void(std::span<const double> a, std::span<double> out)>;

  GraphManifold() = default;

  /// General graph. `lipschitz` bounds the operator norm of Dφ.
  GraphManifold(int p, int m, Phi phi, double lipschitz, std::string name = "graph")
      : p_(p), m_(m), phi_(std::move(phi)), lip_(lipschitz), name_(std::move(name)) {
    if (p < 0 || m < 1 || p > m || m > kMaxAmbient) throw DomainError("GraphManifold: need 0 <= p <= m <= 3");
    if (!(lipschitz >= 0.0)) throw DomainError("GraphManifold: Lipschitz bound must be >= 0");
    constant_.clear();
  }

  /// W = {c} ⊂ R^m (p = 0).
  static GraphManifold point(Point c) {
    const int m = static_cast<int>(c.size());
    GraphManifold w(0, m, [c](std::span<const double>, std::span<double> out) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = c[i];
    }, 0.0, "point");
    w.constant_ = c;
    return w;
  }

  static GraphManifold zero(int m) {
    auto w = point(Point(m, 0.0));
    w.name_ = "zero";
    return w;
  }

  /// Graph of b = slope·a + intercept in R^2.
  static GraphManifold line(double slope, double intercept) {
    return GraphManifold(1, 2, [slope, intercept](std::span<const double> a, std::span<double> out) {
      out[0] = slope * a[0] + intercept;
    }, std::abs(slope), "line");
  }

  /// Graph of b = amp·sin(freq·a) in R^2.
  static GraphManifold sine(double amp, double freq) {
    return GraphManifold(1, 2, [amp, freq](std::span<const double> a, std::span<double> out) {
      out[0] = amp * std::sin(freq * a[0]);
    }, std::abs(amp * freq), "sine");
  }

  int p() const { return p_; }
  int m() const { return m_; }
  int codim() const { return m_ - p_; }
  double lipschitz() const { return lip_; }
  const std::string& name() const { return name_; }

  /// Lipschitz constant of the straightening map and of its inverse: the
  /// extreme singular values of [[I, 0], [-Dφ, I]] over ‖Dφ‖ <= L.
  double lambda2() const { return 0.5 * (lip_ + std::sqrt(lip_ * lip_ + 4.0)); }
  double lambda1() const { return 1.0 / lambda2(); }
  double gamma() const { return lambda1() / lambda2(); }

  void phi(const double* a, double* out) const {
    if (!constant_.empty()) {
      for (int i = 0; i < m_; ++i) out[i] = constant_[i];
      return;
    }
    phi_(std::span<const double>(a, p_), std::span<double>(out, m_ - p_));
  }

  /// y ∈ R^m -> (a, b - φ(a)).
  void straighten(const double* y, double* out) const {
    std::array<double, kMaxAmbient> f{};
    phi(y, f.data());
    for (int i = 0; i < p_; ++i) out[i] = y[i];
    for (int i = p_; i < m_; ++i) out[i] = y[i] - f[i - p_];
  }

  void unstraighten(const double* z, double* out) const {
    std::array<double, kMaxAmbient> f{};
    phi(z, f.data());
    for (int i = 0; i < p_; ++i) out[i] = z[i];
    for (int i = p_; i < m_; ++i) out[i] = z[i] + f[i - p_];
  }

  /// Euclidean distance from y to W. For p >= 1 the minimizing parameter lies
  /// within |b - φ(a_y)| of a_y; a grid scan over that box is refined by
  /// shrinking coordinate searches.
  double distance(const double* y) const {
    if (p_ == 0) {
      double s = 0.0;
      std::array<double, kMaxAmbient> f{};
      phi(nullptr, f.data());
      for (int i = 0; i < m_; ++i) s += (y[i] - f[i]) * (y[i] - f[i]);
      return std::sqrt(s);
    }
    std::array<double, kMaxAmbient> a{}, best{};
    for (int i = 0; i < p_; ++i) a[i] = y[i];
    double r = dist_at(y, a.data());
    if (r == 0.0) return 0.0;
    const int per = p_ == 1 ? 129 : 17;
    double best_v = r;
    best = a;
    std::array<int, kMaxAmbient> cnt{};
    while (true) {
      std::array<double, kMaxAmbient> t{};
      for (int i = 0; i < p_; ++i) t[i] = y[i] - r + 2.0 * r * cnt[i] / (per - 1);
      const double v = dist_at(y, t.data());
      if (v < best_v) {
        best_v = v;
        best = t;
      }
      int i = 0;
      while (i < p_ && ++cnt[i] == per) cnt[i++] = 0;
      if (i == p_) break;
    }
    double h = 2.0 * r / (per - 1);
    for (int it = 0; it < 200 && h > 1e-15 * (1.0 + std::abs(best[0])); ++it) {
      bool moved = false;
      for (int i = 0; i < p_; ++i)
        for (double s : {-1.0, 1.0}) {
          auto t = best;
          t[i] += s * h;
          const double v = dist_at(y, t.data());
          if (v < best_v) {
            best_v = v;
            best = t;
            moved = true;
          }
        }
      if (!moved) h *= 0.5;
    }
    return best_v;
  }

 private:
  double dist_at(const double* y, const double* a) const {
    std::array<double, kMaxAmbient> f{};
    phi(a, f.data());
    double s = 0.0;
    for (int i = 0; i < p_; ++i) s += (y[i] - a[i]) * (y[i] - a[i]);
    for (int i = p_; i < m_; ++i) s += (y[i] - f[i - p_]) * (y[i] - f[i - p_]);
    return std::sqrt(s);
  }

  int p_ = 0;
  int m_ = 1;
  Phi phi_;
  double lip_ = 0.0;
  std::string name_ = "zero";
  Point constant_{0.0};
};

}  // namespace qtrans

#endif  // QTRANS_GRAPH_MANIFOLD_HPP_
