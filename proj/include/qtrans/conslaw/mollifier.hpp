// Piecewise-constant BV data and their exact mollification by
// ρ_δ(x) = 315/(256δ)·(1 - x²/δ²)⁴ on [-δ, δ].

#ifndef QTRANS_CONSLAW_MOLLIFIER_HPP_
#define QTRANS_CONSLAW_MOLLIFIER_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qtrans/core.hpp"

namespace qtrans {

namespace mollifier {

inline constexpr double kC = 315.0 / 256.0;

/// Derivatives of the unit kernel ρ(t) = c(1-t²)⁴ on [-1,1]; k = 0..3.
inline double rho(int k, double t) {
  if (t <= -1.0 || t >= 1.0) return 0.0;
  const double w = 1.0 - t * t;
  switch (k) {
    case 0: return kC * w * w * w * w;
    case 1: return -8.0 * kC * t * w * w * w;
    case 2: return -8.0 * kC * w * w * (1.0 - 7.0 * t * t);
    case 3: return 48.0 * kC * t * w * (3.0 - 7.0 * t * t);
    default: throw DomainError("mollifier: derivative order must lie in [0,3]");
  }
}

/// ∫_{-1}^{t} ρ.
inline double cdf(double t) {
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double t2 = t * t;
  return 0.5 + kC * t * (1.0 + t2 * (-4.0 / 3.0 + t2 * (6.0 / 5.0 + t2 * (-4.0 / 7.0 + t2 / 9.0))));
}

/// ρ_δ^{(k)}(x).
inline double rho_delta(int k, double x, double delta) {
  return rho(k, x / delta) * std::pow(delta, -1 - k);
}

/// Sup-norm bounds on u_δ', u_δ'', u_δ''' for total variation V.
inline std::array<double, 3> derivative_bounds(double V, double delta) {
  return {315.0 * V / (256.0 * delta), 1215.0 * V / (98.0 * std::sqrt(7.0) * delta * delta),
          5085.0 * V / (224.0 * delta * delta * delta)};
}

}  // namespace mollifier

/// Gauss–Legendre nodes and weights on [-1, 1], 8 points.
inline constexpr std::array<double, 8> kGaussX{-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                               0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGaussW{0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                               0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                               0.2223810344533745, 0.1012285362903763};

/// Composite 8-point Gauss–Legendre over [a, b] split at the given points.
inline double integrate(const std::function<double(double)>& f, double a, double b, std::vector<double> cuts,
                        int panels = 16) {
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  KahanSum sum;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = std::max(a, cuts[i]), hi = std::min(b, cuts[i + 1]);
    if (!(hi > lo)) continue;
    const double h = (hi - lo) / panels;
    for (int p = 0; p < panels; ++p) {
      const double c = lo + (p + 0.5) * h;
      for (int q = 0; q < 8; ++q) sum.add(0.5 * h * kGaussW[q] * f(c + 0.5 * h * kGaussX[q]));
    }
  }
  return sum.value();
}

struct Segment {
  double left, right, value;
};

/// Piecewise-constant function; segments may be unbounded (for Riemann data).
class PiecewiseConstant {
 public:
  PiecewiseConstant() = default;
  explicit PiecewiseConstant(std::vector<Segment> segs) : segs_(std::move(segs)) {
    std::sort(segs_.begin(), segs_.end(), [](const Segment& a, const Segment& b) { return a.left < b.left; });
    for (std::size_t i = 0; i < segs_.size(); ++i) {
      if (!(segs_[i].right > segs_[i].left)) throw DomainError("datum: segment with right <= left");
      if (i > 0 && segs_[i].left < segs_[i - 1].right) throw DomainError("datum: overlapping segments");
    }
  }

  const std::vector<Segment>& segments() const { return segs_; }

  /// Right-continuous value.
  double operator()(double x) const {
    for (const auto& s : segs_)
      if (x >= s.left && x < s.right) return s.value;
    return 0.0;
  }

  /// ∫_0^y of the function (exact).
  double antiderivative(double y) const {
    double acc = 0.0;
    for (const auto& s : segs_) {
      const double a = std::max(std::min(0.0, y), s.left), b = std::min(std::max(0.0, y), s.right);
      if (b > a) acc += s.value * (b - a);
    }
    return y >= 0.0 ? acc : -acc;
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (const auto& s : segs_) {
      if (std::isfinite(s.left)) out.push_back(s.left);
      if (std::isfinite(s.right)) out.push_back(s.right);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  double total_variation() const {
    double tv = 0.0, prev = 0.0, prev_right = -kInf;
    for (const auto& s : segs_) {
      if (s.left > prev_right) {
        tv += std::abs(prev);  // gap back to 0
        prev = 0.0;
      }
      tv += std::abs(s.value - prev);
      prev = s.value;
      prev_right = s.right;
    }
    return tv + std::abs(prev);
  }

  double sup_norm() const {
    double m = 0.0;
    for (const auto& s : segs_) m = std::max(m, std::abs(s.value));
    return m;
  }

  double value_min() const {
    double m = 0.0;
    for (const auto& s : segs_) m = std::min(m, s.value);
    return m;
  }
  double value_max() const {
    double m = 0.0;
    for (const auto& s : segs_) m = std::max(m, s.value);
    return m;
  }

 private:
  std::vector<Segment> segs_;
};

/// Compactly supported piecewise-constant datum with Supp ⊆ [-R, R] and
/// total variation <= V.
struct BVDatum {
  PiecewiseConstant u;
  double R = 1.0;
  double V = 0.0;

  BVDatum() = default;
  BVDatum(std::vector<Segment> segs, double R_, double V_) : u(std::move(segs)), R(R_), V(V_) { validate(); }

  void validate() const {
    if (!(R > 0.0)) throw DomainError("datum: R must be > 0");
    for (const auto& s : u.segments())
      if (s.value != 0.0 && (s.left < -R - 1e-12 || s.right > R + 1e-12))
        throw DomainError("datum: support exceeds [-R, R]");
    if (u.total_variation() > V * (1 + 1e-12)) throw DomainError("datum: total variation exceeds V");
  }

  /// χ_{[-1,0]} - χ_{[0,1]} with R = 1, V = 4.
  static BVDatum double_step() { return BVDatum({{-1.0, 0.0, 1.0}, {0.0, 1.0, -1.0}}, 1.0, 4.0); }

  /// Text format: `x_left x_right value` per line, header lines `R=..`, `V=..`,
  /// '#' comments. V defaults to the total variation when absent.
  static BVDatum parse(std::istream& in) {
    std::vector<Segment> segs;
    double R = -1.0, V = -1.0;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(0, eq);
        key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
        const double val = std::stod(line.substr(eq + 1));
        if (key == "R")
          R = val;
        else if (key == "V")
          V = val;
        else
          throw DomainError("datum: unknown header '" + key + "' on line " + std::to_string(lineno));
        continue;
      }
      std::istringstream ss(line);
      Segment s{};
      if (!(ss >> s.left >> s.right >> s.value))
        throw DomainError("datum: malformed line " + std::to_string(lineno));
      segs.push_back(s);
    }
    PiecewiseConstant pc(segs);
    if (R < 0.0) {
      R = 0.0;
      for (const auto& s : segs) R = std::max({R, std::abs(s.left), std::abs(s.right)});
      if (R == 0.0) R = 1.0;
    }
    if (V < 0.0) V = pc.total_variation();
    return BVDatum(segs, R, V);
  }

  static BVDatum load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("datum: cannot open '" + path + "'");
    return parse(in);
  }
};

/// u_δ = ū * ρ_δ and its first three derivatives, evaluated exactly.
class SmoothDatum {
 public:
  SmoothDatum() = default;
  SmoothDatum(BVDatum datum, double delta) : datum_(std::move(datum)), delta_(delta) {
    if (!(delta > 0.0)) throw DomainError("mollify: delta must be > 0");
  }

  const BVDatum& datum() const { return datum_; }
  double delta() const { return delta_; }
  double support_lo() const { return -datum_.R - delta_; }
  double support_hi() const { return datum_.R + delta_; }

  /// k-th derivative of u_δ at x, k = 0..3.
  double operator()(double x, int k = 0) const {
    double acc = 0.0;
    for (const auto& s : datum_.u.segments()) {
      if (s.value == 0.0) continue;
      const double ta = (x - s.left) / delta_, tb = (x - s.right) / delta_;
      if (k == 0)
        acc += s.value * (mollifier::cdf(ta) - mollifier::cdf(tb));
      else
        acc += s.value * (mollifier::rho(k - 1, ta) - mollifier::rho(k - 1, tb));
    }
    return k == 0 ? acc : acc * std::pow(delta_, -k);
  }

  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (double b : datum_.u.breakpoints()) {
      out.push_back(b - delta_);
      out.push_back(b);
      out.push_back(b + delta_);
    }
    return out;
  }

  /// ‖u_δ - ū‖_{L¹} by piecewise Gauss–Legendre.
  double l1_error() const {
    auto cuts = breakpoints();
    for (double b : datum_.u.breakpoints()) cuts.push_back(b);
    return integrate([this](double x) { return std::abs((*this)(x) - datum_.u(x)); }, support_lo(), support_hi(),
                     cuts, 32);
  }

  /// Sampled sup norms of u_δ', u_δ'', u_δ''' on n points of the support.
  std::array<double, 3> sampled_derivative_norms(int n = 200001) const {
    std::array<double, 3> out{0.0, 0.0, 0.0};
    const double a = support_lo(), b = support_hi();
    for (int i = 0; i < n; ++i) {
      const double x = a + (b - a) * i / (n - 1);
      for (int k = 1; k <= 3; ++k) out[k - 1] = std::max(out[k - 1], std::abs((*this)(x, k)));
    }
    // Kernel extremes sit at fixed offsets from each breakpoint.
    for (double bp : datum_.u.breakpoints())
      for (double t : {0.0, 1.0 / 3.0, -1.0 / 3.0, 1.0 / std::sqrt(7.0), -1.0 / std::sqrt(7.0), 0.2, -0.2})
        for (int k = 1; k <= 3; ++k) out[k - 1] = std::max(out[k - 1], std::abs((*this)(bp + t * delta_, k)));
    return out;
  }

 private:
  BVDatum datum_;
  double delta_ = 1.0;
};

inline SmoothDatum mollify(const BVDatum& u, double delta) { return SmoothDatum(u, delta); }

}  // namespace qtrans

#endif  // QTRANS_CONSLAW_MOLLIFIER_HPP_
