// Decomposition of the unit d-cube into 2^{d-1}·d! simplices by coning the
// recursively decomposed faces to the center.

#ifndef QTRANS_CUBESIMPLEX_HPP_
#define QTRANS_CUBESIMPLEX_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qtrans/core.hpp"

namespace qtrans {

inline constexpr int kMaxCubeDim = 6;

struct Simplex {
  std::vector<Point> vertices;  // d+1 points; the last one is the cone apex
  std::vector<int> face_path;   // face index h at each recursion level, outermost first
  int leaf = 0;                 // position in the decomposition order

  int dim() const { return static_cast<int>(vertices.size()) - 1; }
};

/// Edge matrix T = [v_1 - v_{d+1}, ..., v_d - v_{d+1}] (columns).
inline Eigen::MatrixXd edge_matrix(const Simplex& s) {
  const int d = s.dim();
  Eigen::MatrixXd t(d, d);
  const Point& apex = s.vertices[d];
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) t(i, j) = s.vertices[j][i] - apex[i];
  return t;
}

inline double simplex_volume(const Simplex& s) {
  const int d = s.dim();
  if (d <= 0) return 0.0;
  return std::abs(edge_matrix(s).determinant()) / factorial(d);
}

inline double simplex_diameter(const Simplex& s) {
  double best = 0.0;
  for (std::size_t a = 0; a < s.vertices.size(); ++a)
    for (std::size_t b = a + 1; b < s.vertices.size(); ++b) {
      double q = 0.0;
      for (std::size_t i = 0; i < s.vertices[a].size(); ++i) {
        const double t = s.vertices[a][i] - s.vertices[b][i];
        q += t * t;
      }
      best = std::max(best, std::sqrt(q));
    }
  return best;
}

/// Barycentric coefficients (α_1..α_d, 1-Σα) of x.
inline std::vector<double> barycentric(const Simplex& s, const Point& x) {
  const int d = s.dim();
  Eigen::MatrixXd t = edge_matrix(s);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(t);
  if (lu.rank() < d || std::abs(t.determinant()) < 1e-14)
    throw SingularGeometryError("barycentric: degenerate simplex");
  Eigen::VectorXd rhs(d);
  for (int i = 0; i < d; ++i) rhs(i) = x[i] - s.vertices[d][i];
  Eigen::VectorXd a = lu.solve(rhs);
  std::vector<double> out(d + 1);
  double sum = 0.0;
  for (int i = 0; i < d; ++i) {
    out[i] = a(i);
    sum += a(i);
  }
  out[d] = 1.0 - sum;
  return out;
}

class Decomposition {
 public:
  explicit Decomposition(int d) : d_(d) {
    if (d < 1 || d > kMaxCubeDim)
      throw DomainError("decompose_cube: dimension must lie in [1, " + std::to_string(kMaxCubeDim) + "]");
    simplices_ = build(d);
    for (std::size_t k = 0; k < simplices_.size(); ++k) simplices_[k].leaf = static_cast<int>(k);
    const auto expected = static_cast<std::size_t>(std::ldexp(factorial(d), d - 1));
    if (simplices_.size() != expected)
      throw SingularGeometryError("decompose_cube: simplex count does not match 2^{d-1} d!");
    inverses_.reserve(simplices_.size());
    for (const auto& s : simplices_) inverses_.push_back(edge_matrix(s).inverse());
  }

  int dim() const { return d_; }
  std::size_t size() const { return simplices_.size(); }
  const std::vector<Simplex>& simplices() const { return simplices_; }
  const Simplex& operator[](std::size_t k) const { return simplices_[k]; }

  /// Barycentric coordinates with the cached inverse of simplex k.
  void barycentric_fast(std::size_t k, const double* x, double* alpha) const {
    const Simplex& s = simplices_[k];
    const auto& inv = inverses_[k];
    double sum = 0.0;
    for (int i = 0; i < d_; ++i) {
      double a = 0.0;
      for (int j = 0; j < d_; ++j) a += inv(i, j) * (x[j] - s.vertices[d_][j]);
      alpha[i] = a;
      sum += a;
    }
    alpha[d_] = 1.0 - sum;
  }

  bool contains(std::size_t k, const double* x, double tol = 1e-9) const {
    double alpha[kMaxCubeDim + 1];
    barycentric_fast(k, x, alpha);
    for (int i = 0; i <= d_; ++i)
      if (alpha[i] < -tol) return false;
    return true;
  }

  /// Index of a simplex containing x ∈ [0,1]^d, following the cone
  /// structure: the face hit by the ray from the center through x, then
  /// recursively inside that face.
  std::size_t locate(const double* x) const {
    std::size_t k = 0;
    std::size_t block = simplices_.size();
    double y[kMaxCubeDim];
    for (int i = 0; i < d_; ++i) y[i] = x[i];
    for (int dim = d_; dim >= 2; --dim) {
      int axis = 0;
      double best = -1.0;
      for (int i = 0; i < dim; ++i) {
        const double dev = std::abs(y[i] - 0.5);
        if (dev > best + 1e-15) {
          best = dev;
          axis = i;
        }
      }
      const int side = y[axis] > 0.5 ? 1 : 0;
      block /= static_cast<std::size_t>(2 * dim);
      k += static_cast<std::size_t>(2 * axis + side) * block;
      // Project along the ray from the center onto the face, then drop the axis.
      const double t = best > 0.0 ? 0.5 / best : 0.0;
      int w = 0;
      for (int i = 0; i < dim; ++i) {
        if (i == axis) continue;
        y[w++] = std::clamp(0.5 + (y[i] - 0.5) * t, 0.0, 1.0);
      }
    }
    return k;
  }

 private:
  static std::vector<Simplex> build(int d) {
    if (d == 1) {
      Simplex s;
      s.vertices = {{0.0}, {1.0}};
      return {s};
    }
    const std::vector<Simplex> sub = build(d - 1);
    std::vector<Simplex> out;
    out.reserve(sub.size() * 2 * d);
    const Point center(d, 0.5);
    for (int h = 0; h < 2 * d; ++h) {
      const int axis = h / 2;
      const double side = static_cast<double>(h % 2);
      for (const auto& f : sub) {
        Simplex s;
        s.face_path.push_back(h);
        s.face_path.insert(s.face_path.end(), f.face_path.begin(), f.face_path.end());
        for (const auto& v : f.vertices) {
          Point p;
          p.reserve(d);
          p.insert(p.end(), v.begin(), v.begin() + axis);
          p.push_back(side);
          p.insert(p.end(), v.begin() + axis, v.end());
          s.vertices.push_back(std::move(p));
        }
        s.vertices.push_back(center);
        out.push_back(std::move(s));
      }
    }
    return out;
  }

  int d_;
  std::vector<Simplex> simplices_;
  std::vector<Eigen::MatrixXd> inverses_;
};

inline Decomposition decompose_cube(int d) { return Decomposition(d); }

}  // namespace qtrans

#endif  // QTRANS_CUBESIMPLEX_HPP_
