// A continuous map on a box, known through an exact point evaluator and a
// uniform sample grid with multilinear interpolation.

#ifndef QTRANS_SAMPLED_FUNCTION_HPP_
#define QTRANS_SAMPLED_FUNCTION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qtrans/core.hpp"

namespace qtrans {

/// Writes f(x) (out_dim values) into `out`.
using Evaluator = std::function<void(std::span<const double> x, std::span<double> out)>;

class SampledFunction {
 public:
  SampledFunction() = default;

  /// Samples `eval` on n points per axis of `domain` (n >= 2).
  SampledFunction(Box domain, int n, int out_dim, Evaluator eval)
      : domain_(std::move(domain)), n_(n), m_(out_dim), eval_(std::move(eval)) {
    if (n_ < 2) throw DomainError("SampledFunction: resolution must be >= 2");
    if (m_ < 1) throw DomainError("SampledFunction: output dimension must be >= 1");
    const int d = domain_.dim();
    if (d < 1) throw DomainError("SampledFunction: empty domain");
    count_ = 1;
    for (int i = 0; i < d; ++i) count_ *= n_;
    samples_ = std::make_shared<std::vector<double>>(static_cast<std::size_t>(count_ * m_));
    Point x(d);
    for (std::int64_t k = 0; k < count_; ++k) {
      node(k, x);
      eval_(x, std::span<double>(samples_->data() + k * m_, m_));
    }
  }

  /// Scalar convenience constructor for functions R -> R.
  static SampledFunction scalar(double a, double b, int n, std::function<double(double)> f) {
    return SampledFunction(Box::interval(a, b), n, 1,
                           [f = std::move(f)](std::span<const double> x, std::span<double> out) {
                             out[0] = f(x[0]);
                           });
  }

  const Box& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  int out_dim() const { return m_; }
  int resolution() const { return n_; }
  std::int64_t node_count() const { return count_; }
  double step(int axis) const { return domain_.side(axis) / (n_ - 1); }
  const Evaluator& evaluator() const { return eval_; }

  /// Grid coordinate of node index i along `axis`.
  double coordinate(int axis, std::int64_t i) const {
    if (i == n_ - 1) return domain_.hi[axis];
    return domain_.lo[axis] + static_cast<double>(i) * step(axis);
  }

  /// Multi-index of linear node k (last axis fastest).
  void multi_index(std::int64_t k, std::span<std::int64_t> idx) const {
    for (int a = dim() - 1; a >= 0; --a) {
      idx[a] = k % n_;
      k /= n_;
    }
  }

  void node(std::int64_t k, Point& x) const {
    x.resize(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      x[a] = coordinate(a, k % n_);
      k /= n_;
    }
  }

  std::span<const double> sample(std::int64_t k) const {
    return std::span<const double>(samples_->data() + k * m_, m_);
  }
  double sample_scalar(std::int64_t k) const { return (*samples_)[k * m_]; }
  const std::vector<double>& samples() const { return *samples_; }

  /// Exact evaluation through the evaluator.
  void evaluate(std::span<const double> x, std::span<double> out) const { eval_(x, out); }
  Point evaluate(const Point& x) const {
    Point out(m_);
    eval_(x, out);
    return out;
  }
  double operator()(double x) const {
    double out[1];
    const double in[1] = {x};
    eval_(std::span<const double>(in, 1), std::span<double>(out, 1));
    return out[0];
  }

  /// Multilinear interpolation of the samples. Reproduces the stored sample
  /// exactly at grid nodes.
  Point interpolate(const Point& x) const {
    const int d = dim();
    std::vector<std::int64_t> base(d);
    std::vector<double> frac(d);
    for (int a = 0; a < d; ++a) {
      const double h = step(a);
      double t = h > 0 ? (x[a] - domain_.lo[a]) / h : 0.0;
      t = std::clamp(t, 0.0, static_cast<double>(n_ - 1));
      double r = std::round(t);
      if (std::abs(t - r) < 1e-9) {
        base[a] = static_cast<std::int64_t>(r);
        frac[a] = 0.0;
      } else {
        base[a] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(t)), n_ - 2);
        frac[a] = t - static_cast<double>(base[a]);
      }
    }
    Point out(m_, 0.0);
    const int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
      double w = 1.0;
      std::int64_t k = 0;
      bool skip = false;
      for (int a = 0; a < d; ++a) {
        const int bit = (c >> a) & 1;
        const double wa = bit ? frac[a] : 1.0 - frac[a];
        if (wa == 0.0) {
          skip = true;
          break;
        }
        w *= wa;
        k = k * n_ + base[a] + bit;
      }
      if (skip) continue;
      auto s = sample(k);
      for (int j = 0; j < m_; ++j) out[j] += w * s[j];
    }
    return out;
  }

 private:
  Box domain_;
  int n_ = 0;
  int m_ = 0;
  std::int64_t count_ = 0;
  Evaluator eval_;
  std::shared_ptr<std::vector<double>> samples_;
};

}  // namespace qtrans

#endif  // QTRANS_SAMPLED_FUNCTION_HPP_
