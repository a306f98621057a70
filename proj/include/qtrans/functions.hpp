// Named test functions and manifolds, addressed by short spec strings.
//
//   g (scalar on [0,1]):  linear:a,b | sin:freq[,amp,phase] | sqrt | sharp:depth
//                         | poly:c0,c1,... | lipschitz:seed
//   g (field on [0,1]²):  field:vortex | field:saddle | field:pair | field:trig
//   W:                    zero | point:c1[,c2] | line:slope,intercept | sine:amp,freq

#ifndef QTRANS_FUNCTIONS_HPP_
#define QTRANS_FUNCTIONS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qtrans/core.hpp"
#include "qtrans/graph_manifold.hpp"
#include "qtrans/sampled_function.hpp"
#include "qtrans/sharpness.hpp"

namespace qtrans {

namespace detail {

inline std::pair<std::string, std::vector<double>> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  std::pair<std::string, std::vector<double>> out{spec.substr(0, colon), {}};
  if (colon == std::string::npos) return out;
  std::stringstream ss(spec.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.second.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw DomainError("spec '" + spec + "': bad number '" + item + "'");
    }
  }
  return out;
}

inline void need_args(const std::string& spec, const std::vector<double>& a, std::size_t lo, std::size_t hi) {
  if (a.size() < lo || a.size() > hi) throw DomainError("spec '" + spec + "': wrong number of parameters");
}

}  // namespace detail

/// Seeded Lipschitz test function on [0,1]: a short random Fourier sum plus
/// an offset, with Lipschitz constant at most 4.
inline std::function<double(double)> lipschitz_test_function(std::uint64_t seed) {
  SplitMix rng(seed);
  const int terms = 3;
  std::vector<double> amp(terms), freq(terms), phase(terms);
  double lip = 0.0;
  for (int i = 0; i < terms; ++i) {
    freq[i] = 1.0 + std::floor(rng.uniform() * 6.0);
    amp[i] = (rng.uniform() - 0.5) * 0.4;
    phase[i] = rng.uniform() * 2.0 * std::numbers::pi;
    lip += std::abs(amp[i]) * 2.0 * std::numbers::pi * freq[i];
  }
  const double scale = lip > 4.0 ? 4.0 / lip : 1.0;
  const double offset = (rng.uniform() - 0.5) * 0.2;
  return [=](double x) {
    double s = offset;
    for (int i = 0; i < terms; ++i) s += scale * amp[i] * std::sin(2.0 * std::numbers::pi * freq[i] * x + phase[i]);
    return s;
  };
}

inline std::function<double(double)> scalar_function(const std::string& spec) {
  auto [name, a] = detail::split_spec(spec);
  if (name == "linear") {
    detail::need_args(spec, a, 2, 2);
    return [s = a[0], c = a[1]](double x) { return s * x + c; };
  }
  if (name == "sin") {
    detail::need_args(spec, a, 1, 3);
    const double f = a[0], amp = a.size() > 1 ? a[1] : 1.0, ph = a.size() > 2 ? a[2] : 0.0;
    return [=](double x) { return amp * std::sin(2.0 * std::numbers::pi * f * x + ph); };
  }
  if (name == "sqrt") {
    detail::need_args(spec, a, 0, 0);
    return [](double x) { return std::sqrt(std::max(x, 0.0)); };
  }
  if (name == "sharp") {
    detail::need_args(spec, a, 1, 1);
    const SharpExample g(static_cast<int>(a[0]));
    return [g](double x) { return g(std::clamp(x, 0.0, 1.0)); };
  }
  if (name == "poly") {
    detail::need_args(spec, a, 1, 16);
    return [c = a](double x) {
      double s = 0.0;
      for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
      return s;
    };
  }
  if (name == "lipschitz") {
    detail::need_args(spec, a, 1, 1);
    return lipschitz_test_function(static_cast<std::uint64_t>(a[0]));
  }
  throw DomainError("unknown function spec '" + spec + "'");
}

/// Planar fields with isolated nondegenerate zeros.
inline Evaluator field_function(const std::string& spec) {
  if (spec.rfind("field:", 0) != 0) throw DomainError("unknown field spec '" + spec + "'");
  const std::string kind = spec.substr(6);
  const double pi = std::numbers::pi;
  if (kind == "vortex")
    return [](std::span<const double> x, std::span<double> o) {
      o[0] = -(x[1] - 0.45);
      o[1] = x[0] - 0.55;
    };
  if (kind == "saddle")
    return [](std::span<const double> x, std::span<double> o) {
      o[0] = x[0] - 0.4;
      o[1] = -(x[1] - 0.6) + 0.3 * (x[0] - 0.4) * (x[0] - 0.4);
    };
  if (kind == "pair")
    return [](std::span<const double> x, std::span<double> o) {
      o[0] = (x[0] - 0.3) * (x[0] - 0.7);
      o[1] = x[1] - 0.5 + 0.1 * x[0];
    };
  if (kind == "trig")
    return [pi](std::span<const double> x, std::span<double> o) {
      o[0] = std::sin(2.0 * pi * x[0] + 0.3);
      o[1] = std::cos(2.0 * pi * x[1] + 0.2) * 0.5 + 0.1 * x[0];
    };
  throw DomainError("unknown field spec '" + spec + "'");
}

/// Samples g on [0,1]^d at n points per axis.
inline SampledFunction make_function(const std::string& spec, int n) {
  if (spec.rfind("field:", 0) == 0) return SampledFunction(Box::unit(2), n, 2, field_function(spec));
  return SampledFunction::scalar(0.0, 1.0, n, scalar_function(spec));
}

inline GraphManifold make_manifold(const std::string& spec, int ambient) {
  auto [name, a] = detail::split_spec(spec);
  if (name == "zero") {
    detail::need_args(spec, a, 0, 0);
    return GraphManifold::zero(ambient);
  }
  if (name == "point") {
    if (static_cast<int>(a.size()) != ambient) throw DomainError("spec '" + spec + "': point needs one coordinate per axis");
    return GraphManifold::point(Point(a.begin(), a.end()));
  }
  if (name == "line") {
    detail::need_args(spec, a, 2, 2);
    return GraphManifold::line(a[0], a[1]);
  }
  if (name == "sine") {
    detail::need_args(spec, a, 2, 2);
    return GraphManifold::sine(a[0], a[1]);
  }
  throw DomainError("unknown manifold spec '" + spec + "'");
}

}  // namespace qtrans

#endif  // QTRANS_FUNCTIONS_HPP_
