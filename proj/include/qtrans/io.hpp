// CSV tables and standalone SVG plots.

#ifndef QTRANS_IO_HPP_
#define QTRANS_IO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qtrans/core.hpp"

namespace qtrans {

/// Shortest round-trip decimal form.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// Comma-separated, header row, LF endings.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }

  void row(const std::vector<double>& v) {
    if (v.size() != cols_) throw DomainError("csv: row width does not match header");
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << format_double(v[i]);
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  std::size_t cols_;
};

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool scatter = false;
};

struct PlotOptions {
  std::string title;
  std::string xlabel = "x", ylabel = "y";
  int width = 640, height = 420;
};

namespace detail {
inline std::string svg_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else if (c == '"') o += "&quot;";
    else o += c;
  }
  return o;
}
inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

/// Line plot (or scatter) of the series with a legend. Deterministic output.
inline std::string emit_plot(const std::vector<PlotSeries>& series, const PlotOptions& opt = {}) {
  if (series.empty()) throw DomainError("emit_plot: no series");
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw DomainError("emit_plot: x and y lengths differ");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 >= x0)) throw DomainError("emit_plot: no finite points");
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  const double L = 60, R = 20, T = 30, B = 45;
  const double W = opt.width - L - R, H = opt.height - T - B;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * W; };
  auto py = [&](double y) { return T + (1.0 - (y - y0) / (y1 - y0)) * H; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W << "\" height=\"" << H
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    o << "<text x=\"" << detail::fixed(px(xv)) << "\" y=\"" << detail::fixed(T + H + 15)
      << "\" text-anchor=\"middle\">" << format_double(std::round(xv * 1e4) / 1e4) << "</text>\n";
    o << "<text x=\"" << detail::fixed(L - 5) << "\" y=\"" << detail::fixed(py(yv) + 4)
      << "\" text-anchor=\"end\">" << format_double(std::round(yv * 1e4) / 1e4) << "</text>\n";
  }
  o << "<text x=\"" << detail::fixed(L + W / 2) << "\" y=\"" << opt.height - 8 << "\" text-anchor=\"middle\">"
    << detail::svg_escape(opt.xlabel) << "</text>\n";
  o << "<text x=\"14\" y=\"" << detail::fixed(T + H / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << detail::fixed(T + H / 2) << ")\">" << detail::svg_escape(opt.ylabel) << "</text>\n";
  if (!opt.title.empty())
    o << "<text x=\"" << detail::fixed(L + W / 2) << "\" y=\"18\" text-anchor=\"middle\">"
      << detail::svg_escape(opt.title) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kColors[k % 7];
    if (s.scatter) {
      o << "<g fill=\"" << color << "\">\n";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          o << "<circle cx=\"" << detail::fixed(px(s.x[i])) << "\" cy=\"" << detail::fixed(py(s.y[i]))
            << "\" r=\"2\"/>\n";
      o << "</g>\n";
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        o << (first ? "" : " ") << detail::fixed(px(s.x[i])) << "," << detail::fixed(py(s.y[i]));
        first = false;
      }
      o << "\"/>\n";
    }
    if (!s.label.empty()) {
      const double ly = T + 14 + 14.0 * k;
      o << "<rect x=\"" << detail::fixed(L + W - 110) << "\" y=\"" << detail::fixed(ly - 8)
        << "\" width=\"10\" height=\"10\" fill=\"" << color << "\"/>\n";
      o << "<text x=\"" << detail::fixed(L + W - 95) << "\" y=\"" << detail::fixed(ly + 1) << "\">"
        << detail::svg_escape(s.label) << "</text>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace qtrans

#endif  // QTRANS_IO_HPP_
