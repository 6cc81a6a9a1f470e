#include "lidartraj/plot.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lidartraj/errors.h"
#include "lidartraj/io.h"

namespace lidartraj {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 150.0, kTop = 40.0, kBottom = 50.0;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string Fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void Add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void Finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  }
};

std::string Header(double w, double h, const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << Fmt(w) << "\" height=\"" << Fmt(h)
    << "\" viewBox=\"0 0 " << Fmt(w) << ' ' << Fmt(h) << "\" font-family=\"sans-serif\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << Fmt(w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << Escape(title) << "</text>\n";
  return s.str();
}

}  // namespace

std::string SvgLineChart(std::span<const Series> series, const std::string& title,
                         const std::string& x_label, const std::string& y_label) {
  Range xr, yr;
  for (const Series& s : series) {
    if (s.x.size() != s.y.size()) throw ArgumentError("series '" + s.name + "' has x/y mismatch");
    for (double v : s.x) xr.Add(v);
    for (double v : s.y) yr.Add(v);
  }
  xr.Finish();
  yr.Finish();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto X = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double v) { return kTop + ph - (v - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream s;
  s << Header(kWidth, kHeight, title);
  s << "<rect x=\"" << Fmt(kLeft) << "\" y=\"" << Fmt(kTop) << "\" width=\"" << Fmt(pw)
    << "\" height=\"" << Fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4, yv = yr.lo + (yr.hi - yr.lo) * i / 4;
    s << "<text x=\"" << Fmt(X(xv)) << "\" y=\"" << Fmt(kTop + ph + 16)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << Tick(xv) << "</text>\n";
    s << "<text x=\"" << Fmt(kLeft - 6) << "\" y=\"" << Fmt(Y(yv) + 4)
      << "\" text-anchor=\"end\" font-size=\"11\">" << Tick(yv) << "</text>\n";
  }
  s << "<text x=\"" << Fmt(kLeft + pw / 2) << "\" y=\"" << Fmt(kHeight - 10)
    << "\" text-anchor=\"middle\" font-size=\"12\">" << Escape(x_label) << "</text>\n";
  s << "<text x=\"16\" y=\"" << Fmt(kTop + ph / 2) << "\" text-anchor=\"middle\" font-size=\"12\""
    << " transform=\"rotate(-90 16 " << Fmt(kTop + ph / 2) << ")\">" << Escape(y_label)
    << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& ser = series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < ser.x.size(); ++k) {
      if (!std::isfinite(ser.x[k]) || !std::isfinite(ser.y[k])) continue;
      s << (k ? " " : "") << Fmt(X(ser.x[k])) << ',' << Fmt(Y(ser.y[k]));
    }
    s << "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    s << "<line x1=\"" << Fmt(kWidth - kRight + 10) << "\" y1=\"" << Fmt(ly) << "\" x2=\""
      << Fmt(kWidth - kRight + 30) << "\" y2=\"" << Fmt(ly) << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << Fmt(kWidth - kRight + 34) << "\" y=\"" << Fmt(ly + 4)
      << "\" font-size=\"11\">" << Escape(ser.name) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string SvgBevScatter(std::span<const ScatterLayer> layers, std::span<const Box3D> labels,
                          std::span<const Detection> detections, const std::string& title) {
  Range r;
  for (const ScatterLayer& l : layers) {
    for (const Vec3& p : l.points) {
      r.Add(p.x());
      r.Add(p.y());
    }
  }
  for (const Box3D& b : labels) {
    for (const auto& c : b.BevCorners()) r.Add(c.x()), r.Add(c.y());
  }
  r.Finish();
  const double size = 600.0, margin = 30.0, top = 40.0;
  const double span = r.hi - r.lo;
  // x to the right, y up.
  auto X = [&](double v) { return margin + (v - r.lo) / span * size; };
  auto Y = [&](double v) { return top + size - (v - r.lo) / span * size; };

  std::ostringstream s;
  s << Header(size + 2 * margin + 120, size + top + margin, title);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const ScatterLayer& l = layers[i];
    const std::string color = l.color.empty() ? kPalette[i % std::size(kPalette)] : l.color;
    s << "<g fill=\"" << color << "\" fill-opacity=\"0.6\">\n";
    for (const Vec3& p : l.points) {
      s << "<circle cx=\"" << Fmt(X(p.x())) << "\" cy=\"" << Fmt(Y(p.y())) << "\" r=\"0.8\"/>\n";
    }
    s << "</g>\n";
    const double ly = top + 14 + 18 * static_cast<double>(i);
    s << "<circle cx=\"" << Fmt(size + 2 * margin + 10) << "\" cy=\"" << Fmt(ly) << "\" r=\"4\" fill=\""
      << color << "\"/>\n<text x=\"" << Fmt(size + 2 * margin + 18) << "\" y=\"" << Fmt(ly + 4)
      << "\" font-size=\"11\">" << Escape(l.name) << "</text>\n";
  }
  auto outline = [&](const Box3D& b, const char* color) {
    s << "<polygon fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (const auto& c : b.BevCorners()) {
      s << (first ? "" : " ") << Fmt(X(c.x())) << ',' << Fmt(Y(c.y()));
      first = false;
    }
    s << "\"/>\n";
  };
  for (const Box3D& b : labels) outline(b, "#2ca02c");
  for (const Detection& d : detections) outline(d.box, "#d62728");
  s << "</svg>\n";
  return s.str();
}

std::string SeriesCsv(std::span<const Series> series) {
  std::ostringstream s;
  s << "series,x,y\n";
  for (const Series& ser : series) {
    for (std::size_t k = 0; k < ser.x.size() && k < ser.y.size(); ++k) {
      s << ser.name << ',' << FormatDouble(ser.x[k]) << ',' << FormatDouble(ser.y[k]) << '\n';
    }
  }
  return s.str();
}

Series PrSeries(const std::string& name, const ApResult& result) {
  Series s{name, {}, {}};
  for (const PrPoint& p : result.curve) {
    s.x.push_back(p.recall);
    s.y.push_back(p.precision);
  }
  return s;
}

}  // namespace lidartraj
