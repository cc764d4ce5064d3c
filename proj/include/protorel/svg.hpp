#pragma once

#include <array>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>

#include "protorel/common.hpp"

namespace protorel {

/// A line w . x + b = 0 drawn across the plot area.
struct SvgBoundary {
  Eigen::Vector2d w = Eigen::Vector2d::Zero();
  double b = 0.0;
  std::string color = "#000000";
  bool dashed = false;
  std::string label;
};

struct ScatterStyle {
  int width = 640;
  int height = 480;
  std::string title;
  std::vector<std::string> class_names;  ///< legend entries, by label id
  std::vector<SvgBoundary> boundaries;
};

inline const std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                   "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

namespace detail {

inline std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return std::string(buf) == "-0.000" ? "0.000" : buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string star_path(double cx, double cy, double outer, double inner) {
  std::string d;
  for (int k = 0; k < 10; ++k) {
    const double r = k % 2 == 0 ? outer : inner;
    const double a = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
    d += (k == 0 ? "M" : " L") + fmt_num(cx + r * std::cos(a)) + "," + fmt_num(cy + r * std::sin(a));
  }
  return d + " Z";
}

}  // namespace detail

/// Standalone SVG: a circle per point coloured by label, a star path per
/// prototype, optional boundary lines, and a legend built from rect + text.
inline std::string render_svg_scatter(const std::vector<Eigen::Vector2d>& points, std::span<const std::size_t> labels,
                                      const std::vector<Eigen::Vector2d>& prototypes,
                                      const ScatterStyle& style = {}) {
  if (points.empty()) throw InvalidArgument("scatter plot needs at least one point");
  if (labels.size() != points.size()) throw InvalidArgument("scatter plot needs one label per point");

  Eigen::Vector2d lo = points.front(), hi = points.front();
  auto grow = [&](const Eigen::Vector2d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  std::for_each(points.begin(), points.end(), grow);
  std::for_each(prototypes.begin(), prototypes.end(), grow);
  Eigen::Vector2d span = hi - lo;
  for (int a = 0; a < 2; ++a) {
    if (span(a) <= 0) span(a) = 1.0;
  }
  lo -= 0.05 * span;
  hi += 0.05 * span;
  span = hi - lo;

  const double margin = 40, legend_w = 150;
  const double plot_w = style.width - 2 * margin - legend_w, plot_h = style.height - 2 * margin;
  auto sx = [&](double x) { return margin + (x - lo(0)) / span(0) * plot_w; };
  auto sy = [&](double y) { return margin + (hi(1) - y) / span(1) * plot_h; };
  auto colour = [](std::size_t k) { return kPalette[k % kPalette.size()]; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
    << "\" viewBox=\"0 0 " << style.width << " " << style.height << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << style.height << "\" fill=\"#ffffff\"/>\n";
  if (!style.title.empty()) {
    o << "<text x=\"" << margin << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">"
      << detail::xml_escape(style.title) << "</text>\n";
  }
  o << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << detail::fmt_num(plot_w) << "\" height=\""
    << detail::fmt_num(plot_h) << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";

  for (const auto& bnd : style.boundaries) {
    // Clip w.x + b = 0 to the data window.
    std::vector<Eigen::Vector2d> hits;
    if (std::abs(bnd.w(1)) > 1e-12) {
      for (double x : {lo(0), hi(0)}) {
        const double y = -(bnd.w(0) * x + bnd.b) / bnd.w(1);
        if (y >= lo(1) && y <= hi(1)) hits.emplace_back(x, y);
      }
    }
    if (std::abs(bnd.w(0)) > 1e-12) {
      for (double y : {lo(1), hi(1)}) {
        const double x = -(bnd.w(1) * y + bnd.b) / bnd.w(0);
        if (x >= lo(0) && x <= hi(0)) hits.emplace_back(x, y);
      }
    }
    if (hits.size() < 2) continue;
    o << "<line x1=\"" << detail::fmt_num(sx(hits[0](0))) << "\" y1=\"" << detail::fmt_num(sy(hits[0](1)))
      << "\" x2=\"" << detail::fmt_num(sx(hits[1](0))) << "\" y2=\"" << detail::fmt_num(sy(hits[1](1)))
      << "\" stroke=\"" << bnd.color << "\" stroke-width=\"2\"" << (bnd.dashed ? " stroke-dasharray=\"6,4\"" : "")
      << "/>\n";
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    o << "<circle cx=\"" << detail::fmt_num(sx(points[i](0))) << "\" cy=\"" << detail::fmt_num(sy(points[i](1)))
      << "\" r=\"3\" fill=\"" << colour(labels[i]) << "\" fill-opacity=\"0.7\"/>\n";
  }
  for (std::size_t k = 0; k < prototypes.size(); ++k) {
    o << "<path d=\"" << detail::star_path(sx(prototypes[k](0)), sy(prototypes[k](1)), 10, 4) << "\" fill=\""
      << colour(k) << "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  }

  const double lx = style.width - legend_w - margin / 2;
  double ly = margin;
  for (std::size_t k = 0; k < style.class_names.size(); ++k, ly += 18) {
    o << "<rect x=\"" << detail::fmt_num(lx) << "\" y=\"" << detail::fmt_num(ly) << "\" width=\"10\" height=\"10\" fill=\""
      << colour(k) << "\"/>\n";
    o << "<text x=\"" << detail::fmt_num(lx + 16) << "\" y=\"" << detail::fmt_num(ly + 9)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(style.class_names[k]) << "</text>\n";
  }
  for (const auto& bnd : style.boundaries) {
    if (bnd.label.empty()) continue;
    o << "<rect x=\"" << detail::fmt_num(lx) << "\" y=\"" << detail::fmt_num(ly + 4) << "\" width=\"10\" height=\"2\" fill=\""
      << bnd.color << "\"/>\n";
    o << "<text x=\"" << detail::fmt_num(lx + 16) << "\" y=\"" << detail::fmt_num(ly + 9)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::xml_escape(bnd.label) << "</text>\n";
    ly += 18;
  }
  o << "</svg>\n";
  return o.str();
}

inline void emit_svg_scatter(const std::vector<Eigen::Vector2d>& points, std::span<const std::size_t> labels,
                             const std::vector<Eigen::Vector2d>& prototypes, const std::string& path,
                             const ScatterStyle& style = {}) {
  const std::string svg = render_svg_scatter(points, labels, prototypes, style);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << svg;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace protorel
