#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "hmv/sim.hpp"

namespace hmv {

/// Line chart of mean (with 10-90% band) normalized variance against gamma.
inline std::string render_gamma_curve_svg(const std::vector<SummaryRow>& summary) {
  constexpr double width = 640, height = 400, left = 70, right = 20, top = 30, bottom = 50;
  std::vector<SummaryRow> rows;
  for (const auto& r : summary) {
    if (std::isfinite(r.mean)) rows.push_back(r);
  }
  double lo = 1.0, hi = 1.0;
  for (const auto& r : rows) {
    lo = std::min({lo, r.mean, r.q10});
    hi = std::max({hi, r.mean, r.q90});
  }
  const double pad = std::max(1e-3, 0.05 * (hi - lo));
  lo -= pad;
  hi += pad;
  auto x = [&](double g) { return left + g * (width - left - right); };
  auto y = [&](double v) { return top + (hi - v) / (hi - lo) * (height - top - bottom); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double g = i / 4.0;
    const double v = lo + (hi - lo) * i / 4.0;
    svg << "<text x=\"" << num(x(g)) << "\" y=\"" << height - bottom + 18 << "\" font-size=\"11\" "
        << "text-anchor=\"middle\">" << num(g) << "</text>\n"
        << "<text x=\"" << left - 6 << "\" y=\"" << num(y(v) + 4) << "\" font-size=\"11\" "
        << "text-anchor=\"end\">" << std::to_string(v).substr(0, 6) << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
      << "\" font-size=\"12\" text-anchor=\"middle\">gamma</text>\n"
      << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
      << "transform=\"rotate(-90 16 " << (top + height - bottom) / 2 << ")\">variance / variance at gamma=0</text>\n";
  if (!rows.empty()) {
    svg << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" points=\"";
    for (const auto& r : rows) svg << num(x(r.gamma)) << ',' << num(y(r.q90)) << ' ';
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) svg << num(x(it->gamma)) << ',' << num(y(it->q10)) << ' ';
    svg << "\"/>\n<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) svg << num(x(r.gamma)) << ',' << num(y(r.mean)) << ' ';
    svg << "\"/>\n";
    for (const auto& r : rows) {
      svg << "<circle cx=\"" << num(x(r.gamma)) << "\" cy=\"" << num(y(r.mean)) << "\" r=\"3\" fill=\"#08519c\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace hmv
