// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

#include "prosync/svg.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace prosync::svg {

const char* color(std::size_t i) {
  static constexpr std::array<const char*, 8> kPalette = {
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return kPalette[i % kPalette.size()];
}

std::string escape(const std::string& s) {
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

std::string num(double v, int precision) {
  if (!std::isfinite(v)) v = 0.0;
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, ptr);
}

Canvas::Canvas(double width, double height) : width_(width), height_(height) {}

void Canvas::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                  double width) {
  body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2) << "\" y2=\""
        << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width) << "\"/>\n";
}

void Canvas::rect(double x, double y, double w, double h, const std::string& fill) {
  body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
        << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
}

void Canvas::polyline(const std::vector<std::pair<double, double>>& points,
                      const std::string& stroke, double width) {
  if (points.empty()) return;
  body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << num(width)
        << "\" points=\"";
  for (std::size_t i = 0; i < points.size(); ++i)
    body_ << (i ? " " : "") << num(points[i].first) << ',' << num(points[i].second);
  body_ << "\"/>\n";
}

void Canvas::circle(double x, double y, double r, const std::string& fill) {
  body_ << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"" << num(r) << "\" fill=\""
        << fill << "\"/>\n";
}

void Canvas::text(double x, double y, const std::string& s, double size,
                  const std::string& anchor) {
  body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\" font-size=\""
        << num(size, 1) << "\" text-anchor=\"" << anchor << "\">" << escape(s) << "</text>\n";
}

std::string Canvas::str() const {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width_, 0) << "\" height=\""
     << num(height_, 0) << "\" viewBox=\"0 0 " << num(width_, 0) << ' ' << num(height_, 0)
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n"
     << body_.str() << "</svg>\n";
  return os.str();
}

}  // namespace prosync::svg
