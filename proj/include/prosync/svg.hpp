// Copyright prosync contributors
// SPDX-License-Identifier: Apache-2.0

// Minimal SVG writer for profile and condensation charts.

#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace prosync::svg {

/// Fixed palette, indexed cyclically.
const char* color(std::size_t i);

class Canvas {
 public:
  Canvas(double width, double height);

  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#000",
            double width = 1.0);
  void rect(double x, double y, double w, double h, const std::string& fill);
  void polyline(const std::vector<std::pair<double, double>>& points, const std::string& stroke,
                double width = 1.5);
  void circle(double x, double y, double r, const std::string& fill);
  /// anchor: start, middle or end.
  void text(double x, double y, const std::string& s, double size = 11.0,
            const std::string& anchor = "start");

  std::string str() const;

 private:
  double width_, height_;
  std::ostringstream body_;
};

/// XML-escaped copy of `s`.
std::string escape(const std::string& s);

/// Fixed-precision decimal for coordinates, independent of locale.
std::string num(double v, int precision = 2);

}  // namespace prosync::svg
