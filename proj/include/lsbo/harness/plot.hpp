// Copyright 2026 The lsbo Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seed aggregation and SVG rendering of convergence curves and profiles.

#pragma once

#include "lsbo/profiles.hpp"

#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace lsbo::harness {

struct AggregateCurve {
  std::vector<long> iteration;
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation
  std::vector<std::vector<double>> per_seed;  // [seed][iteration]
};

/// Pointwise mean and population std. Unequal lengths are truncated to the
/// shortest series with a warning on `warn`.
inline AggregateCurve aggregate(const std::vector<std::vector<double>>& series,
                                std::ostream* warn = &std::cerr) {
  if (series.empty()) throw std::invalid_argument("aggregate: no traces");
  std::size_t n = series.front().size();
  bool ragged = false;
  for (const auto& s : series) {
    ragged |= s.size() != n;
    n = std::min(n, s.size());
  }
  if (ragged && warn) *warn << "warning: traces differ in length; truncating to " << n << "\n";
  AggregateCurve c;
  for (const auto& s : series) c.per_seed.emplace_back(s.begin(), s.begin() + static_cast<long>(n));
  const double k = static_cast<double>(series.size());
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (const auto& s : c.per_seed) m += s[i];
    m /= k;
    double v = 0.0;
    for (const auto& s : c.per_seed) v += (s[i] - m) * (s[i] - m);
    c.iteration.push_back(static_cast<long>(i));
    c.mean.push_back(m);
    c.std.push_back(std::sqrt(v / k));
  }
  return c;
}

inline std::string aggregate_csv(const AggregateCurve& c) {
  std::ostringstream os;
  os << "iteration,mean,std";
  for (std::size_t s = 0; s < c.per_seed.size(); ++s) os << ",seed_" << s;
  os << '\n';
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < c.mean.size(); ++i) {
    os << c.iteration[i] << ',' << num(c.mean[i]) << ',' << num(c.std[i]);
    for (const auto& s : c.per_seed) os << ',' << num(s[i]);
    os << '\n';
  }
  return os.str();
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct PlotOptions {
  bool log_y = false;
  std::string title;
  std::string x_label = "iteration";
  std::string y_label = "best f - f*";
  int width = 720;
  int height = 480;
  double log_floor = 1e-12;
};

/// Data-to-pixel mapping of the plot area.
struct Frame {
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;  // data ranges (y already log10 when log_y)
  double left = 70, right = 160, top = 40, bottom = 50;
  int width = 720, height = 480;
  bool log_y = false;
  double log_floor = 1e-12;

  double ty(double v) const { return log_y ? std::log10(std::max(v, log_floor)) : v; }
  double px(double x) const {
    const double w = width - left - right;
    return left + (x1 > x0 ? (x - x0) / (x1 - x0) : 0.5) * w;
  }
  double py(double v) const {
    const double h = height - top - bottom;
    const double y = ty(v);
    return top + (y1 > y0 ? (y1 - y) / (y1 - y0) : 0.5) * h;
  }
};

struct Series {
  std::string label;
  AggregateCurve curve;
};

inline const char* palette(std::size_t i) {
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  return colours[i % 8];
}

inline std::string px_str(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline Frame convergence_frame(const std::vector<Series>& series, const PlotOptions& opt) {
  Frame f;
  f.width = opt.width;
  f.height = opt.height;
  f.log_y = opt.log_y;
  f.log_floor = opt.log_floor;
  double xmax = 0, ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const auto& s : series) {
    const auto& c = s.curve;
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      xmax = std::max(xmax, static_cast<double>(c.iteration[i]));
      ymin = std::min(ymin, f.ty(c.mean[i] - c.std[i]));
      ymax = std::max(ymax, f.ty(c.mean[i] + c.std[i]));
    }
  }
  if (!std::isfinite(ymin)) ymin = ymax = 0;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  f.x0 = 0;
  f.x1 = std::max(xmax, 1.0);
  f.y0 = ymin;
  f.y1 = ymax;
  return f;
}

inline void svg_axes(std::ostringstream& os, const Frame& f, const PlotOptions& opt) {
  const double l = f.left, r = f.width - f.right, t = f.top, b = f.height - f.bottom;
  os << "<rect x=\"" << px_str(l) << "\" y=\"" << px_str(t) << "\" width=\"" << px_str(r - l)
     << "\" height=\"" << px_str(b - t) << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = f.x0 + (f.x1 - f.x0) * k / 4.0;
    const double yv = f.y0 + (f.y1 - f.y0) * k / 4.0;
    const double xp = f.px(xv);
    const double yp = t + (b - t) * (1.0 - k / 4.0);
    char lab[32];
    std::snprintf(lab, sizeof lab, "%g", xv);
    os << "<text x=\"" << px_str(xp) << "\" y=\"" << px_str(b + 16)
       << "\" font-size=\"11\" text-anchor=\"middle\">" << lab << "</text>\n";
    if (opt.log_y) {
      std::snprintf(lab, sizeof lab, "1e%.2g", yv);
    } else {
      std::snprintf(lab, sizeof lab, "%.4g", yv);
    }
    os << "<text x=\"" << px_str(l - 6) << "\" y=\"" << px_str(yp + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << lab << "</text>\n";
  }
  os << "<text x=\"" << px_str((l + r) / 2) << "\" y=\"" << px_str(f.height - 12)
     << "\" font-size=\"12\" text-anchor=\"middle\">" << xml_escape(opt.x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << px_str((t + b) / 2) << "\" font-size=\"12\" "
     << "text-anchor=\"middle\" transform=\"rotate(-90 14 " << px_str((t + b) / 2) << ")\">"
     << xml_escape(opt.y_label) << "</text>\n";
  if (!opt.title.empty()) {
    os << "<text x=\"" << px_str((l + r) / 2) << "\" y=\"24\" font-size=\"14\" "
       << "text-anchor=\"middle\">" << xml_escape(opt.title) << "</text>\n";
  }
}

inline void svg_legend(std::ostringstream& os, const Frame& f, const std::vector<std::string>& labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double x = f.width - f.right + 12, y = f.top + 14 + 18.0 * static_cast<double>(i);
    os << "<line x1=\"" << px_str(x) << "\" y1=\"" << px_str(y) << "\" x2=\"" << px_str(x + 20)
       << "\" y2=\"" << px_str(y) << "\" stroke=\"" << palette(i) << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << px_str(x + 26) << "\" y=\"" << px_str(y + 4) << "\" font-size=\"11\">"
       << xml_escape(labels[i]) << "</text>\n";
  }
}

/// Mean lines with shaded +-1 std bands.
inline std::string render_convergence(const std::vector<Series>& series, const PlotOptions& opt) {
  if (series.empty()) throw std::invalid_argument("render_convergence: nothing to plot");
  const Frame f = convergence_frame(series, opt);
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
     << f.height << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg_axes(os, f, opt);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& c = series[k].curve;
    labels.push_back(series[k].label);
    os << "<polygon class=\"band\" fill=\"" << palette(k) << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      os << px_str(f.px(static_cast<double>(c.iteration[i]))) << ','
         << px_str(f.py(c.mean[i] + c.std[i])) << ' ';
    }
    for (std::size_t i = c.mean.size(); i-- > 0;) {
      os << px_str(f.px(static_cast<double>(c.iteration[i]))) << ','
         << px_str(f.py(c.mean[i] - c.std[i])) << ' ';
    }
    os << "\"/>\n";
    os << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      os << px_str(f.px(static_cast<double>(c.iteration[i]))) << ',' << px_str(f.py(c.mean[i]))
         << ' ';
    }
    os << "\"/>\n";
  }
  svg_legend(os, f, labels);
  os << "</svg>\n";
  return os.str();
}

/// Step plot of profile curves; x is log2(alpha) when log2_x is set.
inline std::string render_profile(const std::vector<ProfileCurve>& curves, bool log2_x,
                                  const std::string& title, const std::string& x_label) {
  if (curves.empty()) throw std::invalid_argument("render_profile: nothing to plot");
  PlotOptions opt;
  opt.title = title;
  opt.x_label = x_label;
  opt.y_label = "fraction of problems";
  Frame f;
  f.width = opt.width;
  f.height = opt.height;
  auto xv = [&](double a) { return log2_x ? std::log2(a) : a; };
  f.x0 = xv(curves.front().alpha.front());
  f.x1 = xv(curves.front().alpha.back());
  if (f.x1 <= f.x0) f.x1 = f.x0 + 1;
  f.y0 = 0;
  f.y1 = 1;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
     << f.height << "\" viewBox=\"0 0 " << f.width << ' ' << f.height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg_axes(os, f, opt);
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    labels.push_back(c.solver);
    os << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.alpha.size(); ++i) {
      const double x = f.px(xv(c.alpha[i]));
      if (i > 0) os << px_str(x) << ',' << px_str(f.py(c.fraction[i - 1])) << ' ';
      os << px_str(x) << ',' << px_str(f.py(c.fraction[i])) << ' ';
    }
    os << "\"/>\n";
  }
  svg_legend(os, f, labels);
  os << "</svg>\n";
  return os.str();
}

}  // namespace lsbo::harness
