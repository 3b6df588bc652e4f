#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "gmc/errors.hpp"
#include "gmc/io.hpp"

namespace gmc::svg {

struct Series {
  std::string label;
  std::vector<double> x, y, err;  // err optional (empty or same length)
  std::string color = "#1f77b4";
  bool line = true;
};

struct Band {
  double y = 0.0;
  std::string label;
  std::string color = "#999999";
};

/// Minimal static line/scatter chart.
class Chart {
 public:
  Chart(std::string title, std::string xlabel, std::string ylabel) : title_(std::move(title)), xl_(std::move(xlabel)), yl_(std::move(ylabel)) {}

  Chart& log_x(bool v = true) {
    logx_ = v;
    return *this;
  }
  Chart& log_y(bool v = true) {
    logy_ = v;
    return *this;
  }
  Chart& add(Series s) {
    series_.push_back(std::move(s));
    return *this;
  }
  Chart& hline(Band b) {
    bands_.push_back(std::move(b));
    return *this;
  }

  std::string str() const {
    const double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
    double x0 = inf(), x1 = -inf(), y0 = inf(), y1 = -inf();
    for (const auto& s : series_)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        const double e = s.err.empty() ? 0.0 : s.err[i];
        if (!usable(s.x[i], logx_) || !usable(s.y[i], logy_)) continue;
        x0 = std::min(x0, tx(s.x[i]));
        x1 = std::max(x1, tx(s.x[i]));
        const double lo = s.y[i] - e, hi = s.y[i] + e;
        y0 = std::min(y0, ty(usable(lo, logy_) ? lo : s.y[i]));
        y1 = std::max(y1, ty(hi));
      }
    for (const auto& b : bands_)
      if (usable(b.y, logy_)) {
        y0 = std::min(y0, ty(b.y));
        y1 = std::max(y1, ty(b.y));
      }
    if (!(x0 < inf())) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double py = 0.05 * (y1 - y0);
    y0 -= py;
    y1 += py;
    auto sx = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
    auto sy = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
    auto syt = [&](double t) { return H - B - (t - y0) / (y1 - y0) * (H - T - B); };
    auto sxt = [&](double t) { return L + (t - x0) / (x1 - x0) * (W - L - R); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title_) << "</text>\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double tvx = x0 + (x1 - x0) * i / 4.0, tvy = y0 + (y1 - y0) * i / 4.0;
      o << "<text x=\"" << fmt(sxt(tvx)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
        << tick(tvx, logx_) << "</text>\n";
      o << "<text x=\"" << L - 6 << "\" y=\"" << fmt(syt(tvy) + 4) << "\" text-anchor=\"end\">" << tick(tvy, logy_)
        << "</text>\n";
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << esc(xl_)
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << esc(yl_) << "</text>\n";
    for (const auto& b : bands_) {
      if (!usable(b.y, logy_)) continue;
      o << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << fmt(sy(b.y)) << "\" y2=\"" << fmt(sy(b.y))
        << "\" stroke=\"" << b.color << "\" stroke-dasharray=\"4 3\"/>\n";
    }
    int row = 0;
    for (const auto& s : series_) {
      std::string path;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!usable(s.x[i], logx_) || !usable(s.y[i], logy_)) continue;
        const double px = sx(s.x[i]), py2 = sy(s.y[i]);
        path += (path.empty() ? "M" : " L") + fmt(px) + "," + fmt(py2);
        o << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py2) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        if (!s.err.empty() && s.err[i] > 0.0) {
          const double lo = s.y[i] - s.err[i], hi = s.y[i] + s.err[i];
          const double a = usable(lo, logy_) ? sy(lo) : H - B, c = sy(hi);
          o << "<line x1=\"" << fmt(px) << "\" x2=\"" << fmt(px) << "\" y1=\"" << fmt(a) << "\" y2=\"" << fmt(c)
            << "\" stroke=\"" << s.color << "\"/>\n";
        }
      }
      if (s.line && !path.empty())
        o << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << s.color << "\"/>\n";
      const double ly = T + 14 + 16 * row++;
      o << "<rect x=\"" << W - R + 10 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\"" << s.color
        << "\"/>\n<text x=\"" << W - R + 24 << "\" y=\"" << ly << "\">" << esc(s.label) << "</text>\n";
    }
    for (const auto& b : bands_) {
      const double ly = T + 14 + 16 * row++;
      o << "<line x1=\"" << W - R + 10 << "\" x2=\"" << W - R + 20 << "\" y1=\"" << ly - 3 << "\" y2=\"" << ly - 3
        << "\" stroke=\"" << b.color << "\" stroke-dasharray=\"4 3\"/>\n<text x=\"" << W - R + 24 << "\" y=\"" << ly
        << "\">" << esc(b.label) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
  }

  void save(const std::string& path) const { io::write_file(path, str()); }

 private:
  static double inf() { return std::numeric_limits<double>::infinity(); }
  static bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }
  double tx(double v) const { return logx_ ? std::log10(v) : v; }
  double ty(double v) const { return logy_ ? std::log10(v) : v; }
  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
  }
  static std::string tick(double t, bool log) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", log ? std::pow(10.0, t) : t);
    return buf;
  }

 public:
  static std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }

 private:
  std::string title_, xl_, yl_;
  bool logx_ = false, logy_ = false;
  std::vector<Series> series_;
  std::vector<Band> bands_;
};

/// Categorical raster (one rect per cell) with a legend.
struct Raster {
  std::string title, xlabel, ylabel;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  std::size_t nx = 0, ny = 0;
  std::vector<int> cells;  // row-major, y index outer, category per cell
  std::vector<std::string> names, colors;

  std::string str() const {
    if (cells.size() != nx * ny) throw ConsistencyError("raster size mismatch");
    const double W = 640, H = 560, L = 60, R = 170, T = 40, B = 50;
    const double cw = (W - L - R) / double(nx), ch = (H - T - B) / double(ny);
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\" shape-rendering=\"crispEdges\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << Chart::esc(title)
      << "</text>\n";
    char buf[160];
    for (std::size_t j = 0; j < ny; ++j) {
      // Merge horizontal runs of equal category to keep the file small.
      std::size_t i = 0;
      while (i < nx) {
        const int c = cells[j * nx + i];
        std::size_t k = i + 1;
        while (k < nx && cells[j * nx + k] == c) ++k;
        std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\"/>\n",
                      L + cw * double(i), H - B - ch * double(j + 1), cw * double(k - i), ch,
                      colors.at(static_cast<std::size_t>(c)).c_str());
        o << buf;
        i = k;
      }
    }
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double vx = x0 + (x1 - x0) * t / 4.0, vy = y0 + (y1 - y0) * t / 4.0;
      std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%.3g</text>\n",
                    L + (W - L - R) * t / 4.0, H - B + 16, vx);
      o << buf;
      std::snprintf(buf, sizeof buf, "<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.3g</text>\n", L - 6,
                    H - B - (H - T - B) * t / 4.0 + 4, vy);
      o << buf;
    }
    o << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << Chart::esc(xlabel)
      << "</text>\n";
    o << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << Chart::esc(ylabel) << "</text>\n";
    for (std::size_t k = 0; k < names.size(); ++k) {
      const double ly = T + 14 + 16 * double(k);
      o << "<rect x=\"" << W - R + 10 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\"" << colors[k]
        << "\"/>\n<text x=\"" << W - R + 24 << "\" y=\"" << ly << "\">" << Chart::esc(names[k]) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
  }

  void save(const std::string& path) const { io::write_file(path, str()); }
};

}  // namespace gmc::svg
