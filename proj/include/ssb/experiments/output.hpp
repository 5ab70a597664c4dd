#pragma once

#include <algorithm>
#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ssb::experiments {

// ---------------------------------------------------------------------------
// CSV: comma separated, '.' decimal, header row, LF endings, 17 significant digits.

using Cell = std::variant<double, std::int64_t, std::string, bool>;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_cell(const Cell& c) {
  struct {
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(const std::string& s) const {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      return q + "\"";
    }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
  } visitor;
  return std::visit(visitor, c);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw std::logic_error("CSV row width does not match the header");
    rows_.push_back(std::move(row));
  }

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }

  std::string str() const {
    std::string out;
    auto line = [&out](const auto& cells, auto fmt) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += fmt(cells[i]);
      }
      out += '\n';
    };
    line(header_, [](const std::string& s) { return s; });
    for (const auto& r : rows_) line(r, format_cell);
    return out;
  }

  void write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

// ---------------------------------------------------------------------------
// SVG charts

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct LineChart {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<Series> series;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
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

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[i % 9];
}

inline std::string base64(const std::string& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

inline void put_le(std::string& s, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) s += static_cast<char>((v >> (8 * i)) & 0xFF);
}

// Perceptually ordered blue-to-yellow ramp.
inline void colormap(double t, unsigned char rgb[3]) {
  static const double stops[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  for (int c = 0; c < 3; ++c) rgb[c] = static_cast<unsigned char>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
}

}  // namespace detail

inline std::string render_svg(const LineChart& chart, int width = 640, int height = 420) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  auto tx = [&](double v) { return chart.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return chart.logy ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : chart.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((chart.logx && !(s.x[i] > 0)) || (chart.logy && !(s.y[i] > 0))) continue;
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i])), x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i])), y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x0 <= x1)) x0 = 0, x1 = 1;
  if (!(y0 <= y1)) y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::xml_escape(chart.title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = x0 + (x1 - x0) * k / 4.0, fy = y0 + (y1 - y0) * k / 4.0;
    const double gx = left + pw * k / 4.0, gy = top + ph - ph * k / 4.0;
    o << "<text x=\"" << gx << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
      << detail::num(chart.logx ? std::pow(10.0, fx) : fx) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
      << detail::num(chart.logy ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">" << detail::xml_escape(chart.xlabel) << "</text>\n";
  o << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << detail::xml_escape(chart.ylabel) << "</text>\n";
  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const auto& s = chart.series[si];
    o << "<polyline fill=\"none\" stroke=\"" << detail::palette(si) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if ((chart.logx && !(s.x[i] > 0)) || (chart.logy && !(s.y[i] > 0))) continue;
      o << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i])) << ' ';
    }
    o << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(si);
    o << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << detail::palette(si) << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 34 << "\" y=\"" << ly << "\">" << detail::xml_escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Row-major field values[iy * nx + ix] with y increasing upward, embedded as a BMP raster.
struct Heatmap {
  std::string title;
  std::string xlabel, ylabel;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  std::size_t nx = 0, ny = 0;
  std::vector<double> values;
};

inline std::string bmp_image(const Heatmap& h) {
  double lo = INFINITY, hi = -INFINITY;
  for (double v : h.values)
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!(hi > lo)) hi = lo + 1.0;
  const auto w = static_cast<std::uint32_t>(h.nx), ht = static_cast<std::uint32_t>(h.ny);
  const std::uint32_t stride = (3 * w + 3) & ~3u;
  std::string b = "BM";
  detail::put_le(b, 54 + stride * ht, 4);
  detail::put_le(b, 0, 4);
  detail::put_le(b, 54, 4);
  detail::put_le(b, 40, 4);
  detail::put_le(b, w, 4);
  detail::put_le(b, ht, 4);  // bottom-up rows
  detail::put_le(b, 1, 2);
  detail::put_le(b, 24, 2);
  detail::put_le(b, 0, 4);
  detail::put_le(b, stride * ht, 4);
  detail::put_le(b, 2835, 4);
  detail::put_le(b, 2835, 4);
  detail::put_le(b, 0, 4);
  detail::put_le(b, 0, 4);
  for (std::uint32_t y = 0; y < ht; ++y) {
    std::uint32_t written = 0;
    for (std::uint32_t x = 0; x < w; ++x) {
      unsigned char rgb[3];
      detail::colormap((h.values[static_cast<std::size_t>(y) * w + x] - lo) / (hi - lo), rgb);
      b += static_cast<char>(rgb[2]);
      b += static_cast<char>(rgb[1]);
      b += static_cast<char>(rgb[0]);
      written += 3;
    }
    for (; written < stride; ++written) b += '\0';
  }
  return b;
}

inline std::string render_svg(const Heatmap& h, int size = 480) {
  const double left = 70, top = 40;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size + 110 << "\" height=\"" << size + 90
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << left + size / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << detail::xml_escape(h.title) << "</text>\n";
  o << "<image x=\"" << left << "\" y=\"" << top << "\" width=\"" << size << "\" height=\"" << size
    << "\" preserveAspectRatio=\"none\" style=\"image-rendering:pixelated\" href=\"data:image/bmp;base64," << detail::base64(bmp_image(h))
    << "\"/>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << size << "\" height=\"" << size << "\" fill=\"none\" stroke=\"black\"/>\n";
  o << "<text x=\"" << left << "\" y=\"" << top + size + 16 << "\" text-anchor=\"middle\">" << detail::num(h.x_min) << "</text>\n";
  o << "<text x=\"" << left + size << "\" y=\"" << top + size + 16 << "\" text-anchor=\"middle\">" << detail::num(h.x_max) << "</text>\n";
  o << "<text x=\"" << left - 6 << "\" y=\"" << top + size << "\" text-anchor=\"end\">" << detail::num(h.y_min) << "</text>\n";
  o << "<text x=\"" << left - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << detail::num(h.y_max) << "</text>\n";
  o << "<text x=\"" << left + size / 2 << "\" y=\"" << top + size + 36 << "\" text-anchor=\"middle\">" << detail::xml_escape(h.xlabel) << "</text>\n";
  o << "<text transform=\"translate(20," << top + size / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << detail::xml_escape(h.ylabel) << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace ssb::experiments
