#include "wpl/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace wpl {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xCBF29CE484222325ull;
  for (const char ch : data) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001B3ull;
  }
  return hash;
}

std::string fnv1a64_hex(std::string_view data) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void append_fmt(std::string& out, const char* fmt, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  out += buf;
}

std::string fmt_tick(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string render_svg_plot(const std::vector<PlotSeries>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label, bool log_y) {
  std::size_t total = 0;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("render_svg_plot: ragged series");
    total += s.x.size();
  }
  if (total == 0) throw std::invalid_argument("render_svg_plot: empty report");

  const double width = 800.0, height = 600.0;
  const double ml = 80.0, mr = 30.0, mt = 50.0, mb = 60.0;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (log_y && !(s.y[i] > 0.0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  }
  if (!(xmax >= xmin) || !(ymax >= ymin)) {
    throw std::invalid_argument("render_svg_plot: no plottable points");
  }
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  auto py = [&](double y) {
    return height - mb - (ty(y) - ymin) / (ymax - ymin) * (height - mt - mb);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
         "viewBox=\"0 0 800 600\">\n";
  svg += "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  append_fmt(svg, "<line x1=\"%.2f\" y1=\"%.2f\" ", ml, height - mb);
  append_fmt(svg, "x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", width - mr, height - mb);
  append_fmt(svg, "<line x1=\"%.2f\" y1=\"%.2f\" ", ml, mt);
  append_fmt(svg, "x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", ml, height - mb);
  svg += "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-size=\"18\">" + title +
         "</text>\n";
  svg += "<text x=\"420\" y=\"585\" text-anchor=\"middle\" font-size=\"14\">" + x_label +
         "</text>\n";
  svg += "<text x=\"20\" y=\"300\" text-anchor=\"middle\" font-size=\"14\" "
         "transform=\"rotate(-90 20 300)\">" +
         y_label + (log_y ? " (log10)" : "") + "</text>\n";
  svg += "<text x=\"78\" y=\"595\" text-anchor=\"end\" font-size=\"12\">" + fmt_tick(xmin) +
         "</text>\n";
  svg += "<text x=\"775\" y=\"595\" text-anchor=\"end\" font-size=\"12\">" + fmt_tick(xmax) +
         "</text>\n";
  svg += "<text x=\"75\" y=\"545\" text-anchor=\"end\" font-size=\"12\">" +
         fmt_tick(log_y ? std::pow(10.0, ymin) : ymin) + "</text>\n";
  svg += "<text x=\"75\" y=\"55\" text-anchor=\"end\" font-size=\"12\">" +
         fmt_tick(log_y ? std::pow(10.0, ymax) : ymax) + "</text>\n";

  for (const auto& s : series) {
    if (s.points_only) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (log_y && !(s.y[i] > 0.0)) continue;
        append_fmt(svg, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"", px(s.x[i]),
                   py(s.y[i]));
        svg += s.color + "\"/>\n";
      }
    } else {
      svg += "<polyline fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (log_y && !(s.y[i] > 0.0)) continue;
        if (!first) svg += ' ';
        append_fmt(svg, "%.3f,%.3f", px(s.x[i]), py(s.y[i]));
        first = false;
      }
      svg += "\"/>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace wpl
