#pragma once

// JSON conversions, CSV helpers, SVG line plots and the config hash.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakspec/criteria.hpp"
#include "peakspec/errors.hpp"

namespace peakspec::io {

using nlohmann::json;

/// Shortest round-trip decimal form of a double.
inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  for (int p = 15; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

/// JSON has no infinities; they are written as strings.
inline json number(double v) {
  if (std::isfinite(v)) return v;
  return num(v);
}

inline json to_json(const criteria::TracePoint& p) { return json::array({number(p.y), number(p.value)}); }

inline json to_json(const criteria::Evidence& e) {
  json trace = json::array();
  for (const auto& p : e.trace) trace.push_back(to_json(p));
  return {{"criterion", e.criterion}, {"quantity", e.quantity}, {"threshold", number(e.threshold)},
          {"pass", e.pass},           {"note", e.note},         {"trace", trace}};
}

inline json to_json(const criteria::CriterionVerdict& v) {
  json ev = json::array();
  for (const auto& e : v.evidence) ev.push_back(to_json(e));
  return {{"pair", v.pair.str()},
          {"profile", v.profile},
          {"verdict", criteria::to_string(v.verdict)},
          {"basis", criteria::to_string(v.basis)},
          {"evidence", ev}};
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ------------------------------------------------------------------ SVG

struct Series {
  std::string name;
  std::vector<double> x, y;
};

/// Static line plot; log_y plots log10 of positive values.
inline std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector<Series>& series, bool log_y = false) {
  const double W = 640, Hh = 420, ml = 70, mr = 150, mt = 40, mb = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      const double yy = ty(s.y[i]);
      if (!std::isfinite(s.x[i]) || !std::isfinite(yy)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, yy);
      y1 = std::max(y1, yy);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pw = W - ml - mr, ph = Hh - mt - mb;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y0) / (y1 - y0) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << Hh << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x0 + (x1 - x0) * t / 4, yv = y0 + (y1 - y0) * t / 4;
    os << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
       << num(std::round(xv * 1e4) / 1e4) << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 3 << "\" text-anchor=\"end\" font-size=\"10\">"
       << (log_y ? "1e" : "") << num(std::round(yv * 1e3) / 1e3) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << Hh - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel
     << "</text>\n";
  os << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << mt + ph / 2
     << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* col = colors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      const double yy = ty(s.y[i]);
      if (std::isfinite(yy)) os << px(s.x[i]) << ',' << py(yy) << ' ';
    }
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      const double yy = ty(s.y[i]);
      if (std::isfinite(yy))
        os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(yy) << "\" r=\"2.5\" fill=\"" << col << "\"/>\n";
    }
    os << "<text x=\"" << ml + pw + 10 << "\" y=\"" << mt + 14 + 16 * k << "\" font-size=\"11\" fill=\"" << col
       << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace peakspec::io
