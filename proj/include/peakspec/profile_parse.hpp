#pragma once

// Textual profile descriptions:
//   power:ALPHA[:H0[:R_START]]   H = H0 y^-ALPHA
//   exp:ALPHA[:R_START]          H = exp(-ALPHA y)
//   superexp:ALPHA[:R_START]     H = exp(-y^(1+ALPHA))
//   flat:H:Y0:Y1                 constant half-width on [Y0, Y1]
//   table:PATH                   two-column CSV (y, H)

#include <string>
#include <vector>

#include "peakspec/errors.hpp"
#include "peakspec/profiles.hpp"

namespace peakspec {

inline Profile parse_profile(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("profile '" + text + "' needs the form kind:params");
  const std::string kind = text.substr(0, colon);
  if (kind == "table") return Profile::from_csv(text.substr(colon + 1));
  start = colon + 1;
  while (true) {
    const std::size_t next = text.find(':', start);
    parts.push_back(text.substr(start, next == std::string::npos ? std::string::npos : next - start));
    if (next == std::string::npos) break;
    start = next + 1;
  }
  std::vector<double> p;
  for (const auto& s : parts) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ConfigError("profile '" + text + "': '" + s + "' is not a number");
    p.push_back(v);
  }
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (p.size() < lo || p.size() > hi)
      throw ConfigError("profile '" + text + "' has the wrong number of parameters");
  };
  try {
    if (kind == "power") {
      need(1, 3);
      return Profile::power(p[0], p.size() > 1 ? p[1] : 1.0, p.size() > 2 ? p[2] : 1.0);
    }
    if (kind == "exp") {
      need(1, 2);
      return Profile::exponential(p[0], p.size() > 1 ? p[1] : 0.0);
    }
    if (kind == "superexp") {
      need(1, 2);
      return Profile::super_exponential(p[0], p.size() > 1 ? p[1] : 0.0);
    }
    if (kind == "flat") {
      need(3, 3);
      return Profile::flat(p[0], p[1], p[2]);
    }
  } catch (const DomainError& e) {
    throw ConfigError("profile '" + text + "': " + e.what());
  }
  throw ConfigError("unknown profile kind '" + kind + "' (expected power, exp, superexp, flat or table)");
}

}  // namespace peakspec
