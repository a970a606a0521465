#pragma once

// Run configuration in a TOML subset: [table] headers, key = value pairs with
// strings, numbers, booleans and single-line arrays, and # comments.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakspec/criteria.hpp"
#include "peakspec/errors.hpp"
#include "peakspec/io.hpp"
#include "peakspec/lab.hpp"
#include "peakspec/plate2d.hpp"
#include "peakspec/profile_parse.hpp"

namespace peakspec::config {

using nlohmann::json;

// ------------------------------------------------------------------ parser

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(const std::string& text, int line) : s_(text), line_(line) {}

  json parse() {
    json v = value();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return v;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  json value() {
    skip_ws();
    if (pos_ >= s_.size()) fail("missing value");
    const char c = s_[pos_];
    if (c == '"') return string();
    if (c == '[') return array();
    if (s_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      return true;
    }
    if (s_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      return false;
    }
    return number();
  }

  json string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char c = s_[pos_++];
      if (c == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json array() {
    ++pos_;
    json arr = json::array();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ']') {
      ++pos_;
      return arr;
    }
    while (true) {
      arr.push_back(value());
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated array");
      if (s_[pos_] == ',') {
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == ']') {
          ++pos_;
          return arr;
        }
        continue;
      }
      if (s_[pos_] == ']') {
        ++pos_;
        return arr;
      }
      fail("expected ',' or ']' in array");
    }
  }

  json number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '+' ||
                                s_[pos_] == '-' || s_[pos_] == '.' || s_[pos_] == '_'))
      ++pos_;
    std::string tok = s_.substr(start, pos_ - start);
    tok.erase(std::remove(tok.begin(), tok.end(), '_'), tok.end());
    if (tok.empty()) fail("expected a value");
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    std::size_t used = 0;
    try {
      if (is_float) {
        const double d = std::stod(tok, &used);
        if (used == tok.size()) return d;
      } else {
        const long long i = std::stoll(tok, &used);
        if (used == tok.size()) return i;
      }
    } catch (const std::exception&) {
    }
    fail("'" + tok + "' is not a number, string, boolean or array");
  }
};

}  // namespace detail

/// Parses the TOML subset into {table: {key: value}}; top-level keys land in "".
inline json parse_toml(const std::string& text) {
  json root = json::object();
  root[""] = json::object();
  std::string table;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = detail::trim(detail::strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError("line " + std::to_string(line_no) + ": bad table header");
      table = detail::trim(line.substr(1, line.size() - 2));
      if (table.find_first_of("[]. ") != std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) + ": nested or malformed table '" + table + "'");
      if (root.contains(table) && table != "")
        throw ConfigError("line " + std::to_string(line_no) + ": table [" + table + "] defined twice");
      root[table] = json::object();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty() || key.find_first_of(" .\"") != std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": bad key '" + key + "'");
    if (root[table].contains(key))
      throw ConfigError("line " + std::to_string(line_no) + ": key '" + key + "' repeated");
    const std::string rhs = detail::trim(line.substr(eq + 1));
    root[table][key] = detail::ValueParser(rhs, line_no).parse();
  }
  return root;
}

// ------------------------------------------------------------------ config

struct Config {
  std::string name = "run";
  // [profile]
  std::string profile_kind = "exp";  // power | exp | superexp | flat | table
  std::vector<double> profile_params{1.0};
  double r_start = 0.0;
  std::string table;
  // [domain]
  double R = 0.0;
  double L = 6.0;
  double nu = 0.3;
  // [bc]
  std::string upper = "D";
  std::string lower = "D";
  std::string left_edge = "Clamped";
  std::string right_edge = "Free";
  // [mesh]
  int ny = 0;
  double per_unit_y = 8.0;
  int nz = 8;
  double grading = 1.0;
  double degenerate_ratio = 1e-12;
  // [sweep]
  std::string study = "truncation";  // truncation | embedding | mn
  std::string variable = "L";
  std::vector<double> values;
  int k = 5;
  std::string expect = "none";
  // [tolerances]
  double stabilization = 1e-2;
  double gap = 1e-2;
  double ratio_floor = 1e-3;
  double monotone_slack = 0.05;
  double residual = 1e-8;
  // [output]
  std::string dir = "out";
  std::vector<std::string> formats{"json", "csv", "svg"};

  bool operator==(const Config&) const = default;

  /// Canonical textual profile description (see parse_profile).
  std::string profile_spec() const {
    if (profile_kind == "table") return "table:" + table;
    std::string s = profile_kind;
    for (double p : profile_params) s += ":" + io::num(p);
    if (profile_kind == "power") {
      if (profile_params.size() == 1) s += ":1";
      s += ":" + io::num(r_start);
    } else if (profile_kind == "exp" || profile_kind == "superexp") {
      s += ":" + io::num(r_start);
    }
    return s;
  }

  Profile make_profile() const { return parse_profile(profile_spec()); }

  plate::PeakDomainSpec domain() const {
    plate::PeakDomainSpec d;
    d.profile = make_profile();
    d.R = R;
    d.L = L;
    d.nu = nu;
    d.side_bc = {criteria::parse_bc_kind(single(upper, "upper")), criteria::parse_bc_kind(single(lower, "lower"))};
    d.left_edge = plate::parse_edge_bc(left_edge);
    d.right_edge = plate::parse_edge_bc(right_edge);
    return d;
  }

  lab::ExperimentPlan plan() const {
    lab::ExperimentPlan p;
    p.name = name;
    p.profile = profile_spec();
    p.domain = domain();
    p.variable = lab::parse_sweep_variable(variable);
    p.values = values;
    p.per_unit_y = per_unit_y;
    p.ny = ny;
    p.nz = nz;
    p.grading = grading;
    p.degenerate_ratio = degenerate_ratio;
    p.k = k;
    p.thresholds = {stabilization, gap, ratio_floor, monotone_slack};
    p.expect = lab::parse_expectation(expect);
    p.outputs = formats;
    return p;
  }

  /// Checks every parameter against the module preconditions.
  void validate() const {
    if (name.empty() || name.find_first_of("/\\") != std::string::npos)
      throw ConfigError("name must be non-empty and contain no path separators");
    const auto d = domain();
    try {
      d.validate();
    } catch (const DomainError& e) {
      throw ConfigError(std::string("domain: ") + e.what());
    }
    if (ny != 0 && ny < 4) throw ConfigError("mesh.ny must be 0 (density driven) or at least 4");
    if (nz < 4) throw ConfigError("mesh.nz must be at least 4");
    if (!(per_unit_y > 0.0)) throw ConfigError("mesh.per_unit_y must be positive");
    if (!(grading > 0.0)) throw ConfigError("mesh.grading must be positive");
    if (!(degenerate_ratio > 0.0 && degenerate_ratio < 1.0)) throw ConfigError("mesh.degenerate_ratio must lie in (0, 1)");
    if (study != "truncation" && study != "embedding" && study != "mn")
      throw ConfigError("sweep.study must be truncation, embedding or mn");
    lab::parse_sweep_variable(variable);
    lab::parse_expectation(expect);
    if (k < 1) throw ConfigError("sweep.k must be at least 1");
    for (std::size_t i = 1; i < values.size(); ++i)
      if (!(values[i] > values[i - 1])) throw ConfigError("sweep.values must be strictly ascending");
    for (double t : {stabilization, gap, ratio_floor, monotone_slack, residual})
      if (!(t > 0.0)) throw ConfigError("tolerances must be positive");
    for (const auto& f : formats)
      if (f != "json" && f != "csv" && f != "svg") throw ConfigError("unknown output format '" + f + "'");
  }

 private:
  static char single(const std::string& s, const char* what) {
    const char c = s.size() == 1 ? static_cast<char>(std::toupper(static_cast<unsigned char>(s[0]))) : '?';
    if (c != 'D' && c != 'M' && c != 'N') throw ConfigError(std::string("bc.") + what + " must be one of D, M, N");
    return c;
  }
};

namespace detail {

using Schema = std::map<std::string, std::set<std::string>>;

inline const Schema& schema() {
  static const Schema s{{"", {"name"}},
                        {"profile", {"kind", "params", "r_start", "table"}},
                        {"domain", {"R", "L", "nu"}},
                        {"bc", {"upper", "lower", "left_edge", "right_edge"}},
                        {"mesh", {"ny", "per_unit_y", "nz", "grading", "degenerate_ratio"}},
                        {"sweep", {"study", "variable", "values", "k", "expect"}},
                        {"tolerances", {"stabilization", "gap", "ratio_floor", "monotone_slack", "residual"}},
                        {"output", {"dir", "formats"}}};
  return s;
}

inline double as_double(const json& v, const std::string& key) {
  if (v.is_number()) return v.get<double>();
  throw ConfigError(key + " must be a number");
}

inline int as_int(const json& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) return static_cast<int>(v.get<double>());
  throw ConfigError(key + " must be an integer");
}

inline std::string as_string(const json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  throw ConfigError(key + " must be a string");
}

inline std::vector<double> as_doubles(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_double(x, key));
  return out;
}

inline std::vector<std::string> as_strings(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) out.push_back(as_string(x, key));
  return out;
}

}  // namespace detail

/// Builds a Config from parsed TOML; unknown tables and keys are rejected.
inline Config from_tree(const json& tree) {
  const auto& schema = detail::schema();
  for (const auto& [table, keys] : tree.items()) {
    const auto it = schema.find(table);
    if (it == schema.end()) throw ConfigError("unknown table [" + table + "]");
    for (const auto& [key, _] : keys.items())
      if (!it->second.count(key))
        throw ConfigError("unknown key '" + key + "'" + (table.empty() ? "" : " in [" + table + "]"));
  }
  Config c;
  auto get = [&](const std::string& t, const std::string& k) -> const json* {
    if (!tree.contains(t) || !tree.at(t).contains(k)) return nullptr;
    return &tree.at(t).at(k);
  };
  const std::string p = "profile.", d = "domain.", b = "bc.", m = "mesh.", s = "sweep.", t = "tolerances.",
                    o = "output.";
  if (auto v = get("", "name")) c.name = detail::as_string(*v, "name");
  if (auto v = get("profile", "kind")) c.profile_kind = detail::as_string(*v, p + "kind");
  if (auto v = get("profile", "params")) c.profile_params = detail::as_doubles(*v, p + "params");
  if (auto v = get("profile", "r_start")) c.r_start = detail::as_double(*v, p + "r_start");
  if (auto v = get("profile", "table")) c.table = detail::as_string(*v, p + "table");
  if (c.profile_kind == "power" && !get("profile", "r_start")) c.r_start = 1.0;
  c.R = c.r_start;
  if (auto v = get("domain", "R")) c.R = detail::as_double(*v, d + "R");
  if (auto v = get("domain", "L")) c.L = detail::as_double(*v, d + "L");
  if (auto v = get("domain", "nu")) c.nu = detail::as_double(*v, d + "nu");
  if (auto v = get("bc", "upper")) c.upper = detail::as_string(*v, b + "upper");
  if (auto v = get("bc", "lower")) c.lower = detail::as_string(*v, b + "lower");
  if (auto v = get("bc", "left_edge")) c.left_edge = detail::as_string(*v, b + "left_edge");
  if (auto v = get("bc", "right_edge")) c.right_edge = detail::as_string(*v, b + "right_edge");
  if (auto v = get("mesh", "ny")) c.ny = detail::as_int(*v, m + "ny");
  if (auto v = get("mesh", "per_unit_y")) c.per_unit_y = detail::as_double(*v, m + "per_unit_y");
  if (auto v = get("mesh", "nz")) c.nz = detail::as_int(*v, m + "nz");
  if (auto v = get("mesh", "grading")) c.grading = detail::as_double(*v, m + "grading");
  if (auto v = get("mesh", "degenerate_ratio")) c.degenerate_ratio = detail::as_double(*v, m + "degenerate_ratio");
  if (auto v = get("sweep", "study")) c.study = detail::as_string(*v, s + "study");
  if (auto v = get("sweep", "variable")) c.variable = detail::as_string(*v, s + "variable");
  if (auto v = get("sweep", "values")) c.values = detail::as_doubles(*v, s + "values");
  if (auto v = get("sweep", "k")) c.k = detail::as_int(*v, s + "k");
  if (auto v = get("sweep", "expect")) c.expect = detail::as_string(*v, s + "expect");
  if (auto v = get("tolerances", "stabilization")) c.stabilization = detail::as_double(*v, t + "stabilization");
  if (auto v = get("tolerances", "gap")) c.gap = detail::as_double(*v, t + "gap");
  if (auto v = get("tolerances", "ratio_floor")) c.ratio_floor = detail::as_double(*v, t + "ratio_floor");
  if (auto v = get("tolerances", "monotone_slack")) c.monotone_slack = detail::as_double(*v, t + "monotone_slack");
  if (auto v = get("tolerances", "residual")) c.residual = detail::as_double(*v, t + "residual");
  if (auto v = get("output", "dir")) c.dir = detail::as_string(*v, o + "dir");
  if (auto v = get("output", "formats")) c.formats = detail::as_strings(*v, o + "formats");
  return c;
}

inline Config parse(const std::string& text) { return from_tree(parse_toml(text)); }

inline Config load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

namespace detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

inline std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + io::num(v[i]);
  return s + "]";
}

inline std::string list(const std::vector<std::string>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + quote(v[i]);
  return s + "]";
}

/// Numbers always carry a decimal point or exponent so they reload as floats.
inline std::string real(double v) {
  std::string s = io::num(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace detail

/// Effective config as TOML; parse(dump(c)) == c.
inline std::string dump(const Config& c) {
  using detail::list;
  using detail::quote;
  using detail::real;
  std::ostringstream os;
  os << "name = " << quote(c.name) << "\n\n";
  os << "[profile]\nkind = " << quote(c.profile_kind) << "\nparams = " << list(c.profile_params)
     << "\nr_start = " << real(c.r_start) << "\ntable = " << quote(c.table) << "\n\n";
  os << "[domain]\nR = " << real(c.R) << "\nL = " << real(c.L) << "\nnu = " << real(c.nu) << "\n\n";
  os << "[bc]\nupper = " << quote(c.upper) << "\nlower = " << quote(c.lower) << "\nleft_edge = " << quote(c.left_edge)
     << "\nright_edge = " << quote(c.right_edge) << "\n\n";
  os << "[mesh]\nny = " << c.ny << "\nper_unit_y = " << real(c.per_unit_y) << "\nnz = " << c.nz
     << "\ngrading = " << real(c.grading) << "\ndegenerate_ratio = " << real(c.degenerate_ratio) << "\n\n";
  os << "[sweep]\nstudy = " << quote(c.study) << "\nvariable = " << quote(c.variable) << "\nvalues = " << list(c.values)
     << "\nk = " << c.k << "\nexpect = " << quote(c.expect) << "\n\n";
  os << "[tolerances]\nstabilization = " << real(c.stabilization) << "\ngap = " << real(c.gap)
     << "\nratio_floor = " << real(c.ratio_floor) << "\nmonotone_slack = " << real(c.monotone_slack)
     << "\nresidual = " << real(c.residual) << "\n\n";
  os << "[output]\ndir = " << quote(c.dir) << "\nformats = " << list(c.formats) << "\n";
  return os.str();
}

}  // namespace peakspec::config
