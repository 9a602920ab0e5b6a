#pragma once

// INI run configuration. Every dimensioned value carries a unit suffix
// ("50 MHz", "0.4 us", "1 mm"). Values are stored in canonical ordinary units
// (Hz, us, m) and converted to rad/us only when a module config is built.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace phonobus::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { frequency, time, length, speed, count, real, flag, text };

struct KeyDef {
  std::string name;
  Kind kind;
  std::string fallback;  // INI text of the default; empty means unset
  bool nonnegative = true;
};

inline const std::vector<std::string>& protocols() {
  static const std::vector<std::string> p{"transfer", "sweep", "pitch-catch", "strain-map", "nuclear-swap", "ms-gate"};
  return p;
}

inline std::vector<KeyDef> schema(const std::string& protocol) {
  using K = Kind;
  const std::vector<KeyDef> chain{
      {"f_sc", K::frequency, "2 GHz"},       {"f_p", K::frequency, "2 GHz"},
      {"f_e", K::frequency, "2 GHz"},        {"g_scp", K::frequency, "50 MHz"},
      {"gamma_sc", K::frequency, "10 kHz"},  {"gamma_p", K::frequency, "0.1 kHz"},
      {"n_max", K::count, "3"},              {"input", K::text, "excited"},
      {"phase_compensation", K::flag, "true"},
  };
  if (protocol == "transfer") {
    auto s = chain;
    s.insert(s.end(), {{"g_pe", K::frequency, "1 MHz"},
                       {"gamma_e", K::frequency, "10 kHz"},
                       {"tau_scp", K::time, ""},
                       {"tau_pe", K::time, ""},
                       {"dtau", K::time, ""},
                       {"optimize_delay", K::flag, "true"},
                       {"reverse", K::flag, "false"},
                       {"samples", K::count, "401"}});
    return s;
  }
  if (protocol == "sweep") {
    auto s = chain;
    s.insert(s.end(), {{"g_pe_min", K::frequency, "0.1 MHz"},
                       {"g_pe_max", K::frequency, "10 MHz"},
                       {"g_pe_points", K::count, "20"},
                       {"gamma_e_min", K::frequency, "1 kHz"},
                       {"gamma_e_max", K::frequency, "100 kHz"},
                       {"gamma_e_points", K::count, "20"}});
    return s;
  }
  if (protocol == "pitch-catch") {
    return {{"L", K::length, "1 mm"},
            {"c", K::speed, "2000 m/s"},
            {"N0", K::count, "2000"},
            {"M", K::count, "201"},
            {"g_qm", K::frequency, "1 MHz"},
            {"tau_pc", K::time, ""},
            {"phi", K::real, "3.141592653589793", false},
            {"transmission", K::real, "1"},
            {"catch", K::flag, "true"},
            {"steps_per_travel", K::count, "200"},
            {"packet_points", K::count, "2001"}};
  }
  if (protocol == "strain-map") {
    return {{"input", K::text, ""},
            {"normalization", K::real, "1", false},
            {"t_parallel", K::frequency, "1 PHz", false},
            {"t_perp", K::frequency, "1 PHz", false},
            {"d", K::frequency, "1 PHz", false},
            {"f", K::frequency, "1 PHz", false}};
  }
  if (protocol == "nuclear-swap") {
    return {{"A_parallel", K::frequency, "500 kHz"},
            {"Omega_mw", K::frequency, "3.9 kHz"},
            {"gamma_e", K::frequency, "10 kHz"},
            {"gamma_n", K::frequency, "1 Hz"},
            {"tau", K::time, ""},
            {"N_half", K::count, "0"},
            {"input", K::text, "superposition"},
            {"phase_compensation", K::flag, "true"}};
  }
  if (protocol == "ms-gate") {
    return {{"f_e", K::frequency, "2 GHz"},
            {"f_p", K::frequency, "3 GHz"},
            {"g_eff0", K::frequency, "14.816 MHz"},
            {"delta_ms", K::frequency, "148.16 MHz"},
            {"n_max", K::count, "5"},
            {"gamma_e", K::frequency, "10 kHz"},
            {"gamma_p", K::frequency, "0.1 kHz"},
            {"t_end", K::time, ""},
            {"samples", K::count, "401"},
            {"pre_rwa", K::flag, "false"}};
  }
  throw ConfigError("unknown protocol '" + protocol + "'");
}

struct Value {
  Kind kind = Kind::real;
  double number = 0.0;  // Hz, us, m, m/s or plain
  bool flag = false;
  std::string text;

  bool operator==(const Value&) const = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key + ": cannot parse number '" + s + "'");
  return v;
}

inline double unit_scale(Kind kind, const std::string& unit) {
  static const std::map<std::string, double> freq{{"Hz", 1.0},  {"kHz", 1e3},  {"MHz", 1e6},
                                                  {"GHz", 1e9}, {"THz", 1e12}, {"PHz", 1e15}};
  static const std::map<std::string, double> time{{"ns", 1e-3}, {"us", 1.0}, {"µs", 1.0}, {"ms", 1e3}, {"s", 1e6}};
  static const std::map<std::string, double> length{{"nm", 1e-9}, {"um", 1e-6}, {"µm", 1e-6}, {"mm", 1e-3}, {"m", 1.0}};
  static const std::map<std::string, double> speed{{"m/s", 1.0}, {"km/s", 1e3}};
  const std::map<std::string, double>* table = nullptr;
  switch (kind) {
    case Kind::frequency: table = &freq; break;
    case Kind::time: table = &time; break;
    case Kind::length: table = &length; break;
    case Kind::speed: table = &speed; break;
    default: return 0.0;
  }
  const auto it = table->find(unit);
  return it == table->end() ? 0.0 : it->second;
}

inline const char* canonical_unit(Kind kind) {
  switch (kind) {
    case Kind::frequency: return "Hz";
    case Kind::time: return "us";
    case Kind::length: return "m";
    case Kind::speed: return "m/s";
    default: return "";
  }
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline Value parse_value(const KeyDef& def, const std::string& raw) {
  const std::string s = detail::trim(raw);
  const std::string& key = def.name;
  Value v;
  v.kind = def.kind;
  switch (def.kind) {
    case Kind::text:
      if (s.empty()) throw ConfigError(key + ": empty value");
      v.text = s;
      return v;
    case Kind::flag:
      if (s == "true" || s == "yes" || s == "1") {
        v.flag = true;
      } else if (s == "false" || s == "no" || s == "0") {
        v.flag = false;
      } else {
        throw ConfigError(key + ": expected true or false, got '" + s + "'");
      }
      return v;
    case Kind::count: {
      const double x = detail::parse_number(key, s);
      if (x != static_cast<double>(static_cast<long long>(x))) throw ConfigError(key + ": expected an integer");
      if (x < 0.0) throw ConfigError(key + ": must be non-negative");
      v.number = x;
      return v;
    }
    case Kind::real: {
      if (s.find(' ') != std::string::npos) throw ConfigError(key + ": dimensionless value takes no unit");
      v.number = detail::parse_number(key, s);
      break;
    }
    default: {
      const auto sp = s.find_first_of(" \t");
      if (sp == std::string::npos) {
        throw ConfigError(key + ": missing unit (expected e.g. '" + s + " " + detail::canonical_unit(def.kind) + "')");
      }
      const std::string unit = detail::trim(s.substr(sp));
      const double scale = detail::unit_scale(def.kind, unit);
      if (scale == 0.0) throw ConfigError(key + ": unknown unit '" + unit + "'");
      v.number = detail::parse_number(key, s.substr(0, sp)) * scale;
    }
  }
  if (def.nonnegative && v.number < 0.0) throw ConfigError(key + ": must be non-negative, got '" + s + "'");
  return v;
}

inline std::string format_value(const Value& v) {
  switch (v.kind) {
    case Kind::text: return v.text;
    case Kind::flag: return v.flag ? "true" : "false";
    case Kind::count: return std::to_string(static_cast<long long>(v.number));
    case Kind::real: return detail::format_double(v.number);
    default: return detail::format_double(v.number) + " " + detail::canonical_unit(v.kind);
  }
}

struct RunConfig {
  std::string protocol;
  std::map<std::string, Value> params;  // defaults filled; unset optionals absent
  std::optional<double> rel_tol, abs_tol;
  std::string base_dir = ".";  // relative input paths resolve here

  bool operator==(const RunConfig& o) const {
    return protocol == o.protocol && params == o.params && rel_tol == o.rel_tol && abs_tol == o.abs_tol;
  }

  bool has(const std::string& k) const { return params.count(k) != 0; }
  const Value& at(const std::string& k) const {
    const auto it = params.find(k);
    if (it == params.end()) throw ConfigError(k + ": not set");
    return it->second;
  }
  double number(const std::string& k) const { return at(k).number; }
  std::optional<double> optional_number(const std::string& k) const {
    return has(k) ? std::optional<double>(number(k)) : std::nullopt;
  }
  int count(const std::string& k) const { return static_cast<int>(number(k)); }
  bool flag(const std::string& k) const { return at(k).flag; }
  const std::string& text(const std::string& k) const { return at(k).text; }
};

/// Sections: the protocol block ([transfer], [ms-gate], ...) and an optional
/// [integrator] block with rel_tol / abs_tol. A file holding one protocol block
/// selects that protocol; `protocol` overrides or disambiguates.
inline RunConfig parse_config_text(const std::string& text, const std::string& protocol = "") {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  // The ptree drops empty sections, so headers come from the raw text.
  std::vector<std::string> sections;
  {
    std::istringstream lines(text);
    for (std::string l; std::getline(lines, l);) {
      l = detail::trim(l);
      if (l.size() > 1 && l.front() == '[' && l.back() == ']') sections.push_back(detail::trim(l.substr(1, l.size() - 2)));
    }
  }
  for (const auto& [key, node] : tree) {
    if (!node.data().empty()) throw ConfigError(key + ": key outside any section");
  }

  RunConfig cfg;
  cfg.protocol = protocol;
  for (const auto& section : sections) {
    if (section == "integrator") continue;
    if (std::find(protocols().begin(), protocols().end(), section) == protocols().end()) {
      throw ConfigError("unknown section [" + section + "]");
    }
    if (cfg.protocol.empty()) {
      cfg.protocol = section;
    } else if (section != cfg.protocol) {
      throw ConfigError("section [" + section + "] does not match protocol '" + cfg.protocol + "'");
    }
  }
  if (cfg.protocol.empty()) throw ConfigError("config: no protocol given");

  const auto defs = schema(cfg.protocol);
  const auto block = tree.get_child_optional(cfg.protocol);
  if (block) {
    for (const auto& [key, node] : *block) {
      const auto it = std::find_if(defs.begin(), defs.end(), [&](const KeyDef& d) { return d.name == key; });
      if (it == defs.end()) throw ConfigError(key + ": unknown key in [" + cfg.protocol + "]");
      cfg.params[key] = parse_value(*it, node.data());
    }
  }
  for (const auto& d : defs) {
    if (!cfg.params.count(d.name) && !d.fallback.empty()) cfg.params[d.name] = parse_value(d, d.fallback);
  }

  if (const auto integ = tree.get_child_optional("integrator")) {
    for (const auto& [key, node] : *integ) {
      if (key != "rel_tol" && key != "abs_tol") throw ConfigError(key + ": unknown key in [integrator]");
      const double v = parse_value({key, Kind::real, ""}, node.data()).number;
      if (!(v > 0.0)) throw ConfigError(key + ": must be positive");
      (key == "rel_tol" ? cfg.rel_tol : cfg.abs_tol) = v;
    }
  }
  return cfg;
}

inline RunConfig parse_config(const std::string& path, const std::string& protocol = "") {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  RunConfig cfg = parse_config_text(ss.str(), protocol);
  const auto slash = path.find_last_of('/');
  cfg.base_dir = slash == std::string::npos ? "." : path.substr(0, slash);
  return cfg;
}

/// Resolved config as INI in canonical units; parse_config_text(serialize(c)) == c.
inline std::string serialize(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[" << cfg.protocol << "]\n";
  for (const auto& d : schema(cfg.protocol)) {
    const auto it = cfg.params.find(d.name);
    if (it != cfg.params.end()) out << d.name << " = " << format_value(it->second) << "\n";
  }
  if (cfg.rel_tol || cfg.abs_tol) {
    out << "\n[integrator]\n";
    if (cfg.rel_tol) out << "rel_tol = " << detail::format_double(*cfg.rel_tol) << "\n";
    if (cfg.abs_tol) out << "abs_tol = " << detail::format_double(*cfg.abs_tol) << "\n";
  }
  return out.str();
}

}  // namespace phonobus::cli
