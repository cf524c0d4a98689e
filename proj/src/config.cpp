#include "schloegl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace schloegl {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_plain(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

}  // namespace

double parse_number(const std::string& raw) {
  const std::string text = lower(trim(raw));
  if (text == "inf" || text == "+inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  if (text.rfind("e^", 0) == 0) {
    const std::string exponent = trim(text.substr(2));
    if (exponent == "inf" || exponent == "+inf") return std::numeric_limits<double>::infinity();
    return std::exp(parse_plain(exponent));
  }
  return parse_plain(text);
}

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double InitialProfile::operator()(const Point& x) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Bilinear:
      return 10.0 - 20.0 * x.x * x.y;
    case Kind::Linear:
      return -10.0 * x.x + x.y;
  }
  return 0.0;
}

std::string InitialProfile::to_string() const {
  switch (kind) {
    case Kind::Constant:
      return "constant:" + format_number(value);
    case Kind::Bilinear:
      return "bilinear";
    case Kind::Linear:
      return "linear";
  }
  return "";
}

InitialProfile parse_initial_profile(const std::string& raw) {
  const std::string text = lower(trim(raw));
  if (text == "bilinear") return {InitialProfile::Kind::Bilinear, 0.0};
  if (text == "linear") return {InitialProfile::Kind::Linear, 0.0};
  std::string number = text;
  if (text.rfind("constant:", 0) == 0) number = text.substr(9);
  const double v = parse_number(number);
  if (!std::isfinite(v)) throw std::invalid_argument("constant initial state must be finite");
  return {InitialProfile::Kind::Constant, v};
}

const char* to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::None:
      return "none";
    case ControllerKind::Saturated:
      return "saturated";
    case ControllerKind::Rhc:
      return "rhc";
  }
  return "";
}

const char* to_string(ForcingKind kind) { return kind == ForcingKind::Zero ? "zero" : "periodic"; }

std::vector<Table1Cell> default_table1_cells() {
  return {{std::exp(0.5), 25.0, "e^0.5"},
          {std::exp(1.0), 20.0, "e^1"},
          {std::exp(1.5), 10.0, "e^1.5"},
          {std::exp(2.0), 7.0, "e^2"},
          {std::numeric_limits<double>::infinity(), 5.0, "inf"}};
}

int ScenarioConfig::actuator_grid() const {
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(msigma))));
  if (m < 1 || m * m != msigma) throw std::invalid_argument("msigma must be a perfect square");
  return m;
}

RhcConfig ScenarioConfig::rhc_config() const {
  RhcConfig rc;
  rc.delta = rhc_delta;
  rc.horizon = rhc_horizon;
  rc.t_inf = t_inf;
  rc.beta = beta;
  rc.sat = saturation();
  rc.initial_lambda = lambda;
  rc.warm_start = warm_start;
  rc.optimizer.tol = rhc_tol;
  rc.optimizer.max_iterations = rhc_max_iterations;
  return rc;
}

namespace {

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;
using Getter = std::function<std::string(const ScenarioConfig&)>;

struct KeySpec {
  std::string section;
  std::string key;
  Setter set;
  Getter get;
};

double positive(const std::string& v) {
  const double x = parse_number(v);
  if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument("must be a positive finite number");
  return x;
}

double nonnegative(const std::string& v) {
  const double x = parse_number(v);
  if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("must be a nonnegative finite number");
  return x;
}

int positive_int(const std::string& v) {
  const double x = parse_number(v);
  if (!(x >= 1.0) || x != std::floor(x) || x > 1e9) throw std::invalid_argument("must be a positive integer");
  return static_cast<int>(x);
}

bool parse_bool(const std::string& v) {
  const std::string t = lower(v);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw std::invalid_argument("must be true or false");
}

std::vector<double> number_list(const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(parse_number(item));
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_number(v[i]);
  return s;
}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"domain", "lx", [](auto& c, auto& v) { c.lx = positive(v); }, [](auto& c) { return format_number(c.lx); }},
      {"domain", "ly", [](auto& c, auto& v) { c.ly = positive(v); }, [](auto& c) { return format_number(c.ly); }},
      {"mesh", "nx", [](auto& c, auto& v) { c.nx = positive_int(v); },
       [](auto& c) { return std::to_string(c.nx); }},
      {"mesh", "ny", [](auto& c, auto& v) { c.ny = positive_int(v); },
       [](auto& c) { return std::to_string(c.ny); }},
      {"model", "nu", [](auto& c, auto& v) { c.params.nu = positive(v); },
       [](auto& c) { return format_number(c.params.nu); }},
      {"model", "zeta",
       [](auto& c, auto& v) {
         const auto z = number_list(v);
         if (z.size() != 3) throw std::invalid_argument("expects three roots");
         for (double x : z) {
           if (!std::isfinite(x)) throw std::invalid_argument("roots must be finite");
         }
         c.params.zeta = {z[0], z[1], z[2]};
       },
       [](auto& c) { return join_numbers({c.params.zeta[0], c.params.zeta[1], c.params.zeta[2]}); }},
      {"actuators", "msigma",
       [](auto& c, auto& v) {
         c.msigma = positive_int(v);
         (void)c.actuator_grid();
       },
       [](auto& c) { return std::to_string(c.msigma); }},
      {"actuators", "r",
       [](auto& c, auto& v) {
         const double r = parse_number(v);
         if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("must lie in (0, 1)");
         c.r = r;
       },
       [](auto& c) { return format_number(c.r); }},
      {"actuators", "norm", [](auto& c, auto& v) { c.norm = parse_norm_kind(lower(v)); },
       [](auto& c) { return std::string(to_string(c.norm)); }},
      {"feedback", "lambda", [](auto& c, auto& v) { c.lambda = nonnegative(v); },
       [](auto& c) { return format_number(c.lambda); }},
      {"feedback", "cu",
       [](auto& c, auto& v) {
         const double x = parse_number(v);
         if (std::isnan(x) || x < 0.0) throw std::invalid_argument("must be >= 0 or inf");
         c.cu = x;
       },
       [](auto& c) { return format_number(c.cu); }},
      {"forcing", "type",
       [](auto& c, auto& v) {
         const std::string t = lower(v);
         if (t == "zero" || t == "none") {
           c.forcing = ForcingKind::Zero;
         } else if (t == "periodic") {
           c.forcing = ForcingKind::Periodic;
         } else {
           throw std::invalid_argument("expected zero or periodic");
         }
       },
       [](auto& c) { return std::string(to_string(c.forcing)); }},
      {"initial", "target", [](auto& c, auto& v) { c.target = parse_initial_profile(v); },
       [](auto& c) { return c.target.to_string(); }},
      {"initial", "state", [](auto& c, auto& v) { c.state = parse_initial_profile(v); },
       [](auto& c) { return c.state.to_string(); }},
      {"time", "dt", [](auto& c, auto& v) { c.dt = positive(v); }, [](auto& c) { return format_number(c.dt); }},
      {"time", "t_inf", [](auto& c, auto& v) { c.t_inf = positive(v); },
       [](auto& c) { return format_number(c.t_inf); }},
      {"time", "stride", [](auto& c, auto& v) { c.stride = positive_int(v); },
       [](auto& c) { return std::to_string(c.stride); }},
      {"controller", "type",
       [](auto& c, auto& v) {
         const std::string t = lower(v);
         if (t == "none") {
           c.controller = ControllerKind::None;
         } else if (t == "saturated") {
           c.controller = ControllerKind::Saturated;
         } else if (t == "rhc") {
           c.controller = ControllerKind::Rhc;
         } else {
           throw std::invalid_argument("expected none, saturated or rhc");
         }
       },
       [](auto& c) { return std::string(to_string(c.controller)); }},
      {"rhc", "horizon", [](auto& c, auto& v) { c.rhc_horizon = positive(v); },
       [](auto& c) { return format_number(c.rhc_horizon); }},
      {"rhc", "delta", [](auto& c, auto& v) { c.rhc_delta = positive(v); },
       [](auto& c) { return format_number(c.rhc_delta); }},
      {"rhc", "beta", [](auto& c, auto& v) { c.beta = nonnegative(v); },
       [](auto& c) { return format_number(c.beta); }},
      {"rhc", "tol", [](auto& c, auto& v) { c.rhc_tol = positive(v); },
       [](auto& c) { return format_number(c.rhc_tol); }},
      {"rhc", "max_iterations", [](auto& c, auto& v) { c.rhc_max_iterations = positive_int(v); },
       [](auto& c) { return std::to_string(c.rhc_max_iterations); }},
      {"rhc", "warm_start",
       [](auto& c, auto& v) {
         const std::string t = lower(v);
         if (t == "shift") {
           c.warm_start = WarmStart::Shift;
         } else if (t == "feedback") {
           c.warm_start = WarmStart::Feedback;
         } else {
           throw std::invalid_argument("expected shift or feedback");
         }
       },
       [](auto& c) { return std::string(c.warm_start == WarmStart::Shift ? "shift" : "feedback"); }},
      {"analysis", "mu", [](auto& c, auto& v) { c.mu = positive(v); }, [](auto& c) { return format_number(c.mu); }},
      {"table1", "cells",
       [](auto& c, auto& v) {
         c.table1_cells.clear();
         for (const auto& item : split(v, ',')) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) throw std::invalid_argument("cells are written cu:t_inf");
           const std::string cu_text = trim(item.substr(0, colon));
           const double cu = parse_number(cu_text);
           if (std::isnan(cu) || cu < 0.0) throw std::invalid_argument("cell bound must be >= 0");
           c.table1_cells.push_back({cu, positive(item.substr(colon + 1)), cu_text});
         }
         if (c.table1_cells.empty()) throw std::invalid_argument("cell list is empty");
       },
       [](auto& c) {
         std::string s;
         const auto cells = c.table1_cells.empty() ? default_table1_cells() : c.table1_cells;
         for (std::size_t i = 0; i < cells.size(); ++i) {
           s += (i ? ", " : "") + cells[i].cu_text + ":" + format_number(cells[i].t_inf);
         }
         return s;
       }},
      {"table1", "betas",
       [](auto& c, auto& v) {
         c.table1_betas = number_list(v);
         if (c.table1_betas.empty()) throw std::invalid_argument("beta list is empty");
         for (double b : c.table1_betas) {
           if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("betas must be >= 0");
         }
       },
       [](auto& c) { return join_numbers(c.table1_betas); }},
      {"sweep", "axis",
       [](auto& c, auto& v) {
         const std::string t = lower(v);
         if (t != "cu" && t != "lambda" && t != "msigma") throw std::invalid_argument("expected cu, lambda or msigma");
         c.sweep_axis = t;
       },
       [](auto& c) { return c.sweep_axis.empty() ? std::string("lambda") : c.sweep_axis; }},
      {"sweep", "values",
       [](auto& c, auto& v) {
         c.sweep_values = number_list(v);
         if (c.sweep_values.empty()) throw std::invalid_argument("value list is empty");
       },
       [](auto& c) { return join_numbers(c.sweep_values); }},
      {"output", "states", [](auto& c, auto& v) { c.write_states = parse_bool(v); },
       [](auto& c) { return std::string(c.write_states ? "true" : "false"); }},
      {"seed", "value",
       [](auto& c, auto& v) {
         const double x = parse_number(v);
         if (!(x >= 0.0) || x != std::floor(x) || x > 9e15) throw std::invalid_argument("must be a nonnegative integer");
         c.seed = static_cast<std::uint64_t>(x);
       },
       [](auto& c) { return std::to_string(c.seed); }},
  };
  return table;
}

const KeySpec* find_key(const std::string& section, const std::string& key) {
  for (const auto& k : key_table()) {
    if (k.section == section && k.key == key) return &k;
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  for (const auto& k : key_table()) {
    if (k.section == section) return true;
  }
  return false;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (controller == ControllerKind::Rhc && !has_rhc_block) {
    throw ConfigError(0, "controller type rhc requires an [rhc] section");
  }
  (void)actuator_grid();
  params.validate();
  if (!(r > 0.0 && r < 1.0)) throw ConfigError(0, "actuator width fraction r must lie in (0, 1)");
  try {
    (void)steps_for(t_inf, dt);
    if (controller == ControllerKind::Rhc) rhc_config().validate(dt);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(0, e.what());
  }
}

ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (!known_section(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
      if (section == "rhc") cfg.has_rhc_block = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "expected key = value");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(line_no, "key '" + key + "' outside of any section");
    const KeySpec* spec = find_key(section, key);
    if (!spec) throw ConfigError(line_no, "unknown key '" + key + "' in section [" + section + "]");
    if (value.empty()) throw ConfigError(line_no, "missing value for '" + key + "'");
    try {
      spec->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(line_no, section + "." + key + ": " + e.what());
    }
    cfg.provenance[section + "." + key] = "config:" + std::to_string(line_no);
  }
  for (const auto& k : key_table()) cfg.provenance.try_emplace(k.section + "." + k.key, "default");
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_ci_preset(ScenarioConfig& cfg) {
  cfg.nx = 16;
  cfg.ny = 16;
  cfg.provenance["mesh.nx"] = "ci-preset";
  cfg.provenance["mesh.ny"] = "ci-preset";
}

std::string config_snapshot(const std::string& input_text, const ScenarioConfig& cfg) {
  std::string out = input_text;
  if (!out.empty() && out.back() != '\n') out += '\n';
  out += "\n# resolved values not given above\n";
  std::string current;
  for (const auto& k : key_table()) {
    const auto it = cfg.provenance.find(k.section + "." + k.key);
    if (it != cfg.provenance.end() && it->second.rfind("config:", 0) == 0) continue;
    if (k.section == "rhc" && !cfg.has_rhc_block) continue;
    if (k.section == "sweep" && k.key == "values" && cfg.sweep_values.empty()) continue;
    if (k.section != current) {
      out += "[" + k.section + "]\n";
      current = k.section;
    }
    out += k.key + " = " + k.get(cfg);
    if (it != cfg.provenance.end() && it->second != "default") out += "  # " + it->second;
    out += '\n';
  }
  return out;
}

}  // namespace schloegl
