#include "torusppca_cli/sim_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace torusppca::cli {

namespace {

std::string strip(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
          s.end());
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("'" + context + "' is not a number");
  }
  return v;
}

template <typename Int>
Int parse_integer(const std::string& raw, const std::string& key) {
  const std::string s = strip(raw);
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("key '" + key + "': '" + raw + "' is not an integer");
  }
  return v;
}

bool parse_bool(const std::string& raw, const std::string& key) {
  const std::string s = strip(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': '" + raw + "' is not a boolean");
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(raw);
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

double parse_angle_expression(const std::string& text) {
  const std::string s = strip(text);
  auto fraction = [&](const std::string& part) {
    const auto slash = part.find('/');
    if (slash == std::string::npos) return parse_number(part, text);
    const double den = parse_number(part.substr(slash + 1), text);
    if (den == 0.0) throw ConfigError("'" + text + "' divides by zero");
    return parse_number(part.substr(0, slash), text) / den;
  };
  const auto p = s.find("pi");
  if (p == std::string::npos) return fraction(s);
  std::string head = s.substr(0, p);
  const std::string tail = s.substr(p + 2);
  if (!head.empty() && head.back() == '*') head.pop_back();
  const double factor = head.empty() ? 1.0 : parse_number(head, text);
  double divisor = 1.0;
  if (!tail.empty()) {
    if (tail.front() != '/') throw ConfigError("'" + text + "' is not an angle expression");
    divisor = parse_number(tail.substr(1), text);
    if (divisor == 0.0) throw ConfigError("'" + text + "' divides by zero");
  }
  return factor * std::numbers::pi / divisor;
}

std::vector<SimScenario> SimConfig::grid() const {
  std::vector<double> sigmas = sigma;
  if (sigmas.empty()) {
    for (const SimScenario& s : reference_grid(1, 0)) {
      if (std::find(sigmas.begin(), sigmas.end(), s.sigma) == sigmas.end()) sigmas.push_back(s.sigma);
    }
  }
  std::vector<SimScenario> out;
  for (int d : d_true) {
    for (double sg : sigmas) {
      for (int nn : n) {
        SimScenario s;
        s.n = nn;
        s.D = D;
        s.d_true = d;
        s.sigma = sg;
        s.replications = replications;
        s.seed = seed;
        s.w_singular_min = w_singular_min;
        s.w_singular_max = w_singular_max;
        s.validate();
        out.push_back(s);
      }
    }
  }
  return out;
}

SimConfig parse_sim_config(const std::string& text) {
  SimConfig cfg;
  std::vector<std::string> unknown;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("key '" + key + "' given twice");
    cfg.entries.emplace_back(key, value);

    if (key == "n") {
      cfg.n.clear();
      for (const auto& v : split_list(value)) cfg.n.push_back(parse_integer<int>(v, key));
    } else if (key == "D") {
      cfg.D = parse_integer<int>(value, key);
    } else if (key == "d_true") {
      cfg.d_true.clear();
      for (const auto& v : split_list(value)) cfg.d_true.push_back(parse_integer<int>(v, key));
    } else if (key == "sigma") {
      cfg.sigma.clear();
      for (const auto& v : split_list(value)) cfg.sigma.push_back(parse_angle_expression(v));
    } else if (key == "replications") {
      cfg.replications = parse_integer<int>(value, key);
    } else if (key == "seed") {
      cfg.seed = parse_integer<std::uint64_t>(value, key);
    } else if (key == "w_singular_min") {
      cfg.w_singular_min = parse_number(strip(value), value);
    } else if (key == "w_singular_max") {
      cfg.w_singular_max = parse_number(strip(value), value);
    } else if (key == "lattice") {
      cfg.mc.tppca.lattice.radius = parse_integer<int>(value, key);
    } else if (key == "outer_tol") {
      cfg.mc.tppca.outer_tol = parse_number(strip(value), value);
    } else if (key == "outer_max_iter") {
      cfg.mc.tppca.outer_max_iter = parse_integer<int>(value, key);
    } else if (key == "selection") {
      cfg.mc.run_selection = parse_bool(value, key);
    } else if (key == "alpha") {
      cfg.mc.selection.alpha = parse_number(strip(value), value);
    } else if (key == "cv_threshold") {
      cfg.mc.selection.cv_threshold = parse_number(strip(value), value);
    } else if (key == "metric_target") {
      if (value == "observed") {
        cfg.mc.metrics.target = XTarget::kObserved;
      } else if (value == "signal") {
        cfg.mc.metrics.target = XTarget::kSignal;
      } else {
        throw ConfigError("key 'metric_target' must be 'observed' or 'signal'");
      }
    } else if (key == "align_lattice") {
      cfg.mc.metrics.align_lattice = parse_bool(value, key);
    } else if (key == "angular") {
      cfg.mc.metrics.angular = parse_bool(value, key);
    } else if (key == "threads") {
      cfg.mc.threads = parse_integer<unsigned>(value, key);
    } else {
      unknown.push_back(key);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown configuration key(s):";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  if (cfg.n.empty() || cfg.d_true.empty()) throw ConfigError("n and d_true need at least one value");
  if (!(cfg.mc.selection.alpha > 0.0 && cfg.mc.selection.alpha < 1.0)) {
    throw ConfigError("alpha must be in (0, 1)");
  }
  try {
    (void)cfg.grid();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

}  // namespace torusppca::cli
