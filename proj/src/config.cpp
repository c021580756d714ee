#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "fel/io.hpp"

namespace fel {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::optional<double> parse_plain(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
std::optional<Int> parse_int(const std::string& s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(const std::string& s) {
  const auto l = lower(s);
  if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
  if (l == "false" || l == "0" || l == "no" || l == "off") return false;
  return std::nullopt;
}

const std::set<std::string> kRequired{"alpha", "delta_p", "i0_norm", "n_particles"};

// Assigns one key; returns an error message on failure.
std::optional<std::string> assign(RunConfig& c, const std::string& key, const std::string& value) {
  auto bad = [&] { return key + ": malformed value '" + value + "'"; };
  auto real = [&](double& dst) -> std::optional<std::string> {
    const auto v = parse_real(value);
    if (!v) return bad();
    dst = *v;
    return std::nullopt;
  };
  auto integer = [&](auto& dst) -> std::optional<std::string> {
    const auto v = parse_int<std::remove_reference_t<decltype(dst)>>(value);
    if (!v) return bad();
    dst = *v;
    return std::nullopt;
  };

  if (key == "alpha") return real(c.spec.alpha);
  if (key == "delta_p") return real(c.spec.delta_p);
  if (key == "i0_norm") return real(c.spec.i0_norm);
  if (key == "n_particles") return integer(c.spec.n_particles);
  if (key == "seed") return integer(c.spec.seed);
  if (key == "sampling") {
    const auto l = lower(value);
    if (l == "quiet" || l == "quiet-lattice" || l == "quiet_lattice") {
      c.spec.sampling = SamplingMode::quiet_lattice;
    } else if (l == "random" || l == "pseudo-random" || l == "pseudo_random") {
      c.spec.sampling = SamplingMode::pseudo_random;
    } else {
      return bad();
    }
    return std::nullopt;
  }
  if (key == "k_max") return integer(c.integrator.k_max);
  if (key == "dt") return real(c.integrator.dt);
  if (key == "t_end") return real(c.integrator.t_end);
  if (key == "stride") return integer(c.integrator.observer_stride);
  if (key == "drift_tolerance") return real(c.integrator.drift_tolerance);
  if (key == "workers") return integer(c.integrator.execution.workers);
  if (key == "deterministic") {
    const auto b = parse_bool(value);
    if (!b) return bad();
    c.integrator.execution.deterministic = *b;
    return std::nullopt;
  }
  if (key == "markers_per_edge") return integer(c.markers_per_edge);
  if (key == "small_seed_threshold") return real(c.small_seed_threshold);
  return "unknown key '" + key + "'";
}

RunConfig defaults() {
  RunConfig c;
  c.integrator.execution.workers = 0;  // auto
  c.integrator.execution.deterministic = false;
  return c;
}

std::vector<std::string> run_config_violations(const RunConfig& c) {
  auto v = spec_violations(c.spec);
  for (auto& s : config_violations(c.integrator)) v.push_back(std::move(s));
  if (c.markers_per_edge < kMinMarkersPerEdge) {
    v.push_back("markers_per_edge must be at least " + std::to_string(kMinMarkersPerEdge));
  }
  if (c.integrator.execution.workers < 0) v.emplace_back("workers must be non-negative");
  if (!(c.small_seed_threshold >= 0.0)) v.emplace_back("small_seed_threshold must be non-negative");
  return v;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "alpha", "delta_p", "i0_norm", "n_particles", "sampling", "seed", "k_max", "dt",
      "t_end", "stride", "drift_tolerance", "workers", "deterministic", "markers_per_edge",
      "small_seed_threshold"};
  return keys;
}

std::optional<double> parse_real(const std::string& text) {
  auto s = lower(trim(text));
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  const auto pos = s.find("pi");
  if (pos == std::string::npos) return parse_plain(s);

  std::string coef = s.substr(0, pos);
  std::string rest = s.substr(pos + 2);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  double factor = 1.0;
  if (coef == "-") {
    factor = -1.0;
  } else if (!coef.empty() && coef != "+") {
    const auto v = parse_plain(coef);
    if (!v) return std::nullopt;
    factor = *v;
  }
  double denom = 1.0;
  if (!rest.empty()) {
    if (rest.front() != '/') return std::nullopt;
    const auto v = parse_plain(rest.substr(1));
    if (!v || *v == 0.0) return std::nullopt;
    denom = *v;
  }
  return factor * std::numbers::pi / denom;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig c = defaults();
  std::vector<std::string> errors;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    std::string key, value;
    if (eq != std::string::npos) {
      key = lower(trim(body.substr(0, eq)));
      value = trim(body.substr(eq + 1));
    } else {
      // Tabular form: "key value".
      const auto ws = body.find_first_of(" \t");
      if (ws == std::string::npos) {
        errors.push_back(source + ":" + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      key = lower(trim(body.substr(0, ws)));
      value = trim(body.substr(ws + 1));
    }
    if (!seen.insert(key).second) {
      errors.push_back(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
      continue;
    }
    if (auto err = assign(c, key, value)) errors.push_back(source + ":" + std::to_string(lineno) + ": " + *err);
  }
  for (const auto& k : kRequired) {
    if (!seen.count(k)) errors.push_back(source + ": missing required key '" + k + "'");
  }
  if (errors.empty()) errors = run_config_violations(c);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return c;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path.string() + "'");
  return parse_config(in, path.string());
}

void apply_overrides(RunConfig& config, const std::map<std::string, std::string>& overrides) {
  std::vector<std::string> errors;
  RunConfig next = config;
  for (const auto& [key, value] : overrides) {
    if (auto err = assign(next, lower(key), value)) errors.push_back(*err);
  }
  if (errors.empty()) errors = run_config_violations(next);
  if (!errors.empty()) throw ValidationError(std::move(errors));
  config = next;
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream out;
  out << "alpha = " << format_number(c.spec.alpha) << '\n'
      << "delta_p = " << format_number(c.spec.delta_p) << '\n'
      << "i0_norm = " << format_number(c.spec.i0_norm) << '\n'
      << "n_particles = " << c.spec.n_particles << '\n'
      << "sampling = " << (c.spec.sampling == SamplingMode::quiet_lattice ? "quiet" : "random") << '\n'
      << "seed = " << c.spec.seed << '\n'
      << "k_max = " << c.integrator.k_max << '\n'
      << "dt = " << format_number(c.integrator.dt) << '\n'
      << "t_end = " << format_number(c.integrator.t_end) << '\n'
      << "stride = " << c.integrator.observer_stride << '\n'
      << "drift_tolerance = " << format_number(c.integrator.drift_tolerance) << '\n'
      << "workers = " << c.integrator.execution.workers << '\n'
      << "deterministic = " << (c.integrator.execution.deterministic ? "true" : "false") << '\n'
      << "markers_per_edge = " << c.markers_per_edge << '\n'
      << "small_seed_threshold = " << format_number(c.small_seed_threshold) << '\n';
  return out.str();
}

}  // namespace fel
