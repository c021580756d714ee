#pragma once

// Configuration files, CSV series and SVG rendering.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fel/contour.hpp"
#include "fel/core.hpp"
#include "fel/diag.hpp"
#include "fel/nbody.hpp"

namespace fel {

/// Everything a `felsim` invocation needs, parsed from `key = value` lines.
struct RunConfig {
  WaterbagSpec spec;
  IntegratorConfig integrator;
  int markers_per_edge = 32;
  double small_seed_threshold = 1e-6;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Keys accepted in config files (and as FELSIM_<KEY> environment overrides).
const std::vector<std::string>& config_keys();

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
/// Unknown keys, duplicates, malformed values and missing required keys
/// (alpha, delta_p, i0_norm, n_particles) are errors; all of them are
/// collected before throwing ValidationError. The result is validated.
RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig parse_config_file(const std::filesystem::path& path);

/// Applies `key -> value` overrides (same syntax as the file) and revalidates.
void apply_overrides(RunConfig& config, const std::map<std::string, std::string>& overrides);

/// Effective configuration as a parseable file body.
std::string emit_config(const RunConfig& config);

/// Parses a real number or an angle written with pi: "1.2", "pi", "2pi",
/// "pi/3", "3*pi/4", "-pi/2".
std::optional<double> parse_real(const std::string& text);

/// Shortest round-trip decimal form.
std::string format_number(double value);

// ---------------------------------------------------------------------------
// CSV

/// Header: t,ax,ay,intensity,b1_mag,b1_phase,...,dispersion,energy,momentum.
std::vector<std::string> series_columns(int k_max);

/// Writes `# ...` metadata lines followed by the header and one row per sample.
void write_series_csv(std::ostream& out, const std::vector<ObservableSample<double>>& samples, int k_max,
                      const std::vector<std::string>& metadata);

struct SeriesTable {
  std::vector<std::string> metadata;  // comment lines without the leading "# "
  int k_max = 0;
  std::vector<ObservableSample<double>> samples;
};

SeriesTable read_series_csv(std::istream& in);
SeriesTable read_series_csv_file(const std::filesystem::path& path);

void write_report_csv(std::ostream& out, const ErrorReport& report, const std::vector<std::string>& metadata);

// ---------------------------------------------------------------------------
// SVG

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // symbols instead of a polyline
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

void write_line_plot(const std::filesystem::path& path, const PlotSpec& plot, const std::vector<Curve>& curves);

/// Closed boundary polygons (top, right, bottom reversed, left reversed) for
/// each snapshot.
void write_phase_space(const std::filesystem::path& path, const std::string& title,
                       const std::vector<double>& times,
                       const std::vector<std::vector<std::pair<double, double>>>& outlines);

}  // namespace fel
