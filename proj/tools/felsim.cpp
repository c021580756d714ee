// felsim: command-line front end.
//
//   felsim simulate   --config run.cfg [--out DIR] [--svg]
//   felsim predict    --config run.cfg [--out DIR] [--svg]
//   felsim dispersion [--config run.cfg | --delta-p X]
//   felsim contour    --config run.cfg [--out DIR] [--svg]
//   felsim compare    --sim series.csv --pred prediction.csv [--interpolate]
//
// Exit status: 0 ok, 1 validation error, 2 numerical abort, 3 comparison FAIL.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "fel/contour.hpp"
#include "fel/io.hpp"
#include "fel/lintheory.hpp"
#include "fel/nbody.hpp"
#include "fel/perturb.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitCompareFail = 3;

constexpr const char* kEnvPrefix = "FELSIM_";

struct Options {
  std::string config;
  std::string out = ".";
  std::optional<std::string> dt, t_end, stride, workers;
  bool deterministic = false;
  bool svg = false;
  // dispersion
  std::optional<std::string> delta_p;
  // compare
  std::string sim, pred, report;
  bool interpolate = false;
};

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::map<std::string, std::string> env_overrides() {
  std::map<std::string, std::string> out;
  for (const auto& key : fel::config_keys()) {
    if (const char* v = std::getenv((kEnvPrefix + upper(key)).c_str())) out[key] = v;
  }
  return out;
}

// Precedence: config file < FELSIM_* environment < command-line flags.
fel::RunConfig load_config(const Options& o) {
  const auto env = env_overrides();
  fel::RunConfig c;
  if (!o.config.empty()) {
    c = fel::parse_config_file(o.config);
    fel::apply_overrides(c, env);
  } else {
    std::ostringstream text;
    for (const auto& [k, v] : env) text << k << " = " << v << '\n';
    std::istringstream in(text.str());
    c = fel::parse_config(in, "<environment>");
  }
  std::map<std::string, std::string> flags;
  if (o.dt) flags["dt"] = *o.dt;
  if (o.t_end) flags["t_end"] = *o.t_end;
  if (o.stride) flags["stride"] = *o.stride;
  if (o.workers) flags["workers"] = *o.workers;
  if (o.deterministic) flags["deterministic"] = "true";
  fel::apply_overrides(c, flags);
  if (c.integrator.execution.workers == 0) {
    c.integrator.execution.workers = std::max(1u, std::thread::hardware_concurrency());
  }
  return c;
}

// Effective configuration for CSV headers. The worker count is left out in
// deterministic mode because it cannot change a single output byte there.
std::vector<std::string> metadata(const std::string& command, const fel::RunConfig& c) {
  std::vector<std::string> out{"felsim " + command};
  std::istringstream in(fel::emit_config(c));
  std::string line;
  while (std::getline(in, line)) {
    if (c.integrator.execution.deterministic && line.rfind("workers", 0) == 0) continue;
    out.push_back(line);
  }
  return out;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw fel::ValidationError("cannot write '" + path.string() + "'");
  return out;
}

void write_header(std::ostream& out, const std::vector<std::string>& meta) {
  for (const auto& m : meta) out << "# " << m << '\n';
}

std::vector<double> column(const std::vector<fel::ObservableSample<double>>& s, const std::string& name) {
  std::vector<double> out;
  out.reserve(s.size());
  for (const auto& x : s) out.push_back(fel::column_value(x, name));
  return out;
}

// Sample times of `fel::run`, computed with the same arithmetic.
std::vector<double> sample_times(const fel::IntegratorConfig& c) {
  const auto steps = fel::step_count(c);
  std::vector<double> t{0.0};
  for (std::int64_t i = 1; i <= steps; ++i) {
    if (i % c.observer_stride == 0 || i == steps) t.push_back(static_cast<double>(i) * c.dt);
  }
  return t;
}

void plot_series(const fs::path& path, const std::string& title,
                 const std::vector<fel::ObservableSample<double>>& samples) {
  std::vector<fel::Curve> curves;
  const auto t = column(samples, "t");
  curves.push_back({"intensity", t, column(samples, "intensity")});
  auto ay = column(samples, "ay");
  for (auto& v : ay) v = std::abs(v);
  curves.push_back({"|ay|", t, ay});
  fel::write_line_plot(path, {title, "t", "I/N, |A_y|", true}, curves);
}

int cmd_simulate(const Options& o) {
  const auto c = load_config(o);
  const auto series = fel::run<double>(c.spec, c.integrator);
  const fs::path csv = fs::path(o.out) / "series.csv";
  auto out = open_out(csv);
  fel::write_series_csv(out, series.samples, c.integrator.k_max, metadata("simulate", c));
  if (o.svg) plot_series(fs::path(o.out) / "series.svg", "simulated intensity", series.samples);
  std::cout << "wrote " << csv.string() << " (" << series.samples.size() << " samples)\n";
  return kExitOk;
}

int cmd_predict(const Options& o) {
  const auto c = load_config(o);
  const auto times = sample_times(c.integrator);
  const auto pred = fel::predict_series<double>(c.spec, times, c.integrator.k_max, c.small_seed_threshold);
  auto meta = metadata("predict", c);
  if (fel::outside_validity(c.spec)) {
    meta.push_back("warning: " + fel::validity_note(c.spec));
    std::cerr << "warning: " << fel::validity_note(c.spec) << '\n';
  }
  const fs::path csv = fs::path(o.out) / "prediction.csv";
  {
    auto out = open_out(csv);
    fel::write_series_csv(out, pred, c.integrator.k_max, meta);
  }
  std::cout << "wrote " << csv.string() << '\n';

  if (c.spec.i0_norm > 0.0) {
    const double tc = fel::characteristic_time<double>(c.spec);
    const fs::path gpath = fs::path(o.out) / "gain.csv";
    auto out = open_out(gpath);
    write_header(out, meta);
    out << "# t_c = " << fel::format_number(tc) << '\n';
    out << "t,t_over_tc,gain\n";
    std::vector<double> x, g;
    for (const double t : times) {
      x.push_back(t / tc);
      g.push_back(fel::gain<double>(t, c.spec).value);
      out << fel::format_number(t) << ',' << fel::format_number(x.back()) << ',' << fel::format_number(g.back())
          << '\n';
    }
    std::cout << "wrote " << gpath.string() << '\n';
    if (o.svg) {
      fel::write_line_plot(fs::path(o.out) / "gain.svg", {"gain", "t / T_c", "G", false},
                           {{"(1 + t/T_c)^2", x, g}});
    }
  }
  if (o.svg) plot_series(fs::path(o.out) / "prediction.svg", "predicted intensity", pred);
  return kExitOk;
}

int cmd_dispersion(const Options& o) {
  fel::EquilibriumProfile profile = fel::EquilibriumProfile::cold_beam();
  std::vector<std::string> meta{"felsim dispersion"};
  double dp = 0.0;
  if (o.delta_p) {
    const auto v = fel::parse_real(*o.delta_p);
    if (!v || !(*v >= 0.0)) throw fel::ValidationError("delta-p must be a non-negative number");
    dp = *v;
  } else if (!o.config.empty() || !env_overrides().empty()) {
    dp = load_config(o).spec.delta_p;
  }
  if (dp > 0.0) profile = fel::EquilibriumProfile::waterbag(dp);
  meta.push_back("profile = " + std::string(dp > 0.0 ? "waterbag" : "cold_beam"));
  meta.push_back("delta_p = " + fel::format_number(dp));

  const auto roots = fel::solve_dispersion<double>(profile);
  std::ostringstream rows;
  rows << "re,im,residual,class\n";
  for (const auto& r : roots) {
    rows << fel::format_number(r.omega.real()) << ',' << fel::format_number(r.omega.imag()) << ','
         << fel::format_number(r.residual) << ',' << fel::to_string(r.classification) << '\n';
  }
  std::cout << rows.str();
  auto out = open_out(fs::path(o.out) / "dispersion.csv");
  write_header(out, meta);
  out << rows.str();
  return kExitOk;
}

int cmd_contour(const Options& o) {
  const auto c = load_config(o);
  fel::FieldHistory<double> history;
  fel::run<double>(c.spec, c.integrator, &history);
  const auto markers = fel::seed_markers<double>(c.spec, c.markers_per_edge);
  const auto traj = fel::advect_markers(markers, history, c.integrator.observer_stride);
  const auto flip = fel::detect_flip(traj);
  const auto meta = metadata("contour", c);

  const fs::path cpath = fs::path(o.out) / "contour.csv";
  {
    auto out = open_out(cpath);
    write_header(out, meta);
    out << "t,u_fit,v_plus,v_minus,rms_residual\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const auto fit = fel::fit_parabola(traj.snapshots[i]);
      out << fel::format_number(traj.times[i]) << ',' << fel::format_number(fit.u) << ','
          << fel::format_number(fit.v_plus) << ',' << fel::format_number(fit.v_minus) << ','
          << fel::format_number(fit.rms_residual) << '\n';
    }
    out << "flip_time," << (flip ? fel::format_number(*flip) : std::string("none")) << '\n';
  }
  {
    auto out = open_out(fs::path(o.out) / "markers.csv");
    write_header(out, meta);
    out << "t,edge,position,theta,p\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      const auto& m = traj.snapshots[i];
      for (const auto e : fel::kEdges) {
        const auto& idx = m.edge(e);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          out << fel::format_number(traj.times[i]) << ',' << fel::to_string(e) << ',' << k << ','
              << fel::format_number(m.theta(idx[k])) << ',' << fel::format_number(m.p(idx[k])) << '\n';
        }
      }
    }
  }
  if (o.svg) {
    // Up to six evenly spaced snapshots.
    std::vector<double> times;
    std::vector<std::vector<std::pair<double, double>>> outlines;
    const std::size_t n = traj.times.size();
    std::vector<std::size_t> picks;
    for (std::size_t k = 0; k < 6; ++k) {
      const std::size_t i = n > 1 ? (k * (n - 1) + 2) / 5 : 0;
      if (picks.empty() || picks.back() != i) picks.push_back(std::min(i, n - 1));
    }
    for (const std::size_t i : picks) {
      const auto& m = traj.snapshots[i];
      std::vector<std::pair<double, double>> poly;
      auto push = [&](fel::Edge e, bool reverse) {
        auto idx = m.edge(e);
        if (reverse) std::reverse(idx.begin(), idx.end());
        for (const auto j : idx) poly.emplace_back(m.theta(j), m.p(j));
      };
      push(fel::Edge::top, false);
      push(fel::Edge::right, true);
      push(fel::Edge::bottom, true);
      push(fel::Edge::left, false);
      times.push_back(traj.times[i]);
      outlines.push_back(std::move(poly));
    }
    fel::write_phase_space(fs::path(o.out) / "contour.svg", "waterbag boundary", times, outlines);
  }
  std::cout << "wrote " << cpath.string() << "; flip_time "
            << (flip ? fel::format_number(*flip) : std::string("none")) << '\n';
  return kExitOk;
}

int cmd_compare(const Options& o) {
  const auto sim = fel::read_series_csv_file(o.sim);
  const auto pred = fel::read_series_csv_file(o.pred);
  const auto report = fel::compare_series(sim.samples, pred.samples, fel::default_windows(), o.interpolate);
  const fs::path rpath = o.report.empty() ? fs::path(o.out) / "report.csv" : fs::path(o.report);
  {
    auto out = open_out(rpath);
    fel::write_report_csv(out, report, {"felsim compare", "sim = " + o.sim, "pred = " + o.pred});
  }
  const bool ok = report.passed();
  std::cout << (ok ? "PASS" : "FAIL") << ' ' << rpath.string() << '\n';
  return ok ? kExitOk : kExitCompareFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bunched waterbag FEL simulator, short-time theory and comparison tool"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file (key = value)");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--dt", o.dt, "time step");
    sub->add_option("--t-end", o.t_end, "final time");
    sub->add_option("--stride", o.stride, "observer stride in steps");
    sub->add_option("--workers", o.workers, "worker threads (0 = all cores)");
    sub->add_flag("--deterministic", o.deterministic, "fixed reduction tree, output independent of workers");
    sub->add_flag("--svg", o.svg, "also render SVG plots");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate the N-particle system");
  auto* predict = app.add_subcommand("predict", "evaluate the short-time expansions");
  auto* dispersion = app.add_subcommand("dispersion", "roots of the linear dispersion relation");
  auto* contour = app.add_subcommand("contour", "track the waterbag boundary");
  auto* compare = app.add_subcommand("compare", "compare a simulated series against a prediction");
  for (auto* sub : {simulate, predict, dispersion, contour}) common(sub);
  dispersion->add_option("--delta-p", o.delta_p, "momentum spread (0 = cold beam)");
  compare->add_option("--sim", o.sim, "simulated series CSV")->required();
  compare->add_option("--pred", o.pred, "predicted series CSV")->required();
  compare->add_option("--report", o.report, "report CSV (default OUT/report.csv)");
  compare->add_option("--out", o.out, "output directory")->capture_default_str();
  compare->add_flag("--interpolate", o.interpolate, "interpolate the prediction onto simulation times");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*predict) return cmd_predict(o);
    if (*dispersion) return cmd_dispersion(o);
    if (*contour) return cmd_contour(o);
    if (*compare) return cmd_compare(o);
  } catch (const fel::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const fel::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
