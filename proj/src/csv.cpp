#include <fstream>
#include <sstream>

#include "fel/io.hpp"

namespace fel {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& cell, int lineno) {
  const auto v = parse_real(cell);
  if (!v) throw ValidationError("csv line " + std::to_string(lineno) + ": malformed number '" + cell + "'");
  return *v;
}

}  // namespace

std::vector<std::string> series_columns(int k_max) {
  std::vector<std::string> cols{"t", "ax", "ay", "intensity"};
  for (int k = 1; k <= k_max; ++k) {
    cols.push_back("b" + std::to_string(k) + "_mag");
    cols.push_back("b" + std::to_string(k) + "_phase");
  }
  cols.insert(cols.end(), {"dispersion", "energy", "momentum"});
  return cols;
}

void write_series_csv(std::ostream& out, const std::vector<ObservableSample<double>>& samples, int k_max,
                      const std::vector<std::string>& metadata) {
  for (const auto& m : metadata) out << "# " << m << '\n';
  const auto cols = series_columns(k_max);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& s : samples) {
    if (static_cast<int>(s.bunching.size()) < k_max) {
      throw ValidationError("sample has fewer bunching harmonics than k_max");
    }
    out << format_number(s.t) << ',' << format_number(s.a_x) << ',' << format_number(s.a_y) << ','
        << format_number(s.intensity);
    for (int k = 0; k < k_max; ++k) {
      const auto& b = s.bunching[static_cast<std::size_t>(k)];
      out << ',' << format_number(b.magnitude) << ',' << format_number(b.phase);
    }
    out << ',' << format_number(s.dispersion) << ',' << format_number(s.energy) << ','
        << format_number(s.momentum) << '\n';
  }
}

SeriesTable read_series_csv(std::istream& in) {
  SeriesTable table;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      auto body = line.substr(1);
      if (!body.empty() && body.front() == ' ') body.erase(0, 1);
      table.metadata.push_back(body);
      continue;
    }
    const auto cells = split(line, ',');
    if (!header_seen) {
      const int k_max = (static_cast<int>(cells.size()) - 7) / 2;
      if (k_max < 0 || cells != series_columns(k_max)) {
        throw ValidationError("csv line " + std::to_string(lineno) + ": unexpected header '" + line + "'");
      }
      table.k_max = k_max;
      header_seen = true;
      continue;
    }
    if (cells.size() != static_cast<std::size_t>(7 + 2 * table.k_max)) {
      throw ValidationError("csv line " + std::to_string(lineno) + ": wrong number of columns");
    }
    ObservableSample<double> s;
    std::size_t c = 0;
    s.t = to_double(cells[c++], lineno);
    s.a_x = to_double(cells[c++], lineno);
    s.a_y = to_double(cells[c++], lineno);
    s.intensity = to_double(cells[c++], lineno);
    for (int k = 0; k < table.k_max; ++k) {
      Bunching<double> b;
      b.magnitude = to_double(cells[c++], lineno);
      b.phase = to_double(cells[c++], lineno);
      s.bunching.push_back(b);
    }
    s.dispersion = to_double(cells[c++], lineno);
    s.energy = to_double(cells[c++], lineno);
    s.momentum = to_double(cells[c++], lineno);
    table.samples.push_back(std::move(s));
  }
  if (!header_seen) throw ValidationError("csv has no header");
  return table;
}

SeriesTable read_series_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  return read_series_csv(in);
}

void write_report_csv(std::ostream& out, const ErrorReport& report, const std::vector<std::string>& metadata) {
  for (const auto& m : metadata) out << "# " << m << '\n';
  out << "observable,t_min,t_max,points,max_rel_error,residual_exponent,tolerance,status\n";
  for (const auto& r : report.rows) {
    out << r.observable << ',' << format_number(r.t_min) << ',' << format_number(r.t_max) << ',' << r.points
        << ',' << format_number(r.max_relative_error) << ',' << format_number(r.residual_exponent) << ','
        << (r.tolerance ? format_number(*r.tolerance) : std::string("none")) << ','
        << (!r.tolerance ? "info" : (r.passed ? "pass" : "fail")) << '\n';
  }
}

}  // namespace fel
