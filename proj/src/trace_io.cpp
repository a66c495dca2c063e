#include "spinpath/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spinpath/errors.hpp"

namespace spinpath {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const std::filesystem::path& path, int line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw IoError(path.string() + ":" + std::to_string(line) + ": invalid number '" + s + "'");
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(const PathTrace& trace, std::ostream& os) {
  os << kTraceHeader << '\n';
  for (const auto& s : trace.steps) {
    os << s.step << ',' << format_number(s.q) << ',' << format_number(s.energy_per_spin) << ','
       << format_number(s.benchmark) << ',' << format_number(s.gap) << ',' << format_number(s.rayleigh) << ','
       << format_number(s.grad_dot) << ',' << (s.used_fallback ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const PathTrace& trace, const std::filesystem::path& path) {
  auto os = open_out(path);
  write_trace_csv(trace, os);
  if (!os) throw IoError("write failed for " + path.string());
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader) throw IoError(path.string() + ": missing trace header");
  std::vector<TraceRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 8) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 8 columns");
    TraceRow r;
    r.step = static_cast<int>(parse_number(cells[0], path, lineno));
    r.q = parse_number(cells[1], path, lineno);
    r.energy_per_spin = parse_number(cells[2], path, lineno);
    r.benchmark_eh = parse_number(cells[3], path, lineno);
    r.gap = parse_number(cells[4], path, lineno);
    r.rayleigh = parse_number(cells[5], path, lineno);
    r.grad_dot = parse_number(cells[6], path, lineno);
    r.used_fallback = parse_number(cells[7], path, lineno) != 0.0;
    rows.push_back(r);
  }
  return rows;
}

void write_path_points(const PathTrace& trace, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "# mixture=" << trace.mixture << " n=" << trace.n << " seed=" << trace.disorder_seed << " k=" << trace.k
     << " epsilon=" << format_number(trace.epsilon) << '\n';
  os << "step";
  for (int i = 0; i < trace.n; ++i) os << ",sigma_" << i;
  for (int i = 0; i < trace.n; ++i) os << ",v_" << i;
  os << '\n';
  for (const auto& s : trace.steps) {
    os << s.step;
    for (double c : s.point) os << ',' << format_number(c);
    if (s.direction.size() == trace.n) {
      for (double c : s.direction) os << ',' << format_number(c);
    } else {
      for (int i = 0; i < trace.n; ++i) os << ',';
    }
    os << '\n';
  }
  if (!os) throw IoError("write failed for " + path.string());
}

PathPoints read_path_points(const std::filesystem::path& path) {
  auto is = open_in(path);
  PathPoints out;
  std::string line;
  int lineno = 0;
  bool have_meta = false;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ms(line.substr(1));
      std::string kv;
      while (ms >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "mixture") out.mixture = val;
        else if (key == "n") out.n = std::stoi(val);
        else if (key == "seed") out.seed = std::stoull(val);
        else if (key == "k") out.k = std::stoi(val);
        else if (key == "epsilon") out.epsilon = parse_number(val, path, lineno);
      }
      have_meta = true;
      continue;
    }
    if (!have_header) {
      have_header = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != static_cast<std::size_t>(2 * out.n + 1)) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(2 * out.n + 1) +
                    " columns");
    }
    Vector p(out.n);
    for (int i = 0; i < out.n; ++i) p[i] = parse_number(cells[1 + i], path, lineno);
    Vector v;
    if (!cells[1 + out.n].empty()) {
      v.resize(out.n);
      for (int i = 0; i < out.n; ++i) v[i] = parse_number(cells[1 + out.n + i], path, lineno);
    }
    out.points.push_back(std::move(p));
    out.directions.push_back(std::move(v));
  }
  if (!have_meta || out.n < 2) throw IoError(path.string() + ": missing path metadata");
  return out;
}

namespace {
nlohmann::json number_or_null(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }
}  // namespace

nlohmann::json trace_to_json(const PathTrace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : trace.steps) {
    rows.push_back({{"step", s.step},
                    {"q", s.q},
                    {"energy_per_spin", s.energy_per_spin},
                    {"benchmark_eh", s.benchmark},
                    {"gap", s.gap},
                    {"rayleigh", number_or_null(s.rayleigh)},
                    {"grad_dot", number_or_null(s.grad_dot)},
                    {"used_fallback", s.used_fallback ? 1 : 0}});
  }
  return {{"mixture", trace.mixture}, {"n", trace.n}, {"seed", trace.disorder_seed},
          {"k", trace.k},             {"epsilon", trace.epsilon}, {"rows", rows}};
}

void write_sphere_csv(const SphereTrace& trace, std::ostream& os) {
  os << "step,energy_per_spin,rayleigh,grad_dot,used_fallback,third_derivative\n";
  for (const auto& s : trace.steps) {
    os << s.step << ',' << format_number(s.energy_per_spin) << ',' << format_number(s.rayleigh) << ','
       << format_number(s.grad_dot) << ',' << (s.used_fallback ? 1 : 0) << ',' << format_number(s.third_derivative)
       << '\n';
  }
}

nlohmann::json sphere_to_json(const SphereTrace& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : trace.steps) {
    rows.push_back({{"step", s.step},
                    {"energy_per_spin", s.energy_per_spin},
                    {"rayleigh", number_or_null(s.rayleigh)},
                    {"grad_dot", number_or_null(s.grad_dot)},
                    {"used_fallback", s.used_fallback ? 1 : 0},
                    {"third_derivative", s.third_derivative}});
  }
  return {{"p", trace.p}, {"n", trace.n}, {"tau", trace.tau}, {"epsilon", trace.epsilon}, {"rows", rows}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

}  // namespace spinpath
