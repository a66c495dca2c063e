#pragma once

// Trace serialization.
//
// Trace CSV: header `step,q,energy_per_spin,benchmark_eh,gap,rayleigh,grad_dot,used_fallback`,
// one row per path step; benchmark_eh holds -E_H(q). Values are printed with
// 17 significant digits; unchecked quantities are written as `nan`.
//
// Path CSV (companion file consumed by verification): `#`-prefixed metadata
// lines (`# mixture=... n=... seed=... k=... epsilon=...`), then a header
// `step,sigma_0..sigma_{N-1},v_0..v_{N-1}` and one row per step. The final
// step has no direction and leaves the v columns empty.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinpath/optimizer.hpp"

namespace spinpath {

struct TraceRow {
  int step = 0;
  double q = 0.0;
  double energy_per_spin = 0.0;
  double benchmark_eh = 0.0;
  double gap = 0.0;
  double rayleigh = 0.0;
  double grad_dot = 0.0;
  bool used_fallback = false;
};

struct PathPoints {
  std::string mixture;
  int n = 0;
  std::uint64_t seed = 0;
  int k = 0;
  double epsilon = 0.0;
  std::vector<Vector> points;
  std::vector<Vector> directions;  // empty vector where no direction was taken
};

inline constexpr const char* kTraceHeader = "step,q,energy_per_spin,benchmark_eh,gap,rayleigh,grad_dot,used_fallback";

std::string format_number(double v);

void write_trace_csv(const PathTrace& trace, std::ostream& os);
void write_trace_csv(const PathTrace& trace, const std::filesystem::path& path);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

void write_path_points(const PathTrace& trace, const std::filesystem::path& path);
PathPoints read_path_points(const std::filesystem::path& path);

nlohmann::json trace_to_json(const PathTrace& trace);

void write_sphere_csv(const SphereTrace& trace, std::ostream& os);
nlohmann::json sphere_to_json(const SphereTrace& trace);

/// Writes `text` to `path`, throwing IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace spinpath
