#pragma once

// Experiment orchestration: configuration parsing, per-seed fan-out, output
// files and trace verification.
//
// Configuration dialect: whitespace- or newline-separated `key=value` tokens,
// `#` starts a comment. Keys:
//   variant        radial | pure_sphere | spectrum | theory      (required)
//   mixture        p:gamma[,p:gamma...]                          (required)
//   n              dimension N                    (required unless theory)
//   seeds          comma-separated 64-bit seeds   (required unless theory)
//   k              radial steps                   (radial)
//   epsilon        Rayleigh slack                 (radial, pure_sphere, spectrum)
//   tau            sphere step                    (pure_sphere only)
//   steps          sphere iterations, default 200 (pure_sphere)
//   q              evaluation overlap, default 0.5 (spectrum)
//   beta           inverse temperature, default 2 (theory)
//   output_dir     default $SPINPATH_OUTPUT_DIR or ./spinpath-out
//   format         csv | json, trace file format, default csv
//   threads        concurrent seeds, 0 = available parallelism (default)
//   power_iters_max, rayleigh_check (0/1), random_v0 (0/1),
//   include_eigenvalues (0/1), memory_budget_mb,
//   on_spectral_failure  stop (default) | continue

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spinpath/hamiltonian.hpp"
#include "spinpath/mixture.hpp"
#include "spinpath/optimizer.hpp"

namespace spinpath {

enum class Variant { Radial, PureSphere, Spectrum, Theory };
enum class OutputFormat { Csv, Json };

std::string to_string(Variant v);

struct ExperimentConfig {
  Variant variant = Variant::Radial;
  std::optional<Mixture> mixture;
  int n = 0;
  int k = 0;
  double epsilon = 0.0;
  std::vector<std::uint64_t> seeds;
  std::optional<double> tau;
  int steps = 200;
  double q = 0.5;
  double beta = 2.0;
  std::filesystem::path output_dir;
  OutputFormat format = OutputFormat::Csv;
  int threads = 0;
  int power_iters_max = 500;
  bool rayleigh_check = true;
  bool random_v0 = false;
  bool include_eigenvalues = false;
  bool stop_on_spectral_failure = true;
  std::uint64_t memory_budget = kDefaultMemoryBudget;
};

inline constexpr const char* kOutputDirEnv = "SPINPATH_OUTPUT_DIR";

struct ConfigEntry {
  std::string key;
  std::string value;
  std::string origin;  // "line 3", "--epsilon", ...
};

/// Validates a set of key/value entries. Throws ConfigError listing every problem.
ExperimentConfig parse_config_entries(const std::vector<ConfigEntry>& entries);

/// Splits key=value text into entries tagged "line N" (prefixed by `source` when given).
/// Malformed tokens are appended to `problems`.
std::vector<ConfigEntry> tokenize_config(const std::string& text, std::vector<std::string>& problems,
                                         const std::string& source = "");

/// Parses the key=value dialect.
ExperimentConfig parse_config(const std::string& text);

/// Seed of the algorithm's own random stream for a given disorder seed.
std::uint64_t algorithm_seed(std::uint64_t disorder_seed);

AlgorithmParams algorithm_params(const ExperimentConfig& cfg, std::uint64_t seed);

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitSpectral = 2, kExitIo = 3 };

struct ExperimentResult {
  nlohmann::json summary;
  int exit_code = kExitOk;
};

/// Runs every seed (concurrently), writes per-seed files plus summary.json
/// into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Theory quantities for one mixture and inverse temperature.
nlohmann::json theory_report(const Mixture& mixture, double beta);

std::filesystem::path trace_file_name(const ExperimentConfig& cfg, std::uint64_t seed);
std::filesystem::path path_file_name(std::uint64_t seed);

struct Violation {
  int step = 0;
  std::string check;
  std::string detail;
};

struct Verdict {
  bool passed = false;
  /// false when the trace stops before step k (a run that hit a spectral failure)
  bool complete = false;
  int steps_checked = 0;
  std::vector<Violation> violations;

  nlohmann::json to_json() const;
};

/// Re-derives gradients and Hessians at every recorded point and re-checks the
/// direction conditions, the recorded values and the radial norms.
/// Throws ArgumentError when the files were produced for different disorder parameters.
Verdict verify_trace(const std::filesystem::path& trace_file, const std::filesystem::path& path_file,
                     const Disorder& d);

/// Companion path file inferred from the trace file name (`X.trace.csv` -> `X.path.csv`).
Verdict verify_trace(const std::filesystem::path& trace_file, const Disorder& d);

}  // namespace spinpath
