#include "spinpath/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "spinpath/errors.hpp"
#include "spinpath/spectrum.hpp"
#include "spinpath/trace_io.hpp"

namespace spinpath {

namespace {

const std::set<std::string> kKnownKeys = {
    "variant", "mixture", "n",         "seeds",          "k",               "epsilon",
    "tau",     "steps",   "q",         "beta",           "output_dir",      "format",
    "threads", "power_iters_max", "rayleigh_check", "random_v0", "include_eigenvalues", "memory_budget_mb",
    "on_spectral_failure"};

std::optional<long long> parse_int(const std::string& s) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::optional<double> parse_real(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::optional<bool> parse_flag(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  return std::nullopt;
}

std::optional<std::vector<std::uint64_t>> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ',')) {
    if (item.empty() || item[0] == '-') return std::nullopt;
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(item, &used));
      if (used != item.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "spinpath-out";
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Radial: return "radial";
    case Variant::PureSphere: return "pure_sphere";
    case Variant::Spectrum: return "spectrum";
    case Variant::Theory: return "theory";
  }
  return "unknown";
}

ExperimentConfig parse_config_entries(const std::vector<ConfigEntry>& entries) {
  ExperimentConfig cfg;
  std::vector<std::string> problems;
  std::map<std::string, const ConfigEntry*> seen;
  auto complain = [&](const ConfigEntry& e, const std::string& what) { problems.push_back(e.origin + ": " + what); };

  for (const auto& e : entries) {
    if (!kKnownKeys.count(e.key)) {
      complain(e, "unknown key '" + e.key + "'");
      continue;
    }
    if (seen.count(e.key)) {
      complain(e, "duplicate key '" + e.key + "' (first set at " + seen[e.key]->origin + ")");
      continue;
    }
    seen[e.key] = &e;
  }

  auto get = [&](const std::string& key) -> const ConfigEntry* {
    const auto it = seen.find(key);
    return it == seen.end() ? nullptr : it->second;
  };
  auto int_key = [&](const std::string& key, long long lo, long long hi, auto& target) {
    if (const auto* e = get(key)) {
      const auto v = parse_int(e->value);
      if (!v || *v < lo || *v > hi) {
        complain(*e, key + " must be an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got '" +
                         e->value + "'");
      } else {
        target = static_cast<std::remove_reference_t<decltype(target)>>(*v);
      }
    }
  };
  auto real_key = [&](const std::string& key, auto valid, const std::string& rule, auto& target) {
    if (const auto* e = get(key)) {
      const auto v = parse_real(e->value);
      if (!v || !valid(*v)) {
        complain(*e, key + " " + rule + ", got '" + e->value + "'");
      } else {
        target = *v;
      }
    }
  };
  auto flag_key = [&](const std::string& key, bool& target) {
    if (const auto* e = get(key)) {
      const auto v = parse_flag(e->value);
      if (!v) complain(*e, key + " must be 0 or 1, got '" + e->value + "'");
      else target = *v;
    }
  };

  bool variant_ok = false;
  if (const auto* e = get("variant")) {
    const std::map<std::string, Variant> names = {{"radial", Variant::Radial},
                                                  {"pure_sphere", Variant::PureSphere},
                                                  {"spectrum", Variant::Spectrum},
                                                  {"theory", Variant::Theory}};
    const auto it = names.find(e->value);
    if (it == names.end()) {
      complain(*e, "variant must be one of radial, pure_sphere, spectrum, theory; got '" + e->value + "'");
    } else {
      cfg.variant = it->second;
      variant_ok = true;
    }
  } else {
    problems.push_back("missing required key 'variant'");
  }

  if (const auto* e = get("mixture")) {
    try {
      cfg.mixture = Mixture::parse(e->value);
    } catch (const ArgumentError& err) {
      complain(*e, err.what());
    }
  } else {
    problems.push_back("missing required key 'mixture'");
  }

  const bool theory = variant_ok && cfg.variant == Variant::Theory;
  const bool radial = variant_ok && cfg.variant == Variant::Radial;
  const bool sphere = variant_ok && cfg.variant == Variant::PureSphere;
  const bool spectrum = variant_ok && cfg.variant == Variant::Spectrum;

  int_key("n", 2, 1000000, cfg.n);
  if (!get("n") && variant_ok && !theory) problems.push_back("missing required key 'n' for variant " + to_string(cfg.variant));

  if (const auto* e = get("seeds")) {
    const auto v = parse_seeds(e->value);
    if (!v || v->empty()) complain(*e, "seeds must be a nonempty comma-separated list of unsigned integers");
    else cfg.seeds = *v;
  } else if (variant_ok && !theory) {
    problems.push_back("missing required key 'seeds' for variant " + to_string(cfg.variant));
  }

  int_key("k", 2, 100000, cfg.k);
  if (radial && !get("k")) problems.push_back("missing required key 'k' for variant radial");

  real_key("epsilon", [](double v) { return v > 0.0; }, "must be a positive real", cfg.epsilon);
  if ((radial || sphere || spectrum) && !get("epsilon")) {
    problems.push_back("missing required key 'epsilon' for variant " + to_string(cfg.variant));
  }

  if (const auto* e = get("tau")) {
    if (variant_ok && !sphere) {
      complain(*e, "tau is only valid for variant pure_sphere");
    } else {
      double tau = 0.0;
      real_key("tau", [](double v) { return v > 0.0 && v <= 0.5; }, "must lie in (0, 0.5]", tau);
      if (parse_real(e->value) && tau > 0.0) cfg.tau = tau;
    }
  } else if (sphere) {
    problems.push_back("missing required key 'tau' for variant pure_sphere");
  }
  if (sphere && cfg.mixture && !cfg.mixture->is_pure()) {
    problems.push_back("variant pure_sphere needs a pure mixture (single degree), got " + cfg.mixture->to_string());
  }

  int_key("steps", 1, 10000000, cfg.steps);
  real_key("q", [](double v) { return v > 0.0 && v <= 1.0; }, "must lie in (0, 1]", cfg.q);
  real_key("beta", [](double v) { return v > 0.0; }, "must be a positive real", cfg.beta);
  int_key("threads", 0, 4096, cfg.threads);
  int_key("power_iters_max", 1, 100000000, cfg.power_iters_max);
  flag_key("rayleigh_check", cfg.rayleigh_check);
  flag_key("random_v0", cfg.random_v0);
  flag_key("include_eigenvalues", cfg.include_eigenvalues);
  long long budget_mb = static_cast<long long>(kDefaultMemoryBudget >> 20);
  int_key("memory_budget_mb", 1, 1LL << 40, budget_mb);
  cfg.memory_budget = static_cast<std::uint64_t>(budget_mb) << 20;

  if (const auto* e = get("on_spectral_failure")) {
    if (e->value == "stop") cfg.stop_on_spectral_failure = true;
    else if (e->value == "continue") cfg.stop_on_spectral_failure = false;
    else complain(*e, "on_spectral_failure must be stop or continue, got '" + e->value + "'");
  }
  if (const auto* e = get("format")) {
    if (e->value == "csv") cfg.format = OutputFormat::Csv;
    else if (e->value == "json") cfg.format = OutputFormat::Json;
    else complain(*e, "format must be csv or json, got '" + e->value + "'");
  }
  if (const auto* e = get("output_dir")) {
    if (e->value.empty()) complain(*e, "output_dir must not be empty");
    cfg.output_dir = e->value;
  } else {
    cfg.output_dir = default_output_dir();
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

std::vector<ConfigEntry> tokenize_config(const std::string& text, std::vector<std::string>& problems,
                                         const std::string& source) {
  std::vector<ConfigEntry> entries;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream tokens(line);
    std::string tok;
    const std::string origin = (source.empty() ? "" : source + " ") + "line " + std::to_string(lineno);
    while (tokens >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos || eq == 0) {
        problems.push_back(origin + ": expected key=value, got '" + tok + "'");
        continue;
      }
      entries.push_back({tok.substr(0, eq), tok.substr(eq + 1), origin});
    }
  }
  return entries;
}

ExperimentConfig parse_config(const std::string& text) {
  std::vector<std::string> problems;
  const auto entries = tokenize_config(text, problems);
  if (!problems.empty()) {
    try {
      parse_config_entries(entries);
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    throw ConfigError(std::move(problems));
  }
  return parse_config_entries(entries);
}

std::uint64_t algorithm_seed(std::uint64_t disorder_seed) {
  // splitmix64 finalizer
  std::uint64_t z = disorder_seed + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

AlgorithmParams algorithm_params(const ExperimentConfig& cfg, std::uint64_t seed) {
  AlgorithmParams p;
  p.k = cfg.k;
  p.epsilon = cfg.epsilon;
  p.power_iters_max = cfg.power_iters_max;
  p.rayleigh_check = cfg.rayleigh_check;
  p.random_v0 = cfg.random_v0;
  p.stop_on_spectral_failure = cfg.stop_on_spectral_failure;
  p.rng_seed = algorithm_seed(seed);
  return p;
}

std::filesystem::path trace_file_name(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::string ext = cfg.format == OutputFormat::Json ? ".json" : ".csv";
  const std::string stem = "seed_" + std::to_string(seed);
  switch (cfg.variant) {
    case Variant::Radial: return stem + ".trace" + ext;
    case Variant::PureSphere: return stem + ".sphere" + ext;
    case Variant::Spectrum: return stem + ".spectrum.json";
    case Variant::Theory: return "theory.json";
  }
  return stem;
}

std::filesystem::path path_file_name(std::uint64_t seed) { return "seed_" + std::to_string(seed) + ".path.csv"; }

nlohmann::json theory_report(const Mixture& mixture, double beta) {
  nlohmann::json out;
  out["mixture"] = mixture.to_string();
  out["beta"] = beta;
  const auto rsb = classify_full_rsb(mixture);
  out["is_full_rsb"] = rsb.is_full_rsb;
  out["rsb_margin"] = rsb.margin;
  nlohmann::json curve = nlohmann::json::array();
  for (int i = 0; i <= 100; ++i) {
    const double q = i / 100.0;
    curve.push_back({{"q", q}, {"e_h", energy_benchmark(mixture, q)}});
  }
  out["e_h_curve"] = curve;
  out["e_h_1"] = energy_benchmark(mixture, 1.0);
  if (mixture.is_pure()) out["e_infinity"] = e_infinity(mixture.degree());
  const auto parisi = q_parisi(mixture, beta);
  out["q_p"] = parisi.q_p;
  if (rsb.is_full_rsb) {
    const double pxp = crisanti_sommers_at_xp(mixture, beta);
    const double tap = tap_rhs(mixture, beta);
    out["p_xp"] = pxp;
    out["tap_rhs"] = tap;
    out["identity_gap"] = std::abs(pxp - tap);
  } else {
    out["p_xp"] = nullptr;
    out["tap_rhs"] = nullptr;
    out["identity_gap"] = nullptr;
  }
  const auto rs = rs_condition(mixture, beta);
  out["rs_condition"] = {{"holds", rs.holds}, {"worst", rs.worst}, {"argmax_s", rs.argmax_s}};
  return out;
}

namespace {

struct SeedOutcome {
  nlohmann::json record;
  double seconds = 0.0;
  int exit_code = kExitOk;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

SeedOutcome run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedOutcome out;
  out.record["seed"] = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const Disorder d = sample_disorder(*cfg.mixture, cfg.n, seed, cfg.memory_budget);
    const auto params = algorithm_params(cfg, seed);
    const auto file = cfg.output_dir / trace_file_name(cfg, seed);
    switch (cfg.variant) {
      case Variant::Radial: {
        const PathTrace trace = run_radial_path(d, params);
        if (cfg.format == OutputFormat::Json) write_json(file, trace_to_json(trace));
        else write_trace_csv(trace, file);
        write_path_points(trace, cfg.output_dir / path_file_name(seed));
        out.record["trace_file"] = file.filename().string();
        out.record["final_energy"] = trace.final_energy();
        out.record["sup_gap"] = trace.sup_gap();
        out.record["fallback_count"] = trace.fallback_count();
        out.record["target_misses"] = trace.miss_count();
        out.record["benchmark_final"] = -energy_benchmark(d.mixture(), 1.0);
        out.record["status"] = trace.failure || trace.miss_count() > 0 ? "spectral_failure" : "ok";
        if (trace.failure) out.record["error"] = *trace.failure;
        if (trace.failure || trace.miss_count() > 0) out.exit_code = kExitSpectral;
        break;
      }
      case Variant::PureSphere: {
        const int p = d.mixture().degree();
        const SphereTrace trace = run_pure_sphere(d, p, *cfg.tau, cfg.steps, params);
        if (cfg.format == OutputFormat::Json) {
          write_json(file, sphere_to_json(trace));
        } else {
          std::ostringstream os;
          write_sphere_csv(trace, os);
          write_text(file, os.str());
        }
        double c3 = 0.0;
        int fallbacks = 0;
        for (const auto& s : trace.steps) {
          c3 = std::max(c3, s.third_derivative);
          fallbacks += s.used_fallback ? 1 : 0;
        }
        out.record["trace_file"] = file.filename().string();
        out.record["final_energy"] = trace.final_energy();
        out.record["fallback_count"] = fallbacks;
        out.record["target_misses"] = trace.miss_count();
        out.record["e_infinity"] = e_infinity(p) * d.mixture().gamma(p);
        if (!trace.failure) {
          const int k = static_cast<int>(trace.steps.size()) - 1;
          const double bound =
              sphere_recursion_bound(trace.steps.front().energy_per_spin, p, *cfg.tau, k, d.mixture().eval(1.0, 2),
                                     sphere_step_cushion(*cfg.tau, cfg.epsilon, c3));
          out.record["recursion_bound"] = bound;
          out.record["recursion_bound_holds"] = trace.final_energy() <= bound;
        }
        out.record["status"] = trace.failure || trace.miss_count() > 0 ? "spectral_failure" : "ok";
        if (trace.failure) out.record["error"] = *trace.failure;
        if (trace.failure || trace.miss_count() > 0) out.exit_code = kExitSpectral;
        break;
      }
      case Variant::Spectrum: {
        const Vector x = Vector::Constant(cfg.n, std::sqrt(cfg.q));
        const SpectrumReport report = analyze_hessian(d, x, cfg.epsilon);
        write_json(file, to_json(report, cfg.include_eigenvalues));
        out.record["report_file"] = file.filename().string();
        out.record["lambda_min"] = report.lambda_min;
        out.record["edge"] = -2.0 * std::sqrt(d.mixture().eval(report.q, 2));
        out.record["count_below_soft"] = report.count_below_soft;
        out.record["count_below_hard"] = report.count_below_hard;
        out.record["ks_distance"] = report.ks_distance;
        out.record["status"] = "ok";
        break;
      }
      case Variant::Theory: break;
    }
  } catch (const IoError& e) {
    out.record["status"] = "io_error";
    out.record["error"] = e.what();
    out.exit_code = kExitIo;
  } catch (const std::exception& e) {
    out.record["status"] = "error";
    out.record["error"] = e.what();
    out.exit_code = kExitValidation;
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (!cfg.mixture) throw ArgumentError("run_experiment: configuration has no mixture");
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());

  ExperimentResult result;
  result.summary["variant"] = to_string(cfg.variant);
  result.summary["mixture"] = cfg.mixture->to_string();

  if (cfg.variant == Variant::Theory) {
    const auto report = theory_report(*cfg.mixture, cfg.beta);
    write_json(cfg.output_dir / "theory.json", report);
    result.summary["theory"] = report;
  } else {
    result.summary["n"] = cfg.n;
    if (cfg.variant == Variant::Radial) result.summary["k"] = cfg.k;
    if (cfg.variant == Variant::PureSphere) {
      result.summary["tau"] = *cfg.tau;
      result.summary["steps"] = cfg.steps;
    }
    if (cfg.variant == Variant::Spectrum) result.summary["q"] = cfg.q;
    result.summary["epsilon"] = cfg.epsilon;

    std::vector<SeedOutcome> outcomes(cfg.seeds.size());
    const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    const int workers = std::min<int>(cfg.threads > 0 ? cfg.threads : hw, static_cast<int>(cfg.seeds.size()));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) outcomes[i] = run_seed(cfg, cfg.seeds[i]);
    };
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    }

    nlohmann::json seeds = nlohmann::json::array();
    std::vector<double> finals;
    double sup_gap = -std::numeric_limits<double>::infinity();
    int completed = 0;
    for (const auto& o : outcomes) {
      auto rec = o.record;
      rec["wall_seconds"] = o.seconds;
      seeds.push_back(rec);
      result.exit_code = std::max(result.exit_code, o.exit_code);
      if (o.record.value("status", "") == "ok") ++completed;
      if (o.record.contains("final_energy")) finals.push_back(o.record["final_energy"].get<double>());
      if (o.record.contains("sup_gap")) sup_gap = std::max(sup_gap, o.record["sup_gap"].get<double>());
    }
    result.summary["seeds"] = seeds;
    result.summary["completed"] = completed;
    if (!finals.empty()) {
      result.summary["median_final_energy"] = median(finals);
      result.summary["min_final_energy"] = *std::min_element(finals.begin(), finals.end());
      result.summary["max_final_energy"] = *std::max_element(finals.begin(), finals.end());
    }
    if (cfg.variant == Variant::Radial && std::isfinite(sup_gap)) result.summary["sup_gap"] = sup_gap;
  }
  result.summary["exit_code"] = result.exit_code;
  write_json(cfg.output_dir / "summary.json", result.summary);
  return result;
}

nlohmann::json Verdict::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : violations) v.push_back({{"step", x.step}, {"check", x.check}, {"detail", x.detail}});
  return {{"passed", passed}, {"complete", complete}, {"steps_checked", steps_checked}, {"violations", v}};
}

Verdict verify_trace(const std::filesystem::path& trace_file, const std::filesystem::path& path_file,
                     const Disorder& d) {
  const auto rows = read_trace_csv(trace_file);
  const PathPoints pts = read_path_points(path_file);

  if (!(Mixture::parse(pts.mixture) == d.mixture()) || pts.n != d.n() || pts.seed != d.seed()) {
    throw ArgumentError("verify_trace: trace was produced for mixture=" + pts.mixture + " n=" + std::to_string(pts.n) +
                        " seed=" + std::to_string(pts.seed) + ", not for the supplied disorder (mixture=" +
                        d.mixture().to_string() + " n=" + std::to_string(d.n()) +
                        " seed=" + std::to_string(d.seed()) + ")");
  }

  Verdict verdict;
  auto fail = [&](int step, std::string check, std::string detail) {
    verdict.violations.push_back({step, std::move(check), std::move(detail)});
  };
  const int k = pts.k;
  const double nd = static_cast<double>(d.n());
  const double stride = std::sqrt(nd / k);

  if (rows.size() != pts.points.size()) {
    fail(-1, "row_count", std::to_string(rows.size()) + " trace rows vs " + std::to_string(pts.points.size()) + " points");
  }
  verdict.complete = static_cast<int>(pts.points.size()) == k + 1 && rows.size() == pts.points.size();
  const std::size_t count = std::min(rows.size(), pts.points.size());

  for (std::size_t j = 0; j < count; ++j) {
    const int step = static_cast<int>(j);
    const TraceRow& row = rows[j];
    const Vector& sigma = pts.points[j];
    const Vector& v = pts.directions[j];
    ++verdict.steps_checked;
    const double q_expected = static_cast<double>(j) / k;

    if (row.step != step) fail(step, "step_index", "row has step " + std::to_string(row.step));
    if (std::abs(row.q - q_expected) > 1e-12) fail(step, "q_column", "q=" + format_number(row.q));
    const double q_actual = overlap_q(sigma);
    if (std::abs(q_actual - q_expected) > 1e-9 * std::max(q_expected, 1e-3)) {
      fail(step, "radial_norm", "|sigma|^2/N = " + format_number(q_actual) + ", expected " + format_number(q_expected));
    }

    const double fresh_energy = energy(d, sigma) / nd;
    if (std::abs(fresh_energy - row.energy_per_spin) > 1e-9 * (1.0 + std::abs(fresh_energy))) {
      fail(step, "energy", "recorded " + format_number(row.energy_per_spin) + ", recomputed " + format_number(fresh_energy));
    }
    const double eh = energy_benchmark(d.mixture(), std::clamp(q_expected, 0.0, 1.0));
    if (std::abs(row.benchmark_eh + eh) > 1e-9 || std::abs(row.gap - (row.energy_per_spin + eh)) > 1e-9) {
      fail(step, "benchmark", "benchmark_eh/gap columns disagree with -E_H(q)");
    }

    if (j + 1 < pts.points.size()) {
      if (v.size() != d.n()) {
        fail(step, "direction", "missing direction");
        continue;
      }
      if (std::abs(v.norm() - 1.0) > 1e-12) fail(step, "unit_direction", "|v| = " + format_number(v.norm()));
      const Vector expected_next = sigma + stride * v;
      if ((expected_next - pts.points[j + 1]).norm() > 1e-9 * std::sqrt(nd)) {
        fail(step, "increment", "sigma_{j+1} != sigma_j + sqrt(N/k) v_j");
      }
    }

    // Conditions are checked on interior steps; step 0 starts at the origin and the endpoint has no direction.
    if (j == 0 || j + 1 >= pts.points.size() || v.size() != d.n()) continue;
    if (std::abs(v.dot(sigma)) > 1e-10 * sigma.norm()) fail(step, "orthogonality", "v.sigma = " + format_number(v.dot(sigma)));

    const ProjectedDerivatives pd = projected_derivatives(d, sigma);
    const double fresh_rayleigh = v.dot(pd.hessian * v);
    const double fresh_grad_dot = v.dot(pd.gradient);
    const double target = rayleigh_target(d.mixture().eval(std::min(pd.q, 1.0), 2), pts.epsilon);
    const double tol_h = 1e-9 * (1.0 + pd.hessian.norm() / std::sqrt(nd));
    const double tol_g = 1e-9 * (1.0 + pd.gradient.norm());
    if (fresh_rayleigh > target + tol_h) {
      fail(step, "rayleigh_condition",
           "v^T Hess v = " + format_number(fresh_rayleigh) + " > " + format_number(target));
    }
    if (fresh_grad_dot > tol_g) fail(step, "gradient_condition", "v . grad = " + format_number(fresh_grad_dot) + " > 0");
    if (std::isnan(row.rayleigh) || std::abs(row.rayleigh - fresh_rayleigh) > 1e-8 * (1.0 + std::abs(fresh_rayleigh))) {
      fail(step, "recorded_rayleigh",
           "recorded " + format_number(row.rayleigh) + ", recomputed " + format_number(fresh_rayleigh));
    }
    if (std::isnan(row.grad_dot) || std::abs(row.grad_dot - fresh_grad_dot) > 1e-8 * (1.0 + std::abs(fresh_grad_dot))) {
      fail(step, "recorded_grad_dot",
           "recorded " + format_number(row.grad_dot) + ", recomputed " + format_number(fresh_grad_dot));
    }
    if (!(row.rayleigh <= target + tol_h)) fail(step, "recorded_rayleigh_condition", "recorded value violates the target");
    if (!(row.grad_dot <= tol_g)) fail(step, "recorded_gradient_condition", "recorded value is positive");
  }
  verdict.passed = verdict.violations.empty();
  return verdict;
}

Verdict verify_trace(const std::filesystem::path& trace_file, const Disorder& d) {
  std::string name = trace_file.filename().string();
  const std::string suffix = ".trace.csv";
  if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
    throw ArgumentError("verify_trace: cannot infer the path file from " + name);
  }
  name.replace(name.size() - suffix.size(), suffix.size(), ".path.csv");
  return verify_trace(trace_file, trace_file.parent_path() / name, d);
}

}  // namespace spinpath
