// spinpath command line: theory | run | spectrum | verify

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "spinpath/errors.hpp"
#include "spinpath/runner.hpp"
#include "spinpath/trace_io.hpp"

using namespace spinpath;

namespace {

const std::vector<std::pair<std::string, std::string>> kFlags = {
    {"variant", "radial | pure_sphere (run only)"},
    {"mixture", "p:gamma[,p:gamma...]"},
    {"n", "dimension N"},
    {"seeds", "comma-separated disorder seeds"},
    {"k", "radial steps"},
    {"epsilon", "Rayleigh slack"},
    {"tau", "sphere step (pure_sphere)"},
    {"steps", "sphere iterations"},
    {"q", "overlap of the spectrum point"},
    {"beta", "inverse temperature"},
    {"output_dir", "output directory (default $SPINPATH_OUTPUT_DIR)"},
    {"format", "csv | json"},
    {"threads", "concurrent seeds, 0 = all cores"},
    {"power_iters_max", "power iteration cap"},
    {"rayleigh_check", "0/1, dense fallback"},
    {"random_v0", "0/1"},
    {"include_eigenvalues", "0/1"},
    {"memory_budget_mb", "disorder memory budget"},
    {"on_spectral_failure", "stop | continue"},
};

struct Collected {
  std::string config_file;
  std::map<std::string, std::string> values;
};

void add_config_flags(CLI::App* sub, Collected& c, const std::vector<std::string>& keys) {
  sub->add_option("--config", c.config_file, "key=value config file")->check(CLI::ExistingFile);
  for (const auto& [key, help] : kFlags) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) continue;
    std::string names = "--" + key;
    if (key.find('_') != std::string::npos) {
      std::string dashed = key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      names += ",--" + dashed;
    }
    sub->add_option_function<std::string>(names, [&c, key](const std::string& v) { c.values[key] = v; }, help);
  }
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Config file entries first, command line flags override.
ExperimentConfig build_config(const Collected& c, const std::string& forced_variant) {
  std::vector<std::string> problems;
  std::vector<ConfigEntry> entries;
  if (!c.config_file.empty()) entries = tokenize_config(slurp(c.config_file), problems, c.config_file);
  for (const auto& [key, value] : c.values) {
    std::erase_if(entries, [&](const ConfigEntry& e) { return e.key == key; });
    entries.push_back({key, value, "--" + key});
  }
  if (!forced_variant.empty()) {
    const auto it = std::find_if(entries.begin(), entries.end(), [](const ConfigEntry& e) { return e.key == "variant"; });
    if (it == entries.end()) {
      entries.push_back({"variant", forced_variant, "subcommand"});
    } else if (it->value != forced_variant) {
      problems.push_back(it->origin + ": variant=" + it->value + " conflicts with the '" + forced_variant +
                         "' subcommand");
    }
  }
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

int run_config(const ExperimentConfig& cfg) {
  const auto result = run_experiment(cfg);
  std::cout << result.summary.dump(2) << '\n';
  if (result.exit_code != kExitOk) {
    std::cerr << "spinpath: one or more seeds failed (see " << (cfg.output_dir / "summary.json").string() << ")\n";
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hessian descent paths for mixed spherical spin glasses"};
  app.require_subcommand(1);

  Collected theory, run, spectrum;
  auto* theory_cmd = app.add_subcommand("theory", "analytic quantities of a mixture");
  add_config_flags(theory_cmd, theory, {"mixture", "beta", "output_dir"});
  auto* run_cmd = app.add_subcommand("run", "radial or pure_sphere paths over seeds");
  add_config_flags(run_cmd, run,
                   {"variant", "mixture", "n", "seeds", "k", "epsilon", "tau", "steps", "output_dir", "format",
                    "threads", "power_iters_max", "rayleigh_check", "random_v0", "memory_budget_mb",
                    "on_spectral_failure"});
  auto* spectrum_cmd = app.add_subcommand("spectrum", "projected Hessian spectrum at a point of overlap q");
  add_config_flags(spectrum_cmd, spectrum,
                   {"mixture", "n", "seeds", "epsilon", "q", "output_dir", "threads", "include_eigenvalues",
                    "memory_budget_mb"});

  auto* verify_cmd = app.add_subcommand("verify", "recheck a radial trace against fresh derivatives");
  std::string trace_file, path_file, mixture_text;
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  verify_cmd->add_option("--trace", trace_file, "X.trace.csv")->required();
  verify_cmd->add_option("--path", path_file, "X.path.csv (default: inferred from --trace)");
  verify_cmd->add_option("--mixture", mixture_text, "disorder mixture (default: from the path file)");
  verify_cmd->add_option("--n", n, "disorder dimension (default: from the path file)");
  verify_cmd->add_option("--seed", seed, "disorder seed (default: from the path file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*theory_cmd) {
      auto cfg = build_config(theory, "theory");
      return run_config(cfg);
    }
    if (*run_cmd) {
      if (!run.values.count("variant")) {
        // default variant unless the config file names one
        bool in_file = false;
        if (!run.config_file.empty()) {
          std::vector<std::string> ignored;
          for (const auto& e : tokenize_config(slurp(run.config_file), ignored)) in_file |= e.key == "variant";
        }
        if (!in_file) run.values["variant"] = "radial";
      }
      auto cfg = build_config(run, "");
      if (cfg.variant != Variant::Radial && cfg.variant != Variant::PureSphere) {
        throw ConfigError({"run handles variant radial or pure_sphere; use the '" + to_string(cfg.variant) +
                           "' subcommand"});
      }
      return run_config(cfg);
    }
    if (*spectrum_cmd) {
      auto cfg = build_config(spectrum, "spectrum");
      return run_config(cfg);
    }
    if (*verify_cmd) {
      if (path_file.empty()) {
        std::string name = trace_file;
        const std::string suffix = ".trace.csv";
        if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
          throw ArgumentError("cannot infer --path from " + trace_file);
        }
        path_file = name.replace(name.size() - suffix.size(), suffix.size(), ".path.csv");
      }
      const PathPoints meta = read_path_points(path_file);
      const Mixture m = Mixture::parse(mixture_text.empty() ? meta.mixture : mixture_text);
      const Disorder d = sample_disorder(m, n.value_or(meta.n), seed.value_or(meta.seed));
      const Verdict v = verify_trace(trace_file, path_file, d);
      std::cout << v.to_json().dump(2) << '\n';
      return v.passed ? kExitOk : kExitValidation;
    }
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "spinpath: " << p << '\n';
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "spinpath: " << e.what() << '\n';
    return kExitIo;
  } catch (const SpectralFailure& e) {
    std::cerr << "spinpath: " << e.what() << '\n';
    return kExitSpectral;
  } catch (const std::exception& e) {
    std::cerr << "spinpath: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}
