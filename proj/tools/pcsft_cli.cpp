// Command-line front end: one subcommand per experiment kind plus `validate`.
//
// Exit status: 0 all checks passed, 1 a tolerance check failed, 2 usage or
// configuration error, 3 numerical failure.

#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcsft/cli.hpp"
#include "pcsft/error.hpp"

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "flat key = value configuration file");
  const std::vector<std::pair<std::string, std::string>> flags{
      {"seed", "master seed (required)"},
      {"out", "output directory (default: $PCSFT_OUT_DIR or ./pcsft_out)"},
      {"trials", "trial or sample count"},
      {"epsilon", "background field strength"},
      {"threshold", "detector threshold d"},
      {"angles", "comma-separated angles; multiples of pi allowed, e.g. pi/8"},
      {"dim", "Hilbert space dimension"},
      {"workers", "worker threads (0 = hardware); does not change any output"},
      {"source", "chsh: field|lhv|singlet; kolmogorov: lhv|field|singlet|file"},
      {"table", "kolmogorov: JSON frequency table or trial CSV"},
      {"flat-sum", "triangle: angle sum of a flat triangle"},
      {"t", "dynamics: comparison time"},
      {"dt", "dynamics: integrator step"},
      {"horizon", "dynamics: drift window"},
      {"policy", "keep-singles|keep-all"},
  };
  for (const auto& [name, help] : flags) {
    cmd->add_option_function<std::string>(
        "--" + name, [&o, name = name](const std::string& v) { o.values[name] = v; }, help);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical random-field experiments: Born averages, dynamics, Hessians, correlations, detection"};
  app.require_subcommand(1);

  const std::vector<std::string> kinds{"born", "dynamics", "hessian", "epr", "chsh", "kolmogorov", "triangle"};
  std::map<std::string, Overrides> overrides;
  for (const auto& k : kinds) add_common(app.add_subcommand(k, "run the " + k + " experiment"), overrides[k]);
  auto* validate_cmd = app.add_subcommand("validate", "check a configuration without running it");
  add_common(validate_cmd, overrides["validate"]);
  std::string validate_kind;
  validate_cmd->add_option("--kind", validate_kind, "experiment kind (else taken from the config file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const Overrides& o = overrides[name];

  pcsft::cli::ExperimentConfig config;
  std::vector<std::string> diagnostics;
  if (!o.config.empty()) pcsft::cli::apply_config_file(config, o.config, diagnostics);
  if (name != "validate") {
    if (config.kind && pcsft::cli::to_string(*config.kind) != name) {
      diagnostics.push_back("config file kind '" + pcsft::cli::to_string(*config.kind) + "' does not match subcommand '" +
                            name + "'");
    }
    pcsft::cli::apply_setting(config, "kind", name, diagnostics);
  } else if (!validate_kind.empty()) {
    pcsft::cli::apply_setting(config, "kind", validate_kind, diagnostics);
  }
  for (const auto& [key, value] : o.values) pcsft::cli::apply_setting(config, key, value, diagnostics);
  const auto checks = pcsft::cli::validate(config);
  diagnostics.insert(diagnostics.end(), checks.begin(), checks.end());

  if (name == "validate") {
    for (const auto& d : diagnostics) std::cout << "error: " << d << "\n";
    if (diagnostics.empty()) std::cout << "configuration is valid\n";
    return diagnostics.empty() ? 0 : 2;
  }
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics) std::cerr << "error: " << d << "\n";
    return 2;
  }

  if (config.out_dir.empty()) {
    const char* env = std::getenv("PCSFT_OUT_DIR");
    config.out_dir = env && *env ? env : "pcsft_out";
  }

  try {
    const auto outcome = pcsft::cli::run(config);
    pcsft::cli::write_artifacts(config.out_dir, config, outcome);
    std::cout << name << ": " << (outcome.passed ? "pass" : "FAIL") << " (artifacts in " << config.out_dir << ")\n";
    if (outcome.results.contains("values") && outcome.results["values"].contains("classification")) {
      std::cout << "classification: " << outcome.results["values"]["classification"].get<std::string>() << "\n";
    }
    return outcome.passed ? 0 : 1;
  } catch (const pcsft::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
