#pragma once

// Experiment runner behind the command-line tool: configuration parsing and
// validation, one driver per experiment kind, and artifact writing.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcsft/detection.hpp"
#include "pcsft/serialize.hpp"

namespace pcsft::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { kBorn, kDynamics, kHessian, kEpr, kChsh, kKolmogorov, kTriangle };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> kind_from_string(const std::string& s);

/// Unset optionals fall back to per-kind defaults at run time.
struct ExperimentConfig {
  std::optional<ExperimentKind> kind;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dim;
  std::optional<double> epsilon;
  std::optional<double> threshold;
  std::optional<std::vector<double>> angles;
  std::optional<std::size_t> trials;
  std::optional<double> time;     ///< dynamics: comparison time t
  std::optional<double> dt;       ///< dynamics: integrator step
  std::optional<double> horizon;  ///< dynamics: drift window [0, horizon]
  std::optional<std::string> source;  ///< chsh / kolmogorov data source
  std::optional<std::string> table;   ///< kolmogorov: JSON table or trial CSV
  std::optional<double> flat_sum;     ///< triangle
  std::optional<PostSelection> policy;
  std::string out_dir;
  unsigned workers = 0;  ///< execution only; never part of the artifacts
};

/// Accepts plain numbers and multiples of pi: "0.5", "pi/4", "-3pi/8", "3*pi/8".
std::optional<double> parse_angle(const std::string& text);

/// Sets one key; problems are appended to `diagnostics`.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value,
                   std::vector<std::string>& diagnostics);

/// Flat "key = value" lines; '#' starts a comment.
void apply_config_text(ExperimentConfig& config, const std::string& text, std::vector<std::string>& diagnostics);
void apply_config_file(ExperimentConfig& config, const std::filesystem::path& path,
                       std::vector<std::string>& diagnostics);

/// Schema and range checks only; every violation is listed.
std::vector<std::string> validate(const ExperimentConfig& config);

/// The configuration with defaults filled in, as recorded in the manifest.
Json resolved_config(const ExperimentConfig& config);

struct CsvArtifact {
  std::string name;
  std::string content;
};

struct RunOutcome {
  Json results;
  std::vector<CsvArtifact> plots;
  bool passed = true;
};

/// Runs a validated configuration. Throws DomainError for invalid input.
RunOutcome run(const ExperimentConfig& config);

/// Writes results.json, the plot CSVs and manifest.json into `dir`.
void write_artifacts(const std::filesystem::path& dir, const ExperimentConfig& config, const RunOutcome& outcome);

}  // namespace pcsft::cli
