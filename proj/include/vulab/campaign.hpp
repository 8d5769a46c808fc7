#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vulab/json_io.hpp"

namespace vulab {

struct Radii {
  std::optional<double> eps;  // unset: model default radius
  std::optional<double> eps_v;
  std::optional<double> delta;
  std::optional<double> tilt_radius;
  bool operator==(const Radii&) const = default;
};

struct Grids {
  int resolution = 21;
  std::vector<double> t_grid;  // empty: 0.1·2⁻ᵏ, k = 0..10
  int dir_grid = 64;
  bool operator==(const Grids&) const = default;
};

struct Tolerances {
  double rank_tol = 1e-8;
  double tau = 1e-9;
  double subspace = 1e-8;
  double convexity = 1e-9;
  double little_oh = 1e-3;
  double conjugacy = 1e-3;
  double c11_refinement = 0.25;
  double chain = 1e-5;
  double taylor = 1e-9;
  double para_convexity = 1e-9;
  double moreau_gradient = 1e-5;
  double consistency = 1e-10;
  double duality = 1e-2;
  bool operator==(const Tolerances&) const = default;
};

struct ExperimentConfig {
  std::string problem;
  std::optional<std::vector<double>> base_point;
  Radii radii;
  Grids grids;
  Tolerances tolerances;
  std::vector<std::string> campaign;
  std::string output_dir = "vulab_out";
  bool deterministic = true;
  bool operator==(const ExperimentConfig&) const = default;
};

std::string report_schema_version();
const std::vector<std::string>& campaign_names();

/// Throws InvalidConfig naming the offending field path.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& cfg);
void validate(const ExperimentConfig& cfg);

enum class CheckStatus { Pass, Fail, Inconclusive, Skipped };
std::string to_string(CheckStatus s);

struct CheckRecord {
  std::string campaign;
  std::string check;
  CheckStatus status = CheckStatus::Pass;
  std::string reason;
};

struct RunResult {
  std::vector<CheckRecord> manifest;
  Json summaries = Json::object();  // campaign name → summary
  int exit_code = 0;
};

/// 0 all pass or skipped, 1 any failure, 2 any inconclusive and no failure.
int exit_code_for(const std::vector<CheckRecord>& manifest);

/// Runs the configured campaigns in order and writes summaries, CSV data,
/// manifest.json and metadata.json into `out_dir` (empty: cfg.output_dir).
RunResult run(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {});

}  // namespace vulab
