#pragma once

// Scenario files: declarative run descriptions consumed by the CLI and the
// verification suite.  YAML and JSON carry the same schema; the raw file text
// is kept verbatim for provenance embedding.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nullcone/metric.hpp"

namespace nullcone {

enum class JetProvider { kAnalytic, kFiniteDifference };

struct Scenario {
  std::string name;
  std::string family = "minkowski";
  FamilyParams params;
  JetProvider provider = JetProvider::kAnalytic;
  double fd_step = 1e-4;
  Budget budget;

  std::vector<SpacetimePoint> base_points;
  int grid_level = 3;
  double s_max = 3.0;
  std::vector<double> t_levels;
  std::vector<double> delta_ladder;
  double i_star_estimate = 0.0;  // 0: measure before flux runs
  double match_tol = 1e-8;
  double eps_inclusion = 0.01;

  int slice_resolution = 16;
  std::optional<std::array<Interval, 3>> slice_box;
  double energy_t_lo = 0.0;
  double energy_t_hi = 0.5;
  int energy_t_steps = 10;
  double rho = 0.5;

  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int workers = 0;

  std::string raw_text;  // the scenario file, byte for byte

  void validate() const;  // throws ScenarioInvalid
};

// Loads and validates; dispatches YAML / JSON on the file extension.
Scenario load_scenario(const std::string& path);

// Parses the given text as YAML (json=false) or JSON (json=true).
Scenario parse_scenario(const std::string& text, bool json);

// Builds the metric field the scenario describes (FD-wrapped if requested).
std::shared_ptr<const MetricField> scenario_field(const Scenario& sc);

// FNV-1a of the raw scenario text.
std::uint64_t scenario_hash(const Scenario& sc);

}  // namespace nullcone
