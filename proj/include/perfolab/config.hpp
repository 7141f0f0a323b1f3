#pragma once

#include <string>
#include <vector>

#include "perfolab/statistics.hpp"

namespace perfolab {

struct CapacitySettings {
  double a = 1.0;
  double r_max = 400.0;
  int resolution = 64;
  double tolerance = 1e-6;
};

struct RenderSettings {
  bool enabled = false;
  double offset = 0.0;  // physical x_d of the slice
  double width_px = 800.0;
};

struct RunConfig {
  SweepConfig sweep;
  std::string output_dir = ".";
  std::vector<std::string> formats{"csv", "json"};
  RenderSettings render;
  CapacitySettings capacity;

  /// Throws ConfigError on any inconsistency; run before sampling.
  void validate() const;
};

/// Parses a JSON config. Every key is optional, unknown keys are rejected.
RunConfig run_config_from_json(const std::string& text, const std::string& source = "<config>");
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace perfolab
