#pragma once

#include <string>
#include <vector>

#include "perfolab/covering.hpp"
#include "perfolab/marked_process.hpp"
#include "perfolab/statistics.hpp"
#include "perfolab/verifier.hpp"

namespace perfolab {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kFormatVersion = 1;

std::string read_file(const std::string& path);
/// Writes atomically through a temporary sibling file.
void write_file(const std::string& path, const std::string& contents);

// Malformed input raises ConfigError naming `source` and the offending JSON path.

std::string scene_to_json(const MarkedRealization& r);
MarkedRealization scene_from_json(const std::string& text, const std::string& source = "<scene>");

std::string covering_to_json(const CoveringResult& cov);
CoveringResult covering_from_json(const std::string& text, const std::string& source = "<covering>");

std::string report_to_json(const VerificationReport& rep);
/// Rows seed,epsilon,property,class,pass,violations,checked,worst_margin.
std::string verification_csv(const std::vector<VerificationReport>& reps);

std::string sweep_to_json(const SweepReport& rep);

}  // namespace perfolab
