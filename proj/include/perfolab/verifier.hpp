#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfolab/covering.hpp"
#include "perfolab/marked_process.hpp"

namespace perfolab {

enum class PropertyClass { by_construction, asymptotic };

const char* to_string(PropertyClass c);

struct Violation {
  std::size_t a = 0;
  std::optional<std::size_t> b;
  double margin = 0.0;  // negative: depth of the violation
  std::string detail;
};

struct PropertyRecord {
  std::string name;
  PropertyClass cls = PropertyClass::by_construction;
  bool pass = true;
  std::vector<Violation> violations;
  double threshold = 0.0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t checked = 0;
  std::map<std::string, double> metrics;

  void add(Violation v);
  void observe(double margin) { worst_margin = std::min(worst_margin, margin); }
};

struct VerificationReport {
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  std::vector<PropertyRecord> properties;

  /// All by-construction properties pass.
  bool pass() const;
  const PropertyRecord* find(const std::string& name) const;
  std::vector<std::string> failed_by_construction() const;
};

// Each check recomputes the geometry it needs from the realization and never
// uses SpatialIndex; pair searches are exact sort-and-sweep scans along x.

PropertyRecord check_coverage(const CoveringResult& cov, const MarkedRealization& r);
PropertyRecord check_within_family(const CoveringResult& cov, const MarkedRealization& r, double theta);
PropertyRecord check_cross_family(const CoveringResult& cov, const MarkedRealization& r, double theta);
PropertyRecord check_good_set(const CoveringResult& cov, const MarkedRealization& r, double delta);
PropertyRecord check_radius_bound(const CoveringResult& cov, const MarkedRealization& r, double delta,
                                  double lambda_emp);
PropertyRecord check_partition(const CoveringResult& cov, const MarkedRealization& r);
PropertyRecord check_lambda_bounds(const CoveringResult& cov, const MarkedRealization& r, double theta);
PropertyRecord check_step1_containment(const CoveringResult& cov, const MarkedRealization& r);
PropertyRecord check_step1_disjointness(const CoveringResult& cov, const MarkedRealization& r, double alpha);
PropertyRecord check_iteration_cap(const CoveringResult& cov, int cap);

/// Throws ConfigError when the covering does not index this realization.
void check_shape(const CoveringResult& cov, const MarkedRealization& r);

VerificationReport verify_all(const CoveringResult& cov, const MarkedRealization& r, const CoveringParams& params);

/// Pairs (i < j) of balls whose x-extents overlap (closed); a superset of
/// every touching or overlapping pair.
std::vector<std::pair<std::size_t, std::size_t>> sweep_candidates(const std::vector<Ball>& balls);

}  // namespace perfolab
