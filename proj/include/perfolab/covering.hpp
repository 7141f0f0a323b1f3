#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "perfolab/geometry.hpp"
#include "perfolab/marked_process.hpp"

namespace perfolab {

/// delta = min(beta / (2 (d-2) (d-2+beta)), beta / (2d)).
double default_delta(double beta, int d);

struct CoveringParams {
  double theta = 1.25;
  double alpha = 1.25 * 1.25 * 1.25 * 1.25;
  double delta = 1.0 / 12.0;
  int max_T_iterations = 64;
  /// Grid cell from the 90th percentile radius instead of twice the maximum.
  bool adaptive_cells = true;

  static CoveringParams defaults(double beta, int d);
  static CoveringParams with_theta(double theta, double delta);
  void validate() const;
  bool operator==(const CoveringParams&) const = default;
};

/// Raised when the merging map has not reached a fixed point within the cap.
class NonStabilizationError : public std::runtime_error {
 public:
  NonStabilizationError(const std::string& what, int stage, int iterations)
      : std::runtime_error(what), stage(stage), iterations(iterations) {}
  int stage;
  int iterations;
};

inline constexpr int kLowestClass = -3;

/// Radius band of a physical hole radius: [eps^{1-delta k}, eps^{1-delta(k+1)}) for k >= -2,
/// and (0, eps^{1+2 delta}) for k = -3.
int class_index(double physical_radius, double epsilon, double delta);

/// Smallest k with 1 - delta (k+1) < d/(d-2) - d/(d-2+beta).
int theoretical_k_max(double delta, int d, double beta);

struct ClassPartition {
  std::vector<int> class_of;  // per point
  int k_max = kLowestClass;
  int k_max_bound = kLowestClass;

  /// Members of class k in index order (empty if none).
  std::vector<std::size_t> members(int k) const;
  std::map<int, std::vector<std::size_t>> classes() const;
};

ClassPartition classify(const MarkedRealization& r, double delta);

/// Canonical total order: rho ascending, then index ascending.
bool canonical_less(const MarkedRealization& r, std::size_t i, std::size_t j);

/// Working state of the merging map. Radii are physical (eps^{d/(d-2)} R_i),
/// indexed by global point index; 0 marks an absorbed point.
struct MergedState {
  std::vector<double> radius;
  std::vector<std::size_t> absorbed_by;  // direct absorber, or self
  int iterations = 0;
  std::size_t max_group_size = 1;
};

MergedState initial_state(const HoleSystem& holes);

/// Connected components of members under alpha-dilated intersection of their
/// working balls. Zero-radius members are excluded. Groups are listed by
/// smallest member; members are sorted.
std::vector<std::vector<std::size_t>> connectivity_classes(std::span<const std::size_t> members,
                                                           std::span<const double> radii, double alpha,
                                                           const HoleSystem& holes, bool adaptive_cells = true);

/// One application of the merging map. Returns the number of groups merged.
std::size_t apply_T(std::span<const std::size_t> members, MergedState& state, double alpha,
                    const MarkedRealization& r, const HoleSystem& holes, bool adaptive_cells = true);

/// Applies the map until no radius changes. `iterations` counts applications
/// including the final unchanged one. Throws NonStabilizationError at the cap.
int iterate_to_fixed_point(std::span<const std::size_t> members, MergedState& state, double alpha,
                           const MarkedRealization& r, const HoleSystem& holes, int cap,
                           bool adaptive_cells = true, int stage = 0);

struct MergeHierarchy {
  std::vector<double> radius;               // final physical working radius, 0 if absorbed
  std::vector<std::size_t> absorbed_by;     // direct absorber, or self
  std::vector<double> tilde_lambda;         // radius / hole radius for survivors, 0 otherwise
  std::map<int, std::vector<std::size_t>> tilde;  // surviving members per class
  std::vector<int> iterations_per_stage;    // stages k = -2 .. k_max + 1
  std::size_t max_group_size = 1;
  double max_tilde_lambda = 1.0;

  /// Survivor whose final ball contains the original hole of i.
  std::size_t final_survivor(std::size_t i) const;
};

MergeHierarchy merge_hierarchy(const ClassPartition& partition, const MarkedRealization& r,
                               const HoleSystem& holes, const CoveringParams& params);

/// Ball around hole j with radius scaled by `factor` relative to the hole.
inline Ball dilated_hole(const HoleSystem& h, std::size_t j, double factor) {
  return Ball(h.balls[j].center, factor * h.balls[j].radius);
}

/// Union of anchor balls, each minus a list of subtracted balls.
class SymbolicESet {
 public:
  struct Entry {
    Ball anchor;
    std::size_t member = 0;
    int stage = 0;
    std::vector<Ball> subtracted;
  };

  void add_anchor(const Ball& anchor, std::size_t member, int stage);
  /// Removes `b` from every anchor it meets.
  void subtract(const Ball& b);
  /// Some anchor contains b and b misses all of that anchor's subtracted balls.
  bool contains(const Ball& b) const;

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  const SpatialIndex& index() const;
  std::vector<Entry> entries_;
  mutable std::vector<Ball> anchors_;
  mutable std::optional<SpatialIndex> index_;
};

struct FamilyMember {
  std::size_t index = 0;
  double lambda = 1.0;
  bool operator==(const FamilyMember&) const = default;
};

struct FamilyStage {
  std::map<int, std::vector<FamilyMember>> families;  // k = -3 .. k_max
  SymbolicESet e_minus2;   // E_{-2}
  SymbolicESet e_final;    // E_{-3}
  std::vector<std::size_t> tilde_j_minus3;
  std::vector<std::size_t> good_candidates;  // I_{-3}^g
  std::vector<std::size_t> k_eps;            // K^eps
  std::vector<std::size_t> n_eps;            // I_{-3}^g \ K^eps
};

FamilyStage build_families(const MergeHierarchy& merged, const ClassPartition& partition, const MarkedRealization& r,
                           const HoleSystem& holes, const CoveringParams& params);

struct BadAssignment {
  std::map<std::size_t, int> k_of;               // bad point -> minimal family index
  std::map<std::size_t, std::size_t> witness;    // bad point -> containing member of J_k
};

BadAssignment assign_bad(const std::map<int, std::vector<FamilyMember>>& families, const HoleSystem& holes,
                         bool adaptive_cells = true);

struct CoveringResult {
  CoveringParams params;
  int k_max = kLowestClass;
  int k_max_bound = kLowestClass;
  std::vector<int> class_of;
  std::vector<std::size_t> good;
  std::map<int, std::vector<FamilyMember>> families;
  std::map<std::size_t, int> assignment;
  std::map<std::size_t, std::size_t> witness;
  std::vector<std::size_t> k_eps;
  std::vector<std::size_t> uncovered;
  // Step-1 survivors: index -> (physical radius, tilde lambda).
  std::map<std::size_t, double> survivor_radius;
  std::map<std::size_t, double> tilde_lambda;
  std::vector<std::size_t> absorbed_by;
  std::vector<int> iterations_per_stage;
  std::size_t max_group_size = 1;
  double lambda_emp = 1.0;
  double max_tilde_lambda = 1.0;

  /// log10 of (2 alpha M)^{(k_max+3) M} with M the largest merged group.
  double log10_tilde_lambda_bound() const;
  std::size_t family_size() const;
  bool operator==(const CoveringResult&) const = default;
};

struct DerivedSets {
  std::vector<Ball> h_good;     // holes of n^eps
  std::vector<Ball> h_bad;      // holes of the bad set
  std::vector<Ball> h_bar_bad;  // lambda-dilated family balls
  std::vector<Ball> d_bad;      // theta lambda-dilated family balls
};

DerivedSets derived_sets(const CoveringResult& cov, const HoleSystem& holes);

CoveringResult cover(const MarkedRealization& r, const CoveringParams& params);

}  // namespace perfolab
