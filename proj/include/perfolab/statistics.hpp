#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfolab/covering.hpp"
#include "perfolab/marked_process.hpp"
#include "perfolab/verifier.hpp"

namespace perfolab {

/// zeta(x) = prod_k (1 - ((x_k - c_k)/w)^2)^2 on the cube |x_k - c_k| < w, zero outside.
struct BumpFunction {
  PointD center = PointD{0.0, 0.0, 0.0};
  double half_width = 0.25;

  double operator()(const PointD& x) const;
  /// Closed form (16 w / 15)^d.
  double integral() const;
  /// Throws ConfigError unless the support lies inside the domain.
  void check_support(const Domain& domain) const;
};

// -- single-scene estimators --------------------------------------------------

double estimate_density(const MarkedRealization& r);

/// C_d eps^d sum rho^{d-2} / |D|.
double estimate_capacity_density(const MarkedRealization& r, double c_d);

struct BadSetMetrics {
  double vol_Db = 0.0;  // sum of ball volumes, an upper bound on |D_b|
  double eps_d_bad = 0.0;
  double eps_d_K = 0.0;
  double eps_d_good = 0.0;
};

BadSetMetrics bad_set_metrics(const CoveringResult& cov, const MarkedRealization& r);

/// Per class k >= -2: component size -> count for alpha-dilated original holes of I_k u I_{k-1}.
std::map<int, std::map<std::size_t, std::size_t>> cluster_statistics(const MarkedRealization& r, double alpha,
                                                                     double delta);

/// Largest component size over all classes of a histogram.
std::size_t max_component(const std::map<int, std::map<std::size_t, std::size_t>>& hist);

/// Sum_i rho_i^{d-2} (eps^d / r^d) int_{B_r(eps z_i)} zeta with r = c eps (d = 3 only).
double weighted_indicator(const MarkedRealization& r, const BumpFunction& zeta, double c);

/// |B_1| lambda <rho^{d-2}> int zeta.
double weighted_indicator_limit(double lambda, const MarkDistribution& marks, const BumpFunction& zeta, int d);

/// int_{B_R(x)} f with the degree-5 product rule (Gauss-Legendre in radius and
/// polar cosine, uniform in azimuth). d = 3.
double ball_quadrature(const BumpFunction& f, const PointD& x, double radius);

/// eps^d #{z in Phi_{2 eta} : dist(eps z, D_b) <= eta eps}.
double small_distance_bad(const MarkedRealization& r, const CoveringResult& cov, double eta);

/// Poisson nearest-neighbour limit lambda |D| exp(-lambda |B_1| eta^d).
double thinned_density_limit(double lambda, const Domain& domain, double eta);

// -- sweeps ----------------------------------------------------------------

struct SweepConfig {
  std::vector<double> epsilons{0.1, 0.07, 0.05};
  int replicates = 50;
  std::uint64_t base_seed = 1;
  double lambda = 1.0;
  Domain domain = Domain::unit_cube(3);
  MarkDistribution marks = MarkDistribution::pareto(1.0, 2.5);
  double beta = 0.5;
  std::optional<CoveringParams> covering;
  bool run_covering = true;
  bool run_verifier = true;
  bool run_clusters = true;
  std::vector<int> chain_sizes{3};
  std::optional<double> cluster_alpha;  // default: covering alpha
  std::optional<BumpFunction> zeta;
  std::vector<double> zeta_radius_factors{1.0};
  std::vector<double> thinning_etas;
  double capacity_constant = 0.0;  // <= 0: 6 pi for d = 3
  int workers = 0;                 // <= 0: environment or hardware
  double max_expected_count = 1e7;

  CoveringParams covering_params() const;
  double c_d() const;
  void validate() const;
};

struct Summary {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  std::optional<double> target;
  std::string target_provenance;
};

/// Mean and standard error of independent values; stderr is 0 for n < 2.
Summary summarize(const std::vector<double>& values);

struct SceneResult {
  std::uint64_t seed = 0;
  bool ok = true;
  bool refused = false;
  std::string error;
  std::map<std::string, double> values;
  std::map<int, std::map<std::size_t, std::size_t>> clusters;
  std::vector<std::string> failed_properties;
};

struct EpsilonRow {
  double epsilon = 0.0;
  std::map<std::string, Summary> estimators;
  std::size_t failed_cells = 0;
  std::size_t refused_cells = 0;
  std::vector<std::string> errors;
  std::map<int, std::map<std::size_t, std::size_t>> histogram;  // class -> size -> count
  std::map<int, std::size_t> max_component;                     // class -> max size over scenes
  std::map<std::pair<int, int>, double> chain_frequency;        // (class, m) -> fraction of scenes
  std::vector<SceneResult> scenes;
};

struct SweepReport {
  SweepConfig config;
  std::vector<EpsilonRow> rows;
  bool any_failure() const;
  std::size_t total_refused() const;
};

/// Seed of replicate `rep` at grid position `eps_index`.
std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t eps_index, std::size_t rep);

/// Estimators of one realization; `cov` replaces the covering computed from cfg.
SceneResult evaluate_scene(const SweepConfig& cfg, const MarkedRealization& r, const CoveringResult* cov = nullptr);
SceneResult run_scene(const SweepConfig& cfg, double epsilon, std::uint64_t seed);

/// Runs every (epsilon, replicate) cell on a worker pool; the report does not
/// depend on scheduling.
SweepReport run_sweep(const SweepConfig& cfg);

/// Per-epsilon fraction of realizations with a component of size >= m in some class.
std::vector<double> chain_probability(const SweepConfig& cfg, int m, double alpha);

struct ThinningRow {
  double epsilon = 0.0;
  double eta = 0.0;
  Summary thinned_density;
  Summary small_distance_bad;
};

std::vector<ThinningRow> thinning_limits(const SweepConfig& cfg, const std::vector<double>& etas);

/// Worker count from PERFOLAB_WORKERS, else hardware concurrency.
int default_workers();

/// One row per (epsilon, estimator) with target and provenance.
std::string report_csv(const SweepReport& rep);
/// One row per epsilon, three columns (mean, stderr, n) per estimator.
std::string wide_csv(const SweepReport& rep);
/// Estimators that have a target: mean against target with its z-score and provenance.
std::string summary_csv(const SweepReport& rep);
std::string histogram_csv(const SweepReport& rep);
std::string chain_csv(const SweepReport& rep);

}  // namespace perfolab
