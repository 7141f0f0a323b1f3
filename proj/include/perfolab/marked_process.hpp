#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "perfolab/geometry.hpp"

namespace perfolab {

/// Bad user input: invalid parameters, divergent moments, malformed files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A request that would exceed a configured resource cap.
class ResourceRefusal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// -- random numbers ----------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state);

/// Seed for stream `stream` of master seed `master`; independent of call order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  using result_type = std::uint64_t;
  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open0() { return 1.0 - uniform(); }
  double normal();
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t s_[4];
};

// -- marks -------------------------------------------------------------------

enum class MarkKind { constant, pareto, lognormal };

struct MarkDistribution {
  MarkKind kind = MarkKind::pareto;
  // constant: p1 = c.  pareto: p1 = x_m, p2 = a.  lognormal: p1 = mu, p2 = sigma.
  double p1 = 1.0;
  double p2 = 2.5;

  static MarkDistribution constant(double c);
  static MarkDistribution pareto(double x_m, double a);
  static MarkDistribution lognormal(double mu, double sigma);

  double draw(Rng& rng) const;
  void validate() const;
  bool operator==(const MarkDistribution&) const = default;
};

const char* to_string(MarkKind k);
MarkKind mark_kind_from_string(const std::string& s);

/// Closed-form <rho^q>. Throws ConfigError when the moment diverges.
double mark_moment(const MarkDistribution& dist, double q);

// -- realizations ------------------------------------------------------------

struct MarkedPoint {
  PointD z;  // lattice coordinates
  double rho = 0.0;
  bool operator==(const MarkedPoint&) const = default;
};

struct MarkedRealization {
  double epsilon = 0.1;
  double lambda = 1.0;
  double beta = 0.5;
  Domain domain;
  MarkDistribution mark_dist;
  std::uint64_t seed = 0;
  std::vector<MarkedPoint> points;

  int dim() const { return domain.dim; }
  std::size_t size() const { return points.size(); }
  bool operator==(const MarkedRealization&) const = default;
};

struct SampleOptions {
  double max_expected_count = 1e7;
};

/// Poisson(lambda |D| / eps^d) points uniform in (1/eps) D with i.i.d. marks, sorted by rho.
MarkedRealization sample(const Domain& domain, double lambda, double epsilon, const MarkDistribution& dist,
                         std::uint64_t seed, double beta = 0.5, const SampleOptions& opts = {});

/// eps^{d/(d-2)}: ratio of physical hole radius to mark.
double hole_scale(double epsilon, int d);

struct HoleSystem {
  const MarkedRealization* realization = nullptr;
  double scale = 0.0;
  std::vector<Ball> balls;
};

HoleSystem holes(const MarkedRealization& r);

/// Indices whose nearest other point (lattice distance) is at least eta.
std::vector<std::size_t> thin(const MarkedRealization& r, double eta);

/// N^eps(E): points with eps z in E (E in physical coordinates).
std::size_t count_in(const MarkedRealization& r, const Domain& region);
std::size_t count_in(const MarkedRealization& r, const Ball& region);

}  // namespace perfolab
