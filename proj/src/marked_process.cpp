#include "perfolab/marked_process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace perfolab {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t s = seed;
  for (auto& w : s_) w = splitmix64(s);
}

static inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

Rng::result_type Rng::operator()() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  // Box-Muller, one value per call so draws do not depend on hidden state.
  const double u1 = uniform_open0();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(*this);
}

MarkDistribution MarkDistribution::constant(double c) { return {MarkKind::constant, c, 0.0}; }
MarkDistribution MarkDistribution::pareto(double x_m, double a) { return {MarkKind::pareto, x_m, a}; }
MarkDistribution MarkDistribution::lognormal(double mu, double sigma) { return {MarkKind::lognormal, mu, sigma}; }

void MarkDistribution::validate() const {
  switch (kind) {
    case MarkKind::constant:
      if (!(p1 > 0.0) || !std::isfinite(p1)) throw ConfigError("constant mark must be positive");
      break;
    case MarkKind::pareto:
      if (!(p1 > 0.0) || !(p2 > 0.0) || !std::isfinite(p1) || !std::isfinite(p2))
        throw ConfigError("pareto marks need x_m > 0 and a > 0");
      break;
    case MarkKind::lognormal:
      if (!std::isfinite(p1) || !(p2 > 0.0) || !std::isfinite(p2)) throw ConfigError("lognormal marks need sigma > 0");
      break;
  }
}

double MarkDistribution::draw(Rng& rng) const {
  switch (kind) {
    case MarkKind::constant:
      return p1;
    case MarkKind::pareto:
      return p1 * std::pow(rng.uniform_open0(), -1.0 / p2);
    case MarkKind::lognormal:
      return std::exp(p1 + p2 * rng.normal());
  }
  return p1;
}

const char* to_string(MarkKind k) {
  switch (k) {
    case MarkKind::constant:
      return "constant";
    case MarkKind::pareto:
      return "pareto";
    case MarkKind::lognormal:
      return "lognormal";
  }
  return "?";
}

MarkKind mark_kind_from_string(const std::string& s) {
  if (s == "constant") return MarkKind::constant;
  if (s == "pareto") return MarkKind::pareto;
  if (s == "lognormal") return MarkKind::lognormal;
  throw ConfigError("unknown mark distribution '" + s + "'");
}

double mark_moment(const MarkDistribution& dist, double q) {
  dist.validate();
  switch (dist.kind) {
    case MarkKind::constant:
      return std::pow(dist.p1, q);
    case MarkKind::pareto:
      if (!(q < dist.p2))
        throw ConfigError("pareto moment of order " + std::to_string(q) + " diverges for a = " + std::to_string(dist.p2));
      return dist.p2 * std::pow(dist.p1, q) / (dist.p2 - q);
    case MarkKind::lognormal:
      return std::exp(q * dist.p1 + 0.5 * q * q * dist.p2 * dist.p2);
  }
  return 0.0;
}

double hole_scale(double epsilon, int d) { return std::pow(epsilon, static_cast<double>(d) / (d - 2)); }

MarkedRealization sample(const Domain& domain, double lambda, double epsilon, const MarkDistribution& dist,
                         std::uint64_t seed, double beta, const SampleOptions& opts) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
  if (domain.dim < 3 || domain.dim > kMaxDimension) throw ConfigError("dimension must be in [3, 8]");
  if (!(domain.extent > 0.0)) throw ConfigError("domain extent must be positive");
  dist.validate();
  mark_moment(dist, domain.dim - 2 + beta);

  const double expected = lambda * domain.volume() / std::pow(epsilon, domain.dim);
  if (expected > opts.max_expected_count)
    throw ResourceRefusal("expected point count " + std::to_string(expected) + " exceeds cap " +
                          std::to_string(opts.max_expected_count));

  MarkedRealization r;
  r.epsilon = epsilon;
  r.lambda = lambda;
  r.beta = beta;
  r.domain = domain;
  r.mark_dist = dist;
  r.seed = seed;

  Rng rng(seed);
  const std::uint64_t n = rng.poisson(expected);
  const Domain big = domain.scaled(1.0 / epsilon);
  const double h = big.extent;
  r.points.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    PointD z(domain.dim);
    do {
      for (int k = 0; k < domain.dim; ++k) z[k] = (2.0 * rng.uniform() - 1.0) * h;
    } while (!big.contains(z));
    r.points.push_back({z, dist.draw(rng)});
  }
  // Store in the canonical order (rho ascending, draw order on ties).
  std::stable_sort(r.points.begin(), r.points.end(),
                   [](const MarkedPoint& a, const MarkedPoint& b) { return a.rho < b.rho; });
  return r;
}

HoleSystem holes(const MarkedRealization& r) {
  HoleSystem h;
  h.realization = &r;
  h.scale = hole_scale(r.epsilon, r.dim());
  h.balls.reserve(r.points.size());
  for (const auto& p : r.points) h.balls.emplace_back(p.z.scaled(r.epsilon), h.scale * p.rho);
  return h;
}

std::vector<std::size_t> thin(const MarkedRealization& r, double eta) {
  if (!(eta > 0.0)) throw ConfigError("thinning distance must be positive");
  std::vector<Ball> balls;
  balls.reserve(r.points.size());
  for (const auto& p : r.points) balls.emplace_back(p.z, 0.5 * eta);
  const SpatialIndex index(balls, 1.0);
  std::vector<char> removed(balls.size(), 0);
  for (auto [i, j] : near_pairs(balls, 1.0, index)) removed[i] = removed[j] = 1;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < balls.size(); ++i)
    if (!removed[i]) kept.push_back(i);
  return kept;
}

std::size_t count_in(const MarkedRealization& r, const Domain& region) {
  std::size_t n = 0;
  for (const auto& p : r.points)
    if (region.contains(p.z.scaled(r.epsilon))) ++n;
  return n;
}

std::size_t count_in(const MarkedRealization& r, const Ball& region) {
  std::size_t n = 0;
  for (const auto& p : r.points)
    if (distance(p.z.scaled(r.epsilon), region.center) < region.radius) ++n;
  return n;
}

}  // namespace perfolab
