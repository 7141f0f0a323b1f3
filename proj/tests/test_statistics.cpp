#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "perfolab/statistics.hpp"

using namespace perfolab;
using perfolab::test::scene;

namespace {

SweepConfig light_config() {
  SweepConfig c;
  c.epsilons = {0.1};
  c.replicates = 1;
  c.run_covering = false;
  c.run_verifier = false;
  c.run_clusters = false;
  c.workers = 1;
  return c;
}

// Ordered-pair measure of {(x, y) in [0,L]^3 x [0,L]^3 : |x - y| < s} for s < L.
double cube_pair_measure(double L, double s) {
  const double pi = std::numbers::pi;
  return L * L * L * (4.0 * pi / 3.0) * s * s * s - L * L * (1.5 * pi) * std::pow(s, 4) +
         L * 1.6 * std::pow(s, 5) - std::pow(s, 6) / 6.0;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("density estimator") {
  MarkedRealization r = scene(0.1, {});
  CHECK(estimate_density(r) == 0.0);
  for (int i = 0; i < 1000; ++i) r.points.push_back({PointD{0, 0, 0}, 1.0});
  CHECK(estimate_density(r) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("capacity density") {
  const double c3 = 6.0 * std::numbers::pi;
  CHECK(estimate_capacity_density(scene(0.1, {}), c3) == 0.0);
  SUBCASE("constant marks reduce to C_d times the density") {
    const auto r = sample(Domain::unit_cube(3), 1.3, 0.1, MarkDistribution::constant(1.0), 4);
    CHECK(estimate_capacity_density(r, c3) == doctest::Approx(c3 * estimate_density(r) / r.domain.volume()));
  }
  SUBCASE("explicit sum") {
    const auto r = scene(0.1, {{{0, 0, 0}, 2}, {{1, 0, 0}, 3}});
    CHECK(estimate_capacity_density(r, c3) == doctest::Approx(c3 * 1e-3 * 5.0));
  }
  SUBCASE("targets") {
    SweepConfig c = light_config();
    c.marks = MarkDistribution::constant(1.0);
    CHECK(c.c_d() * c.lambda * mark_moment(c.marks, 1) == doctest::Approx(18.849556).epsilon(1e-7));
    c.marks = MarkDistribution::pareto(1.0, 2.5);
    CHECK(c.c_d() * c.lambda * mark_moment(c.marks, 1) == doctest::Approx(10.0 * std::numbers::pi));
  }
}

TEST_CASE("bad set metrics") {
  const CoveringParams p = CoveringParams::defaults(0.5, 3);
  SUBCASE("no bad holes") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{3, 0, 0}, 1}});
    const BadSetMetrics m = bad_set_metrics(cover(r, p), r);
    CHECK(m.vol_Db == 0.0);
    CHECK(m.eps_d_bad == 0.0);
    CHECK(m.eps_d_K == 0.0);
    CHECK(m.eps_d_good == doctest::Approx(2e-3));
  }
  SUBCASE("one family ball") {
    const auto r = scene(0.1, {{{0, 0, 0}, 70}});
    const CoveringResult c = cover(r, p);
    const double lam = c.families.at(-2)[0].lambda;
    CHECK(bad_set_metrics(c, r).vol_Db == doctest::Approx(ball_volume(p.theta * lam * 0.07, 3)));
  }
  SUBCASE("partition identity on seeded scenes") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const auto r = sample(Domain::unit_cube(3), 1.0, 0.1, MarkDistribution::pareto(1.0, 2.5), seed);
      const BadSetMetrics m = bad_set_metrics(cover(r, p), r);
      CHECK(m.eps_d_good + m.eps_d_bad == doctest::Approx(estimate_density(r)).epsilon(1e-14));
    }
  }
}

TEST_CASE("cluster statistics") {
  const double alpha = std::pow(1.25, 4);
  const double delta = 1.0 / 12.0;
  SUBCASE("separated scene has unit components") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{3, 0, 0}, 70}, {{0, 3, 0}, 90}});
    const auto h = cluster_statistics(r, alpha, delta);
    for (const auto& [k, sizes] : h)
      for (const auto& [size, count] : sizes) CHECK(size == 1);
    CHECK(max_component(h) == 1);
  }
  SUBCASE("two overlapping comparable balls") {
    const auto r = scene(0.1, {{{0, 0, 0}, 70}, {{1, 0, 0}, 75}});
    const auto h = cluster_statistics(r, alpha, delta);
    CHECK(h.at(-2).at(2) == 1);
    CHECK(max_component(h) == 2);
  }
  SUBCASE("balls two classes apart are never in one component") {
    const auto r = scene(0.1, {{{0, 0, 0}, 140}, {{0.5, 0, 0}, 85}});
    CHECK(max_component(cluster_statistics(r, alpha, delta)) == 1);
  }
  CHECK(max_component({}) == 0);
}

TEST_CASE("chain probability: m = 1, monotone in m") {
  SweepConfig c = light_config();
  c.epsilons = {0.2, 0.1};
  c.replicates = 20;
  const auto p1 = chain_probability(c, 1, 2.44140625);
  CHECK(p1 == std::vector<double>{1.0, 1.0});
  std::vector<double> prev = p1;
  for (int m = 2; m <= 4; ++m) {
    const auto pm = chain_probability(c, m, 2.44140625);
    for (std::size_t i = 0; i < pm.size(); ++i) CHECK(pm[i] <= prev[i]);
    prev = pm;
  }
}

TEST_CASE("pair probability matches the small-intensity expansion") {
  // Constant unit marks: all points in class -3 and two holes connect iff the
  // lattice distance is below s = 2 alpha eps^2. The expected number of pairs is
  // E = lambda^2 I(s) / 2 and P(some pair) = 1 - exp(-E) to leading order.
  SweepConfig c = light_config();
  c.marks = MarkDistribution::constant(1.0);
  c.lambda = 0.5;
  c.epsilons = {0.1};
  c.replicates = 2000;
  const double alpha = std::pow(1.25, 4);
  const double s = 2.0 * alpha * 0.01;
  const double E = 0.5 * c.lambda * c.lambda * cube_pair_measure(10.0, s);
  const double P = 1.0 - std::exp(-E);
  const double p = chain_probability(c, 2, alpha)[0];
  CHECK(std::abs(p - P) < 4.0 * std::sqrt(P * (1.0 - P) / c.replicates));
}

TEST_CASE("cube pair measure agrees with Monte Carlo") {
  Rng rng(1);
  const double L = 2.0, s = 0.7;
  const int n = 400000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double t = L * (rng.uniform() - rng.uniform());
      d2 += t * t;
    }
    hits += d2 < s * s;
  }
  const double mc = std::pow(L, 6) * hits / n;
  CHECK(mc == doctest::Approx(cube_pair_measure(L, s)).epsilon(0.02));
}

TEST_CASE("bump function") {
  const BumpFunction z{PointD{0.1, -0.1, 0.0}, 0.2};
  CHECK(z(z.center) == 1.0);
  CHECK(z(PointD{0.35, 0.0, 0.0}) == 0.0);
  CHECK(z(PointD{0.2, -0.1, 0.0}) == doctest::Approx(0.5625));
  // Composite Simpson on the one-dimensional profile.
  const int n = 2000;
  const double w = z.half_width;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double t = -w + 2.0 * w * i / n;
    const double u = 1.0 - (t / w) * (t / w);
    s += (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0)) * u * u;
  }
  s *= 2.0 * w / n / 3.0;
  CHECK(z.integral() == doctest::Approx(s * s * s).epsilon(1e-10));
  CHECK_NOTHROW(z.check_support(Domain::unit_cube(3)));
  CHECK_THROWS_AS((BumpFunction{PointD{0.4, 0, 0}, 0.2}.check_support(Domain::unit_cube(3))), ConfigError);
}

TEST_CASE("ball quadrature against a fine grid") {
  const BumpFunction z{PointD{0, 0, 0}, 0.25};
  for (const PointD x : {PointD{0, 0, 0}, PointD{0.05, 0.1, -0.02}}) {
    const double R = 0.02;
    const int n = 80;
    const double h = 2.0 * R / n;
    double grid = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const double a = -R + (i + 0.5) * h, b = -R + (j + 0.5) * h, c = -R + (k + 0.5) * h;
          if (a * a + b * b + c * c < R * R) grid += z(PointD{x[0] + a, x[1] + b, x[2] + c});
        }
    grid *= h * h * h;
    CHECK(ball_quadrature(z, x, R) == doctest::Approx(grid).epsilon(2e-3));
  }
}

TEST_CASE("weighted indicator") {
  const BumpFunction z{PointD{0, 0, 0}, 0.25};
  CHECK(weighted_indicator(scene(0.1, {}), z, 1.0) == 0.0);
  // Points outside the support contribute nothing.
  CHECK(weighted_indicator(scene(0.1, {{{4, 4, 4}, 2}, {{-4, 0, 0}, 3}}), z, 1.0) == 0.0);
  // One point at the bump centre: rho eps^3 / r^3 * int_{B_r} zeta, close to rho eps^3 |B_1|.
  const double v = weighted_indicator(scene(0.1, {{{0, 0, 0}, 2}}), z, 0.5);
  CHECK(v == doctest::Approx(2.0 * 1e-3 * unit_ball_volume(3)).epsilon(0.01));
  CHECK_THROWS_AS(weighted_indicator(scene(0.1, {}), z, 0.0), ConfigError);
  CHECK(weighted_indicator_limit(2.0, MarkDistribution::constant(1.0), z, 3) ==
        doctest::Approx(unit_ball_volume(3) * 2.0 * std::pow(16.0 * 0.25 / 15.0, 3)));
}

TEST_CASE("thinning estimators") {
  const auto r = sample(Domain::unit_cube(3), 1.0, 0.1, MarkDistribution::constant(1.0), 2);
  SweepConfig c = light_config();
  c.marks = MarkDistribution::constant(1.0);
  c.thinning_etas = {1e-9, 1000.0};
  const SceneResult s = evaluate_scene(c, r);
  REQUIRE(s.ok);
  CHECK(s.values.at("thinned_density[eta=1e-09]") == estimate_density(r));
  CHECK(s.values.at("thinned_density[eta=1000]") <= 1e-3);
  CHECK(thinned_density_limit(1.0, Domain::unit_cube(3), 0.0) == 1.0);
  CHECK(thinned_density_limit(2.0, Domain::unit_cube(3), 1.0) ==
        doctest::Approx(2.0 * std::exp(-2.0 * unit_ball_volume(3))));
}

TEST_CASE("small-distance bad count") {
  const CoveringParams p = CoveringParams::defaults(0.5, 3);
  SUBCASE("no family") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{3, 0, 0}, 1}});
    CHECK(small_distance_bad(r, cover(r, p), 0.5) == 0.0);
  }
  SUBCASE("a thinned point beside a D_b ball") {
    // The tiny point 2.5 lattice units from the rho 70 point lies in K, so both
    // centres sit inside their own D_b balls and count while they are 2 eta thinned.
    const auto r = scene(0.1, {{{0, 0, 0}, 70}, {{2.5, 0, 0}, 1}});
    const CoveringResult c = cover(r, p);
    REQUIRE(c.k_eps == std::vector<std::size_t>{1});
    CHECK(small_distance_bad(r, c, 1.2) == doctest::Approx(2e-3));
    CHECK(small_distance_bad(r, c, 0.1) == doctest::Approx(2e-3));
    CHECK(small_distance_bad(r, c, 1.5) == 0.0);  // 2 eta = 3 thins both points
  }
}

TEST_CASE("summaries") {
  const Summary s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(s.n == 4);
  CHECK(summarize({7.0}).stderr_ == 0.0);
  CHECK(summarize({}).n == 0);
}

TEST_CASE("sweep configuration validation") {
  SweepConfig c = light_config();
  c.epsilons = {0.05, 0.1};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = light_config();
  c.replicates = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = light_config();
  c.zeta = BumpFunction{PointD{0.4, 0, 0}, 0.2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = light_config();
  c.domain = Domain::unit_cube(4);
  CHECK_THROWS_AS(c.c_d(), ConfigError);
}

TEST_CASE("one-cell sweep equals the single scene") {
  SweepConfig c;
  c.epsilons = {0.1};
  c.replicates = 1;
  c.workers = 1;
  c.zeta = BumpFunction{};
  c.thinning_etas = {1.0};
  const SweepReport rep = run_sweep(c);
  REQUIRE(rep.rows.size() == 1);
  const SceneResult s = run_scene(c, 0.1, cell_seed(c.base_seed, 0, 0));
  REQUIRE(s.ok);
  const auto& est = rep.rows[0].estimators;
  CHECK(est.size() == s.values.size());
  for (const auto& [name, v] : s.values) {
    REQUIRE(est.count(name) == 1);
    CHECK(est.at(name).mean == v);
    CHECK(est.at(name).n == 1);
    CHECK(est.at(name).stderr_ == 0.0);
  }
  CHECK(est.at("density").target == doctest::Approx(1.0));
  CHECK(est.at("density").target_provenance == "lambda*|D|");
  CHECK(line_count(report_csv(rep)) == 1 + est.size());
  CHECK(line_count(wide_csv(rep)) == 2);
  CHECK(report_csv(rep).rfind("epsilon,estimator,mean,stderr,n,target,target_provenance\n", 0) == 0);
}

TEST_CASE("sweeps are deterministic and independent of the worker count") {
  SweepConfig c;
  c.epsilons = {0.15, 0.1};
  c.replicates = 4;
  c.thinning_etas = {0.8};
  c.workers = 1;
  const SweepReport a = run_sweep(c);
  c.workers = 3;
  const SweepReport b = run_sweep(c);
  CHECK(report_csv(a) == report_csv(b));
  CHECK(histogram_csv(a) == histogram_csv(b));
  CHECK(chain_csv(a) == chain_csv(b));
  CHECK(summary_csv(a) == summary_csv(run_sweep(c)));
  CHECK(cell_seed(1, 0, 1) != cell_seed(1, 1, 0));
}

TEST_CASE("refused cells are recorded without affecting others") {
  SweepConfig c = light_config();
  c.epsilons = {0.2, 0.1};
  c.replicates = 2;
  c.max_expected_count = 300;  // 0.2 gives 125 points, 0.1 gives 1000
  const SweepReport rep = run_sweep(c);
  CHECK(rep.rows[0].refused_cells == 0);
  CHECK(rep.rows[0].estimators.at("density").n == 2);
  CHECK(rep.rows[1].refused_cells == 2);
  CHECK(rep.total_refused() == 2);
  CHECK(rep.any_failure());
}

TEST_CASE("density estimator is unbiased over replicates") {
  SweepConfig c = light_config();
  c.lambda = 2.0;
  c.epsilons = {0.1};
  c.replicates = 200;
  const SweepReport rep = run_sweep(c);
  const Summary& s = rep.rows[0].estimators.at("density");
  CHECK(std::abs(s.mean - 2.0) <= 4.0 * std::sqrt(2.0 * 1e-3 / c.replicates));
}
