#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "perfolab/covering.hpp"

using namespace perfolab;
using perfolab::test::scene;

namespace {

const CoveringParams kDefault = CoveringParams::defaults(0.5, 3);

// Transitive closure of the alpha-dilated intersection graph by repeated scans.
std::vector<std::set<std::size_t>> closure_groups(const std::vector<Ball>& b, double alpha) {
  const std::size_t n = b.size();
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    bool grew = true;
    while (grew) {
      grew = false;
      for (std::size_t i = 0; i < n; ++i)
        if (label[i] == next)
          for (std::size_t j = 0; j < n; ++j)
            if (label[j] < 0 && intersects(dilate(b[i], alpha), dilate(b[j], alpha))) {
              label[j] = next;
              grew = true;
            }
    }
    ++next;
  }
  std::vector<std::set<std::size_t>> g(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) g[static_cast<std::size_t>(label[i])].insert(i);
  return g;
}

MarkedRealization pareto_scene(std::uint64_t seed, double eps, double lambda = 1.0) {
  return sample(Domain::unit_cube(3), lambda, eps, MarkDistribution::pareto(1.0, 2.5), seed);
}

}  // namespace

TEST_CASE("default delta") {
  CHECK(default_delta(1.0, 3) == doctest::Approx(1.0 / 6.0));
  CHECK(default_delta(0.5, 3) == doctest::Approx(1.0 / 12.0));
  CHECK(default_delta(1.0, 4) == doctest::Approx(1.0 / 12.0));
  const CoveringParams p = CoveringParams::defaults(0.5, 3);
  CHECK(p.theta == 1.25);
  CHECK(p.alpha == p.theta * p.theta * p.theta * p.theta);
  CHECK(p.delta < 0.5 / 6.0 + 1e-15);
}

TEST_CASE("covering params validation") {
  CoveringParams p = kDefault;
  p.alpha = 2.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  CHECK_THROWS_AS(CoveringParams::with_theta(1.0, 0.1).validate(), ConfigError);
  CHECK_NOTHROW(CoveringParams::with_theta(1.5, 0.1).validate());
  p = kDefault;
  p.max_T_iterations = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("classify radius bands") {
  const double d6 = 1.0 / 6.0;
  SUBCASE("tiny mark is class -3") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1.0}});
    CHECK(classify(r, d6).class_of[0] == -3);
  }
  SUBCASE("radius exactly eps^{1+2 delta} is class -2") {
    const auto r = scene(0.1, {{{0, 0, 0}, std::pow(10.0, 5.0 / 3.0)}});
    CHECK(classify(r, d6).class_of[0] == -2);
  }
  SUBCASE("empty realization") {
    const ClassPartition p = classify(scene(0.1, {}), d6);
    CHECK(p.k_max == -3);
    CHECK(p.class_of.empty());
  }
  SUBCASE("bands agree with the defining inequalities") {
    const auto r = pareto_scene(3, 0.1);
    const ClassPartition p = classify(r, kDefault.delta);
    const double s = hole_scale(0.1, 3);
    int top = -3;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double rad = s * r.points[i].rho;
      const int k = p.class_of[i];
      top = std::max(top, k);
      if (k == -3) {
        CHECK(rad < std::pow(0.1, 1.0 + 2.0 * kDefault.delta) * (1 + 1e-9));
      } else {
        CHECK(rad >= std::pow(0.1, 1.0 - kDefault.delta * k) * (1 - 1e-9));
        CHECK(rad < std::pow(0.1, 1.0 - kDefault.delta * (k + 1)));
      }
    }
    CHECK(p.k_max == top);
  }
}

TEST_CASE("theoretical k_max bound") {
  auto brute = [](double delta, int d, double beta) {
    const double c = static_cast<double>(d) / (d - 2) - static_cast<double>(d) / (d - 2 + beta);
    for (int k = -3; k < 1000; ++k)
      if (1.0 - delta * (k + 1) < c) return k;
    return 1000;
  };
  CHECK(theoretical_k_max(1.0 / 12.0, 3, 0.5) == brute(1.0 / 12.0, 3, 0.5));
  CHECK(theoretical_k_max(1.0 / 6.0, 3, 1.0) == brute(1.0 / 6.0, 3, 1.0));
  CHECK(theoretical_k_max(0.05, 4, 0.7) == brute(0.05, 4, 0.7));
}

TEST_CASE("connectivity classes") {
  const double alpha = kDefault.alpha;
  SUBCASE("three-ball chain is one group") {
    // radius 0.001, dilated 0.00244; neighbours 0.004 apart, ends 0.008 apart.
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{0.04, 0, 0}, 1}, {{0.08, 0, 0}, 1}});
    const HoleSystem h = holes(r);
    const std::vector<std::size_t> all{0, 1, 2};
    const MergedState s = initial_state(h);
    CHECK_FALSE(intersects(dilate(h.balls[0], alpha), dilate(h.balls[2], alpha)));
    const auto g = connectivity_classes(all, s.radius, alpha, h);
    REQUIRE(g.size() == 1);
    CHECK(g[0] == all);
  }
  SUBCASE("far apart are singletons") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{2, 0, 0}, 1}, {{0, 2, 0}, 1}});
    const HoleSystem h = holes(r);
    const std::vector<std::size_t> all{0, 1, 2};
    CHECK(connectivity_classes(all, initial_state(h).radius, alpha, h).size() == 3);
  }
  SUBCASE("identical centres form a pair") {
    const auto r = scene(0.1, {{{1, 1, 1}, 1}, {{1, 1, 1}, 1}});
    const HoleSystem h = holes(r);
    const std::vector<std::size_t> all{0, 1};
    CHECK(connectivity_classes(all, initial_state(h).radius, alpha, h).size() == 1);
  }
  SUBCASE("zero-radius members are skipped") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{0.04, 0, 0}, 1}});
    const HoleSystem h = holes(r);
    MergedState s = initial_state(h);
    s.radius[1] = 0.0;
    const std::vector<std::size_t> all{0, 1};
    const auto g = connectivity_classes(all, s.radius, alpha, h);
    REQUIRE(g.size() == 1);
    CHECK(g[0] == std::vector<std::size_t>{0});
  }
}

TEST_CASE("connectivity equals brute-force closure on random scenes") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto r = sample(Domain::unit_cube(3), 1.0, 0.2, MarkDistribution::pareto(1.0, 1.6), seed, 0.5);
    const HoleSystem h = holes(r);
    std::vector<std::size_t> all(r.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (double alpha : {1.0, 2.44140625, 6.0}) {
      const auto g = connectivity_classes(all, initial_state(h).radius, alpha, h);
      const auto ref = closure_groups(h.balls, alpha);
      std::set<std::set<std::size_t>> a, b(ref.begin(), ref.end());
      for (const auto& x : g) a.insert(std::set<std::size_t>(x.begin(), x.end()));
      CHECK(a == b);
    }
  }
}

TEST_CASE("apply_T on the two-ball example") {
  const auto r = scene(0.1, {{{0, 0, 0}, 2}, {{0.03, 0, 0}, 2}});
  const HoleSystem h = holes(r);
  CHECK(h.balls[0].radius == doctest::Approx(0.002));
  MergedState s = initial_state(h);
  const std::vector<std::size_t> all{0, 1};
  CHECK(apply_T(all, s, kDefault.alpha, r, h) == 1);
  // Tie on rho: the higher index represents. R = eps^{-2} * 0.03 + 2 = 5, i.e. 0.005.
  CHECK(s.radius[0] == 0.0);
  CHECK(s.radius[1] == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(s.absorbed_by[0] == 1);
  CHECK(contains(Ball(h.balls[1].center, s.radius[1]), h.balls[0]));
  CHECK(apply_T(all, s, kDefault.alpha, r, h) == 0);

  MergedState t = initial_state(h);
  CHECK(iterate_to_fixed_point(all, t, kDefault.alpha, r, h, 64) == 2);
  CHECK(t.radius == s.radius);
}

TEST_CASE("apply_T: singleton unchanged, chain contained") {
  SUBCASE("singleton") {
    const auto r = scene(0.1, {{{0, 0, 0}, 3}});
    const HoleSystem h = holes(r);
    MergedState s = initial_state(h);
    const std::vector<std::size_t> one{0};
    CHECK(apply_T(one, s, kDefault.alpha, r, h) == 0);
    CHECK(s.radius[0] == h.balls[0].radius);
  }
  SUBCASE("three-ball chain with a larger mark in the middle") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{0.05, 0, 0}, 1.5}, {{0.1, 0, 0}, 1}});
    const HoleSystem h = holes(r);
    MergedState s = initial_state(h);
    const std::vector<std::size_t> all{0, 1, 2};
    apply_T(all, s, kDefault.alpha, r, h);
    CHECK(s.radius[1] > 0.0);
    CHECK(s.radius[0] == 0.0);
    CHECK(s.radius[2] == 0.0);
    const Ball big(h.balls[1].center, s.radius[1]);
    for (std::size_t i : all) CHECK(contains(big, h.balls[i]));
    // Minimal enclosing ball centred at the survivor: 0.005 + 0.001.
    CHECK(s.radius[1] == doctest::Approx(0.006).epsilon(1e-12));
  }
}

TEST_CASE("iterate_to_fixed_point") {
  SUBCASE("all disjoint stabilizes in one application") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{3, 0, 0}, 1}});
    const HoleSystem h = holes(r);
    MergedState s = initial_state(h);
    const std::vector<std::size_t> all{0, 1};
    CHECK(iterate_to_fixed_point(all, s, kDefault.alpha, r, h, 64) == 1);
  }
  SUBCASE("chain of m connecting balls stabilizes within m iterations") {
    for (int m = 2; m <= 6; ++m) {
      MarkedRealization r = scene(0.1, {});
      for (int i = 0; i < m; ++i) {
        PointD z(3);
        z[0] = 0.04 * i;
        r.points.push_back({z, 1.0});
      }
      const HoleSystem h = holes(r);
      MergedState s = initial_state(h);
      std::vector<std::size_t> all(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) all[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
      const int it = iterate_to_fixed_point(all, s, kDefault.alpha, r, h, 64);
      CHECK(it <= m);
      CHECK(std::count_if(s.radius.begin(), s.radius.end(), [](double x) { return x > 0; }) == 1);
    }
  }
  SUBCASE("cap reached raises non-stabilization") {
    // Merging once then checking needs two applications.
    const auto r = scene(0.1, {{{0, 0, 0}, 2}, {{0.03, 0, 0}, 2}});
    const HoleSystem h = holes(r);
    MergedState s = initial_state(h);
    const std::vector<std::size_t> all{0, 1};
    CHECK_THROWS_AS(iterate_to_fixed_point(all, s, kDefault.alpha, r, h, 1), NonStabilizationError);
  }
}

TEST_CASE("merge hierarchy examples") {
  SUBCASE("tiny far-apart balls keep lambda tilde 1") {
    const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{2, 0, 0}, 1.2}, {{0, 2, 0}, 1.5}});
    const ClassPartition p = classify(r, kDefault.delta);
    const MergeHierarchy m = merge_hierarchy(p, r, holes(r), kDefault);
    CHECK(m.tilde.at(-3).size() == 3);
    for (double t : m.tilde_lambda) CHECK(t == 1.0);
  }
  SUBCASE("two overlapping class -2 balls leave one inflated survivor") {
    // rho 70 and 75 give radii 0.070 and 0.075 (class -2); 0.1 apart.
    const auto r = scene(0.1, {{{0, 0, 0}, 70}, {{1, 0, 0}, 75}, {{-4, -4, -4}, 1}});
    const ClassPartition p = classify(r, kDefault.delta);
    CHECK(p.class_of[0] == -2);
    CHECK(p.class_of[1] == -2);
    const HoleSystem h = holes(r);
    const MergeHierarchy m = merge_hierarchy(p, r, h, kDefault);
    CHECK(m.radius[0] == 0.0);
    CHECK(m.tilde_lambda[1] == doctest::Approx((0.1 + 0.07) / 0.075));
    CHECK(m.tilde_lambda[2] == 1.0);
    CHECK(m.final_survivor(0) == 1);
  }
}

TEST_CASE("merge hierarchy invariants on seeded scenes") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    // A heavier tail than the default so several classes are populated.
    const auto r = sample(Domain::unit_cube(3), 1.0, 0.1, MarkDistribution::pareto(4.0, 1.6), seed, 0.5);
    const ClassPartition p = classify(r, kDefault.delta);
    const HoleSystem h = holes(r);
    const MergeHierarchy m = merge_hierarchy(p, r, h, kDefault);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::size_t s = m.final_survivor(i);
      CHECK(m.radius[s] > 0.0);
      CHECK(contains(Ball(h.balls[s].center, m.radius[s]), h.balls[i]));
      CHECK(p.class_of[s] >= p.class_of[i]);
      if (m.radius[i] > 0.0) CHECK(m.tilde_lambda[i] >= 1.0);
    }
    for (int k = -2; k <= p.k_max + 1; ++k) {
      std::vector<std::size_t> surv;
      for (int c : {k, k - 1})
        if (auto it = m.tilde.find(c); it != m.tilde.end()) surv.insert(surv.end(), it->second.begin(), it->second.end());
      for (std::size_t a = 0; a < surv.size(); ++a)
        for (std::size_t b = a + 1; b < surv.size(); ++b) {
          const Ball x(h.balls[surv[a]].center, kDefault.alpha * m.radius[surv[a]]);
          const Ball y(h.balls[surv[b]].center, kDefault.alpha * m.radius[surv[b]]);
          CHECK_FALSE(intersects(x, y));
        }
    }
  }
}

TEST_CASE("symbolic E set containment") {
  SymbolicESet e;
  CHECK_FALSE(e.contains(Ball(PointD{0, 0, 0}, 0.1)));
  e.add_anchor(Ball(PointD{0, 0, 0}, 1.0), 0, 2);
  CHECK(e.contains(Ball(PointD{0.5, 0, 0}, 0.2)));
  CHECK_FALSE(e.contains(Ball(PointD{0.9, 0, 0}, 0.2)));
  e.subtract(Ball(PointD{0.5, 0.3, 0}, 0.2));
  CHECK(e.entries()[0].subtracted.size() == 1);
  CHECK_FALSE(e.contains(Ball(PointD{0.5, 0, 0}, 0.2)));
  CHECK(e.contains(Ball(PointD{-0.5, 0, 0}, 0.2)));
  // Subtracting a ball far from every anchor records nothing.
  e.subtract(Ball(PointD{5, 5, 5}, 0.1));
  CHECK(e.entries()[0].subtracted.size() == 1);
}

TEST_CASE("build families: isolated tiny balls are all good") {
  const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{3, 0, 0}, 1.1}, {{0, 3, 0}, 1.3}, {{0, 0, 3}, 1.2}});
  const CoveringResult c = cover(r, kDefault);
  CHECK(c.family_size() == 0);
  CHECK(c.good == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(c.assignment.empty());
  CHECK(c.k_eps.empty());
}

TEST_CASE("build families: a big ball excludes a swallowed smaller survivor") {
  // rho 140: radius 0.14, class 1. rho 85: radius 0.085, class -1. 0.05 apart.
  const auto r = scene(0.1, {{{0, 0, 0}, 140}, {{0.5, 0, 0}, 85}});
  const ClassPartition p = classify(r, kDefault.delta);
  REQUIRE(p.class_of[0] == 1);
  REQUIRE(p.class_of[1] == -1);
  const HoleSystem h = holes(r);
  const MergeHierarchy m = merge_hierarchy(p, r, h, kDefault);
  // Classes two apart never share a merging stage.
  CHECK(m.tilde_lambda[0] == 1.0);
  CHECK(m.tilde_lambda[1] == 1.0);
  // Geometric witness: theta-dilated small ball inside the lambda-dilated big ball.
  const double th = kDefault.theta;
  CHECK(contains(dilated_hole(h, 0, th * th), dilated_hole(h, 1, th)));
  const FamilyStage f = build_families(m, p, r, h, kDefault);
  CHECK(f.families.at(1).size() == 1);
  CHECK(f.families.at(-1).empty());
  const CoveringResult c = cover(r, kDefault);
  CHECK(c.assignment.at(1) == 1);
  CHECK(c.witness.at(1) == 0);
}

TEST_CASE("build families: a good candidate near a family ball lands in K") {
  // Family ball: rho 70 (class -2). theta*lambda radius 1.953125 * 0.07 = 0.1367.
  // Guard 2 eps^{1+delta} = 0.1651, so the guard ball meets it below 0.3018;
  // the lattice thinning distance is 2 eps^{delta/2} = 1.817.
  SUBCASE("within the guard") {
    const auto r = scene(0.1, {{{0, 0, 0}, 70}, {{2.5, 0, 0}, 1}});
    const CoveringResult c = cover(r, kDefault);
    CHECK(c.k_eps == std::vector<std::size_t>{1});
    CHECK(std::find(c.good.begin(), c.good.end(), 1) == c.good.end());
    CHECK(c.assignment.count(1) == 1);
  }
  SUBCASE("beyond the guard") {
    const auto r = scene(0.1, {{{0, 0, 0}, 70}, {{4, 0, 0}, 1}});
    const CoveringResult c = cover(r, kDefault);
    CHECK(c.k_eps.empty());
    CHECK(c.good == std::vector<std::size_t>{1});
    CHECK(c.families.at(-2).size() == 1);
    CHECK(c.assignment.at(0) == -2);
  }
}

TEST_CASE("assign_bad picks the minimal family") {
  const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{0.2, 0, 0}, 10}, {{-0.2, 0, 0}, 10}, {{4, 4, 4}, 1}});
  const HoleSystem h = holes(r);
  std::map<int, std::vector<FamilyMember>> fam;
  fam[5] = {{2, 10.0}};
  fam[2] = {{1, 10.0}};
  const BadAssignment a = assign_bad(fam, h);
  CHECK(a.k_of.at(0) == 2);
  CHECK(a.witness.at(0) == 1);
  CHECK(a.k_of.count(3) == 0);
  CHECK(assign_bad({}, h).k_of.empty());
}

TEST_CASE("cover: two overlapping comparable balls") {
  const auto r = scene(0.1, {{{0, 0, 0}, 1}, {{0.01, 0, 0}, 1.2}});
  const CoveringResult c = cover(r, kDefault);
  REQUIRE(c.families.at(-3).size() == 1);
  const FamilyMember& m = c.families.at(-3)[0];
  CHECK(m.index == 1);
  CHECK(m.lambda == doctest::Approx(kDefault.theta * kDefault.theta * c.tilde_lambda.at(1)));
  CHECK(c.tilde_lambda.at(1) > 1.0);
  const HoleSystem h = holes(r);
  for (std::size_t i : {0, 1}) CHECK(contains(dilated_hole(h, m.index, m.lambda), h.balls[i]));
  CHECK(c.good.empty());
  CHECK(c.assignment.size() == 2);
}

TEST_CASE("cover: single isolated tiny ball is good") {
  const CoveringResult c = cover(scene(0.1, {{{0, 0, 0}, 1}}), kDefault);
  CHECK(c.good == std::vector<std::size_t>{0});
  CHECK(c.family_size() == 0);
  CHECK(c.k_max == -3);
}

TEST_CASE("cover: partition, E-stage monotonicity and determinism on seeded scenes") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = pareto_scene(seed, 0.1, 0.05 * static_cast<double>(seed));
    const CoveringResult c = cover(r, kDefault);
    CHECK(c == cover(r, kDefault));
    std::vector<int> seen(r.size(), 0);
    for (std::size_t i : c.good) ++seen[i];
    for (const auto& [i, k] : c.assignment) ++seen[i];
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(seen[i] == 1);
    CHECK(c.uncovered.empty());

    const ClassPartition p = classify(r, kDefault.delta);
    const HoleSystem h = holes(r);
    const MergeHierarchy m = merge_hierarchy(p, r, h, kDefault);
    const FamilyStage f = build_families(m, p, r, h, kDefault);
    // Each E_{-2} anchor survives into E_{-3} with a superset of subtracted balls.
    REQUIRE(f.e_final.entries().size() >= f.e_minus2.entries().size());
    for (std::size_t a = 0; a < f.e_minus2.entries().size(); ++a) {
      const auto& x = f.e_minus2.entries()[a];
      const auto& y = f.e_final.entries()[a];
      CHECK(x.anchor == y.anchor);
      CHECK(y.subtracted.size() >= x.subtracted.size());
      CHECK(std::equal(x.subtracted.begin(), x.subtracted.end(), y.subtracted.begin()));
    }
    // Anchors stored at one stage are pairwise disjoint.
    const auto& es = f.e_final.entries();
    for (std::size_t a = 0; a < es.size(); ++a)
      for (std::size_t b = a + 1; b < es.size(); ++b)
        if (es[a].stage == es[b].stage) CHECK_FALSE(intersects(es[a].anchor, es[b].anchor));
  }
}
