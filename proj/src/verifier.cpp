#include "perfolab/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace perfolab {

const char* to_string(PropertyClass c) { return c == PropertyClass::by_construction ? "by_construction" : "asymptotic"; }

void PropertyRecord::add(Violation v) {
  observe(v.margin);
  violations.push_back(std::move(v));
  pass = false;
}

bool VerificationReport::pass() const {
  for (const auto& p : properties)
    if (p.cls == PropertyClass::by_construction && !p.pass) return false;
  return true;
}

const PropertyRecord* VerificationReport::find(const std::string& name) const {
  for (const auto& p : properties)
    if (p.name == name) return &p;
  return nullptr;
}

std::vector<std::string> VerificationReport::failed_by_construction() const {
  std::vector<std::string> out;
  for (const auto& p : properties)
    if (p.cls == PropertyClass::by_construction && !p.pass) out.push_back(p.name);
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> sweep_candidates(const std::vector<Ball>& balls) {
  std::vector<std::size_t> order(balls.size());
  std::iota(order.begin(), order.end(), 0);
  auto left = [&](std::size_t i) { return balls[i].center[0] - balls[i].radius; };
  auto right = [&](std::size_t i) { return balls[i].center[0] + balls[i].radius; };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double la = left(a), lb = left(b);
    return la != lb ? la < lb : a < b;
  });
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t p = 0; p < order.size(); ++p) {
    const std::size_t i = order[p];
    const double ri = right(i);
    for (std::size_t q = p + 1; q < order.size() && left(order[q]) <= ri; ++q) {
      const std::size_t j = order[q];
      out.emplace_back(std::min(i, j), std::max(i, j));
    }
  }
  return out;
}

namespace {

PropertyRecord make_record(std::string name, PropertyClass cls) {
  PropertyRecord rec;
  rec.name = std::move(name);
  rec.cls = cls;
  return rec;
}

Ball hole_of(const MarkedRealization& r, double scale, std::size_t i) {
  return Ball(r.points[i].z.scaled(r.epsilon), scale * r.points[i].rho);
}

std::vector<Ball> all_holes(const MarkedRealization& r) {
  const double s = hole_scale(r.epsilon, r.dim());
  std::vector<Ball> out;
  out.reserve(r.points.size());
  for (std::size_t i = 0; i < r.points.size(); ++i) out.push_back(hole_of(r, s, i));
  return out;
}

Ball scaled_ball(const Ball& hole, double factor) { return Ball(hole.center, factor * hole.radius); }

double containment_margin(const Ball& outer, const Ball& inner) {
  return outer.radius - (distance(outer.center, inner.center) + inner.radius);
}

double separation_margin(const Ball& a, const Ball& b) { return distance(a.center, b.center) - (a.radius + b.radius); }

}  // namespace

PropertyRecord check_coverage(const CoveringResult& cov, const MarkedRealization& r) {
  PropertyRecord rec = make_record("coverage", PropertyClass::by_construction);
  const auto h = all_holes(r);
  std::map<int, std::map<std::size_t, double>> lambda_of;
  for (const auto& [k, fam] : cov.families)
    for (const auto& m : fam) lambda_of[k][m.index] = m.lambda;
  for (const auto& [i, k] : cov.assignment) {
    ++rec.checked;
    if (i >= h.size()) {
      rec.add({i, std::nullopt, -1.0, "index out of range"});
      continue;
    }
    const auto fam = lambda_of.find(k);
    if (fam == lambda_of.end()) {
      rec.add({i, std::nullopt, -1.0, "assigned to an empty family"});
      continue;
    }
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    if (auto w = cov.witness.find(i); w != cov.witness.end())
      if (auto lj = fam->second.find(w->second); lj != fam->second.end() && w->second < h.size()) {
        best = containment_margin(scaled_ball(h[w->second], lj->second), h[i]);
        best_j = w->second;
      }
    if (best < 0.0)
      for (const auto& [j, lam] : fam->second) {
        if (j >= h.size()) continue;
        const double m = containment_margin(scaled_ball(h[j], lam), h[i]);
        if (m > best) {
          best = m;
          best_j = j;
        }
        if (best >= 0.0) break;
      }
    if (best < 0.0)
      rec.add({i, best_j, best, "hole not inside any lambda ball of its family"});
    else
      rec.observe(best);
  }
  return rec;
}

PropertyRecord check_within_family(const CoveringResult& cov, const MarkedRealization& r, double theta) {
  PropertyRecord rec = make_record("within_family", PropertyClass::by_construction);
  const auto h = all_holes(r);
  for (const auto& [k, fam] : cov.families) {
    std::vector<Ball> balls;
    for (const auto& m : fam) balls.push_back(scaled_ball(h.at(m.index), theta * theta * m.lambda));
    for (auto [a, b] : sweep_candidates(balls)) {
      ++rec.checked;
      const double m = separation_margin(balls[a], balls[b]);
      if (m < 0.0)
        rec.add({fam[a].index, fam[b].index, m, "family " + std::to_string(k)});
      else
        rec.observe(m);
    }
  }
  return rec;
}

PropertyRecord check_cross_family(const CoveringResult& cov, const MarkedRealization& r, double theta) {
  PropertyRecord rec = make_record("cross_family", PropertyClass::asymptotic);
  const auto h = all_holes(r);
  std::vector<Ball> balls;
  std::vector<int> k_of;        // class of the bad hole, or of the family for shells
  std::vector<char> is_shell;
  std::vector<std::size_t> who;
  for (const auto& [i, k] : cov.assignment) {
    balls.push_back(h.at(i));
    k_of.push_back(k);
    is_shell.push_back(0);
    who.push_back(i);
  }
  for (const auto& [k, fam] : cov.families)
    for (const auto& m : fam) {
      balls.push_back(scaled_ball(h.at(m.index), theta * m.lambda));
      k_of.push_back(k);
      is_shell.push_back(1);
      who.push_back(m.index);
    }
  std::set<std::size_t> bad_points;
  for (auto [a, b] : sweep_candidates(balls)) {
    if (is_shell[a] == is_shell[b]) continue;
    const std::size_t hole = is_shell[a] ? b : a;
    const std::size_t shell = is_shell[a] ? a : b;
    if (!(k_of[shell] < k_of[hole])) continue;
    ++rec.checked;
    const double m = separation_margin(balls[hole], balls[shell]);
    if (m < 0.0) {
      rec.add({who[hole], who[shell], m,
               "hole of class " + std::to_string(k_of[hole]) + " meets family " + std::to_string(k_of[shell])});
      bad_points.insert(who[hole]);
    } else {
      rec.observe(m);
    }
  }
  rec.metrics["violating_holes"] = static_cast<double>(bad_points.size());
  rec.metrics["bad_holes"] = static_cast<double>(cov.assignment.size());
  rec.metrics["violation_fraction"] =
      cov.assignment.empty() ? 0.0 : static_cast<double>(bad_points.size()) / cov.assignment.size();
  return rec;
}

PropertyRecord check_good_set(const CoveringResult& cov, const MarkedRealization& r, double delta) {
  PropertyRecord rec = make_record("good_set", PropertyClass::by_construction);
  const auto h = all_holes(r);
  const double eps = r.epsilon;
  const double sep = 2.0 * std::pow(eps, 1.0 + 0.5 * delta);
  const double rmax = std::pow(eps, 1.0 + 2.0 * delta);
  const double layer = std::pow(eps, 1.0 + delta);
  rec.threshold = layer;
  rec.metrics["separation_threshold"] = sep;
  rec.metrics["radius_threshold"] = rmax;

  std::vector<Ball> centres;
  for (std::size_t i : cov.good) centres.emplace_back(h.at(i).center, 0.5 * sep);
  for (auto [a, b] : sweep_candidates(centres)) {
    ++rec.checked;
    const double m = distance(centres[a].center, centres[b].center) - sep;
    if (m < 0.0)
      rec.add({cov.good[a], cov.good[b], m, "separation"});
    else
      rec.observe(m);
  }
  for (std::size_t i : cov.good) {
    ++rec.checked;
    const double m = rmax - h[i].radius;
    if (m < 0.0)
      rec.add({i, std::nullopt, m, "radius"});
    else
      rec.observe(m);
  }

  // Safety layer: gap between good holes and the theta lambda balls must exceed eps^{1+delta}.
  std::vector<Ball> balls;
  std::vector<std::size_t> who;
  const std::size_t n_good = cov.good.size();
  for (std::size_t i : cov.good) {
    balls.push_back(Ball(h[i].center, h[i].radius + layer));
    who.push_back(i);
  }
  for (const auto& [k, fam] : cov.families)
    for (const auto& m : fam) {
      balls.push_back(scaled_ball(h.at(m.index), cov.params.theta * m.lambda));
      who.push_back(m.index);
    }
  double gap = std::numeric_limits<double>::infinity();
  for (auto [a, b] : sweep_candidates(balls)) {
    if ((a < n_good) == (b < n_good)) continue;
    const std::size_t g = a < n_good ? a : b;
    const std::size_t s = a < n_good ? b : a;
    ++rec.checked;
    const double d = distance(balls[g].center, balls[s].center) - h[who[g]].radius - balls[s].radius;
    gap = std::min(gap, d);
    const double m = d - layer;
    if (!(m > 0.0))
      rec.add({who[g], who[s], m, "safety layer"});
    else
      rec.observe(m);
  }
  rec.metrics["min_gap_seen"] = gap;
  return rec;
}

PropertyRecord check_radius_bound(const CoveringResult& cov, const MarkedRealization& r, double delta,
                                  double lambda_emp) {
  PropertyRecord rec = make_record("radius_bound", PropertyClass::asymptotic);
  const double s = hole_scale(r.epsilon, r.dim());
  const double bound = lambda_emp * std::pow(r.epsilon, 2.0 * r.dim() * delta);
  rec.threshold = bound;
  double worst = 0.0;
  std::size_t arg = 0;
  for (const auto& [k, fam] : cov.families)
    for (const auto& m : fam) {
      ++rec.checked;
      const double R = m.lambda * s * r.points.at(m.index).rho;
      if (R > worst) {
        worst = R;
        arg = m.index;
      }
    }
  rec.metrics["max_covered_radius"] = worst;
  rec.metrics["ratio"] = bound > 0.0 ? worst / bound : 0.0;
  if (rec.checked > 0) {
    if (worst > bound)
      rec.add({arg, std::nullopt, bound - worst, "covered radius above bound"});
    else
      rec.observe(bound - worst);
  }
  return rec;
}

PropertyRecord check_partition(const CoveringResult& cov, const MarkedRealization& r) {
  PropertyRecord rec = make_record("partition", PropertyClass::by_construction);
  const std::size_t n = r.points.size();
  std::vector<int> in_good(n, 0), in_bad(n, 0);
  for (std::size_t i : cov.good) {
    if (i >= n) {
      rec.add({i, std::nullopt, -1.0, "good index out of range"});
      continue;
    }
    ++in_good[i];
  }
  for (const auto& [i, k] : cov.assignment) {
    if (i >= n) {
      rec.add({i, std::nullopt, -1.0, "bad index out of range"});
      continue;
    }
    ++in_bad[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    ++rec.checked;
    if (in_good[i] + in_bad[i] == 0)
      rec.add({i, std::nullopt, -1.0, "in neither good nor bad set"});
    else if (in_good[i] && in_bad[i])
      rec.add({i, std::nullopt, -1.0, "in both good and bad sets"});
    else if (in_good[i] > 1)
      rec.add({i, std::nullopt, -1.0, "listed twice"});
  }
  rec.metrics["good"] = static_cast<double>(cov.good.size());
  rec.metrics["bad"] = static_cast<double>(cov.assignment.size());
  return rec;
}

PropertyRecord check_lambda_bounds(const CoveringResult& cov, const MarkedRealization& r, double theta) {
  PropertyRecord rec = make_record("lambda_bounds", PropertyClass::by_construction);
  const double s = hole_scale(r.epsilon, r.dim());
  for (const auto& [i, tl] : cov.tilde_lambda) {
    ++rec.checked;
    const double m = tl - 1.0;
    if (m < 0.0)
      rec.add({i, std::nullopt, m, "tilde lambda below 1"});
    else
      rec.observe(m);
  }
  for (const auto& [k, fam] : cov.families)
    for (const auto& mem : fam) {
      ++rec.checked;
      auto it = cov.tilde_lambda.find(mem.index);
      if (it == cov.tilde_lambda.end()) {
        rec.add({mem.index, std::nullopt, -1.0, "family member is not a survivor"});
        continue;
      }
      const double expect = theta * theta * it->second;
      if (std::abs(mem.lambda - expect) > 1e-12 * expect)
        rec.add({mem.index, std::nullopt, -std::abs(mem.lambda - expect), "lambda differs from theta^2 tilde lambda"});
      if (mem.lambda < 1.0) rec.add({mem.index, std::nullopt, mem.lambda - 1.0, "lambda below 1"});
      if (auto sr = cov.survivor_radius.find(mem.index); sr != cov.survivor_radius.end()) {
        const double expect_r = it->second * s * r.points.at(mem.index).rho;
        if (std::abs(sr->second - expect_r) > 1e-12 * expect_r)
          rec.add({mem.index, std::nullopt, -std::abs(sr->second - expect_r), "survivor radius inconsistent"});
      }
    }
  return rec;
}

PropertyRecord check_step1_containment(const CoveringResult& cov, const MarkedRealization& r) {
  PropertyRecord rec = make_record("step1_containment", PropertyClass::by_construction);
  const auto h = all_holes(r);
  const std::size_t n = h.size();
  std::vector<std::size_t> survivors;
  for (const auto& [j, rad] : cov.survivor_radius) survivors.push_back(j);
  auto ball_of = [&](std::size_t j) { return Ball(h[j].center, cov.survivor_radius.at(j)); };
  for (std::size_t i = 0; i < n; ++i) {
    ++rec.checked;
    const int ki = cov.class_of.at(i);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_j = i;
    if (cov.absorbed_by.size() == n) {
      std::size_t s = i;
      for (std::size_t hops = 0; cov.absorbed_by[s] != s && hops <= n; ++hops) s = cov.absorbed_by[s];
      if (cov.survivor_radius.count(s) && cov.class_of[s] >= ki) {
        best = containment_margin(ball_of(s), h[i]);
        best_j = s;
      }
    }
    if (best < 0.0)
      for (std::size_t j : survivors) {
        if (cov.class_of[j] < ki) continue;
        const double m = containment_margin(ball_of(j), h[i]);
        if (m > best) {
          best = m;
          best_j = j;
        }
        if (best >= 0.0) break;
      }
    if (best < 0.0)
      rec.add({i, best_j, best, "original hole outside every survivor ball"});
    else
      rec.observe(best);
  }
  return rec;
}

PropertyRecord check_step1_disjointness(const CoveringResult& cov, const MarkedRealization& r, double alpha) {
  PropertyRecord rec = make_record("step1_disjointness", PropertyClass::by_construction);
  std::vector<Ball> balls;
  std::vector<std::size_t> who;
  for (const auto& [j, rad] : cov.survivor_radius) {
    balls.emplace_back(r.points.at(j).z.scaled(r.epsilon), alpha * rad);
    who.push_back(j);
  }
  for (auto [a, b] : sweep_candidates(balls)) {
    if (std::abs(cov.class_of[who[a]] - cov.class_of[who[b]]) > 1) continue;
    ++rec.checked;
    const double m = separation_margin(balls[a], balls[b]);
    if (m < 0.0)
      rec.add({who[a], who[b], m, "alpha-dilated survivors overlap"});
    else
      rec.observe(m);
  }
  return rec;
}

PropertyRecord check_iteration_cap(const CoveringResult& cov, int cap) {
  PropertyRecord rec = make_record("iteration_cap", PropertyClass::by_construction);
  rec.threshold = cap;
  int worst = 0;
  for (std::size_t s = 0; s < cov.iterations_per_stage.size(); ++s) {
    ++rec.checked;
    const int it = cov.iterations_per_stage[s];
    worst = std::max(worst, it);
    if (it >= cap)
      rec.add({s, std::nullopt, static_cast<double>(cap - it), "stage reached the iteration cap"});
    else
      rec.observe(cap - it);
  }
  rec.metrics["max_iterations"] = worst;
  return rec;
}

void check_shape(const CoveringResult& cov, const MarkedRealization& r) {
  const std::size_t n = r.points.size();
  auto bad = [](const std::string& what) { throw ConfigError("covering does not match scene: " + what); };
  if (cov.class_of.size() != n) bad("class_of has " + std::to_string(cov.class_of.size()) + " entries for " + std::to_string(n) + " points");
  if (!cov.absorbed_by.empty() && cov.absorbed_by.size() != n) bad("absorbed_by size");
  for (std::size_t a : cov.absorbed_by)
    if (a >= n) bad("absorbed_by index " + std::to_string(a));
  for (std::size_t i : cov.good)
    if (i >= n) bad("good index " + std::to_string(i));
  for (const auto& [i, k] : cov.assignment)
    if (i >= n) bad("assignment index " + std::to_string(i));
  for (const auto& [i, j] : cov.witness)
    if (i >= n || j >= n) bad("witness index " + std::to_string(i));
  for (const auto& [k, fam] : cov.families)
    for (const auto& m : fam)
      if (m.index >= n) bad("family " + std::to_string(k) + " index " + std::to_string(m.index));
  for (const auto& [i, x] : cov.survivor_radius)
    if (i >= n) bad("survivor index " + std::to_string(i));
  for (const auto& [i, x] : cov.tilde_lambda)
    if (i >= n) bad("survivor index " + std::to_string(i));
  for (std::size_t i : cov.k_eps)
    if (i >= n) bad("k_eps index " + std::to_string(i));
}

VerificationReport verify_all(const CoveringResult& cov, const MarkedRealization& r, const CoveringParams& params) {
  check_shape(cov, r);
  VerificationReport rep;
  rep.seed = r.seed;
  rep.epsilon = r.epsilon;
  rep.properties.push_back(check_partition(cov, r));
  rep.properties.push_back(check_coverage(cov, r));
  rep.properties.push_back(check_within_family(cov, r, params.theta));
  rep.properties.push_back(check_lambda_bounds(cov, r, params.theta));
  rep.properties.push_back(check_good_set(cov, r, params.delta));
  rep.properties.push_back(check_step1_containment(cov, r));
  rep.properties.push_back(check_step1_disjointness(cov, r, params.alpha));
  rep.properties.push_back(check_iteration_cap(cov, params.max_T_iterations));
  rep.properties.push_back(check_cross_family(cov, r, params.theta));
  rep.properties.push_back(check_radius_bound(cov, r, params.delta, cov.lambda_emp));
  return rep;
}

}  // namespace perfolab
