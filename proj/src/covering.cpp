#include "perfolab/covering.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>

namespace perfolab {

double default_delta(double beta, int d) {
  const double dm2 = d - 2.0;
  return std::min(beta / (2.0 * dm2 * (dm2 + beta)), beta / (2.0 * d));
}

CoveringParams CoveringParams::defaults(double beta, int d) {
  CoveringParams p;
  p.delta = default_delta(beta, d);
  return p;
}

CoveringParams CoveringParams::with_theta(double theta, double delta) {
  CoveringParams p;
  p.theta = theta;
  p.alpha = theta * theta * theta * theta;
  p.delta = delta;
  return p;
}

void CoveringParams::validate() const {
  if (!(theta > 1.0)) throw ConfigError("theta must exceed 1");
  if (alpha != theta * theta * theta * theta) throw ConfigError("alpha must equal theta^4");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (max_T_iterations < 1) throw ConfigError("iteration cap must be at least 1");
}

int class_index(double physical_radius, double epsilon, double delta) {
  if (!(physical_radius > 0.0)) return kLowestClass;
  const double t = std::log(physical_radius) / std::log(epsilon);
  // The nudge keeps radii that sit on a band edge (up to rounding) in the upper band.
  const double k = std::floor((1.0 - t) / delta + 1e-9);
  if (k < -2.0) return kLowestClass;
  return static_cast<int>(k);
}

int theoretical_k_max(double delta, int d, double beta) {
  const double c = static_cast<double>(d) / (d - 2) - static_cast<double>(d) / (d - 2 + beta);
  const int k = static_cast<int>(std::floor((1.0 - c) / delta - 1.0)) + 1;
  return std::max(k, kLowestClass);
}

std::vector<std::size_t> ClassPartition::members(int k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < class_of.size(); ++i)
    if (class_of[i] == k) out.push_back(i);
  return out;
}

std::map<int, std::vector<std::size_t>> ClassPartition::classes() const {
  std::map<int, std::vector<std::size_t>> out;
  for (int k = kLowestClass; k <= k_max; ++k) out[k];
  for (std::size_t i = 0; i < class_of.size(); ++i) out[class_of[i]].push_back(i);
  return out;
}

ClassPartition classify(const MarkedRealization& r, double delta) {
  ClassPartition p;
  const double s = hole_scale(r.epsilon, r.dim());
  p.class_of.reserve(r.points.size());
  for (const auto& pt : r.points) {
    const int k = class_index(s * pt.rho, r.epsilon, delta);
    p.class_of.push_back(k);
    p.k_max = std::max(p.k_max, k);
  }
  p.k_max_bound = theoretical_k_max(delta, r.dim(), r.beta);
  return p;
}

bool canonical_less(const MarkedRealization& r, std::size_t i, std::size_t j) {
  const double a = r.points[i].rho, b = r.points[j].rho;
  if (a != b) return a < b;
  return i < j;
}

MergedState initial_state(const HoleSystem& holes) {
  MergedState s;
  s.radius.reserve(holes.balls.size());
  s.absorbed_by.reserve(holes.balls.size());
  for (std::size_t i = 0; i < holes.balls.size(); ++i) {
    s.radius.push_back(holes.balls[i].radius);
    s.absorbed_by.push_back(i);
  }
  return s;
}

std::vector<std::vector<std::size_t>> connectivity_classes(std::span<const std::size_t> members,
                                                           std::span<const double> radii, double alpha,
                                                           const HoleSystem& holes, bool adaptive_cells) {
  std::vector<std::size_t> active;
  std::vector<Ball> balls;
  for (std::size_t m : members) {
    if (!(radii[m] > 0.0)) continue;
    active.push_back(m);
    balls.emplace_back(holes.balls[m].center, radii[m]);
  }
  UnionFind uf(active.size());
  if (active.size() > 1) {
    SpatialIndex::Options opts;
    if (adaptive_cells) opts.cell_size = adaptive_cell_size(balls, alpha);
    const SpatialIndex index(balls, alpha, opts);
    for (auto [a, b] : near_pairs(balls, alpha, index)) uf.unite(a, b);
  }
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t a = 0; a < active.size(); ++a) by_root[uf.find(a)].push_back(active[a]);
  std::vector<std::vector<std::size_t>> groups;
  groups.reserve(by_root.size());
  for (auto& [root, g] : by_root) {
    std::sort(g.begin(), g.end());
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  return groups;
}

std::size_t apply_T(std::span<const std::size_t> members, MergedState& state, double alpha,
                    const MarkedRealization& r, const HoleSystem& holes, bool adaptive_cells) {
  const auto groups = connectivity_classes(members, state.radius, alpha, holes, adaptive_cells);
  std::size_t merged = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) continue;
    ++merged;
    state.max_group_size = std::max(state.max_group_size, g.size());
    std::size_t rep = g.front();
    for (std::size_t m : g)
      if (canonical_less(r, rep, m)) rep = m;
    const PointD& c = holes.balls[rep].center;
    double grown = 0.0;
    for (std::size_t m : g) grown = std::max(grown, distance(c, holes.balls[m].center) + state.radius[m]);
    for (std::size_t m : g) {
      if (m == rep) continue;
      state.radius[m] = 0.0;
      state.absorbed_by[m] = rep;
    }
    state.radius[rep] = grown;
  }
  return merged;
}

int iterate_to_fixed_point(std::span<const std::size_t> members, MergedState& state, double alpha,
                           const MarkedRealization& r, const HoleSystem& holes, int cap, bool adaptive_cells,
                           int stage) {
  if (cap < 1) throw ConfigError("iteration cap must be at least 1");
  for (int it = 1; it <= cap; ++it) {
    ++state.iterations;
    if (apply_T(members, state, alpha, r, holes, adaptive_cells) == 0) return it;
  }
  throw NonStabilizationError("merging did not stabilize within " + std::to_string(cap) + " iterations at stage " +
                                  std::to_string(stage),
                              stage, cap);
}

std::size_t MergeHierarchy::final_survivor(std::size_t i) const {
  while (absorbed_by[i] != i) i = absorbed_by[i];
  return i;
}

MergeHierarchy merge_hierarchy(const ClassPartition& partition, const MarkedRealization& r,
                               const HoleSystem& holes, const CoveringParams& params) {
  MergedState state = initial_state(holes);
  auto classes = partition.classes();
  MergeHierarchy out;
  const int last = std::max(partition.k_max + 1, -2);
  for (int k = -2; k <= last; ++k) {
    std::vector<std::size_t> psi;
    if (auto it = classes.find(k); it != classes.end()) psi = it->second;
    if (auto it = classes.find(k - 1); it != classes.end()) psi.insert(psi.end(), it->second.begin(), it->second.end());
    std::sort(psi.begin(), psi.end());
    out.iterations_per_stage.push_back(iterate_to_fixed_point(psi, state, params.alpha, r, holes,
                                                              params.max_T_iterations, params.adaptive_cells, k));
  }
  out.radius = std::move(state.radius);
  out.absorbed_by = std::move(state.absorbed_by);
  out.max_group_size = state.max_group_size;
  out.tilde_lambda.assign(out.radius.size(), 0.0);
  for (int k = kLowestClass; k <= partition.k_max; ++k) out.tilde[k];
  for (std::size_t i = 0; i < out.radius.size(); ++i) {
    if (!(out.radius[i] > 0.0)) continue;
    out.tilde_lambda[i] = out.radius[i] / holes.balls[i].radius;
    out.max_tilde_lambda = std::max(out.max_tilde_lambda, out.tilde_lambda[i]);
    out.tilde[partition.class_of[i]].push_back(i);
  }
  return out;
}

// -- symbolic E sets ---------------------------------------------------------

void SymbolicESet::add_anchor(const Ball& anchor, std::size_t member, int stage) {
  entries_.push_back({anchor, member, stage, {}});
  index_.reset();
}

const SpatialIndex& SymbolicESet::index() const {
  if (!index_) {
    anchors_.clear();
    for (const auto& e : entries_) anchors_.push_back(e.anchor);
    SpatialIndex::Options opts;
    opts.cell_size = adaptive_cell_size(anchors_, 1.0);
    index_.emplace(anchors_, 1.0, opts);
  }
  return *index_;
}

void SymbolicESet::subtract(const Ball& b) {
  if (entries_.empty()) return;
  for (std::size_t a : index().query(b))
    if (intersects(entries_[a].anchor, b)) entries_[a].subtracted.push_back(b);
}

bool SymbolicESet::contains(const Ball& b) const {
  if (entries_.empty()) return false;
  for (std::size_t a : index().query(b)) {
    const Entry& e = entries_[a];
    if (!perfolab::contains(e.anchor, b)) continue;
    bool clear = true;
    for (const Ball& s : e.subtracted)
      if (intersects(s, b)) {
        clear = false;
        break;
      }
    if (clear) return true;
  }
  return false;
}

// -- families ----------------------------------------------------------------

FamilyStage build_families(const MergeHierarchy& merged, const ClassPartition& partition, const MarkedRealization& r,
                           const HoleSystem& holes, const CoveringParams& params) {
  const double th = params.theta;
  auto lam = [&](std::size_t j) { return th * th * merged.tilde_lambda[j]; };
  auto tilde_of = [&](int k) -> const std::vector<std::size_t>& {
    static const std::vector<std::size_t> none;
    auto it = merged.tilde.find(k);
    return it == merged.tilde.end() ? none : it->second;
  };
  auto family_of = [&](const std::vector<std::size_t>& ids) {
    std::vector<FamilyMember> f;
    for (std::size_t j : ids) f.push_back({j, lam(j)});
    return f;
  };

  FamilyStage out;
  for (int k = kLowestClass; k <= partition.k_max; ++k) out.families[k];
  SymbolicESet e;
  const int top = partition.k_max;
  if (top >= -2) {
    const auto& jt = tilde_of(top);
    for (std::size_t j : jt) e.add_anchor(dilated_hole(holes, j, lam(j)), j, top);
    out.families[top] = family_of(jt);
    for (int l = top; l >= -1; --l) {
      std::vector<std::size_t> jl;
      for (std::size_t j : tilde_of(l - 1))
        if (!e.contains(dilated_hole(holes, j, th * merged.tilde_lambda[j]))) jl.push_back(j);
      for (std::size_t j : jl) e.subtract(dilated_hole(holes, j, th * lam(j)));
      for (std::size_t j : jl) e.add_anchor(dilated_hole(holes, j, lam(j)), j, l - 1);
      out.families[l - 1] = family_of(jl);
    }
  }
  out.e_minus2 = e;

  const double eps = r.epsilon;
  std::vector<char> thinned(r.points.size(), 0);
  for (std::size_t i : thin(r, 2.0 * std::pow(eps, 0.5 * params.delta))) thinned[i] = 1;
  for (std::size_t i = 0; i < r.points.size(); ++i)
    if (partition.class_of[i] == kLowestClass && thinned[i]) out.good_candidates.push_back(i);

  for (std::size_t j : tilde_of(kLowestClass))
    if (!thinned[j] && !e.contains(dilated_hole(holes, j, th * lam(j)))) out.tilde_j_minus3.push_back(j);
  SymbolicESet e_tilde = e;
  for (std::size_t j : out.tilde_j_minus3) e_tilde.subtract(dilated_hole(holes, j, th * lam(j)));
  for (std::size_t j : out.tilde_j_minus3) e_tilde.add_anchor(dilated_hole(holes, j, lam(j)), j, kLowestClass);

  std::vector<Ball> shells;
  for (const auto& [k, fam] : out.families)
    if (k >= -2)
      for (const auto& m : fam) shells.push_back(dilated_hole(holes, m.index, th * m.lambda));
  for (std::size_t j : out.tilde_j_minus3) shells.push_back(dilated_hole(holes, j, th * lam(j)));
  const double guard = 2.0 * std::pow(eps, 1.0 + params.delta);
  if (!shells.empty()) {
    SpatialIndex::Options opts;
    if (params.adaptive_cells) opts.cell_size = adaptive_cell_size(shells, 1.0);
    const SpatialIndex index(shells, 1.0, opts);
    std::vector<std::size_t> cand;
    for (std::size_t j : out.good_candidates) {
      const Ball q(holes.balls[j].center, guard);
      index.query_into(q, cand);
      for (std::size_t c : cand)
        if (intersects(q, shells[c])) {
          out.k_eps.push_back(j);
          break;
        }
    }
  }

  std::vector<std::size_t> j3 = out.tilde_j_minus3;
  for (std::size_t j : out.k_eps)
    if (merged.radius[j] > 0.0 && !e_tilde.contains(dilated_hole(holes, j, th * lam(j)))) j3.push_back(j);
  std::sort(j3.begin(), j3.end());
  out.families[kLowestClass] = family_of(j3);

  out.e_final = out.e_minus2;
  for (std::size_t j : j3) out.e_final.subtract(dilated_hole(holes, j, th * lam(j)));
  for (std::size_t j : j3) out.e_final.add_anchor(dilated_hole(holes, j, lam(j)), j, kLowestClass);

  std::set_difference(out.good_candidates.begin(), out.good_candidates.end(), out.k_eps.begin(), out.k_eps.end(),
                      std::back_inserter(out.n_eps));
  return out;
}

BadAssignment assign_bad(const std::map<int, std::vector<FamilyMember>>& families, const HoleSystem& holes,
                         bool adaptive_cells) {
  BadAssignment out;
  std::vector<Ball> balls;
  std::vector<std::pair<int, std::size_t>> owner;
  for (const auto& [k, fam] : families)
    for (const auto& m : fam) {
      balls.push_back(dilated_hole(holes, m.index, m.lambda));
      owner.emplace_back(k, m.index);
    }
  if (balls.empty()) return out;
  SpatialIndex::Options opts;
  if (adaptive_cells) opts.cell_size = adaptive_cell_size(balls, 1.0);
  const SpatialIndex index(balls, 1.0, opts);
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < holes.balls.size(); ++i) {
    index.query_into(holes.balls[i], cand);
    std::optional<std::pair<int, std::size_t>> best;
    for (std::size_t c : cand)
      if (contains(balls[c], holes.balls[i]) && (!best || owner[c] < *best)) best = owner[c];
    if (best) {
      out.k_of[i] = best->first;
      out.witness[i] = best->second;
    }
  }
  return out;
}

double CoveringResult::log10_tilde_lambda_bound() const {
  const double m = static_cast<double>(max_group_size);
  return (k_max + 3) * m * std::log10(2.0 * params.alpha * m);
}

std::size_t CoveringResult::family_size() const {
  std::size_t n = 0;
  for (const auto& [k, fam] : families) n += fam.size();
  return n;
}

DerivedSets derived_sets(const CoveringResult& cov, const HoleSystem& holes) {
  DerivedSets s;
  for (std::size_t i : cov.good) s.h_good.push_back(holes.balls[i]);
  for (const auto& [i, k] : cov.assignment) s.h_bad.push_back(holes.balls[i]);
  for (const auto& [k, fam] : cov.families)
    for (const auto& m : fam) {
      s.h_bar_bad.push_back(dilated_hole(holes, m.index, m.lambda));
      s.d_bad.push_back(dilated_hole(holes, m.index, cov.params.theta * m.lambda));
    }
  return s;
}

CoveringResult cover(const MarkedRealization& r, const CoveringParams& params) {
  params.validate();
  const HoleSystem h = holes(r);
  const ClassPartition partition = classify(r, params.delta);
  const MergeHierarchy merged = merge_hierarchy(partition, r, h, params);
  FamilyStage fam = build_families(merged, partition, r, h, params);
  BadAssignment bad = assign_bad(fam.families, h, params.adaptive_cells);

  CoveringResult out;
  out.params = params;
  out.k_max = partition.k_max;
  out.k_max_bound = partition.k_max_bound;
  out.class_of = partition.class_of;
  out.families = std::move(fam.families);
  out.assignment = std::move(bad.k_of);
  out.witness = std::move(bad.witness);
  out.k_eps = std::move(fam.k_eps);
  for (std::size_t i : fam.n_eps)
    if (!out.assignment.count(i)) out.good.push_back(i);
  std::vector<char> placed(r.points.size(), 0);
  for (std::size_t i : out.good) placed[i] = 1;
  for (const auto& [i, k] : out.assignment) placed[i] = 1;
  for (std::size_t i = 0; i < placed.size(); ++i)
    if (!placed[i]) out.uncovered.push_back(i);
  for (std::size_t i = 0; i < merged.radius.size(); ++i)
    if (merged.radius[i] > 0.0) {
      out.survivor_radius[i] = merged.radius[i];
      out.tilde_lambda[i] = merged.tilde_lambda[i];
    }
  out.absorbed_by = merged.absorbed_by;
  out.iterations_per_stage = merged.iterations_per_stage;
  out.max_group_size = merged.max_group_size;
  out.max_tilde_lambda = merged.max_tilde_lambda;
  out.lambda_emp = 1.0;
  for (const auto& [k, f] : out.families)
    for (const auto& m : f) out.lambda_emp = std::max(out.lambda_emp, m.lambda);
  return out;
}

}  // namespace perfolab
