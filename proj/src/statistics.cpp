#include "perfolab/statistics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace perfolab {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string keyed(const char* name, const char* key, double v) {
  return std::string(name) + "[" + key + "=" + short_fmt(v) + "]";
}

// Gauss-Legendre nodes and weights on [-1, 1], five points.
constexpr double kGlX[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
constexpr double kGlW[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                            0.2369268850561891};
constexpr int kAzimuth = 10;

}  // namespace

// -- bump --------------------------------------------------------------------

double BumpFunction::operator()(const PointD& x) const {
  double v = 1.0;
  for (int k = 0; k < x.dim(); ++k) {
    const double t = (x[k] - center[k]) / half_width;
    if (std::abs(t) >= 1.0) return 0.0;
    const double s = 1.0 - t * t;
    v *= s * s;
  }
  return v;
}

double BumpFunction::integral() const { return std::pow(16.0 * half_width / 15.0, center.dim()); }

void BumpFunction::check_support(const Domain& domain) const {
  if (!(half_width > 0.0)) throw ConfigError("bump half-width must be positive");
  if (center.dim() != domain.dim) throw ConfigError("bump dimension differs from the domain");
  if (domain.kind == DomainKind::cube) {
    for (double c : center.coords())
      if (std::abs(c) + half_width >= domain.extent) throw ConfigError("bump support is not inside the domain");
  } else if (norm(center) + half_width * std::sqrt(static_cast<double>(domain.dim)) >= domain.extent) {
    throw ConfigError("bump support is not inside the domain");
  }
}

// -- estimators --------------------------------------------------------------

double estimate_density(const MarkedRealization& r) {
  return std::pow(r.epsilon, r.dim()) * static_cast<double>(r.points.size());
}

double estimate_capacity_density(const MarkedRealization& r, double c_d) {
  double s = 0.0;
  for (const auto& p : r.points) s += std::pow(p.rho, r.dim() - 2);
  return c_d * std::pow(r.epsilon, r.dim()) * s / r.domain.volume();
}

BadSetMetrics bad_set_metrics(const CoveringResult& cov, const MarkedRealization& r) {
  const HoleSystem h = holes(r);
  const DerivedSets sets = derived_sets(cov, h);
  const double ed = std::pow(r.epsilon, r.dim());
  BadSetMetrics m;
  for (const Ball& b : sets.d_bad) m.vol_Db += ball_volume(b.radius, r.dim());
  m.eps_d_bad = ed * static_cast<double>(cov.assignment.size());
  m.eps_d_K = ed * static_cast<double>(cov.k_eps.size());
  m.eps_d_good = ed * static_cast<double>(cov.good.size());
  return m;
}

std::map<int, std::map<std::size_t, std::size_t>> cluster_statistics(const MarkedRealization& r, double alpha,
                                                                     double delta) {
  const HoleSystem h = holes(r);
  const ClassPartition part = classify(r, delta);
  auto classes = part.classes();
  std::vector<double> radii;
  radii.reserve(h.balls.size());
  for (const Ball& b : h.balls) radii.push_back(b.radius);
  std::map<int, std::map<std::size_t, std::size_t>> hist;
  for (int k = -2; k <= std::max(part.k_max, -2); ++k) {
    std::vector<std::size_t> psi = classes[k];
    const auto& lower = classes[k - 1];
    psi.insert(psi.end(), lower.begin(), lower.end());
    std::sort(psi.begin(), psi.end());
    if (psi.empty()) continue;
    for (const auto& g : connectivity_classes(psi, radii, alpha, h)) ++hist[k][g.size()];
  }
  return hist;
}

std::size_t max_component(const std::map<int, std::map<std::size_t, std::size_t>>& hist) {
  std::size_t m = 0;
  for (const auto& [k, sizes] : hist)
    if (!sizes.empty()) m = std::max(m, sizes.rbegin()->first);
  return m;
}

double ball_quadrature(const BumpFunction& f, const PointD& x, double radius) {
  double total = 0.0;
  for (int a = 0; a < 5; ++a) {
    const double rr = 0.5 * radius * (kGlX[a] + 1.0);
    const double wr = 0.5 * radius * kGlW[a] * rr * rr;
    for (int b = 0; b < 5; ++b) {
      const double mu = kGlX[b];
      const double st = std::sqrt(1.0 - mu * mu);
      double ring = 0.0;
      for (int c = 0; c < kAzimuth; ++c) {
        const double phi = 2.0 * std::numbers::pi * (c + 0.5) / kAzimuth;
        PointD y = x;
        y[0] += rr * st * std::cos(phi);
        y[1] += rr * st * std::sin(phi);
        y[2] += rr * mu;
        ring += f(y);
      }
      total += wr * kGlW[b] * ring * (2.0 * std::numbers::pi / kAzimuth);
    }
  }
  return total;
}

double weighted_indicator(const MarkedRealization& r, const BumpFunction& zeta, double c) {
  if (r.dim() != 3) throw ConfigError("weighted indicator quadrature is implemented for d = 3");
  zeta.check_support(r.domain);
  if (!(c > 0.0)) throw ConfigError("radius factor must be positive");
  const double rad = c * r.epsilon;
  const double ed = std::pow(r.epsilon, 3);
  const double scale = ed / (rad * rad * rad);
  double s = 0.0;
  for (const auto& p : r.points) {
    const PointD x = p.z.scaled(r.epsilon);
    bool near = true;
    for (int k = 0; k < 3; ++k)
      if (std::abs(x[k] - zeta.center[k]) >= zeta.half_width + rad) near = false;
    if (!near) continue;
    s += p.rho * scale * ball_quadrature(zeta, x, rad);
  }
  return s;
}

double weighted_indicator_limit(double lambda, const MarkDistribution& marks, const BumpFunction& zeta, int d) {
  return unit_ball_volume(d) * lambda * mark_moment(marks, d - 2) * zeta.integral();
}

double small_distance_bad(const MarkedRealization& r, const CoveringResult& cov, double eta) {
  const HoleSystem h = holes(r);
  const DerivedSets sets = derived_sets(cov, h);
  const double ed = std::pow(r.epsilon, r.dim());
  if (sets.d_bad.empty()) return 0.0;
  const double reach = eta * r.epsilon;
  SpatialIndex::Options opts;
  opts.cell_size = adaptive_cell_size(sets.d_bad, 1.0);
  const SpatialIndex index(sets.d_bad, 1.0, opts);
  std::vector<std::size_t> cand;
  std::size_t n = 0;
  for (std::size_t i : thin(r, 2.0 * eta)) {
    const Ball q(h.balls[i].center, reach);
    index.query_into(q, cand);
    for (std::size_t c : cand)
      if (distance(q.center, sets.d_bad[c].center) - sets.d_bad[c].radius <= reach) {
        ++n;
        break;
      }
  }
  return ed * static_cast<double>(n);
}

double thinned_density_limit(double lambda, const Domain& domain, double eta) {
  return lambda * domain.volume() * std::exp(-lambda * ball_volume(eta, domain.dim));
}

// -- sweep -------------------------------------------------------------------

CoveringParams SweepConfig::covering_params() const {
  return covering ? *covering : CoveringParams::defaults(beta, domain.dim);
}

double SweepConfig::c_d() const {
  if (capacity_constant > 0.0) return capacity_constant;
  if (domain.dim == 3) return 6.0 * std::numbers::pi;
  throw ConfigError("capacity constant must be given for d != 3");
}

void SweepConfig::validate() const {
  if (epsilons.empty()) throw ConfigError("epsilon grid is empty");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0 && epsilons[i] < 1.0)) throw ConfigError("epsilon values must lie in (0,1)");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) throw ConfigError("epsilon grid must be strictly decreasing");
  }
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  marks.validate();
  covering_params().validate();
  if (zeta) zeta->check_support(domain);
  for (double c : zeta_radius_factors)
    if (!(c > 0.0)) throw ConfigError("radius factors must be positive");
  for (double e : thinning_etas)
    if (!(e > 0.0)) throw ConfigError("thinning distances must be positive");
  for (int m : chain_sizes)
    if (m < 1) throw ConfigError("chain sizes must be at least 1");
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stderr_ = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
  }
  return s;
}

bool SweepReport::any_failure() const {
  for (const auto& row : rows) {
    if (row.failed_cells || row.refused_cells) return true;
    for (const auto& s : row.scenes)
      if (!s.failed_properties.empty()) return true;
  }
  return false;
}

std::size_t SweepReport::total_refused() const {
  std::size_t n = 0;
  for (const auto& row : rows) n += row.refused_cells;
  return n;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t eps_index, std::size_t rep) {
  return derive_seed(derive_seed(base_seed, eps_index), rep);
}

SceneResult evaluate_scene(const SweepConfig& cfg, const MarkedRealization& r, const CoveringResult* given) {
  if (given) check_shape(*given, r);
  SceneResult out;
  out.seed = r.seed;
  try {
    const CoveringParams params = given ? given->params : cfg.covering_params();
    auto& v = out.values;
    const double ed = std::pow(r.epsilon, r.dim());
    v["density"] = estimate_density(r);
    v["capacity_density"] = estimate_capacity_density(r, cfg.c_d());
    if (cfg.zeta)
      for (double c : cfg.zeta_radius_factors) v[keyed("weighted_indicator", "c", c)] = weighted_indicator(r, *cfg.zeta, c);
    for (double eta : cfg.thinning_etas)
      v[keyed("thinned_density", "eta", eta)] = ed * static_cast<double>(thin(r, eta).size());
    if (cfg.run_clusters) {
      out.clusters = cluster_statistics(r, cfg.cluster_alpha.value_or(params.alpha), params.delta);
      const std::size_t big = max_component(out.clusters);
      v["max_component"] = static_cast<double>(big);
      for (int m : cfg.chain_sizes) v[keyed("chain", "m", m)] = big >= static_cast<std::size_t>(m) ? 1.0 : 0.0;
    }
    if (cfg.run_covering || given) {
      const CoveringResult cov = given ? *given : cover(r, params);
      const BadSetMetrics bm = bad_set_metrics(cov, r);
      v["vol_Db"] = bm.vol_Db;
      v["eps_d_bad"] = bm.eps_d_bad;
      v["eps_d_K"] = bm.eps_d_K;
      v["eps_d_good"] = bm.eps_d_good;
      v["max_tilde_lambda"] = cov.max_tilde_lambda;
      v["lambda_emp"] = cov.lambda_emp;
      v["max_iterations"] = cov.iterations_per_stage.empty()
                                ? 0.0
                                : *std::max_element(cov.iterations_per_stage.begin(), cov.iterations_per_stage.end());
      v["max_merge_group"] = static_cast<double>(cov.max_group_size);
      v["uncovered"] = static_cast<double>(cov.uncovered.size());
      v["k_max"] = cov.k_max;
      for (double eta : cfg.thinning_etas) v[keyed("small_distance_bad", "eta", eta)] = small_distance_bad(r, cov, eta);
      if (cfg.run_verifier) {
        const VerificationReport rep = verify_all(cov, r, params);
        out.failed_properties = rep.failed_by_construction();
        v["by_construction_pass"] = rep.pass() ? 1.0 : 0.0;
        const PropertyRecord* cf = rep.find("cross_family");
        v["cross_family_violation"] = cf->pass ? 0.0 : 1.0;
        v["cross_family_fraction"] = cf->metrics.at("violation_fraction");
        const PropertyRecord* rb = rep.find("radius_bound");
        v["radius_bound_ratio"] = rb->metrics.at("ratio");
        v["radius_bound_violation"] = rb->pass ? 0.0 : 1.0;
        for (const auto& p : rep.properties)
          if (p.cls == PropertyClass::by_construction)
            v["violations[" + p.name + "]"] = static_cast<double>(p.violations.size());
      }
    }
  } catch (const ResourceRefusal& e) {
    out.ok = false;
    out.refused = true;
    out.error = e.what();
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

SceneResult run_scene(const SweepConfig& cfg, double epsilon, std::uint64_t seed) {
  SampleOptions so;
  so.max_expected_count = cfg.max_expected_count;
  try {
    return evaluate_scene(cfg, sample(cfg.domain, cfg.lambda, epsilon, cfg.marks, seed, cfg.beta, so));
  } catch (const ResourceRefusal& e) {
    SceneResult out;
    out.seed = seed;
    out.ok = false;
    out.refused = true;
    out.error = e.what();
    return out;
  } catch (const std::exception& e) {
    SceneResult out;
    out.seed = seed;
    out.ok = false;
    out.error = e.what();
    return out;
  }
}

int default_workers() {
  if (const char* env = std::getenv("PERFOLAB_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

namespace {

void attach_targets(EpsilonRow& row, const SweepConfig& cfg) {
  const int d = cfg.domain.dim;
  const double lam_d = cfg.lambda * cfg.domain.volume();
  auto set = [&](const std::string& name, double target, const char* how) {
    if (auto it = row.estimators.find(name); it != row.estimators.end()) {
      it->second.target = target;
      it->second.target_provenance = how;
    }
  };
  set("density", lam_d, "lambda*|D|");
  try {
    set("capacity_density", cfg.c_d() * cfg.lambda * mark_moment(cfg.marks, d - 2), "C_d*lambda*<rho^(d-2)>");
  } catch (const ConfigError&) {
  }
  set("eps_d_good", lam_d, "limit lambda*|D|");
  set("eps_d_bad", 0.0, "limit 0");
  set("eps_d_K", 0.0, "limit 0");
  set("vol_Db", 0.0, "limit 0");
  if (cfg.zeta)
    for (double c : cfg.zeta_radius_factors)
      set(keyed("weighted_indicator", "c", c), weighted_indicator_limit(cfg.lambda, cfg.marks, *cfg.zeta, d),
          "|B_1|*lambda*<rho^(d-2)>*int(zeta)");
  for (double eta : cfg.thinning_etas) {
    set(keyed("thinned_density", "eta", eta), thinned_density_limit(cfg.lambda, cfg.domain, eta),
        "lambda*|D|*exp(-lambda*|B_eta|)");
    set(keyed("small_distance_bad", "eta", eta), 0.0, "limit 0");
  }
}

}  // namespace

SweepReport run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t ne = cfg.epsilons.size();
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  std::vector<SceneResult> cells(ne * reps);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t c = next++; c < cells.size(); c = next++) {
      const std::size_t e = c / reps, rep = c % reps;
      cells[c] = run_scene(cfg, cfg.epsilons[e], cell_seed(cfg.base_seed, e, rep));
    }
  };
  const int nw = std::max(1, std::min<int>(cfg.workers > 0 ? cfg.workers : default_workers(),
                                           static_cast<int>(cells.size())));
  if (nw == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nw; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SweepReport rep;
  rep.config = cfg;
  for (std::size_t e = 0; e < ne; ++e) {
    EpsilonRow row;
    row.epsilon = cfg.epsilons[e];
    std::map<std::string, std::vector<double>> values;
    std::size_t ok = 0;
    for (std::size_t k = 0; k < reps; ++k) {
      SceneResult& s = cells[e * reps + k];
      if (!s.ok) {
        (s.refused ? row.refused_cells : row.failed_cells) += 1;
        row.errors.push_back("seed " + std::to_string(s.seed) + ": " + s.error);
      } else {
        ++ok;
        for (const auto& [name, v] : s.values) values[name].push_back(v);
        for (const auto& [cls, sizes] : s.clusters) {
          std::size_t biggest = 0;
          for (const auto& [size, count] : sizes) {
            row.histogram[cls][size] += count;
            biggest = std::max(biggest, size);
          }
          row.max_component[cls] = std::max(row.max_component[cls], biggest);
        }
      }
      row.scenes.push_back(std::move(s));
    }
    for (const auto& [name, vs] : values) row.estimators[name] = summarize(vs);
    attach_targets(row, cfg);
    if (ok > 0)
      for (const auto& [cls, biggest] : row.max_component)
        for (std::size_t m = 1; m <= biggest; ++m) {
          std::size_t hits = 0;
          for (const auto& s : row.scenes) {
            if (!s.ok) continue;
            auto it = s.clusters.find(cls);
            if (it != s.clusters.end() && !it->second.empty() && it->second.rbegin()->first >= m) ++hits;
          }
          row.chain_frequency[{cls, static_cast<int>(m)}] = static_cast<double>(hits) / static_cast<double>(ok);
        }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::vector<double> chain_probability(const SweepConfig& cfg, int m, double alpha) {
  SweepConfig c = cfg;
  c.run_covering = false;
  c.run_verifier = false;
  c.run_clusters = true;
  c.chain_sizes = {m};
  c.cluster_alpha = alpha;
  c.thinning_etas.clear();
  c.zeta.reset();
  const SweepReport rep = run_sweep(c);
  const std::string key = keyed("chain", "m", m);
  std::vector<double> out;
  for (const auto& row : rep.rows) {
    auto it = row.estimators.find(key);
    out.push_back(it == row.estimators.end() ? 0.0 : it->second.mean);
  }
  return out;
}

std::vector<ThinningRow> thinning_limits(const SweepConfig& cfg, const std::vector<double>& etas) {
  SweepConfig c = cfg;
  c.thinning_etas = etas;
  c.run_covering = true;
  c.run_verifier = false;
  c.run_clusters = false;
  c.zeta.reset();
  const SweepReport rep = run_sweep(c);
  std::vector<ThinningRow> out;
  for (const auto& row : rep.rows)
    for (double eta : etas) {
      ThinningRow t;
      t.epsilon = row.epsilon;
      t.eta = eta;
      if (auto it = row.estimators.find(keyed("thinned_density", "eta", eta)); it != row.estimators.end())
        t.thinned_density = it->second;
      if (auto it = row.estimators.find(keyed("small_distance_bad", "eta", eta)); it != row.estimators.end())
        t.small_distance_bad = it->second;
      out.push_back(t);
    }
  return out;
}

std::string wide_csv(const SweepReport& rep) {
  std::set<std::string> names;
  for (const auto& row : rep.rows)
    for (const auto& [name, s] : row.estimators) names.insert(name);
  std::ostringstream os;
  os << "epsilon,failed_cells,refused_cells";
  for (const auto& n : names) os << ',' << n << ".mean," << n << ".stderr," << n << ".n";
  os << '\n';
  for (const auto& row : rep.rows) {
    os << fmt(row.epsilon) << ',' << row.failed_cells << ',' << row.refused_cells;
    for (const auto& n : names) {
      auto it = row.estimators.find(n);
      if (it == row.estimators.end())
        os << ",,,";
      else
        os << ',' << fmt(it->second.mean) << ',' << fmt(it->second.stderr_) << ',' << it->second.n;
    }
    os << '\n';
  }
  return os.str();
}

std::string report_csv(const SweepReport& rep) {
  std::ostringstream os;
  os << "epsilon,estimator,mean,stderr,n,target,target_provenance\n";
  for (const auto& row : rep.rows)
    for (const auto& [name, s] : row.estimators) {
      os << fmt(row.epsilon) << ',' << name << ',' << fmt(s.mean) << ',' << fmt(s.stderr_) << ',' << s.n << ','
         << (s.target ? fmt(*s.target) : "") << ',' << s.target_provenance << '\n';
    }
  return os.str();
}

std::string summary_csv(const SweepReport& rep) {
  std::ostringstream os;
  os << "epsilon,estimator,mean,stderr,n,target,z_score,target_provenance\n";
  for (const auto& row : rep.rows)
    for (const auto& [name, s] : row.estimators) {
      if (!s.target) continue;
      const std::string z = s.stderr_ > 0.0 ? fmt((s.mean - *s.target) / s.stderr_) : "";
      os << fmt(row.epsilon) << ',' << name << ',' << fmt(s.mean) << ',' << fmt(s.stderr_) << ',' << s.n << ','
         << fmt(*s.target) << ',' << z << ',' << s.target_provenance << '\n';
    }
  return os.str();
}

std::string histogram_csv(const SweepReport& rep) {
  std::ostringstream os;
  os << "epsilon,class,component_size,count\n";
  for (const auto& row : rep.rows)
    for (const auto& [cls, sizes] : row.histogram)
      for (const auto& [size, count] : sizes) os << fmt(row.epsilon) << ',' << cls << ',' << size << ',' << count << '\n';
  return os.str();
}

std::string chain_csv(const SweepReport& rep) {
  std::ostringstream os;
  os << "epsilon,class,m,frequency\n";
  for (const auto& row : rep.rows)
    for (const auto& [key, f] : row.chain_frequency)
      os << fmt(row.epsilon) << ',' << key.first << ',' << key.second << ',' << fmt(f) << '\n';
  return os.str();
}

}  // namespace perfolab
