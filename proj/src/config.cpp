#include "perfolab/config.hpp"

#include <set>

#include <json.hpp>

namespace perfolab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& source, const std::string& path, const std::string& what) {
  throw ConfigError(source + ": " + path + ": " + what);
}

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& source,
               const std::string& path) {
  if (!j.is_object()) fail(source, path.empty() ? "/" : path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(source, path + "/" + it.key(), "unknown field");
}

double num(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_number()) fail(source, path, "expected a number");
  return j.get<double>();
}

long long integer(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_number_integer()) fail(source, path, "expected an integer");
  return j.get<long long>();
}

bool boolean(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_boolean()) fail(source, path, "expected a boolean");
  return j.get<bool>();
}

std::string str(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_string()) fail(source, path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const json& j, const std::string& source, const std::string& path) {
  if (!j.is_array()) fail(source, path, "expected an array");
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(num(j[i], source, path + "/" + std::to_string(i)));
  return v;
}

// Rethrows a validation error with the path that produced it.
template <class F>
void at_path(const std::string& source, const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    fail(source, path, e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  sweep.validate();
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
  for (const auto& f : formats)
    if (f != "csv" && f != "json") throw ConfigError("unknown report format '" + f + "'");
  if (!(capacity.a > 0.0)) throw ConfigError("capacity sphere radius must be positive");
  if (!(capacity.r_max >= 10.0 * capacity.a)) throw ConfigError("capacity truncation radius must be at least 10 a");
  if (capacity.resolution < 2) throw ConfigError("capacity resolution must be at least 2");
  if (!(capacity.tolerance > 0.0)) throw ConfigError("capacity tolerance must be positive");
  if (!(render.width_px > 0.0)) throw ConfigError("render width must be positive");
}

RunConfig run_config_from_json(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": byte " + std::to_string(e.byte) + ": malformed JSON");
  }
  only_keys(j,
            {"epsilons", "replicates", "base_seed", "lambda", "beta", "dimension", "domain", "mark_dist", "covering",
             "run_covering", "run_verifier", "run_clusters", "chain_sizes", "cluster_alpha", "zeta",
             "zeta_radius_factors", "thinning_etas", "capacity_constant", "max_expected_count", "output_dir",
             "formats", "render", "capacity"},
            source, "");
  RunConfig cfg;
  SweepConfig& s = cfg.sweep;
  if (j.contains("dimension")) {
    const long long d = integer(j["dimension"], source, "/dimension");
    if (d < 3 || d > kMaxDimension) fail(source, "/dimension", "dimension must lie in [3, 8]");
    s.domain = Domain::unit_cube(static_cast<int>(d));
  }
  if (j.contains("epsilons")) s.epsilons = numbers(j["epsilons"], source, "/epsilons");
  if (j.contains("replicates")) {
    const long long r = integer(j["replicates"], source, "/replicates");
    if (r < 1 || r > 1000000) fail(source, "/replicates", "replicates out of range");
    s.replicates = static_cast<int>(r);
  }
  if (j.contains("base_seed")) {
    if (!j["base_seed"].is_number_unsigned()) fail(source, "/base_seed", "expected a non-negative integer");
    s.base_seed = j["base_seed"].get<std::uint64_t>();
  }
  if (j.contains("lambda")) s.lambda = num(j["lambda"], source, "/lambda");
  if (j.contains("beta")) s.beta = num(j["beta"], source, "/beta");
  if (j.contains("domain")) {
    const json& d = j["domain"];
    only_keys(d, {"kind", "extent"}, source, "/domain");
    if (d.contains("kind"))
      at_path(source, "/domain/kind",
              [&] { s.domain.kind = domain_kind_from_string(str(d["kind"], source, "/domain/kind")); });
    if (d.contains("extent")) s.domain.extent = num(d["extent"], source, "/domain/extent");
    if (!(s.domain.extent > 0.0)) fail(source, "/domain/extent", "extent must be positive");
  }
  if (j.contains("mark_dist")) {
    const json& m = j["mark_dist"];
    only_keys(m, {"kind", "params"}, source, "/mark_dist");
    if (!m.contains("kind") || !m.contains("params")) fail(source, "/mark_dist", "needs kind and params");
    const std::string kind = str(m["kind"], source, "/mark_dist/kind");
    const auto p = numbers(m["params"], source, "/mark_dist/params");
    at_path(source, "/mark_dist", [&] {
      const MarkKind k = mark_kind_from_string(kind);
      if (k == MarkKind::constant) {
        if (p.size() != 1) throw ConfigError("constant marks take one parameter");
        s.marks = MarkDistribution::constant(p[0]);
      } else {
        if (p.size() != 2) throw ConfigError("this mark distribution takes two parameters");
        s.marks = k == MarkKind::pareto ? MarkDistribution::pareto(p[0], p[1]) : MarkDistribution::lognormal(p[0], p[1]);
      }
      s.marks.validate();
    });
  }
  if (j.contains("covering")) {
    const json& c = j["covering"];
    only_keys(c, {"theta", "alpha", "delta", "max_T_iterations", "adaptive_cells"}, source, "/covering");
    CoveringParams p = CoveringParams::defaults(s.beta, s.domain.dim);
    if (c.contains("delta")) p.delta = num(c["delta"], source, "/covering/delta");
    if (c.contains("theta")) {
      const CoveringParams t = CoveringParams::with_theta(num(c["theta"], source, "/covering/theta"), p.delta);
      p.theta = t.theta;
      p.alpha = t.alpha;
    }
    if (c.contains("alpha")) p.alpha = num(c["alpha"], source, "/covering/alpha");
    if (c.contains("max_T_iterations")) {
      const long long cap = integer(c["max_T_iterations"], source, "/covering/max_T_iterations");
      if (cap < 1 || cap > 1000000) fail(source, "/covering/max_T_iterations", "cap out of range");
      p.max_T_iterations = static_cast<int>(cap);
    }
    if (c.contains("adaptive_cells")) p.adaptive_cells = boolean(c["adaptive_cells"], source, "/covering/adaptive_cells");
    at_path(source, "/covering", [&] { p.validate(); });
    s.covering = p;
  }
  if (j.contains("run_covering")) s.run_covering = boolean(j["run_covering"], source, "/run_covering");
  if (j.contains("run_verifier")) s.run_verifier = boolean(j["run_verifier"], source, "/run_verifier");
  if (j.contains("run_clusters")) s.run_clusters = boolean(j["run_clusters"], source, "/run_clusters");
  if (j.contains("chain_sizes")) {
    s.chain_sizes.clear();
    const json& a = j["chain_sizes"];
    if (!a.is_array()) fail(source, "/chain_sizes", "expected an array");
    for (std::size_t i = 0; i < a.size(); ++i)
      s.chain_sizes.push_back(static_cast<int>(integer(a[i], source, "/chain_sizes/" + std::to_string(i))));
  }
  if (j.contains("cluster_alpha")) s.cluster_alpha = num(j["cluster_alpha"], source, "/cluster_alpha");
  if (j.contains("zeta")) {
    const json& z = j["zeta"];
    only_keys(z, {"center", "half_width"}, source, "/zeta");
    BumpFunction b;
    b.center = PointD(s.domain.dim);
    if (z.contains("center")) {
      const auto c = numbers(z["center"], source, "/zeta/center");
      if (c.size() != static_cast<std::size_t>(s.domain.dim)) fail(source, "/zeta/center", "wrong dimension");
      for (int i = 0; i < s.domain.dim; ++i) b.center[i] = c[static_cast<std::size_t>(i)];
    }
    if (z.contains("half_width")) b.half_width = num(z["half_width"], source, "/zeta/half_width");
    if (!(b.half_width > 0.0)) fail(source, "/zeta/half_width", "half width must be positive");
    s.zeta = b;
  }
  if (j.contains("zeta_radius_factors"))
    s.zeta_radius_factors = numbers(j["zeta_radius_factors"], source, "/zeta_radius_factors");
  if (j.contains("thinning_etas")) s.thinning_etas = numbers(j["thinning_etas"], source, "/thinning_etas");
  if (j.contains("capacity_constant")) s.capacity_constant = num(j["capacity_constant"], source, "/capacity_constant");
  if (j.contains("max_expected_count"))
    s.max_expected_count = num(j["max_expected_count"], source, "/max_expected_count");
  if (j.contains("output_dir")) cfg.output_dir = str(j["output_dir"], source, "/output_dir");
  if (j.contains("formats")) {
    const json& f = j["formats"];
    if (!f.is_array()) fail(source, "/formats", "expected an array");
    cfg.formats.clear();
    for (std::size_t i = 0; i < f.size(); ++i) cfg.formats.push_back(str(f[i], source, "/formats/" + std::to_string(i)));
  }
  if (j.contains("render")) {
    const json& r = j["render"];
    only_keys(r, {"enabled", "offset", "width_px"}, source, "/render");
    if (r.contains("enabled")) cfg.render.enabled = boolean(r["enabled"], source, "/render/enabled");
    if (r.contains("offset")) cfg.render.offset = num(r["offset"], source, "/render/offset");
    if (r.contains("width_px")) cfg.render.width_px = num(r["width_px"], source, "/render/width_px");
  }
  if (j.contains("capacity")) {
    const json& c = j["capacity"];
    only_keys(c, {"a", "r_max", "resolution", "tolerance"}, source, "/capacity");
    if (c.contains("a")) cfg.capacity.a = num(c["a"], source, "/capacity/a");
    if (c.contains("r_max")) cfg.capacity.r_max = num(c["r_max"], source, "/capacity/r_max");
    if (c.contains("resolution"))
      cfg.capacity.resolution = static_cast<int>(integer(c["resolution"], source, "/capacity/resolution"));
    if (c.contains("tolerance")) cfg.capacity.tolerance = num(c["tolerance"], source, "/capacity/tolerance");
  }
  at_path(source, "/", [&] { cfg.validate(); });
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  const SweepConfig& s = cfg.sweep;
  const CoveringParams p = s.covering_params();
  json j;
  j["epsilons"] = s.epsilons;
  j["replicates"] = s.replicates;
  j["base_seed"] = s.base_seed;
  j["lambda"] = s.lambda;
  j["beta"] = s.beta;
  j["dimension"] = s.domain.dim;
  j["domain"] = {{"kind", to_string(s.domain.kind)}, {"extent", s.domain.extent}};
  if (s.marks.kind == MarkKind::constant)
    j["mark_dist"] = {{"kind", to_string(s.marks.kind)}, {"params", {s.marks.p1}}};
  else
    j["mark_dist"] = {{"kind", to_string(s.marks.kind)}, {"params", {s.marks.p1, s.marks.p2}}};
  j["covering"] = {{"theta", p.theta},
                   {"alpha", p.alpha},
                   {"delta", p.delta},
                   {"max_T_iterations", p.max_T_iterations},
                   {"adaptive_cells", p.adaptive_cells}};
  j["run_covering"] = s.run_covering;
  j["run_verifier"] = s.run_verifier;
  j["run_clusters"] = s.run_clusters;
  j["chain_sizes"] = s.chain_sizes;
  if (s.cluster_alpha) j["cluster_alpha"] = *s.cluster_alpha;
  if (s.zeta) {
    json c = json::array();
    for (double v : s.zeta->center.coords()) c.push_back(v);
    j["zeta"] = {{"center", c}, {"half_width", s.zeta->half_width}};
  }
  j["zeta_radius_factors"] = s.zeta_radius_factors;
  j["thinning_etas"] = s.thinning_etas;
  j["capacity_constant"] = s.capacity_constant;
  j["max_expected_count"] = s.max_expected_count;
  j["output_dir"] = cfg.output_dir;
  j["formats"] = cfg.formats;
  j["render"] = {{"enabled", cfg.render.enabled}, {"offset", cfg.render.offset}, {"width_px", cfg.render.width_px}};
  j["capacity"] = {{"a", cfg.capacity.a},
                   {"r_max", cfg.capacity.r_max},
                   {"resolution", cfg.capacity.resolution},
                   {"tolerance", cfg.capacity.tolerance}};
  return j.dump(1) + "\n";
}

}  // namespace perfolab
