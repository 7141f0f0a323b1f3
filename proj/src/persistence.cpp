#include "perfolab/persistence.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace perfolab {

using nlohmann::json;

namespace {

// Reader that reports the JSON path of whatever it fails on.
class Reader {
 public:
  Reader(const json& j, std::string source, std::string path = "")
      : j_(j), source_(std::move(source)), path_(std::move(path)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(source_ + ": " + (path_.empty() ? "/" : path_) + ": " + what);
  }

  Reader at(const std::string& key) const {
    if (!j_.is_object()) fail("expected an object");
    auto it = j_.find(key);
    if (it == j_.end()) Reader(j_, source_, path_ + "/" + key).fail("missing field");
    return Reader(*it, source_, path_ + "/" + key);
  }
  bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

  Reader at(std::size_t i) const { return Reader(j_.at(i), source_, path_ + "/" + std::to_string(i)); }

  std::size_t size() const {
    if (!j_.is_array()) fail("expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }
  std::int64_t integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<std::int64_t>();
  }
  std::size_t index() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0))
      fail("expected a non-negative integer");
    return j_.get<std::size_t>();
  }
  std::uint64_t u64() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0))
      fail("expected a non-negative integer");
    return j_.get<std::uint64_t>();
  }
  bool boolean() const {
    if (!j_.is_boolean()) fail("expected a boolean");
    return j_.get<bool>();
  }
  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }
  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> v;
    for (std::size_t i = 0, n = size(); i < n; ++i) v.push_back(at(i).index());
    return v;
  }

 private:
  const json& j_;
  std::string source_;
  std::string path_;
};

json parse(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": byte " + std::to_string(e.byte) + ": malformed JSON");
  }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + p.parent_path().string());
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << contents;
    out.flush();
    if (!out) throw IoError("cannot write " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, p, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path);
}

// -- scene ---------------------------------------------------------------

std::string scene_to_json(const MarkedRealization& r) {
  json j;
  j["version"] = kFormatVersion;
  j["dimension"] = r.dim();
  j["epsilon"] = r.epsilon;
  j["lambda"] = r.lambda;
  j["beta"] = r.beta;
  j["domain"] = {{"kind", to_string(r.domain.kind)}, {"extent", r.domain.extent}};
  j["mark_dist"] = {{"kind", to_string(r.mark_dist.kind)}, {"params", {r.mark_dist.p1, r.mark_dist.p2}}};
  j["seed"] = r.seed;
  json pts = json::array();
  for (const auto& p : r.points) {
    json z = json::array();
    for (double c : p.z.coords()) z.push_back(c);
    pts.push_back({{"z", std::move(z)}, {"rho", p.rho}});
  }
  j["points"] = std::move(pts);
  return j.dump(1) + "\n";
}

MarkedRealization scene_from_json(const std::string& text, const std::string& source) {
  const json j = parse(text, source);
  const Reader root(j, source);
  if (root.at("version").integer() != kFormatVersion) root.at("version").fail("unsupported version");
  MarkedRealization r;
  const auto d = root.at("dimension").integer();
  if (d < 1 || d > kMaxDimension) root.at("dimension").fail("dimension out of range");
  r.epsilon = root.at("epsilon").number();
  r.lambda = root.at("lambda").number();
  r.beta = root.at("beta").number();
  const Reader dom = root.at("domain");
  try {
    r.domain.kind = domain_kind_from_string(dom.at("kind").string());
  } catch (const ConfigError& e) {
    dom.at("kind").fail(e.what());
  }
  r.domain.extent = dom.at("extent").number();
  r.domain.dim = static_cast<int>(d);
  const Reader md = root.at("mark_dist");
  try {
    r.mark_dist.kind = mark_kind_from_string(md.at("kind").string());
  } catch (const ConfigError& e) {
    md.at("kind").fail(e.what());
  }
  const Reader params = md.at("params");
  if (params.size() != 2) params.fail("expected two parameters");
  r.mark_dist.p1 = params.at(std::size_t{0}).number();
  r.mark_dist.p2 = params.at(std::size_t{1}).number();
  r.seed = root.at("seed").u64();
  const Reader pts = root.at("points");
  const std::size_t n = pts.size();
  r.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Reader p = pts.at(i);
    const Reader z = p.at("z");
    if (z.size() != static_cast<std::size_t>(d)) z.fail("coordinate count differs from dimension");
    MarkedPoint mp;
    mp.z = PointD(static_cast<int>(d));
    for (int c = 0; c < d; ++c) mp.z[c] = z.at(static_cast<std::size_t>(c)).number();
    mp.rho = p.at("rho").number();
    if (!(mp.rho > 0.0)) p.at("rho").fail("mark must be positive");
    r.points.push_back(mp);
  }
  return r;
}

// -- covering ------------------------------------------------------------

std::string covering_to_json(const CoveringResult& cov) {
  json j;
  j["version"] = kFormatVersion;
  j["params"] = {{"theta", cov.params.theta},
                 {"alpha", cov.params.alpha},
                 {"delta", cov.params.delta},
                 {"max_T_iterations", cov.params.max_T_iterations},
                 {"adaptive_cells", cov.params.adaptive_cells}};
  j["k_max"] = cov.k_max;
  j["k_max_bound"] = cov.k_max_bound;
  j["good"] = cov.good;
  json fams = json::array();
  for (auto it = cov.families.rbegin(); it != cov.families.rend(); ++it) {
    json members = json::array();
    for (const auto& m : it->second) members.push_back({{"index", m.index}, {"lambda", m.lambda}});
    fams.push_back({{"k", it->first}, {"members", std::move(members)}});
  }
  j["families"] = std::move(fams);
  json asg = json::array();
  for (const auto& [i, k] : cov.assignment) {
    json e = {{"index", i}, {"k", k}};
    if (auto w = cov.witness.find(i); w != cov.witness.end()) e["witness"] = w->second;
    asg.push_back(std::move(e));
  }
  j["assignment"] = std::move(asg);
  j["lambda_emp"] = cov.lambda_emp;
  j["max_tilde_lambda"] = cov.max_tilde_lambda;
  j["iterations_per_stage"] = cov.iterations_per_stage;
  j["max_group_size"] = cov.max_group_size;
  j["k_eps"] = cov.k_eps;
  j["uncovered"] = cov.uncovered;
  j["class_of"] = cov.class_of;
  j["absorbed_by"] = cov.absorbed_by;
  json surv = json::array();
  for (const auto& [i, rad] : cov.survivor_radius) {
    json e = {{"index", i}, {"radius", rad}};
    if (auto t = cov.tilde_lambda.find(i); t != cov.tilde_lambda.end()) e["tilde_lambda"] = t->second;
    surv.push_back(std::move(e));
  }
  j["survivors"] = std::move(surv);
  return j.dump(1) + "\n";
}

CoveringResult covering_from_json(const std::string& text, const std::string& source) {
  const json j = parse(text, source);
  const Reader root(j, source);
  if (root.at("version").integer() != kFormatVersion) root.at("version").fail("unsupported version");
  CoveringResult cov;
  const Reader p = root.at("params");
  cov.params.theta = p.at("theta").number();
  cov.params.alpha = p.at("alpha").number();
  cov.params.delta = p.at("delta").number();
  if (p.has("max_T_iterations")) cov.params.max_T_iterations = static_cast<int>(p.at("max_T_iterations").integer());
  if (p.has("adaptive_cells")) cov.params.adaptive_cells = p.at("adaptive_cells").boolean();
  cov.k_max = static_cast<int>(root.at("k_max").integer());
  cov.k_max_bound = root.has("k_max_bound") ? static_cast<int>(root.at("k_max_bound").integer()) : cov.k_max;
  cov.good = root.at("good").indices();
  const Reader fams = root.at("families");
  for (std::size_t f = 0, nf = fams.size(); f < nf; ++f) {
    const Reader fam = fams.at(f);
    const int k = static_cast<int>(fam.at("k").integer());
    if (cov.families.count(k)) fam.at("k").fail("duplicate family class");
    auto& dst = cov.families[k];
    const Reader members = fam.at("members");
    for (std::size_t m = 0, nm = members.size(); m < nm; ++m)
      dst.push_back({members.at(m).at("index").index(), members.at(m).at("lambda").number()});
  }
  const Reader asg = root.at("assignment");
  for (std::size_t a = 0, na = asg.size(); a < na; ++a) {
    const Reader e = asg.at(a);
    const std::size_t i = e.at("index").index();
    cov.assignment[i] = static_cast<int>(e.at("k").integer());
    if (e.has("witness")) cov.witness[i] = e.at("witness").index();
  }
  cov.lambda_emp = root.at("lambda_emp").number();
  if (root.has("max_tilde_lambda")) cov.max_tilde_lambda = root.at("max_tilde_lambda").number();
  const Reader its = root.at("iterations_per_stage");
  for (std::size_t i = 0, n = its.size(); i < n; ++i)
    cov.iterations_per_stage.push_back(static_cast<int>(its.at(i).integer()));
  if (root.has("max_group_size")) cov.max_group_size = root.at("max_group_size").index();
  if (root.has("k_eps")) cov.k_eps = root.at("k_eps").indices();
  if (root.has("uncovered")) cov.uncovered = root.at("uncovered").indices();
  if (root.has("class_of")) {
    const Reader co = root.at("class_of");
    for (std::size_t i = 0, n = co.size(); i < n; ++i) cov.class_of.push_back(static_cast<int>(co.at(i).integer()));
  }
  if (root.has("absorbed_by")) cov.absorbed_by = root.at("absorbed_by").indices();
  if (root.has("survivors")) {
    const Reader s = root.at("survivors");
    for (std::size_t i = 0, n = s.size(); i < n; ++i) {
      const std::size_t idx = s.at(i).at("index").index();
      cov.survivor_radius[idx] = s.at(i).at("radius").number();
      if (s.at(i).has("tilde_lambda")) cov.tilde_lambda[idx] = s.at(i).at("tilde_lambda").number();
    }
  }
  return cov;
}

// -- reports -------------------------------------------------------------

namespace {

json record_json(const PropertyRecord& rec) {
  json v = json::array();
  for (const auto& x : rec.violations) {
    json e = {{"a", x.a}, {"margin", finite_or_null(x.margin)}, {"detail", x.detail}};
    if (x.b) e["b"] = *x.b;
    v.push_back(std::move(e));
  }
  json m = json::object();
  for (const auto& [k, val] : rec.metrics) m[k] = finite_or_null(val);
  return {{"name", rec.name},
          {"class", to_string(rec.cls)},
          {"pass", rec.pass},
          {"threshold", finite_or_null(rec.threshold)},
          {"worst_margin", finite_or_null(rec.worst_margin)},
          {"checked", rec.checked},
          {"violation_count", rec.violations.size()},
          {"violations", std::move(v)},
          {"metrics", std::move(m)}};
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_json(const VerificationReport& rep) {
  json j;
  j["version"] = kFormatVersion;
  j["seed"] = rep.seed;
  j["epsilon"] = rep.epsilon;
  j["pass"] = rep.pass();
  json props = json::array();
  for (const auto& p : rep.properties) props.push_back(record_json(p));
  j["properties"] = std::move(props);
  return j.dump(1) + "\n";
}

std::string verification_csv(const std::vector<VerificationReport>& reps) {
  std::string out = "seed,epsilon,property,class,pass,violations,checked,worst_margin\n";
  for (const auto& r : reps)
    for (const auto& p : r.properties) {
      out += std::to_string(r.seed) + "," + fmt(r.epsilon) + "," + p.name + "," + to_string(p.cls) + "," +
             (p.pass ? "1" : "0") + "," + std::to_string(p.violations.size()) + "," + std::to_string(p.checked) +
             "," + fmt(p.worst_margin) + "\n";
    }
  return out;
}

std::string sweep_to_json(const SweepReport& rep) {
  const SweepConfig& c = rep.config;
  json j;
  j["version"] = kFormatVersion;
  j["config"] = {{"epsilons", c.epsilons},
                 {"replicates", c.replicates},
                 {"base_seed", c.base_seed},
                 {"lambda", c.lambda},
                 {"beta", c.beta},
                 {"dimension", c.domain.dim},
                 {"domain", {{"kind", to_string(c.domain.kind)}, {"extent", c.domain.extent}}},
                 {"mark_dist", {{"kind", to_string(c.marks.kind)}, {"params", {c.marks.p1, c.marks.p2}}}}};
  json rows = json::array();
  for (const auto& row : rep.rows) {
    json est = json::object();
    for (const auto& [name, s] : row.estimators) {
      json e = {{"mean", finite_or_null(s.mean)}, {"stderr", finite_or_null(s.stderr_)}, {"n", s.n}};
      if (s.target) {
        e["target"] = *s.target;
        e["target_provenance"] = s.target_provenance;
        e["z_score"] = s.stderr_ > 0 ? json((s.mean - *s.target) / s.stderr_) : json(nullptr);
      }
      est[name] = std::move(e);
    }
    json hist = json::array();
    for (const auto& [k, sizes] : row.histogram)
      for (const auto& [sz, cnt] : sizes) hist.push_back({{"k", k}, {"size", sz}, {"count", cnt}});
    json maxc = json::array();
    for (const auto& [k, m] : row.max_component) maxc.push_back({{"k", k}, {"max", m}});
    json chains = json::array();
    for (const auto& [km, f] : row.chain_frequency)
      chains.push_back({{"k", km.first}, {"m", km.second}, {"frequency", f}});
    rows.push_back({{"epsilon", row.epsilon},
                    {"failed_cells", row.failed_cells},
                    {"refused_cells", row.refused_cells},
                    {"errors", row.errors},
                    {"estimators", std::move(est)},
                    {"histogram", std::move(hist)},
                    {"max_component", std::move(maxc)},
                    {"chain_frequency", std::move(chains)}});
  }
  j["rows"] = std::move(rows);
  j["any_failure"] = rep.any_failure();
  return j.dump(1) + "\n";
}

}  // namespace perfolab
