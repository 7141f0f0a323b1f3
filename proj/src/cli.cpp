#include "perfolab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "perfolab/config.hpp"
#include "perfolab/persistence.hpp"
#include "perfolab/render.hpp"
#include "perfolab/stokes.hpp"

namespace perfolab {

namespace {

using nlohmann::json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<double> eps;
  std::string out_dir;
  std::string format;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Base seed");
  sub->add_option("--eps", c.eps, "Scale parameter (repeatable)");
  sub->add_option("--out", c.out_dir, "Output directory");
  sub->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

RunConfig load_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : run_config_from_json(read_file(c.config_path), c.config_path);
  if (c.seed) cfg.sweep.base_seed = *c.seed;
  if (!c.eps.empty()) cfg.sweep.epsilons = c.eps;
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  if (!c.format.empty()) cfg.formats = {c.format};
  cfg.validate();
  return cfg;
}

bool wants(const RunConfig& cfg, const char* f) { return std::find(cfg.formats.begin(), cfg.formats.end(), f) != cfg.formats.end(); }

std::string join(const std::string& dir, const std::string& name) { return (std::filesystem::path(dir) / name).string(); }

void emit(std::ostream& out, const std::string& path, const std::string& contents) {
  write_file(path, contents);
  out << "wrote " << path << "\n";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

CoveringParams params_for(const RunConfig& cfg, const MarkedRealization& r) {
  return cfg.sweep.covering ? *cfg.sweep.covering : CoveringParams::defaults(r.beta, r.dim());
}

// SweepConfig describing one persisted realization.
SweepConfig scene_sweep(const RunConfig& cfg, const MarkedRealization& r) {
  SweepConfig s = cfg.sweep;
  s.lambda = r.lambda;
  s.beta = r.beta;
  s.domain = r.domain;
  s.marks = r.mark_dist;
  s.epsilons = {r.epsilon};
  s.covering = params_for(cfg, r);
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perforated-domain covering and statistics toolkit", "perfolab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "perfolab 1.0");

  Common common;
  std::string scene_path, covering_path, file_name;
  std::optional<double> offset, cap_a, cap_rmax;
  std::optional<int> cap_resolution;

  auto* gen = app.add_subcommand("generate", "Sample a marked point process and write scene.json");
  add_common(gen, common);
  gen->add_option("--name", file_name, "Scene file name inside --out")->default_val("scene.json");

  auto* cov = app.add_subcommand("cover", "Build the covering of a scene and write covering.json");
  add_common(cov, common);
  cov->add_option("--scene", scene_path, "Scene file")->required()->check(CLI::ExistingFile);

  auto* ver = app.add_subcommand("verify", "Check every covering property; exit 1 on a by-construction failure");
  add_common(ver, common);
  ver->add_option("--scene", scene_path, "Scene file")->required()->check(CLI::ExistingFile);
  ver->add_option("--covering", covering_path, "Covering file")->required()->check(CLI::ExistingFile);

  auto* st = app.add_subcommand("stats", "Single-scene estimators from persisted artifacts");
  add_common(st, common);
  st->add_option("--scene", scene_path, "Scene file")->required()->check(CLI::ExistingFile);
  st->add_option("--covering", covering_path, "Covering file (computed when absent)")->check(CLI::ExistingFile);

  auto* capc = app.add_subcommand("capacity", "Stokes capacity of a ball by quadrature");
  add_common(capc, common);
  capc->add_option("--radius", cap_a, "Sphere radius a");
  capc->add_option("--rmax", cap_rmax, "Truncation radius");
  capc->add_option("--resolution", cap_resolution, "Radial panels");

  auto* sw = app.add_subcommand("sweep", "Seeded Monte Carlo sweep over the epsilon grid");
  add_common(sw, common);

  auto* ren = app.add_subcommand("render", "SVG slice of a scene and optional covering");
  add_common(ren, common);
  ren->add_option("--scene", scene_path, "Scene file")->required()->check(CLI::ExistingFile);
  ren->add_option("--covering", covering_path, "Covering file")->check(CLI::ExistingFile);
  ren->add_option("--offset", offset, "Physical coordinate of the slice plane");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    const RunConfig cfg = load_config(common);
    const std::string& dir = cfg.output_dir;

    if (gen->parsed()) {
      SampleOptions so;
      so.max_expected_count = cfg.sweep.max_expected_count;
      const MarkedRealization r = sample(cfg.sweep.domain, cfg.sweep.lambda, cfg.sweep.epsilons.front(),
                                         cfg.sweep.marks, cfg.sweep.base_seed, cfg.sweep.beta, so);
      emit(out, join(dir, file_name), scene_to_json(r));
      return kExitOk;
    }

    if (cov->parsed()) {
      const MarkedRealization r = scene_from_json(read_file(scene_path), scene_path);
      const CoveringResult c = cover(r, params_for(cfg, r));
      emit(out, join(dir, "covering.json"), covering_to_json(c));
      return kExitOk;
    }

    if (ver->parsed()) {
      const MarkedRealization r = scene_from_json(read_file(scene_path), scene_path);
      const CoveringResult c = covering_from_json(read_file(covering_path), covering_path);
      const VerificationReport rep = verify_all(c, r, c.params);
      if (wants(cfg, "json")) emit(out, join(dir, "verify.json"), report_to_json(rep));
      if (wants(cfg, "csv")) emit(out, join(dir, "verify.csv"), verification_csv({rep}));
      for (const auto& p : rep.properties)
        out << (p.pass ? "PASS " : "FAIL ") << p.name << " (" << to_string(p.cls) << ", " << p.violations.size()
            << " violations)\n";
      if (!rep.pass()) {
        for (const auto& name : rep.failed_by_construction()) err << "property failed: " << name << "\n";
        return kExitPropertyFailure;
      }
      return kExitOk;
    }

    if (st->parsed()) {
      const MarkedRealization r = scene_from_json(read_file(scene_path), scene_path);
      std::optional<CoveringResult> c;
      if (!covering_path.empty()) c = covering_from_json(read_file(covering_path), covering_path);
      const SweepConfig s = scene_sweep(cfg, r);
      const SceneResult res = evaluate_scene(s, r, c ? &*c : nullptr);
      if (!res.ok) {
        err << "error: " << res.error << "\n";
        return res.refused ? kExitResourceRefusal : kExitInputError;
      }
      if (wants(cfg, "json")) {
        json j;
        j["seed"] = r.seed;
        j["epsilon"] = r.epsilon;
        json v = json::object();
        for (const auto& [k, val] : res.values) v[k] = finite_or_null(val);
        j["values"] = std::move(v);
        j["failed_properties"] = res.failed_properties;
        emit(out, join(dir, "stats.json"), j.dump(1) + "\n");
      }
      if (wants(cfg, "csv")) {
        std::string csv = "seed,epsilon,estimator,value\n";
        for (const auto& [k, val] : res.values)
          csv += std::to_string(r.seed) + "," + fmt(r.epsilon) + "," + k + "," + fmt(val) + "\n";
        emit(out, join(dir, "stats.csv"), csv);
      }
      return res.failed_properties.empty() ? kExitOk : kExitPropertyFailure;
    }

    if (capc->parsed()) {
      CapacitySettings cs = cfg.capacity;
      if (cap_a) cs.a = *cap_a;
      if (cap_rmax) cs.r_max = *cap_rmax;
      if (cap_resolution) cs.resolution = *cap_resolution;
      ExteriorSphereFlow flow;
      flow.a = cs.a;
      const CapacityEstimate est = dirichlet_energy(flow, cs.r_max, cs.resolution, cs.tolerance);
      const double target = 6.0 * std::numbers::pi * cs.a;
      const DecayFit fit = decay_exponents(flow, default_decay_radii(cs.a));
      const double rel = std::abs(est.value - target) / target;
      if (wants(cfg, "json")) {
        json j = {{"a", cs.a},
                  {"r_max", cs.r_max},
                  {"resolution", cs.resolution},
                  {"energy", est.value},
                  {"shell_integral", est.shell_integral},
                  {"tail", est.tail},
                  {"error_estimate", est.error_estimate},
                  {"target", target},
                  {"target_provenance", "6*pi*a*|xi|^2"},
                  {"relative_error", rel},
                  {"velocity_slope", fit.velocity_slope},
                  {"gradient_slope", fit.gradient_slope},
                  {"harmonic_capacity", harmonic_capacity_ball(cs.a, 3)},
                  {"harmonic_quadrature", harmonic_energy_quadrature(cs.a, cs.r_max, cs.resolution)}};
        emit(out, join(dir, "capacity.json"), j.dump(1) + "\n");
      }
      if (wants(cfg, "csv")) {
        emit(out, join(dir, "capacity.csv"),
             "a,r_max,resolution,energy,target,relative_error,velocity_slope,gradient_slope\n" + fmt(cs.a) + "," +
                 fmt(cs.r_max) + "," + std::to_string(cs.resolution) + "," + fmt(est.value) + "," + fmt(target) +
                 "," + fmt(rel) + "," + fmt(fit.velocity_slope) + "," + fmt(fit.gradient_slope) + "\n");
      }
      out << "energy " << fmt(est.value) << " target " << fmt(target) << " relative error " << fmt(rel) << "\n";
      return kExitOk;
    }

    if (sw->parsed()) {
      const SweepReport rep = run_sweep(cfg.sweep);
      if (wants(cfg, "csv")) {
        emit(out, join(dir, "sweep.csv"), report_csv(rep));
        emit(out, join(dir, "sweep_wide.csv"), wide_csv(rep));
        emit(out, join(dir, "summary.csv"), summary_csv(rep));
        emit(out, join(dir, "histogram.csv"), histogram_csv(rep));
        emit(out, join(dir, "chains.csv"), chain_csv(rep));
      }
      if (wants(cfg, "json")) emit(out, join(dir, "sweep.json"), sweep_to_json(rep));
      for (const auto& row : rep.rows)
        for (const auto& e : row.errors) err << "cell failed: eps " << fmt(row.epsilon) << " " << e << "\n";
      if (rep.total_refused() > 0) return kExitResourceRefusal;
      return rep.any_failure() ? kExitPropertyFailure : kExitOk;
    }

    if (ren->parsed()) {
      const MarkedRealization r = scene_from_json(read_file(scene_path), scene_path);
      std::optional<CoveringResult> c;
      if (!covering_path.empty()) c = covering_from_json(read_file(covering_path), covering_path);
      emit(out, join(dir, "render.svg"),
           render_slice(r, c ? &*c : nullptr, offset.value_or(cfg.render.offset), cfg.render.width_px));
      return kExitOk;
    }
  } catch (const ResourceRefusal& e) {
    err << "refused: " << e.what() << "\n";
    return kExitResourceRefusal;
  } catch (const ConfigError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const NonStabilizationError& e) {
    err << "covering failed: " << e.what() << "\n";
    return kExitPropertyFailure;
  } catch (const RefinementNeeded& e) {
    err << "quadrature failed: " << e.what() << "\n";
    return kExitPropertyFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace perfolab
