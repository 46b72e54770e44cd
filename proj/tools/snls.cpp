// snls: pseudo-spectral simulator for the 1D quintic Schroedinger equation
// with conservative multiplicative noise. Subcommands: simulate, ladder
// {eps,m,stability,regularity,dodson}, validate, replay.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "snls/ensemble.hpp"
#include "snls/errors.hpp"
#include "snls/experiments.hpp"
#include "snls/validate.hpp"
#include "snls/version.hpp"

namespace fs = std::filesystem;
using snls::json;

namespace {

std::size_t default_workers() {
  if (const char* env = std::getenv("SNLS_WORKERS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 0;  // library resolves 0 to hardware concurrency
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw snls::config_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw snls::config_error("config parse error in " + path + ": " + e.what());
  }
  return j;
}

double parse_m(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "INF")
    return std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (...) {
    throw snls::config_error("cannot parse m value '" + s + "'");
  }
}

struct SimulateFlags {
  std::string config_file;
  std::string out_dir = "snls_out";
  bool dry_run = false;
  bool save_field = false;
  bool norms_csv = false;
  bool track_h1 = false;
  bool focusing = false;
  bool ito = false;
  std::size_t workers = 0;
  // optional numeric overrides (only applied when the flag was given)
  CLI::Option *o_n = nullptr, *o_len = nullptr, *o_dt = nullptr, *o_tend = nullptr,
              *o_seed = nullptr, *o_paths = nullptr, *o_eps = nullptr, *o_m = nullptr,
              *o_mu = nullptr, *o_amp = nullptr, *o_rank = nullptr, *o_mw = nullptr,
              *o_initial = nullptr, *o_mass = nullptr, *o_width = nullptr,
              *o_stride = nullptr, *o_func = nullptr, *o_rho = nullptr;
  std::size_t n = 1024, rank = 4, stride = 10, paths = 1;
  double length = 50.0, dt = 1e-3, t_end = 1.0, epsilon = 0.0, mu = 1.0,
         amplitude = 0.5, mode_width = 0.0, mass = 1.0, width = 1.0;
  std::string m_str = "inf", initial = "gaussian", functional = "x_norm";
  std::vector<double> rho_list;
  std::uint64_t seed = 1;
};

void add_simulate_flags(CLI::App* cmd, SimulateFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON config file (flags override it)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_flag("--dry-run", f.dry_run, "validate, print resolved config, exit");
  cmd->add_flag("--save-field", f.save_field, "serialize final fields into records");
  cmd->add_flag("--norms-csv", f.norms_csv, "write norms_<seed>.csv per path");
  cmd->add_flag("--track-h1", f.track_h1, "sample the H1 norm at output steps");
  cmd->add_flag("--focusing", f.focusing, "focusing nonlinearity (sign -1)");
  cmd->add_flag("--ito", f.ito, "use the Ito Euler-Maruyama integrator");
  cmd->add_option("--workers", f.workers, "worker threads (default SNLS_WORKERS or all cores)");
  f.o_n = cmd->add_option("--n", f.n, "grid points (power of two)");
  f.o_len = cmd->add_option("--length", f.length, "domain length");
  f.o_dt = cmd->add_option("--dt", f.dt, "time step");
  f.o_tend = cmd->add_option("--t-end", f.t_end, "final time");
  f.o_seed = cmd->add_option("--seed", f.seed, "base seed");
  f.o_paths = cmd->add_option("--paths", f.paths, "number of noise realizations");
  f.o_eps = cmd->add_option("--epsilon", f.epsilon, "subcritical defect in [0,1]");
  f.o_m = cmd->add_option("--m", f.m_str, "truncation level (number or 'inf')");
  f.o_mu = cmd->add_option("--mu", f.mu, "deterministic coupling in [0,1]");
  f.o_amp = cmd->add_option("--amplitude", f.amplitude, "noise amplitude");
  f.o_rank = cmd->add_option("--rank", f.rank, "number of noise modes");
  f.o_mw = cmd->add_option("--mode-width", f.mode_width, "noise mode width (0: length/30)");
  f.o_initial = cmd->add_option("--initial", f.initial,
                                "initial data: gaussian|soliton|two_bump|file");
  f.o_mass = cmd->add_option("--mass", f.mass, "initial L2 mass (gaussian/two_bump)");
  f.o_width = cmd->add_option("--width", f.width, "initial data width");
  f.o_stride = cmd->add_option("--stride", f.stride, "output stride in steps");
  f.o_func = cmd->add_option("--functional", f.functional,
                             "x_norm|x2_norm|diff_x_norm|mass_drift|stopping_time");
  f.o_rho = cmd->add_option("--rho", f.rho_list, "moment orders (default 1 2 6)");
}

snls::EnsembleConfig resolve_simulate(const SimulateFlags& f) {
  snls::EnsembleConfig ec;
  if (!f.config_file.empty()) ec = snls::ensemble_config_from_json(load_json_file(f.config_file));
  auto& base = ec.base;
  if (*f.o_n) base.grid.n_points = f.n;
  if (*f.o_len) base.grid.length = f.length;
  if (*f.o_dt) base.dt = f.dt;
  if (*f.o_tend) base.t_end = f.t_end;
  if (*f.o_seed) ec.seed_base = f.seed;
  if (*f.o_paths) ec.n_paths = f.paths;
  if (*f.o_eps) base.params.epsilon = f.epsilon;
  if (*f.o_m) base.params.m_trunc = parse_m(f.m_str);
  if (*f.o_mu) base.params.mu = f.mu;
  if (f.focusing) base.params.sign = -1;
  if (f.ito) base.integrator = snls::Integrator::ito;
  if (*f.o_amp) base.noise.amplitude = f.amplitude;
  if (*f.o_rank) base.noise.rank = f.rank;
  if (*f.o_mw) base.noise.width = f.mode_width;
  if (*f.o_initial) base.initial.kind = f.initial;
  if (*f.o_mass) base.initial.mass = f.mass;
  if (*f.o_width) base.initial.width = f.width;
  if (*f.o_stride) base.output_stride = f.stride;
  if (*f.o_func) ec.functional = f.functional;
  if (*f.o_rho) ec.rho_list = f.rho_list;
  if (f.save_field) base.save_final_field = true;
  if (f.norms_csv) base.save_norm_csv = true;
  if (f.track_h1) base.track_h1 = true;
  ec.workers = f.workers ? f.workers : default_workers();
  ec.validate();
  return ec;
}

int cmd_simulate(const SimulateFlags& f) {
  snls::EnsembleConfig ec = resolve_simulate(f);
  if (f.dry_run) {
    std::cout << snls::to_json(ec).dump(2) << "\n";
    return 0;
  }
  snls::EnsembleResult res = snls::run_ensemble(ec);
  snls::persist(ec, res, f.out_dir);
  std::cout << "paths: " << ec.n_paths << " used: " << res.n_used
            << " aborted: " << res.n_aborted << "\n";
  for (const auto& s : res.summaries)
    std::cout << ec.functional << " L^" << s.rho << "_omega = " << s.value
              << " +/- " << s.stderr_ << "\n";
  for (const auto& r : res.records)
    if (r.focusing_mass_warning) {
      std::cout << "warning: focusing run at or above the ground-state mass\n";
      break;
    }
  std::cout << "wrote " << f.out_dir << "/{records.jsonl,summaries.csv,manifest.json}\n";
  return 0;
}

struct LadderFlags {
  std::string config_file;
  std::string out_dir = "snls_ladder";
  std::size_t workers = 0;
  CLI::Option *o_m = nullptr, *o_paths = nullptr, *o_seed = nullptr, *o_mass = nullptr,
              *o_amp = nullptr, *o_dt = nullptr, *o_n = nullptr, *o_len = nullptr,
              *o_rho0 = nullptr, *o_pert = nullptr;
  std::string m_str = "4";
  std::size_t paths = 200, n = 1024;
  std::uint64_t seed = 1;
  double mass = 1.0, amplitude = 0.5, dt = 1e-3, length = 50.0, rho0 = 6.0;
  std::string perturbation = "bump";
};

void add_ladder_flags(CLI::App* cmd, LadderFlags& f) {
  cmd->add_option("--config", f.config_file, "JSON LadderSpec file (flags override it)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--workers", f.workers, "worker threads");
  f.o_m = cmd->add_option("--m", f.m_str, "truncation m for the eps study");
  f.o_paths = cmd->add_option("--paths", f.paths, "paths per column");
  f.o_seed = cmd->add_option("--seed-base", f.seed, "base seed");
  f.o_mass = cmd->add_option("--mass", f.mass, "initial-mass scale M");
  f.o_amp = cmd->add_option("--amplitude", f.amplitude, "noise amplitude");
  f.o_dt = cmd->add_option("--dt", f.dt, "time step");
  f.o_n = cmd->add_option("--n", f.n, "grid points");
  f.o_len = cmd->add_option("--length", f.length, "domain length");
  f.o_rho0 = cmd->add_option("--rho0", f.rho0, "moment order rho0");
  f.o_pert = cmd->add_option("--perturbation", f.perturbation,
                             "stability perturbation: bump|mollify");
}

snls::LadderSpec resolve_ladder(const LadderFlags& f) {
  snls::LadderSpec spec;
  if (!f.config_file.empty()) spec = snls::ladder_spec_from_json(load_json_file(f.config_file));
  if (*f.o_m) spec.base.params.m_trunc = parse_m(f.m_str);
  if (*f.o_paths) spec.n_paths = f.paths;
  if (*f.o_seed) spec.seed_base = f.seed;
  if (*f.o_mass) spec.m_mass = f.mass;
  if (*f.o_amp) spec.base.noise.amplitude = f.amplitude;
  if (*f.o_dt) spec.base.dt = f.dt;
  if (*f.o_n) spec.base.grid.n_points = f.n;
  if (*f.o_len) spec.base.grid.length = f.length;
  if (*f.o_rho0) spec.rho0 = f.rho0;
  if (*f.o_pert) spec.perturbation = f.perturbation;
  spec.workers = f.workers ? f.workers : default_workers();
  spec.validate();
  return spec;
}

int run_ladder_study(const std::string& study, const snls::LadderSpec& spec,
                     const std::string& out_dir) {
  if (study == "eps") {
    auto res = snls::eps_convergence_study(spec);
    snls::write_study_outputs(out_dir, "eps", spec, res.csv);
    std::cout << res.csv;
    std::cout << "decreasing_within_2se: " << (res.decreasing_within_2se ? "yes" : "no")
              << "\n";
  } else if (study == "m") {
    auto res = snls::m_uniformity_study(spec);
    snls::write_study_outputs(out_dir, "m", spec, res.csv);
    std::cout << res.csv;
    std::cout << "flat_beyond_first_saturation_free: "
              << (res.flat_beyond_free ? "yes" : "no") << "\n";
  } else if (study == "stability") {
    auto res = snls::stability_study(spec);
    snls::write_study_outputs(out_dir, "stability", spec, res.csv);
    std::cout << res.csv;
    std::cout << "monotone_within_2se: " << (res.monotone_within_2se ? "yes" : "no")
              << "\n";
  } else if (study == "regularity") {
    auto res = snls::regularity_persistence_study(spec);
    snls::write_study_outputs(out_dir, "regularity", spec, res.csv);
    std::cout << res.csv;
    std::cout << "bounded: " << (res.bounded ? "yes" : "no") << "\n";
  } else if (study == "dodson") {
    auto res = snls::dodson_bound_probe(spec);
    snls::write_study_outputs(out_dir, "dodson", spec, res.csv);
    std::cout << res.csv;
  } else {
    throw snls::config_error("unknown ladder study '" + study + "'");
  }
  std::cout << "wrote " << out_dir << "\n";
  return 0;
}

int cmd_validate(const std::vector<std::string>& only, bool as_json) {
  const auto results = snls::run_validation(only);
  bool all_pass = true;
  if (as_json) {
    json out = json::array();
    for (const auto& r : results) {
      out.push_back({{"name", r.name},
                     {"pass", r.pass},
                     {"measured", r.measured},
                     {"detail", r.detail}});
      all_pass = all_pass && r.pass;
    }
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& r : results) {
      std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  measured "
                << r.measured << "  (" << r.detail << ")\n";
      all_pass = all_pass && r.pass;
    }
  }
  return all_pass ? 0 : 1;
}

bool files_identical(const fs::path& a, const fs::path& b) {
  std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
  if (!fa || !fb) return false;
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  return sa.str() == sb.str();
}

int cmd_replay(const std::string& manifest_path, std::string out_dir,
               std::size_t workers) {
  const json manifest = snls::load_manifest(manifest_path);
  const std::string kind = manifest.at("kind").get<std::string>();
  const fs::path orig_dir = fs::path(manifest_path).parent_path();
  if (out_dir.empty()) out_dir = orig_dir.string() + "_replay";

  if (kind == "simulate") {
    snls::EnsembleConfig ec = snls::ensemble_config_from_json(manifest.at("config"));
    ec.workers = workers ? workers : default_workers();
    snls::EnsembleResult res = snls::run_ensemble(ec);
    snls::persist(ec, res, out_dir);
  } else if (kind.rfind("ladder-", 0) == 0) {
    snls::LadderSpec spec = snls::ladder_spec_from_json(manifest.at("config"));
    spec.workers = workers ? workers : default_workers();
    const std::string study = kind.substr(7);
    if (study == "eps")
      snls::write_study_outputs(out_dir, study, spec, snls::eps_convergence_study(spec).csv);
    else if (study == "m")
      snls::write_study_outputs(out_dir, study, spec, snls::m_uniformity_study(spec).csv);
    else if (study == "stability")
      snls::write_study_outputs(out_dir, study, spec, snls::stability_study(spec).csv);
    else if (study == "regularity")
      snls::write_study_outputs(out_dir, study, spec,
                                snls::regularity_persistence_study(spec).csv);
    else if (study == "dodson")
      snls::write_study_outputs(out_dir, study, spec, snls::dodson_bound_probe(spec).csv);
    else
      throw snls::config_error("replay: unknown study kind '" + kind + "'");
  } else {
    throw snls::config_error("replay: unknown manifest kind '" + kind + "'");
  }

  bool all_same = true;
  for (const auto& name : manifest.at("outputs")) {
    const auto fname = name.get<std::string>();
    const fs::path orig = orig_dir / fname;
    const fs::path replayed = fs::path(out_dir) / fname;
    if (!fs::exists(orig)) {
      std::cout << fname << ": original missing, skipped\n";
      continue;
    }
    const bool same = files_identical(orig, replayed);
    std::cout << fname << ": " << (same ? "identical" : "DIFFERS") << "\n";
    all_same = all_same && same;
  }
  return all_same ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snls: stochastic quintic Schroedinger simulator"};
  app.set_version_flag("--version", snls::kVersion);
  app.require_subcommand(1);

  SimulateFlags sf;
  CLI::App* simulate = app.add_subcommand("simulate", "run one path or an ensemble");
  add_simulate_flags(simulate, sf);

  CLI::App* ladder = app.add_subcommand("ladder", "parameter-ladder studies");
  ladder->require_subcommand(1);
  std::vector<std::string> study_names = {"eps", "m", "stability", "regularity", "dodson"};
  std::vector<CLI::App*> studies;
  std::vector<std::unique_ptr<LadderFlags>> study_flags;
  for (const auto& s : study_names) {
    CLI::App* sub = ladder->add_subcommand(s, s + " study");
    study_flags.push_back(std::make_unique<LadderFlags>());
    add_ladder_flags(sub, *study_flags.back());
    studies.push_back(sub);
  }

  std::vector<std::string> only;
  bool val_json = false;
  CLI::App* validate = app.add_subcommand("validate", "run the invariant suite");
  validate->add_option("--only", only, "run only the named checks");
  validate->add_flag("--json", val_json, "machine-readable output");

  std::string manifest_path, replay_out;
  std::size_t replay_workers = 0;
  CLI::App* replay = app.add_subcommand("replay", "re-run a manifest and compare bytes");
  replay->add_option("manifest", manifest_path, "path to manifest.json")->required();
  replay->add_option("--out", replay_out, "output directory (default <orig>_replay)");
  replay->add_option("--workers", replay_workers, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(sf);
    if (ladder->parsed()) {
      for (std::size_t i = 0; i < studies.size(); ++i)
        if (studies[i]->parsed()) {
          LadderFlags& f = *study_flags[i];
          if (f.out_dir == "snls_ladder") f.out_dir += "_" + study_names[i];
          return run_ladder_study(study_names[i], resolve_ladder(f), f.out_dir);
        }
      throw snls::config_error("ladder: missing study name");
    }
    if (validate->parsed()) return cmd_validate(only, val_json);
    if (replay->parsed()) return cmd_replay(manifest_path, replay_out, replay_workers);
  } catch (const snls::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
