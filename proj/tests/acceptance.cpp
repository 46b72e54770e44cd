// Acceptance suite: quantitative invariant checks at pinned parameters,
// one PASS/FAIL line per criterion. Exit code 0 iff all pass.
//
// SNLS_ACCEPT_QUICK=1 shrinks the Monte Carlo sizes for smoke runs; the
// official gate is the default (full) configuration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "snls/dynamics.hpp"
#include "snls/ensemble.hpp"
#include "snls/experiments.hpp"
#include "snls/pathsim.hpp"
#include "snls/validate.hpp"

using namespace snls;
namespace fs = std::filesystem;

namespace {

bool g_quick = false;
int g_failures = 0;

std::size_t scaled(std::size_t n) { return g_quick ? std::max<std::size_t>(8, n / 10) : n; }

void report(int criterion, const std::string& title, bool pass,
            const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- 1: pathwise mass conservation over the (eps, m) ladder ----------------

void criterion_mass() {
  const std::vector<double> eps_ladder = {0.8, 0.4, 0.2, 0.1, 0.05, 0.0};
  const std::vector<double> m_ladder = {0.5, 4.0,
                                        std::numeric_limits<double>::infinity()};
  double worst_drift = 0.0, worst_time = 0.0;
  for (double eps : eps_ladder) {
    for (double m : m_ladder) {
      PathConfig cfg;
      cfg.grid = {1024, 50.0};
      cfg.noise.amplitude = 0.5;
      cfg.params.epsilon = eps;
      cfg.params.m_trunc = m;
      cfg.dt = 1e-3;
      cfg.t_end = 1.0;
      cfg.seed = 12000 + static_cast<std::uint64_t>(eps * 100) +
                 (std::isinf(m) ? 99 : static_cast<std::uint64_t>(m * 2));
      cfg.keep_log = false;
      const auto t0 = std::chrono::steady_clock::now();
      const PathRecord rec = run_path(cfg);
      worst_time = std::max(worst_time, wall_seconds(t0));
      worst_drift = std::max(worst_drift, rec.aborted ? 1.0 : rec.mass_drift);
    }
  }
  std::ostringstream d;
  d << "max rel L2 drift " << worst_drift << " <= 1e-10 over 18 (eps,m) runs, max "
    << worst_time << " s/path < 5 s";
  report(1, "pathwise mass conservation, Stratonovich splitting",
         worst_drift <= 1e-10 && worst_time < 5.0, d.str());
}

// --- 2: propagator unitarity and group law ---------------------------------

void criterion_propagator() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_validation({"unitarity", "group_law"});
  const bool pass = results[0].pass && results[1].pass && wall_seconds(t0) < 1.0;
  std::ostringstream d;
  d << "unitarity " << results[0].measured << ", group law " << results[1].measured
    << " <= 1e-12 on 100 random fields, " << wall_seconds(t0) << " s < 1 s";
  report(2, "free-propagator unitarity and group law", pass, d.str());
}

// --- 3: dispersive decay slope ----------------------------------------------

void criterion_dispersive() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_validation({"dispersive"});
  std::ostringstream d;
  d << "fitted slope " << results[0].measured << " in [-0.55,-0.45], "
    << wall_seconds(t0) << " s < 10 s";
  report(3, "dispersive sup-norm decay of a Gaussian packet",
         results[0].pass && wall_seconds(t0) < 10.0, d.str());
}

// --- 4: soliton regression ---------------------------------------------------

void criterion_soliton() {
  const auto t0 = std::chrono::steady_clock::now();
  auto grid = SpatialGrid::make(4096, 100.0);
  std::vector<double> q(grid->n);
  for (std::size_t j = 0; j < grid->n; ++j)
    q[j] = std::pow(3.0, 0.25) * std::sqrt(1.0 / std::cosh(2.0 * grid->x[j]));

  // Oracle first: Q must satisfy -Q'' + Q - Q^5 = 0 on the grid. Eighth-order
  // central differences over the well-resolved center.
  const double dx2 = grid->dx * grid->dx;
  const double c0 = -205.0 / 72.0, c1 = 8.0 / 5.0, c2 = -1.0 / 5.0, c3 = 8.0 / 315.0,
               c4 = -1.0 / 560.0;
  double residual = 0.0;
  for (std::size_t j = 4; j + 4 < grid->n; ++j) {
    if (std::abs(grid->x[j]) > 20.0) continue;
    const double qpp = (c4 * (q[j - 4] + q[j + 4]) + c3 * (q[j - 3] + q[j + 3]) +
                        c2 * (q[j - 2] + q[j + 2]) + c1 * (q[j - 1] + q[j + 1]) +
                        c0 * q[j]) /
                       dx2;
    residual = std::max(residual, std::abs(-qpp + q[j] - std::pow(q[j], 5)));
  }
  if (residual > 1e-8) {
    report(4, "soliton regression", false,
           "ground-state oracle residual " + std::to_string(residual) + " > 1e-8");
    return;
  }

  // Focusing evolution of Q: the modulus must stay on the profile.
  ModelParams p;
  p.sign = -1;
  Field u(grid);
  for (std::size_t j = 0; j < grid->n; ++j) u.values[j] = q[j];
  double q_l2 = 0.0;
  for (double v : q) q_l2 += v * v;
  q_l2 = std::sqrt(q_l2 * grid->dx);

  const double dt = 1e-4;
  const std::size_t n_steps = 10000;
  double worst = 0.0;
  for (std::size_t s = 0; s < n_steps; ++s) {
    u = strat_split_step(u, dt, nullptr, 0.0, p);
    if ((s + 1) % 500 == 0 || s + 1 == n_steps) {
      double err = 0.0;
      for (std::size_t j = 0; j < grid->n; ++j) {
        const double d = std::abs(u.values[j]) - q[j];
        err += d * d;
      }
      worst = std::max(worst, std::sqrt(err * grid->dx) / q_l2);
    }
  }
  const double secs = wall_seconds(t0);
  std::ostringstream d;
  d << "oracle residual " << residual << " <= 1e-8; max || |u(t)|-Q ||/||Q|| = "
    << worst << " <= 1e-6 over t in [0,1] at dt=1e-4; " << secs << " s < 60 s";
  report(4, "soliton regression u(t) = e^{it} Q", worst <= 1e-6 && secs < 60.0,
         d.str());
}

// --- 5: Ito/Stratonovich weak consistency ------------------------------------

void criterion_weak_order() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> dts = {4e-3, 2e-3, 1e-3};
  const std::size_t n_paths = scaled(500);

  std::vector<double> d_mass, d_l10;
  for (double dt : dts) {
    EnsembleConfig ec;
    ec.base.grid = {512, 50.0};
    ec.base.noise.amplitude = 0.3;
    ec.base.initial.mass = 2.0;
    ec.base.dt = dt;
    ec.base.keep_log = false;
    ec.base.boundary_threshold = 1.0;
    ec.n_paths = n_paths;
    ec.seed_base = 40000;
    ec.rho_list = {1.0};

    double mass_s = 0.0, mass_i = 0.0, l10_s = 0.0, l10_i = 0.0;
    ec.base.integrator = Integrator::strat;
    const EnsembleResult rs = run_ensemble(ec);
    ec.base.integrator = Integrator::ito;
    const EnsembleResult ri = run_ensemble(ec);
    for (std::size_t i = 0; i < n_paths; ++i) {
      mass_s += l2_norm(rs.records[i].final_field);
      mass_i += l2_norm(ri.records[i].final_field);
      l10_s += rs.records[i].final_l10;
      l10_i += ri.records[i].final_l10;
    }
    d_mass.push_back(std::abs(mass_s - mass_i) / static_cast<double>(n_paths));
    d_l10.push_back(std::abs(l10_s - l10_i) / static_cast<double>(n_paths));
  }
  // least-squares slope of log D against log dt
  const auto order = [&](const std::vector<double>& dd) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double x = std::log(dts[i]), y = std::log(dd[i]);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    return (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  };
  const double o_mass = order(d_mass), o_l10 = order(d_l10);
  std::ostringstream d;
  d << "weak order: mass " << o_mass << ", ||u(1)||_10 " << o_l10 << " >= 0.8; "
    << n_paths << " paths, " << wall_seconds(t0) << " s < 900 s";
  report(5, "Ito/Stratonovich weak consistency over dt {4e-3,2e-3,1e-3}",
         o_mass >= 0.8 && o_l10 >= 0.8 && wall_seconds(t0) < 900.0, d.str());
}

// --- 6: truncation inertness and m-agreement ---------------------------------

void criterion_m_agreement() {
  const auto t0 = std::chrono::steady_clock::now();

  // coupled m vs m+1 on sub-threshold seeds: bit-identical trajectories
  bool coupled_ok = true;
  for (std::uint64_t seed = 9100; seed < 9105; ++seed) {
    PathConfig cfg;
    cfg.grid = {1024, 50.0};
    cfg.noise.amplitude = 0.5;
    cfg.initial.mass = 1.5;
    cfg.dt = 1e-3;
    cfg.seed = seed;
    cfg.keep_log = false;
    ModelParams pa;
    pa.m_trunc = 4.0;
    ModelParams pb;
    pb.m_trunc = 5.0;
    const PairResult pr = run_pair(cfg, pa, pb);
    const bool below = pr.a.stopping_time_m == kNeverHit;  // never reached m-1
    coupled_ok = coupled_ok && below && pr.diff_x_norm == 0.0;
  }

  // full m ladder at M = 2: flat beyond the first saturation-free m
  LadderSpec spec;
  spec.base.grid = {1024, 50.0};
  spec.base.noise.amplitude = 0.5;
  spec.base.dt = 1e-3;
  spec.base.keep_log = false;
  spec.m_mass = 2.0;
  spec.n_paths = scaled(200);
  spec.seed_base = 9200;
  const MStudyResult res = m_uniformity_study(spec);

  const double secs = wall_seconds(t0);
  std::ostringstream d;
  d << "5/5 sub-threshold coupled pairs bit-identical: " << (coupled_ok ? "yes" : "no")
    << "; first saturation-free m index " << res.first_saturation_free
    << ", flat within 3 stderr beyond it: " << (res.flat_beyond_free ? "yes" : "no")
    << "; small-m saturation fraction "
    << static_cast<double>(res.rows[0].n_saturated) /
           static_cast<double>(res.rows[0].n_paths)
    << "; " << secs << " s < 1200 s";
  report(6, "truncation inertness and m-agreement",
         coupled_ok && res.first_saturation_free >= 0 && res.flat_beyond_free &&
             res.rows[0].n_saturated > 0 && secs < 1200.0,
         d.str());
}

// --- 7: epsilon-Cauchy trend --------------------------------------------------

void criterion_eps_cauchy() {
  const auto t0 = std::chrono::steady_clock::now();

  LadderSpec det;
  det.base.grid = {1024, 50.0};
  det.base.noise.amplitude = 0.0;
  det.base.dt = 1e-3;
  det.base.keep_log = false;
  det.base.params.m_trunc = 4.0;
  det.m_mass = 1.0;
  det.seed_base = 9300;
  const EpsStudyResult det_res = eps_convergence_study(det);
  bool det_strict = true;
  for (std::size_t i = 0; i + 1 < det_res.rows.size(); ++i)
    det_strict = det_strict && det_res.rows[i + 1].value < det_res.rows[i].value;

  LadderSpec sto = det;
  sto.base.noise.amplitude = 0.5;
  sto.n_paths = scaled(200);
  const EpsStudyResult sto_res = eps_convergence_study(sto);

  const double secs = wall_seconds(t0);
  std::ostringstream d;
  d << "deterministic column strictly decreasing: " << (det_strict ? "yes" : "no")
    << "; stochastic column decreasing within 2 combined stderr: "
    << (sto_res.decreasing_within_2se ? "yes" : "no") << " (" << sto.n_paths
    << " paths); " << secs << " s < 1200 s";
  report(7, "epsilon-Cauchy successive differences",
         det_strict && det_res.decreasing_within_2se && sto_res.decreasing_within_2se &&
             secs < 1200.0,
         d.str());
}

// --- 8: stability trend -------------------------------------------------------

void criterion_stability() {
  const auto t0 = std::chrono::steady_clock::now();
  LadderSpec spec;
  spec.base.grid = {1024, 50.0};
  spec.base.noise.amplitude = 0.5;
  spec.base.dt = 1e-3;
  spec.base.keep_log = false;
  spec.m_mass = 1.0;
  spec.n_paths = scaled(100);
  spec.seed_base = 9400;
  const StabilityStudyResult res = stability_study(spec);
  const double delta_small = res.rows.back().delta;
  const double secs = wall_seconds(t0);
  std::ostringstream d;
  d << "delta(kappa) = ";
  for (const auto& r : res.rows) d << r.delta << " ";
  d << "monotone within 2 stderr: " << (res.monotone_within_2se ? "yes" : "no")
    << "; delta(0.01) = " << delta_small << " <= 0.05; " << secs << " s < 900 s";
  report(8, "stability in initial data",
         res.monotone_within_2se && delta_small <= 0.05 && secs < 900.0, d.str());
}

// --- 9: tail decay of the X2 functional ---------------------------------------

void criterion_tail() {
  const auto t0 = std::chrono::steady_clock::now();
  EnsembleConfig ec;
  ec.base.grid = {1024, 50.0};
  ec.base.noise.amplitude = 0.5;
  ec.base.dt = 1e-3;
  ec.base.keep_log = false;
  ec.n_paths = std::max<std::size_t>(scaled(1000), 200);
  ec.seed_base = 9500;
  ec.functional = "x2_norm";
  const EnsembleResult res = run_ensemble(ec);

  const auto grid_k = default_k_grid(res.records, 9);
  const auto pts = tail_estimate(res.records, grid_k);

  // resolved range: at least 10 exceedances and survival <= 0.9
  std::vector<std::size_t> resolved;
  const double n = static_cast<double>(res.records.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (pts[i].exceed_count >= 10 && pts[i].survival <= 0.9) resolved.push_back(i);

  bool monotone = true;
  for (std::size_t i = 1; i < pts.size(); ++i)
    monotone = monotone && pts[i].survival <= pts[i - 1].survival;

  // convexity of log SF in log K within twice the binomial noise
  bool convex = true;
  for (std::size_t r = 0; r + 2 < resolved.size(); ++r) {
    const auto a = resolved[r], b = resolved[r + 1], c = resolved[r + 2];
    const auto ly = [&](std::size_t i) { return std::log(pts[i].survival); };
    const auto lx = [&](std::size_t i) { return std::log(pts[i].k); };
    // second difference on a possibly nonuniform grid
    const double h1 = lx(b) - lx(a), h2 = lx(c) - lx(b);
    const double second =
        2.0 * (h1 * ly(c) - (h1 + h2) * ly(b) + h2 * ly(a)) / (h1 * h2 * (h1 + h2));
    const auto sigma = [&](std::size_t i) {
      return std::sqrt((1.0 - pts[i].survival) / (n * pts[i].survival));
    };
    // propagate the pointwise noise through the same second-difference stencil
    const double wa = 2.0 / (h1 * (h1 + h2)), wb = 2.0 / (h1 * h2),
                 wc = 2.0 / (h2 * (h1 + h2));
    const double noise = 2.0 * std::sqrt(wa * wa * sigma(a) * sigma(a) +
                                         wb * wb * sigma(b) * sigma(b) +
                                         wc * wc * sigma(c) * sigma(c));
    if (second < -noise) convex = false;
  }

  // fitted log-log slope over the resolved range
  double slope = 0.0;
  if (resolved.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto i : resolved) {
      const double x = std::log(pts[i].k), y = std::log(pts[i].survival);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = static_cast<double>(resolved.size());
    slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }

  const double secs = wall_seconds(t0);
  std::ostringstream d;
  d << res.n_used << " paths; survival monotone: " << (monotone ? "yes" : "no")
    << "; log-log convex within noise over " << resolved.size()
    << " resolved points: " << (convex ? "yes" : "no") << "; fitted slope " << slope
    << " <= -1; " << secs << " s < 1800 s";
  report(9, "tail decay of x2_fifth(1)",
         monotone && convex && resolved.size() >= 3 && slope <= -1.0 && secs < 1800.0,
         d.str());
}

// --- 10: reproducibility -------------------------------------------------------

void criterion_reproducibility() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string base = "/tmp/snls_accept_repro";
  for (const auto& suffix : {"_w1", "_w4", "_w16", "_replay", "_ladder", "_ladder_replay"})
    fs::remove_all(base + suffix);

  EnsembleConfig ec;
  ec.base.grid = {512, 50.0};
  ec.base.dt = 2e-3;
  ec.base.t_end = 0.5;
  ec.base.save_final_field = true;
  ec.n_paths = 16;
  ec.seed_base = 9600;

  std::vector<std::string> bytes;
  for (std::size_t workers : {1u, 4u, 16u}) {
    ec.workers = workers;
    const EnsembleResult res = run_ensemble(ec);
    const std::string dir = base + "_w" + std::to_string(workers);
    persist(ec, res, dir);
    bytes.push_back(slurp(fs::path(dir) / "records.jsonl") +
                    slurp(fs::path(dir) / "summaries.csv"));
  }
  const bool workers_same = bytes[0] == bytes[1] && bytes[1] == bytes[2];

  // replay the manifest of the first run
  const json manifest = load_manifest(base + "_w1/manifest.json");
  EnsembleConfig again = ensemble_config_from_json(manifest.at("config"));
  const EnsembleResult res2 = run_ensemble(again);
  persist(again, res2, base + "_replay");
  const bool replay_same = slurp(base + "_w1/records.jsonl") ==
                               slurp(base + "_replay/records.jsonl") &&
                           slurp(base + "_w1/summaries.csv") ==
                               slurp(base + "_replay/summaries.csv");

  // and a study manifest
  LadderSpec spec;
  spec.base.grid = {256, 50.0};
  spec.base.dt = 4e-3;
  spec.base.keep_log = false;
  spec.base.params.m_trunc = 4.0;
  spec.n_paths = 8;
  spec.seed_base = 9700;
  write_study_outputs(base + "_ladder", "eps", spec, eps_convergence_study(spec).csv);
  const json lm = load_manifest(base + "_ladder/manifest.json");
  const LadderSpec spec2 = ladder_spec_from_json(lm.at("config"));
  write_study_outputs(base + "_ladder_replay", "eps", spec2,
                      eps_convergence_study(spec2).csv);
  const bool ladder_same =
      slurp(base + "_ladder/eps.csv") == slurp(base + "_ladder_replay/eps.csv");

  for (const auto& suffix : {"_w1", "_w4", "_w16", "_replay", "_ladder", "_ladder_replay"})
    fs::remove_all(base + suffix);

  std::ostringstream d;
  d << "workers 1/4/16 byte-identical: " << (workers_same ? "yes" : "no")
    << "; manifest replay byte-identical: " << (replay_same ? "yes" : "no")
    << "; study replay byte-identical: " << (ladder_same ? "yes" : "no") << "; "
    << wall_seconds(t0) << " s";
  report(10, "manifest replay and parallel determinism",
         workers_same && replay_same && ladder_same, d.str());
}

}  // namespace

int main() {
  if (const char* q = std::getenv("SNLS_ACCEPT_QUICK"))
    g_quick = (std::string(q) == "1");
  if (g_quick) std::printf("note: SNLS_ACCEPT_QUICK=1, reduced Monte Carlo sizes\n");

  criterion_mass();
  criterion_propagator();
  criterion_dispersive();
  criterion_soliton();
  criterion_weak_order();
  criterion_m_agreement();
  criterion_eps_cauchy();
  criterion_stability();
  criterion_tail();
  criterion_reproducibility();

  if (g_failures == 0)
    std::printf("acceptance: all criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
