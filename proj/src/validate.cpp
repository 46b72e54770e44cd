#include "snls/validate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snls/dynamics.hpp"
#include "snls/ensemble.hpp"
#include "snls/errors.hpp"
#include "snls/pathsim.hpp"
#include "snls/rng.hpp"

namespace snls {

namespace {

Field random_field(const GridPtr& grid, RngStream& rng) {
  Field f(grid);
  for (auto& z : f.values) z = cplx(rng.next_normal(), rng.next_normal());
  return f;
}

double rel_l2_diff(const Field& a, const Field& b) {
  Field d = a;
  for (std::size_t j = 0; j < d.size(); ++j) d.values[j] -= b.values[j];
  return l2_norm(d) / l2_norm(b);
}

CheckResult check_unitarity() {
  auto grid = SpatialGrid::make(1024, 50.0);
  RngStream rng(0xA11CE, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Field f = random_field(grid, rng);
    const double t = 0.1 + 0.5 * rng.next_uniform();
    const double before = l2_norm(f);
    const double after = l2_norm(free_propagate(f, t));
    worst = std::max(worst, std::abs(after - before) / before);
  }
  return {"unitarity", worst <= 1e-12, worst, "max rel L2 change <= 1e-12"};
}

CheckResult check_parseval() {
  auto grid = SpatialGrid::make(1024, 50.0);
  RngStream rng(0xBEEF, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Field f = random_field(grid, rng);
    const SpectralField s = to_spectrum(f);
    double spec = 0.0;
    for (const auto& z : s.coeff) spec += std::norm(z);
    spec = std::sqrt(spec * grid->dx / static_cast<double>(grid->n));
    const double phys = l2_norm(f);
    worst = std::max(worst, std::abs(spec - phys) / phys);
  }
  return {"parseval", worst <= 1e-12, worst, "max rel norm mismatch <= 1e-12"};
}

CheckResult check_group_law() {
  auto grid = SpatialGrid::make(1024, 50.0);
  RngStream rng(0xCAFE, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Field f = random_field(grid, rng);
    const double t1 = 0.1 + 0.5 * rng.next_uniform();
    const double t2 = 0.1 + 0.5 * rng.next_uniform();
    const Field once = free_propagate(f, t1 + t2);
    const Field twice = free_propagate(free_propagate(f, t1), t2);
    worst = std::max(worst, rel_l2_diff(twice, once));
  }
  return {"group_law", worst <= 1e-12, worst, "max rel L2 mismatch <= 1e-12"};
}

CheckResult check_mass() {
  PathConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_end = 0.2;
  cfg.seed = 42;
  cfg.keep_log = false;
  const PathRecord rec = run_path(cfg);
  return {"mass", !rec.aborted && rec.mass_drift <= 1e-10, rec.mass_drift,
          "max rel L2 drift <= 1e-10 (strat, amp 0.5)"};
}

CheckResult check_dispersive() {
  auto grid = SpatialGrid::make(4096, 100.0);
  Field f(grid);
  for (std::size_t j = 0; j < grid->n; ++j)
    f.values[j] = std::exp(-grid->x[j] * grid->x[j]);
  std::vector<double> times;
  for (double t = 1.0; t <= 10.0; t += 0.5) times.push_back(t);
  const double slope = fit_loglog_slope(dispersive_decay_probe(f, times));
  return {"dispersive", slope >= -0.55 && slope <= -0.45, slope,
          "log-log sup-norm slope in [-0.55,-0.45]"};
}

CheckResult check_soliton() {
  // Reduced-length version of the regression (dt 2e-4, t half a period);
  // the acceptance suite runs the full pinned parameters.
  PathConfig cfg;
  cfg.grid = {4096, 100.0};
  cfg.noise.amplitude = 0.0;
  cfg.params.sign = -1;
  cfg.initial.kind = "soliton";
  cfg.dt = 2e-4;
  cfg.t_end = 0.25;
  cfg.keep_log = false;
  cfg.boundary_threshold = 1.0;
  const PathRecord rec = run_path(cfg);

  auto grid = rec.final_field.grid;
  double err2 = 0.0, q2 = 0.0;
  for (std::size_t j = 0; j < grid->n; ++j) {
    const double q = std::pow(3.0, 0.25) * std::sqrt(1.0 / std::cosh(2.0 * grid->x[j]));
    const double d = std::abs(rec.final_field.values[j]) - q;
    err2 += d * d;
    q2 += q * q;
  }
  const double rel = std::sqrt(err2 / q2);
  return {"soliton", !rec.aborted && rel <= 1e-6, rel,
          "|| |u(t)|-Q ||_2 / ||Q||_2 <= 1e-6"};
}

// Weak Ito/Stratonovich agreement: both schemes discretize the same Ito
// equation, so ensemble means of smooth observables drift apart at O(dt).
CheckResult check_weak_order() {
  const std::vector<double> dts = {8e-3, 4e-3, 2e-3};
  const std::size_t n_paths = 120;
  std::vector<double> d_mass, d_l10;

  for (double dt : dts) {
    EnsembleConfig ec;
    ec.base.grid = {256, 50.0};
    ec.base.noise.amplitude = 0.3;
    ec.base.initial.mass = 2.0;
    ec.base.dt = dt;
    ec.base.keep_log = false;
    ec.base.boundary_threshold = 1.0;
    ec.n_paths = n_paths;
    ec.seed_base = 7000;
    ec.rho_list = {1.0};

    double mass_s = 0.0, mass_i = 0.0, l10_s = 0.0, l10_i = 0.0;
    ec.base.integrator = Integrator::strat;
    EnsembleResult rs = run_ensemble(ec);
    ec.base.integrator = Integrator::ito;
    EnsembleResult ri = run_ensemble(ec);
    for (std::size_t i = 0; i < n_paths; ++i) {
      mass_s += l2_norm(rs.records[i].final_field);
      mass_i += l2_norm(ri.records[i].final_field);
      l10_s += rs.records[i].final_l10;
      l10_i += ri.records[i].final_l10;
    }
    d_mass.push_back(std::abs(mass_s - mass_i) / static_cast<double>(n_paths));
    d_l10.push_back(std::abs(l10_s - l10_i) / static_cast<double>(n_paths));
  }

  const auto order = [](const std::vector<double>& d) {
    return 0.5 * (std::log2(d[0] / d[1]) + std::log2(d[1] / d[2]));
  };
  const double o_mass = order(d_mass), o_l10 = order(d_l10);
  const double measured = std::min(o_mass, o_l10);
  std::ostringstream detail;
  detail << "weak order >= 0.8 (mass " << o_mass << ", L10 " << o_l10 << ")";
  return {"weak_order", measured >= 0.8, measured, detail.str()};
}

double x2_of_free_gaussian(double dt) {
  auto grid = SpatialGrid::make(512, 50.0);
  Field u(grid);
  for (std::size_t j = 0; j < grid->n; ++j)
    u.values[j] = std::exp(-grid->x[j] * grid->x[j]);
  StrichartzAccumulator acc(u, false);
  const auto n = static_cast<std::size_t>(std::llround(1.0 / dt));
  for (std::size_t s = 0; s < n; ++s) {
    acc.update(u, dt);
    u = free_propagate(u, dt);
  }
  return acc.x2_fifth();
}

CheckResult check_x2_order() {
  const double a = x2_of_free_gaussian(4e-3);
  const double b = x2_of_free_gaussian(2e-3);
  const double c = x2_of_free_gaussian(1e-3);
  const double order = std::log2(std::abs(a - b) / std::abs(b - c));
  return {"x2_order", order >= 0.9, order,
          "left-Riemann X2 quadrature order >= 0.9"};
}

CheckResult check_strang_order() {
  PathConfig cfg;
  cfg.grid = {512, 50.0};
  cfg.noise.amplitude = 0.0;
  cfg.initial.mass = 1.5;
  cfg.t_end = 0.5;
  cfg.keep_log = false;
  cfg.boundary_threshold = 1.0;

  const auto final_field = [&](double dt) {
    PathConfig c = cfg;
    c.dt = dt;
    return run_path(c).final_field;
  };
  const Field ref = final_field(2.5e-4);
  const Field c1 = final_field(4e-3);
  const Field c2 = final_field(2e-3);
  const double e1 = rel_l2_diff(c1, ref);
  const double e2 = rel_l2_diff(c2, ref);
  const double order = std::log2(e1 / e2);
  return {"strang_order", order >= 1.9, order,
          "deterministic Strang order >= 1.9"};
}

}  // namespace

std::vector<std::string> validation_check_names() {
  return {"unitarity", "parseval",  "group_law",  "mass",        "dispersive",
          "soliton",   "weak_order", "x2_order",  "strang_order"};
}

std::vector<CheckResult> run_validation(const std::vector<std::string>& only) {
  using Check = CheckResult (*)();
  const std::vector<std::pair<std::string, Check>> table = {
      {"unitarity", check_unitarity},   {"parseval", check_parseval},
      {"group_law", check_group_law},   {"mass", check_mass},
      {"dispersive", check_dispersive}, {"soliton", check_soliton},
      {"weak_order", check_weak_order}, {"x2_order", check_x2_order},
      {"strang_order", check_strang_order}};

  for (const auto& name : only) {
    const bool known = std::any_of(table.begin(), table.end(),
                                   [&](const auto& e) { return e.first == name; });
    if (!known) throw config_error("validate: unknown check '" + name + "'");
  }

  std::vector<CheckResult> results;
  for (const auto& [name, fn] : table) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end())
      continue;
    results.push_back(fn());
  }
  return results;
}

}  // namespace snls
