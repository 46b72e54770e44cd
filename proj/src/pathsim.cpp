#include "snls/pathsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "snls/errors.hpp"

namespace snls {

CovarianceOperator NoiseSpec::build(const GridPtr& grid) const {
  if (!mode_files.empty()) {
    CovarianceOperator op;
    op.grid = grid;
    op.amplitude = amplitude;
    for (const auto& path : mode_files) op.add_mode_from_file(path);
    return op;
  }
  const double w = (width > 0.0) ? width : grid->length / 30.0;
  return CovarianceOperator::hermite(grid, rank, w, amplitude);
}

namespace {

Field normalized_to_mass(Field f, double mass) {
  const double l2 = l2_norm(f);
  if (l2 == 0.0) throw config_error("initial data: zero profile cannot be normalized");
  const double s = mass / l2;
  for (auto& z : f.values) z *= s;
  return f;
}

Field read_field_file(const GridPtr& grid, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("initial data: cannot open " + path);
  std::vector<double> xs, re, im;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double x, r, i = 0.0;
    if (!(ss >> x >> r)) throw config_error("initial data: bad line in " + path);
    ss >> i;
    xs.push_back(x);
    re.push_back(r);
    im.push_back(i);
  }
  if (xs.size() < 2) throw config_error("initial data: file needs at least two rows");
  Field f(grid);
  for (std::size_t j = 0; j < grid->n; ++j) {
    const double x = grid->x[j];
    if (x <= xs.front() || x >= xs.back()) continue;
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    f.values[j] = cplx((1.0 - w) * re[hi - 1] + w * re[hi],
                       (1.0 - w) * im[hi - 1] + w * im[hi]);
  }
  return f;
}

}  // namespace

Field InitialDataSpec::build(const GridPtr& grid) const {
  if (kind == "gaussian") {
    if (!(width > 0.0)) throw config_error("initial data: width must be positive");
    Field f(grid);
    for (std::size_t j = 0; j < grid->n; ++j) {
      const double xi = (grid->x[j] - center) / width;
      f.values[j] = std::exp(-xi * xi);
    }
    return normalized_to_mass(std::move(f), mass);
  }
  if (kind == "soliton") {
    Field f(grid);
    const double amp = scale * std::pow(3.0, 0.25);
    for (std::size_t j = 0; j < grid->n; ++j)
      f.values[j] = amp * std::sqrt(1.0 / std::cosh(2.0 * (grid->x[j] - center)));
    return f;
  }
  if (kind == "two_bump") {
    if (!(width > 0.0)) throw config_error("initial data: width must be positive");
    Field f(grid);
    for (std::size_t j = 0; j < grid->n; ++j) {
      const double a = (grid->x[j] - (center - 0.5 * separation)) / width;
      const double b = (grid->x[j] - (center + 0.5 * separation)) / width;
      f.values[j] = std::exp(-a * a) + std::exp(-b * b);
    }
    return normalized_to_mass(std::move(f), mass);
  }
  if (kind == "file") return read_field_file(grid, file);
  throw config_error("initial data: unknown kind '" + kind + "'");
}

std::size_t PathConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround(t_end / dt));
}

void PathConfig::validate() const {
  params.validate();
  if (!(dt > 0.0)) throw config_error("config: dt must be positive");
  if (!(t_end > 0.0)) throw config_error("config: t_end must be positive");
  const auto n = n_steps();
  if (n == 0) throw config_error("config: t_end shorter than one step");
  const double tol = 32.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, static_cast<double>(n));
  if (std::abs(static_cast<double>(n) * dt - t_end) > tol * std::max(1.0, t_end))
    throw config_error("config: dt must divide t_end");
  if (output_stride == 0) throw config_error("config: output_stride must be positive");
  if (!(noise.amplitude >= 0.0)) throw config_error("config: noise amplitude must be >= 0");
  if (!(boundary_threshold > 0.0)) throw config_error("config: boundary threshold must be positive");
}

double ground_state_mass() {
  // ||Q||_2^2 = sqrt(3) * integral sech(2x) dx = sqrt(3) * pi / 2.
  return std::sqrt(std::sqrt(3.0) * std::numbers::pi / 2.0);
}

namespace {

// Everything one trajectory owns while stepping.
struct PathState {
  Field u;
  StrichartzAccumulator acc;
  PathRecord rec;
  double mass0 = 0.0;

  PathState(const PathConfig& cfg, const Field& u0, const ModelParams& params)
      : u(u0), acc(u0, true) {
    rec.seed = cfg.seed;
    mass0 = l2_norm(u0);
    rec.initial_l2 = mass0;
    rec.focusing_mass_warning = (params.sign < 0 && mass0 >= ground_state_mass());
    if (cfg.track_h1) {
      rec.initial_h1 = h1_norm(u0);
      rec.max_h1 = rec.initial_h1;
    }
  }

  // Advances bookkeeping that depends on the pre-step field, returns the
  // frozen X2 integral for the step.
  double begin_step(const ModelParams& params, double dt, double t_next) {
    const double x2f_start = acc.x2_fifth();
    const double th = theta_m(params.trunc_offset + x2f_start, params.m_trunc);
    if (th < 1.0 && rec.first_theta_below_one_t == kNeverHit)
      rec.first_theta_below_one_t = t_next - dt;
    if (th == 0.0 && rec.first_theta_zero_t == kNeverHit)
      rec.first_theta_zero_t = t_next - dt;

    acc.update(u, dt);
    if (rec.stopping_time_m == kNeverHit && acc.x2_fifth() >= params.m_trunc - 1.0)
      rec.stopping_time_m = acc.t_now();
    if (rec.stopping_time_m_eps == kNeverHit && acc.x2_fifth() >= params.m_trunc)
      rec.stopping_time_m_eps = acc.t_now();
    return x2f_start;
  }

  // Post-step health checks; false aborts the trajectory.
  bool end_step(const PathConfig& cfg, std::size_t step) {
    if (!u.all_finite()) {
      rec.aborted = true;
      rec.abort_step = step;
      return false;
    }
    const double l2 = l2_norm(u);
    rec.mass_drift = std::max(rec.mass_drift, std::abs(l2 - mass0) / mass0);
    if ((step + 1) % cfg.output_stride == 0 || step + 1 == cfg.n_steps()) {
      const double bm = boundary_mass_fraction(u);
      rec.boundary_mass = std::max(rec.boundary_mass, bm);
      if (bm > cfg.boundary_threshold) rec.boundary_warning = true;
      if (cfg.track_h1) rec.max_h1 = std::max(rec.max_h1, h1_norm(u));
    }
    return true;
  }

  void finalize(const PathConfig& cfg, Integrator integ) {
    if (!rec.aborted) acc.record_endpoint(u);
    rec.final_sup_l2 = acc.sup_l2();
    rec.final_x2_fifth = acc.x2_fifth();
    rec.final_x_norm = acc.x_norm();
    rec.final_l10 = rec.aborted ? 0.0 : lp_norm(u, 10.0);
    rec.mass_flagged = (integ == Integrator::strat && rec.mass_drift > 1e-10);
    const auto& log = acc.per_step_log();
    for (std::size_t i = 0; i < log.size(); ++i)
      if (i % cfg.output_stride == 0 || i + 1 == log.size())
        rec.norm_series.push_back(log[i]);
    rec.final_field = std::move(u);
  }
};

}  // namespace

PathRecord run_path(const PathConfig& cfg) {
  cfg.validate();
  auto grid = SpatialGrid::make(cfg.grid.n_points, cfg.grid.length);
  const CovarianceOperator op = cfg.noise.build(grid);
  const std::vector<double> f_phi = ito_correction(op);
  const Field u0 = cfg.initial.build(grid);

  PathState st(cfg, u0, cfg.params);
  PathRng rng{cfg.seed, 0};
  const std::size_t n = cfg.n_steps();

  for (std::size_t step = 0; step < n; ++step) {
    RngStream stream = rng.stream_for_step();
    const WienerIncrement w = sample_increment(op, cfg.dt, stream);
    rng.advance();

    const double t_next = static_cast<double>(step + 1) * cfg.dt;
    const double x2f = st.begin_step(cfg.params, cfg.dt, t_next);
    st.u = (cfg.integrator == Integrator::strat)
               ? strat_split_step(st.u, cfg.dt, &w.delta_w, x2f, cfg.params)
               : ito_em_step(st.u, cfg.dt, w.delta_w, f_phi, x2f, cfg.params);
    if (!st.end_step(cfg, step)) break;
  }
  st.finalize(cfg, cfg.integrator);
  return st.rec;
}

PairResult run_pair(const PathConfig& cfg, const ModelParams& params_a,
                    const ModelParams& params_b) {
  auto grid = SpatialGrid::make(cfg.grid.n_points, cfg.grid.length);
  const Field u0 = cfg.initial.build(grid);
  return run_pair(cfg, params_a, params_b, u0);
}

PairResult run_pair(const PathConfig& cfg, const ModelParams& params_a,
                    const ModelParams& params_b, const Field& initial_b) {
  PathConfig check = cfg;
  check.params = params_a;
  check.validate();
  check.params = params_b;
  check.validate();

  GridPtr grid = initial_b.grid;
  if (!grid || grid->n != cfg.grid.n_points || grid->length != cfg.grid.length)
    throw config_error("run_pair: initial_b grid does not match config");
  const CovarianceOperator op = cfg.noise.build(grid);
  const std::vector<double> f_phi = ito_correction(op);
  const Field u0 = cfg.initial.build(grid);

  PathState a(cfg, u0, params_a);
  PathState b(cfg, initial_b, params_b);
  Field diff0(grid);  // zero: coupled runs start equal
  StrichartzAccumulator diff_acc(diff0, false);

  PairResult out;
  PathRng rng{cfg.seed, 0};
  const std::size_t n = cfg.n_steps();

  for (std::size_t step = 0; step < n; ++step) {
    RngStream stream = rng.stream_for_step();
    const WienerIncrement w = sample_increment(op, cfg.dt, stream);
    rng.advance();

    const double t_next = static_cast<double>(step + 1) * cfg.dt;
    const double x2fa = a.begin_step(params_a, cfg.dt, t_next);
    const double x2fb = b.begin_step(params_b, cfg.dt, t_next);

    Field d = a.u;
    for (std::size_t j = 0; j < d.size(); ++j) d.values[j] -= b.u.values[j];
    diff_acc.update(d, cfg.dt);
    if (step % cfg.output_stride == 0)
      out.diff_series.push_back(
          {static_cast<double>(step) * cfg.dt, diff_acc.sup_l2(), diff_acc.x2_fifth()});

    if (cfg.integrator == Integrator::strat) {
      a.u = strat_split_step(a.u, cfg.dt, &w.delta_w, x2fa, params_a);
      b.u = strat_split_step(b.u, cfg.dt, &w.delta_w, x2fb, params_b);
    } else {
      a.u = ito_em_step(a.u, cfg.dt, w.delta_w, f_phi, x2fa, params_a);
      b.u = ito_em_step(b.u, cfg.dt, w.delta_w, f_phi, x2fb, params_b);
    }

    const bool ok_a = a.end_step(cfg, step);
    const bool ok_b = b.end_step(cfg, step);
    if (!ok_a || !ok_b) break;
  }

  // Fold in the endpoint fields so the sup covers [0, t_end].
  if (!a.rec.aborted && !b.rec.aborted) {
    Field d = a.u;
    for (std::size_t j = 0; j < d.size(); ++j) d.values[j] -= b.u.values[j];
    diff_acc.record_endpoint(d);
    out.diff_x_norm = diff_acc.x_norm();
    out.diff_series.push_back({cfg.t_end, diff_acc.sup_l2(), diff_acc.x2_fifth()});
  }

  a.finalize(cfg, cfg.integrator);
  b.finalize(cfg, cfg.integrator);
  out.a = std::move(a.rec);
  out.b = std::move(b.rec);
  return out;
}

NoisePath frozen_noise_path(const CovarianceOperator& op, std::uint64_t seed, double dt,
                            std::size_t n_steps, const std::vector<double>* f_phi) {
  NoisePath path;
  path.dt = dt;
  path.f_phi = f_phi;
  path.increments.reserve(n_steps);
  PathRng rng{seed, 0};
  for (std::size_t step = 0; step < n_steps; ++step) {
    RngStream stream = rng.stream_for_step();
    path.increments.push_back(sample_increment(op, dt, stream).delta_w);
    rng.advance();
  }
  return path;
}

}  // namespace snls
