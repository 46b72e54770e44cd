#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "snls/ensemble.hpp"
#include "snls/errors.hpp"
#include "snls/pathsim.hpp"

using namespace snls;

namespace {

PathConfig small_config() {
  PathConfig cfg;
  cfg.grid = {256, 50.0};
  cfg.dt = 2e-3;
  cfg.t_end = 1.0;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  PathConfig cfg = small_config();
  cfg.dt = 3e-3;  // does not divide t_end = 1
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = small_config();
  cfg.output_stride = 0;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  cfg = small_config();
  cfg.initial.kind = "nope";
  CHECK_THROWS_AS(run_path(cfg), config_error);
}

TEST_CASE("free-evolution record: conserved mass, clean flags") {
  PathConfig cfg = small_config();
  cfg.noise.amplitude = 0.0;
  cfg.params.mu = 0.0;
  const PathRecord rec = run_path(cfg);
  CHECK_FALSE(rec.aborted);
  CHECK(rec.mass_drift <= 1e-12);
  CHECK_FALSE(rec.mass_flagged);
  CHECK_FALSE(rec.boundary_warning);
  CHECK(rec.stopping_time_m == kNeverHit);
  CHECK(rec.initial_l2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rec.norm_series.size() > 10);
  CHECK(rec.norm_series.front().t == 0.0);
  CHECK(rec.norm_series.back().t == doctest::Approx(1.0));
}

TEST_CASE("identical seeds give bit-identical records") {
  PathConfig cfg = small_config();
  cfg.save_final_field = true;
  const PathRecord a = run_path(cfg);
  const PathRecord b = run_path(cfg);
  CHECK(records_equal(a, b, true));
  for (std::size_t j = 0; j < a.final_field.size(); ++j)
    CHECK(a.final_field.values[j] == b.final_field.values[j]);
}

TEST_CASE("small m saturates the cutoff and the path keeps running") {
  PathConfig cfg = small_config();
  cfg.initial.mass = 2.5;
  cfg.params.m_trunc = 0.05;
  const PathRecord rec = run_path(cfg);
  CHECK_FALSE(rec.aborted);
  CHECK(rec.first_theta_below_one_t != kNeverHit);
  CHECK(rec.first_theta_zero_t != kNeverHit);
  CHECK(rec.first_theta_below_one_t <= rec.first_theta_zero_t);
  // stopping thresholds m-1 < m are ordered when both hit
  CHECK(rec.stopping_time_m != kNeverHit);
  CHECK(rec.stopping_time_m_eps != kNeverHit);
  CHECK(rec.stopping_time_m <= rec.stopping_time_m_eps);
  CHECK(rec.mass_drift <= 1e-10);  // free+noise evolution still conserves mass
}

TEST_CASE("stopping times use the paper thresholds m-1 and m") {
  PathConfig cfg = small_config();
  cfg.initial.mass = 2.2;
  cfg.params.m_trunc = 1.2;
  const PathRecord rec = run_path(cfg);
  if (rec.stopping_time_m_eps != kNeverHit) {
    REQUIRE(rec.stopping_time_m != kNeverHit);
    CHECK(rec.stopping_time_m <= rec.stopping_time_m_eps);
    bool checked_lo = false;
    for (const auto& row : rec.norm_series) {
      if (row.t >= rec.stopping_time_m && !checked_lo) {
        CHECK(row.x2_fifth >= 1.2 - 1.0 - 1e-9);
        checked_lo = true;
      }
    }
    CHECK(checked_lo);
  }
}

TEST_CASE("coupled pair with equal params has exactly zero difference") {
  PathConfig cfg = small_config();
  ModelParams p;  // same (eps, m) on both legs
  p.epsilon = 0.2;
  p.m_trunc = 4.0;
  const PairResult pr = run_pair(cfg, p, p);
  CHECK(pr.diff_x_norm == 0.0);
  for (const auto& row : pr.diff_series) {
    CHECK(row.sup_l2_diff == 0.0);
    CHECK(row.x2_fifth_diff == 0.0);
  }
}

TEST_CASE("truncation inertness: unsaturated paths are bit-identical across m") {
  PathConfig cfg = small_config();
  cfg.initial.mass = 1.0;  // X2^5(1) stays well under 1
  cfg.save_final_field = true;

  PathConfig at_m = cfg;
  at_m.params.m_trunc = 2.0;
  PathConfig at_inf = cfg;
  at_inf.params.m_trunc = std::numeric_limits<double>::infinity();

  const PathRecord a = run_path(at_m);
  const PathRecord b = run_path(at_inf);
  REQUIRE(a.first_theta_below_one_t == kNeverHit);
  CHECK(a.final_x2_fifth == b.final_x2_fifth);
  for (std::size_t j = 0; j < a.final_field.size(); ++j)
    CHECK(a.final_field.values[j] == b.final_field.values[j]);

  // Lemma-style m vs m+1 coupling: zero difference when never stopped
  const PairResult pr = run_pair(cfg, at_m.params, [] {
    ModelParams p;
    p.m_trunc = 3.0;
    return p;
  }());
  CHECK(pr.a.stopping_time_m == kNeverHit);
  CHECK(pr.diff_x_norm == 0.0);
}

TEST_CASE("epsilon coupling difference shrinks with the epsilon gap") {
  PathConfig cfg = small_config();
  cfg.params.m_trunc = 4.0;
  int closer_smaller = 0;
  const int n_seeds = 8;
  for (int s = 0; s < n_seeds; ++s) {
    cfg.seed = 100 + s;
    ModelParams lo;
    lo.epsilon = 0.1;
    lo.m_trunc = 4.0;
    ModelParams mid;
    mid.epsilon = 0.2;
    mid.m_trunc = 4.0;
    ModelParams hi;
    hi.epsilon = 0.4;
    hi.m_trunc = 4.0;
    const double d_near = run_pair(cfg, mid, lo).diff_x_norm;
    const double d_far = run_pair(cfg, hi, lo).diff_x_norm;
    if (d_near < d_far) ++closer_smaller;
  }
  CHECK(closer_smaller >= 7);  // allow an outlier path
}

TEST_CASE("boundary mass warning fires for data leaking off the torus") {
  PathConfig cfg = small_config();
  cfg.noise.amplitude = 0.0;
  cfg.params.mu = 0.0;
  cfg.initial.width = 12.0;  // wide packet disperses into the edge bands
  cfg.t_end = 1.0;
  const PathRecord rec = run_path(cfg);
  CHECK(rec.boundary_warning);
  CHECK(rec.boundary_mass > 1e-8);
}

TEST_CASE("focusing at the ground-state mass raises the warning flag") {
  PathConfig cfg = small_config();
  cfg.noise.amplitude = 0.0;
  cfg.params.sign = -1;
  cfg.initial.kind = "soliton";
  cfg.dt = 1e-3;
  cfg.t_end = 0.05;
  const PathRecord rec = run_path(cfg);
  CHECK(rec.focusing_mass_warning);  // ||Q||_2 is not strictly below the bound

  cfg.initial.kind = "gaussian";
  cfg.initial.mass = 0.5 * ground_state_mass();
  const PathRecord ok = run_path(cfg);
  CHECK_FALSE(ok.focusing_mass_warning);
}

TEST_CASE("ground state mass matches the closed form") {
  CHECK(ground_state_mass() ==
        doctest::Approx(std::sqrt(std::sqrt(3.0) * std::numbers::pi / 2.0)));
}

TEST_CASE("H1 tracking is exact under free evolution") {
  PathConfig cfg = small_config();
  cfg.noise.amplitude = 0.0;
  cfg.params.mu = 0.0;
  cfg.track_h1 = true;
  const PathRecord rec = run_path(cfg);
  CHECK(rec.initial_h1 > 0.0);
  CHECK(rec.max_h1 == doctest::Approx(rec.initial_h1).epsilon(1e-12));
}

TEST_CASE("two-bump and file initial data run cleanly") {
  PathConfig cfg = small_config();
  cfg.t_end = 0.1;
  cfg.initial.kind = "two_bump";
  cfg.initial.separation = 8.0;
  const PathRecord rec = run_path(cfg);
  CHECK_FALSE(rec.aborted);
  CHECK(rec.initial_l2 == doctest::Approx(cfg.initial.mass).epsilon(1e-12));

  const std::string path = "/tmp/snls_test_initial.txt";
  {
    std::ofstream out(path);
    for (double x = -10.0; x <= 10.0; x += 0.1)
      out << x << " " << std::exp(-x * x) << " " << 0.5 * std::exp(-x * x) << "\n";
  }
  cfg.initial.kind = "file";
  cfg.initial.file = path;
  const PathRecord rec2 = run_path(cfg);
  CHECK_FALSE(rec2.aborted);
  CHECK(rec2.initial_l2 > 0.0);
  std::remove(path.c_str());
}

TEST_CASE("ito integrator path reports drift but stays near conservation") {
  PathConfig cfg = small_config();
  cfg.integrator = Integrator::ito;
  cfg.noise.amplitude = 0.3;
  const PathRecord rec = run_path(cfg);
  CHECK_FALSE(rec.aborted);
  CHECK(rec.mass_drift < 0.05);       // weakly conservative
  CHECK_FALSE(rec.mass_flagged);      // the strat flag does not apply to ito
}

TEST_CASE("frozen noise path replays the increments run_path consumes") {
  PathConfig cfg = small_config();
  cfg.t_end = 0.05;
  auto grid = SpatialGrid::make(cfg.grid.n_points, cfg.grid.length);
  const auto op = cfg.noise.build(grid);
  const NoisePath frozen = frozen_noise_path(op, cfg.seed, cfg.dt, cfg.n_steps(), nullptr);

  // re-deriving the increments from the same seed/step keys is bit-exact
  PathRng rng{cfg.seed, 0};
  for (std::size_t s = 0; s < cfg.n_steps(); ++s) {
    RngStream stream = rng.stream_for_step();
    const WienerIncrement w = sample_increment(op, cfg.dt, stream);
    rng.advance();
    for (std::size_t j = 0; j < grid->n; ++j)
      CHECK(w.delta_w[j] == frozen.increments[s][j]);
  }
}
