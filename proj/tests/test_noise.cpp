#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "snls/errors.hpp"
#include "snls/noise.hpp"

using namespace snls;

namespace {

CovarianceOperator single_mode_op(const GridPtr& g, double (*profile)(double)) {
  CovarianceOperator op;
  op.grid = g;
  op.amplitude = 1.0;
  std::vector<double> mode(g->n);
  for (std::size_t j = 0; j < g->n; ++j) mode[j] = profile(g->x[j]);
  op.modes.push_back(std::move(mode));
  return op;
}

double gaussian_profile(double x) { return std::exp(-x * x); }

}  // namespace

TEST_CASE("hermite modes are localized well inside the domain") {
  auto g = SpatialGrid::make(1024, 50.0);
  const auto op = CovarianceOperator::hermite(g, 4, 50.0 / 30.0, 1.0);
  REQUIRE(op.rank() == 4);
  for (const auto& mode : op.modes) {
    double peak = 0.0;
    for (double v : mode) peak = std::max(peak, std::abs(v));
    CHECK(peak > 0.0);
    // below 1e-10 of the max outside the central 60% of the domain
    for (std::size_t j = 0; j < g->n; ++j)
      if (std::abs(g->x[j]) > 0.3 * g->length)
        CHECK(std::abs(mode[j]) < 1e-10 * peak);
  }
}

TEST_CASE("zero amplitude gives the zero increment") {
  auto g = SpatialGrid::make(256, 50.0);
  const auto op = CovarianceOperator::hermite(g, 4, 2.0, 0.0);
  RngStream rng(7, 0);
  const WienerIncrement w = sample_increment(op, 1e-3, rng);
  for (double v : w.delta_w) CHECK(v == 0.0);
}

TEST_CASE("single-mode increment is a scalar multiple of the profile") {
  auto g = SpatialGrid::make(256, 50.0);
  const auto op = single_mode_op(g, gaussian_profile);
  RngStream rng(8, 0);
  const WienerIncrement w = sample_increment(op, 0.01, rng);
  REQUIRE(w.gaussians.size() == 1);
  const double db = w.gaussians[0] * std::sqrt(0.01);
  for (std::size_t j = 0; j < g->n; ++j)
    CHECK(w.delta_w[j] == doctest::Approx(db * op.modes[0][j]).epsilon(1e-14));
}

TEST_CASE("increment regeneration from stored gaussians is bit-exact") {
  auto g = SpatialGrid::make(512, 50.0);
  const auto op = CovarianceOperator::hermite(g, 4, 50.0 / 30.0, 0.5);
  RngStream rng(9, 3);
  const WienerIncrement w = sample_increment(op, 1e-3, rng);
  const auto rebuilt = rebuild_increment(op, w);
  for (std::size_t j = 0; j < g->n; ++j) CHECK(rebuilt[j] == w.delta_w[j]);
}

TEST_CASE("identical seeds give bit-identical increment sequences") {
  auto g = SpatialGrid::make(256, 50.0);
  const auto op = CovarianceOperator::hermite(g, 4, 2.0, 0.5);
  for (std::uint64_t step = 0; step < 5; ++step) {
    RngStream ra(1234, step), rb(1234, step);
    const WienerIncrement wa = sample_increment(op, 1e-3, ra);
    const WienerIncrement wb = sample_increment(op, 1e-3, rb);
    for (std::size_t j = 0; j < g->n; ++j) CHECK(wa.delta_w[j] == wb.delta_w[j]);
  }
}

TEST_CASE("sample variance of the increment matches dt * F at each point") {
  auto g = SpatialGrid::make(128, 50.0);
  const auto op = CovarianceOperator::hermite(g, 4, 50.0 / 30.0, 1.0);
  const auto f_phi = ito_correction(op);
  const double dt = 0.01;
  const std::size_t n_samples = 100000;

  // accumulate at a handful of probe points
  const std::vector<std::size_t> probes = {50, 58, 64, 70, 80};
  std::vector<double> sum(probes.size(), 0.0), sum2(probes.size(), 0.0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    RngStream rng(777, s);
    const WienerIncrement w = sample_increment(op, dt, rng);
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double v = w.delta_w[probes[p]];
      sum[p] += v;
      sum2[p] += v * v;
    }
  }
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const double mean = sum[p] / static_cast<double>(n_samples);
    const double var = sum2[p] / static_cast<double>(n_samples) - mean * mean;
    const double expected = dt * f_phi[probes[p]];
    if (expected < 1e-12) continue;  // node of every mode
    const double se = expected * std::sqrt(2.0 / static_cast<double>(n_samples));
    CHECK(std::abs(var - expected) < 3.0 * se);
  }
}

TEST_CASE("ito correction") {
  auto g = SpatialGrid::make(256, 50.0);

  SUBCASE("no modes -> zero field") {
    CovarianceOperator op;
    op.grid = g;
    for (double v : ito_correction(op)) CHECK(v == 0.0);
  }

  SUBCASE("single mode V -> V^2") {
    const auto op = single_mode_op(g, gaussian_profile);
    const auto f = ito_correction(op);
    for (std::size_t j = 0; j < g->n; ++j)
      CHECK(f[j] == doctest::Approx(std::pow(gaussian_profile(g->x[j]), 2)).epsilon(1e-14));
  }

  SUBCASE("nonnegative everywhere for the default operator") {
    const auto op = CovarianceOperator::hermite(g, 4, 2.0, 0.7);
    for (double v : ito_correction(op)) CHECK(v >= 0.0);
  }

  SUBCASE("invariant under a 2x2 rotation of the mode list") {
    auto op = CovarianceOperator::hermite(g, 2, 2.0, 1.0);
    const auto before = ito_correction(op);
    const double c = std::cos(0.7), s = std::sin(0.7);
    auto rotated = op;
    for (std::size_t j = 0; j < g->n; ++j) {
      rotated.modes[0][j] = c * op.modes[0][j] + s * op.modes[1][j];
      rotated.modes[1][j] = -s * op.modes[0][j] + c * op.modes[1][j];
    }
    const auto after = ito_correction(rotated);
    double peak = 0.0;
    for (double v : before) peak = std::max(peak, v);
    for (std::size_t j = 0; j < g->n; ++j)
      CHECK(std::abs(after[j] - before[j]) <= 1e-12 * peak);
  }

  SUBCASE("invariant under random orthogonal remixing (Givens sweeps)") {
    auto op = CovarianceOperator::hermite(g, 4, 2.0, 1.0);
    const auto before = ito_correction(op);
    RngStream rng(99, 0);
    for (int sweep = 0; sweep < 10; ++sweep) {
      const auto a = rng.next_u64() % 4;
      auto b = rng.next_u64() % 4;
      if (a == b) b = (b + 1) % 4;
      const double ang = 2.0 * std::numbers::pi * rng.next_uniform();
      const double c = std::cos(ang), s = std::sin(ang);
      for (std::size_t j = 0; j < g->n; ++j) {
        const double va = op.modes[a][j], vb = op.modes[b][j];
        op.modes[a][j] = c * va + s * vb;
        op.modes[b][j] = -s * va + c * vb;
      }
    }
    const auto after = ito_correction(op);
    double peak = 0.0;
    for (double v : before) peak = std::max(peak, v);
    for (std::size_t j = 0; j < g->n; ++j)
      CHECK(std::abs(after[j] - before[j]) <= 1e-12 * peak);
  }
}

TEST_CASE("regularity report") {
  auto g = SpatialGrid::make(1024, 50.0);

  SUBCASE("zero operator -> all norms zero") {
    CovarianceOperator op;
    op.grid = g;
    const auto r = regularity_report(op);
    CHECK(r.f_linf == 0.0);
    CHECK(r.f_l52 == 0.0);
    CHECK(r.mode_l2.empty());
  }

  SUBCASE("gaussian mode: ||F||_inf = 1 and ||F||_{5/2} matches quadrature") {
    const auto op = single_mode_op(g, gaussian_profile);
    const auto r = regularity_report(op);
    CHECK(r.f_linf == doctest::Approx(1.0).epsilon(1e-12));
    const double exact = std::pow(
        oracle::adaptive_simpson([](double x) { return std::exp(-5.0 * x * x); }, -25.0,
                                 25.0, 1e-13),
        0.4);
    CHECK(r.f_l52 == doctest::Approx(exact).epsilon(1e-6));
    CHECK(r.mode_w1p_2[0] > 0.0);
    CHECK(std::isfinite(r.mode_w1p_inf[0]));
  }
}

TEST_CASE("per-stream gaussians pass moment checks on 1e5 samples") {
  const std::size_t n = 100000;
  double mean = 0.0, m2 = 0.0, m4 = 0.0;
  RngStream rng(4242, 0);
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.next_normal();
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  for (double x : xs) {
    const double d = x - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  const double kurt = m4 / (m2 * m2) - 3.0;
  CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(m2 - 1.0) < 3.0 * std::sqrt(2.0 / static_cast<double>(n)));
  CHECK(std::abs(kurt) < 3.0 * std::sqrt(24.0 / static_cast<double>(n)));
}

TEST_CASE("mode profiles load from two-column files with interpolation") {
  auto g = SpatialGrid::make(256, 50.0);
  const std::string path = "/tmp/snls_test_mode.txt";
  {
    std::ofstream out(path);
    out << "# test profile\n";
    for (double x = -20.0; x <= 20.0; x += 0.5)
      out << x << " " << std::exp(-x * x / 9.0) << "\n";
  }
  const auto op = CovarianceOperator::from_file(g, path, 2.0);
  REQUIRE(op.rank() == 1);
  // on-node agreement up to linear interpolation error of the 0.5 table
  for (std::size_t j = 0; j < g->n; ++j) {
    const double x = g->x[j];
    if (x <= -20.0 || x >= 20.0) {
      CHECK(op.modes[0][j] == 0.0);
    } else {
      CHECK(op.modes[0][j] ==
            doctest::Approx(2.0 * std::exp(-x * x / 9.0)).epsilon(0.01));
    }
  }
  std::remove(path.c_str());

  CHECK_THROWS_AS(CovarianceOperator::from_file(g, "/nonexistent/mode.txt", 1.0),
                  config_error);
}

TEST_CASE("invalid dt is rejected") {
  auto g = SpatialGrid::make(128, 50.0);
  const auto op = CovarianceOperator::hermite(g, 2, 2.0, 1.0);
  RngStream rng(1, 0);
  CHECK_THROWS_AS(sample_increment(op, 0.0, rng), config_error);
  CHECK_THROWS_AS(sample_increment(op, -1e-3, rng), config_error);
}
