#include "snls/noise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "snls/errors.hpp"

namespace snls {

namespace {

double hermite_poly(std::size_t k, double xi) {
  // Physicists' Hermite polynomials via the three-term recurrence.
  double h0 = 1.0;
  if (k == 0) return h0;
  double h1 = 2.0 * xi;
  for (std::size_t j = 1; j < k; ++j) {
    const double h2 = 2.0 * xi * h1 - 2.0 * static_cast<double>(j) * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

Field wrap(GridPtr grid, const std::vector<double>& v) {
  Field f(grid);
  for (std::size_t j = 0; j < v.size(); ++j) f.values[j] = v[j];
  return f;
}

}  // namespace

CovarianceOperator CovarianceOperator::hermite(GridPtr grid, std::size_t rank,
                                               double width, double amplitude) {
  if (!grid) throw config_error("noise: grid required");
  if (!(width > 0.0)) throw config_error("noise: mode width must be positive");
  if (!(amplitude >= 0.0)) throw config_error("noise: amplitude must be >= 0");

  CovarianceOperator op;
  op.grid = grid;
  op.amplitude = amplitude;
  op.modes.resize(rank);
  for (std::size_t k = 0; k < rank; ++k) {
    auto& mode = op.modes[k];
    mode.resize(grid->n);
    // L^2(R) normalization of the Hermite function: 2^k k! sqrt(pi).
    double log_norm = 0.5 * (static_cast<double>(k) * std::numbers::ln2 +
                             std::lgamma(static_cast<double>(k) + 1.0) +
                             0.5 * std::log(std::numbers::pi));
    const double scale = amplitude / (std::exp(log_norm) * std::sqrt(width));
    for (std::size_t j = 0; j < grid->n; ++j) {
      const double xi = grid->x[j] / width;
      mode[j] = scale * hermite_poly(k, xi) * std::exp(-0.5 * xi * xi);
    }
  }
  return op;
}

CovarianceOperator CovarianceOperator::from_file(GridPtr grid, const std::string& path,
                                                 double amplitude) {
  CovarianceOperator op;
  op.grid = std::move(grid);
  op.amplitude = amplitude;
  op.add_mode_from_file(path);
  return op;
}

void CovarianceOperator::add_mode_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("noise: cannot open mode file " + path);
  std::vector<double> xs, vs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double x, v;
    if (!(ss >> x >> v)) throw config_error("noise: bad line in mode file " + path);
    xs.push_back(x);
    vs.push_back(v);
  }
  if (xs.size() < 2) throw config_error("noise: mode file needs at least two rows");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw config_error("noise: mode file x column must increase");

  std::vector<double> mode(grid->n, 0.0);
  for (std::size_t j = 0; j < grid->n; ++j) {
    const double x = grid->x[j];
    if (x <= xs.front() || x >= xs.back()) continue;  // zero outside the tabulated range
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const double w = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    mode[j] = amplitude * ((1.0 - w) * vs[hi - 1] + w * vs[hi]);
  }
  modes.push_back(std::move(mode));
}

WienerIncrement sample_increment(const CovarianceOperator& op, double dt, RngStream& rng) {
  if (!(dt > 0.0)) throw config_error("sample_increment: dt must be positive");
  WienerIncrement w;
  w.dt = dt;
  w.gaussians.resize(op.rank());
  for (auto& g : w.gaussians) g = rng.next_normal();
  w.delta_w = rebuild_increment(op, w);
  return w;
}

std::vector<double> rebuild_increment(const CovarianceOperator& op,
                                      const WienerIncrement& w) {
  if (w.gaussians.size() != op.rank())
    throw config_error("rebuild_increment: gaussian count does not match rank");
  std::vector<double> dw(op.grid->n, 0.0);
  const double root_dt = std::sqrt(w.dt);
  for (std::size_t k = 0; k < op.rank(); ++k) {
    const double db = w.gaussians[k] * root_dt;
    const auto& mode = op.modes[k];
    for (std::size_t j = 0; j < dw.size(); ++j) dw[j] += db * mode[j];
  }
  return dw;
}

std::vector<double> ito_correction(const CovarianceOperator& op) {
  std::vector<double> f(op.grid->n, 0.0);
  for (const auto& mode : op.modes)
    for (std::size_t j = 0; j < f.size(); ++j) f[j] += mode[j] * mode[j];
  return f;
}

NoiseRegularityReport regularity_report(const CovarianceOperator& op) {
  NoiseRegularityReport r;
  const double inf = std::numeric_limits<double>::infinity();
  for (const auto& mode : op.modes) {
    Field m = wrap(op.grid, mode);
    Field dm = spectral_derivative(m);
    r.mode_l2.push_back(l2_norm(m));
    r.mode_w1p_inf.push_back(lp_norm(m, inf) + lp_norm(dm, inf));
    r.mode_w1p_2.push_back(l2_norm(m) + l2_norm(dm));
  }
  Field f = wrap(op.grid, ito_correction(op));
  r.f_linf = lp_norm(f, inf);
  r.f_l52 = lp_norm(f, 2.5);
  return r;
}

}  // namespace snls
