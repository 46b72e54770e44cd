#include "snls/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "snls/errors.hpp"

namespace snls {

namespace {

// One forward/backward plan pair per transform size. Plans are created with
// FFTW_UNALIGNED so fftw_execute_dft accepts any buffer; plan creation is
// serialized (FFTW planning is not thread-safe), execution is.
struct PlanSet {
  fftw_plan fwd;
  fftw_plan bwd;

  explicit PlanSet(std::size_t n) {
    std::vector<cplx> dummy(n);
    auto* p = reinterpret_cast<fftw_complex*>(dummy.data());
    fwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~PlanSet() {
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
};

const PlanSet& plans_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<PlanSet>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& entry = cache[n];
  if (!entry) entry = std::make_unique<PlanSet>(n);
  return *entry;
}

void execute(const fftw_plan& plan, const std::vector<cplx>& in, std::vector<cplx>& out) {
  out.resize(in.size());
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

std::shared_ptr<const SpatialGrid> SpatialGrid::make(std::size_t n_points, double domain_length) {
  if (!is_power_of_two(n_points))
    throw config_error("grid: n_points must be a power of two");
  if (!(domain_length > 0.0) || !std::isfinite(domain_length))
    throw config_error("grid: domain_length must be positive and finite");

  auto g = std::make_shared<SpatialGrid>();
  g->n = n_points;
  g->length = domain_length;
  g->dx = domain_length / static_cast<double>(n_points);
  g->x.resize(n_points);
  g->k.resize(n_points);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t j = 0; j < n_points; ++j) {
    g->x[j] = -0.5 * domain_length + static_cast<double>(j) * g->dx;
    const auto sj = (j < n_points / 2) ? static_cast<long>(j)
                                       : static_cast<long>(j) - static_cast<long>(n_points);
    g->k[j] = two_pi * static_cast<double>(sj) / domain_length;
  }
  return g;
}

Field::Field(GridPtr g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
  if (!grid || values.size() != grid->n)
    throw config_error("field: value length does not match grid");
}

bool Field::all_finite() const {
  for (const auto& z : values)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

SpectralField to_spectrum(const Field& f) {
  if (!f.grid || f.values.size() != f.grid->n)
    throw config_error("to_spectrum: field length does not match grid");
  SpectralField s;
  s.grid = f.grid;
  execute(plans_for(f.grid->n).fwd, f.values, s.coeff);
  return s;
}

Field from_spectrum(const SpectralField& s) {
  if (!s.grid || s.coeff.size() != s.grid->n)
    throw config_error("from_spectrum: coefficient length does not match grid");
  Field f;
  f.grid = s.grid;
  execute(plans_for(s.grid->n).bwd, s.coeff, f.values);
  const double inv_n = 1.0 / static_cast<double>(s.grid->n);
  for (auto& z : f.values) z *= inv_n;
  return f;
}

Field free_propagate(const Field& f, double t) {
  SpectralField s = to_spectrum(f);
  const auto& k = f.grid->k;
  for (std::size_t j = 0; j < s.coeff.size(); ++j)
    s.coeff[j] *= std::exp(cplx(0.0, -k[j] * k[j] * t));
  return from_spectrum(s);
}

double lp_norm(const Field& f, double p) {
  if (std::isnan(p) || p < 1.0) throw config_error("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& z : f.values) m = std::max(m, std::abs(z));
    return m;
  }
  if (p == 2.0) return l2_norm(f);
  double acc = 0.0;
  for (const auto& z : f.values) acc += std::pow(std::abs(z), p);
  return std::pow(acc * f.grid->dx, 1.0 / p);
}

double l2_norm(const Field& f) {
  double acc = 0.0;
  for (const auto& z : f.values) acc += std::norm(z);
  return std::sqrt(acc * f.grid->dx);
}

Field spectral_derivative(const Field& f) {
  SpectralField s = to_spectrum(f);
  const auto& k = f.grid->k;
  const std::size_t nyquist = f.grid->n / 2;
  for (std::size_t j = 0; j < s.coeff.size(); ++j)
    s.coeff[j] *= (j == nyquist) ? cplx(0.0) : cplx(0.0, k[j]);
  return from_spectrum(s);
}

double boundary_mass_fraction(const Field& f) {
  const double edge = 0.45 * f.grid->length;
  double total = 0.0, near_edge = 0.0;
  for (std::size_t j = 0; j < f.values.size(); ++j) {
    const double m = std::norm(f.values[j]);
    total += m;
    if (std::abs(f.grid->x[j]) >= edge) near_edge += m;
  }
  return total > 0.0 ? near_edge / total : 0.0;
}

Field mollify(const Field& f, double delta) {
  if (!(delta >= 0.0)) throw config_error("mollify: delta must be >= 0");
  SpectralField s = to_spectrum(f);
  const auto& k = f.grid->k;
  for (std::size_t j = 0; j < s.coeff.size(); ++j) {
    const double kd = k[j] * delta;
    s.coeff[j] *= std::exp(-0.5 * kd * kd);
  }
  return from_spectrum(s);
}

std::vector<DecaySample> dispersive_decay_probe(const Field& f,
                                                const std::vector<double>& times,
                                                double boundary_threshold) {
  std::vector<DecaySample> out;
  out.reserve(times.size());
  for (double t : times) {
    if (!(t > 0.0)) throw config_error("dispersive_decay_probe: times must be positive");
    Field g = free_propagate(f, t);
    DecaySample s;
    s.t = t;
    s.sup_norm = lp_norm(g, std::numeric_limits<double>::infinity());
    s.boundary_warning = boundary_mass_fraction(g) > boundary_threshold;
    out.push_back(s);
  }
  return out;
}

double fit_loglog_slope(const std::vector<DecaySample>& samples) {
  if (samples.size() < 2) throw config_error("fit_loglog_slope: need at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const double lx = std::log(s.t), ly = std::log(s.sup_norm);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace snls
