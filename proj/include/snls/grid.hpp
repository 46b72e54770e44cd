#pragma once

#include <complex>
#include <memory>
#include <vector>

namespace snls {

using cplx = std::complex<double>;

// Uniform periodic grid of n points (power of two) on [-L/2, L/2).
// Wavenumbers are in standard FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1,
// scaled by 2*pi/L.
struct SpatialGrid {
  std::size_t n = 0;
  double length = 0.0;
  double dx = 0.0;
  std::vector<double> x;
  std::vector<double> k;

  static std::shared_ptr<const SpatialGrid> make(std::size_t n_points, double domain_length);
};

using GridPtr = std::shared_ptr<const SpatialGrid>;

// Complex field sampled on a SpatialGrid.
struct Field {
  GridPtr grid;
  std::vector<cplx> values;

  Field() = default;
  explicit Field(GridPtr g) : grid(std::move(g)), values(grid->n, cplx(0.0)) {}
  Field(GridPtr g, std::vector<cplx> v);

  std::size_t size() const { return values.size(); }
  bool all_finite() const;
};

// Spectral coefficients of a Field, FFT mode order matching SpatialGrid::k.
// Convention: forward transform is the plain DFT sum (no scaling), inverse
// divides by n, so from_spectrum(to_spectrum(f)) == f. Parseval holds as
//   sum |f_j|^2 dx == sum |s_k|^2 dx / n.
struct SpectralField {
  GridPtr grid;
  std::vector<cplx> coeff;
};

SpectralField to_spectrum(const Field& f);
Field from_spectrum(const SpectralField& s);

// Free Schroedinger propagator: spectral multiplier exp(-i k^2 t).
Field free_propagate(const Field& f, double t);

// Discrete L^p norm with rectangle-rule quadrature; p = infinity gives the
// max modulus. Throws config_error for p < 1.
double lp_norm(const Field& f, double p);
double l2_norm(const Field& f);

// Spectral derivative (multiplier ik; Nyquist mode zeroed).
Field spectral_derivative(const Field& f);

// Fraction of |f|^2 mass lying within the outermost 5% of the domain on
// each side.
double boundary_mass_fraction(const Field& f);

// Gaussian mollification at scale delta: spectral multiplier
// exp(-(k*delta)^2 / 2). Multiplier has modulus <= 1, so the L^2 norm never
// increases.
Field mollify(const Field& f, double delta);

struct DecaySample {
  double t = 0.0;
  double sup_norm = 0.0;
  bool boundary_warning = false;
};

// Samples sup_x |S(t)f| at the given times. Sets boundary_warning on a
// sample when the propagated field carries more than `boundary_threshold`
// of its mass near the domain edges (wraparound contamination).
std::vector<DecaySample> dispersive_decay_probe(const Field& f,
                                                const std::vector<double>& times,
                                                double boundary_threshold = 1e-8);

// Least-squares slope of log(sup_norm) against log(t) over the samples.
double fit_loglog_slope(const std::vector<DecaySample>& samples);

}  // namespace snls
