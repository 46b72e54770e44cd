#pragma once

#include <string>
#include <vector>

#include "snls/grid.hpp"
#include "snls/rng.hpp"

namespace snls {

// Finite-rank covariance operator: the noise is W(t,x) = sum_k B_k(t) phi_k(x)
// with independent Brownian motions B_k and smooth real mode profiles phi_k.
// Trace-class by construction (finitely many smooth, localized modes).
struct CovarianceOperator {
  GridPtr grid;
  std::vector<std::vector<double>> modes;  // phi_k sampled on the grid
  double amplitude = 1.0;                  // overall scale applied to every mode

  std::size_t rank() const { return modes.size(); }

  // Hermite functions h_k(x/width) exp(-(x/width)^2/2), L^2-normalized then
  // scaled by `amplitude`. Localized well inside the domain for
  // width <~ length/25.
  static CovarianceOperator hermite(GridPtr grid, std::size_t rank, double width,
                                    double amplitude);

  // Single mode read from a two-column (x, value) text file, linearly
  // interpolated onto the grid; additional calls append modes.
  static CovarianceOperator from_file(GridPtr grid, const std::string& path,
                                      double amplitude);
  void add_mode_from_file(const std::string& path);
};

// One Wiener increment over a step of length dt:
//   delta_w(x) = sum_k dB_k phi_k(x),  dB_k ~ N(0, dt) independent.
// `gaussians` stores dB_k / sqrt(dt); rebuilding from them is bit-exact.
struct WienerIncrement {
  std::vector<double> delta_w;
  double dt = 0.0;
  std::vector<double> gaussians;
};

WienerIncrement sample_increment(const CovarianceOperator& op, double dt, RngStream& rng);

// Rebuilds delta_w from stored gaussians (same summation order as sampling).
std::vector<double> rebuild_increment(const CovarianceOperator& op,
                                      const WienerIncrement& w);

// Ito-Stratonovich correction F(x) = sum_k phi_k(x)^2; real, nonnegative,
// invariant under orthonormal re-mixing of the mode list.
std::vector<double> ito_correction(const CovarianceOperator& op);

struct NoiseRegularityReport {
  std::vector<double> mode_l2;       // ||phi_k||_2
  std::vector<double> mode_w1p_inf;  // ||phi_k||_inf + ||phi_k'||_inf
  std::vector<double> mode_w1p_2;    // ||phi_k||_2 + ||phi_k'||_2
  double f_linf = 0.0;               // ||F||_inf
  double f_l52 = 0.0;                // ||F||_{L^{5/2}}
};

NoiseRegularityReport regularity_report(const CovarianceOperator& op);

}  // namespace snls
