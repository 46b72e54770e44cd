#pragma once

#include <optional>
#include <string>
#include <vector>

#include "snls/grid.hpp"

namespace snls {

struct StepLogRow {
  double t = 0.0;
  double l2 = 0.0;
  double l10 = 0.0;
  double x2_fifth = 0.0;
};

// Running Strichartz statistics along a trajectory:
//   sup_l2   = sup over recorded times of ||u(s)||_2          (the X1 value)
//   x2_fifth = sum ||u(s)||_10^5 ds, left-Riemann              (= ||u||_X2^5)
// The left-endpoint rule keeps the value adapted: the X2 integral over [0,t)
// is known before the step over [t, t+dt) is taken.
class StrichartzAccumulator {
public:
  StrichartzAccumulator() = default;
  explicit StrichartzAccumulator(const Field& initial, bool keep_log = false);

  // Folds in the field at the start of a step of length dt. The log row
  // carries the field's own time and the X2 integral through the end of the
  // step it opens.
  void update(const Field& f, double dt);

  // Folds the endpoint field into sup_l2 and logs it without advancing time
  // (the X2 integral is a left-endpoint rule; the last field contributes no
  // quadrature weight). Call once, at the end of a trajectory.
  void record_endpoint(const Field& f);

  double sup_l2() const { return sup_l2_; }
  double x2_fifth() const { return x2_fifth_; }
  double t_now() const { return t_now_; }

  double x2_norm() const;  // x2_fifth^(1/5)
  double x_norm() const;   // sup_l2 + x2_fifth^(1/5)

  const std::vector<StepLogRow>& per_step_log() const { return log_; }
  std::string per_step_log_csv() const;

private:
  double sup_l2_ = 0.0;
  double x2_fifth_ = 0.0;
  double t_now_ = 0.0;
  bool keep_log_ = false;
  std::vector<StepLogRow> log_;
};

// H^1 building block: ||f||_2 + ||d/dx f||_2 with the spectral derivative.
double h1_norm(const Field& f);

// L^rho_omega moment estimate of a nonnegative path statistic:
//   value = (mean of s^rho)^(1/rho), stderr by bootstrap.
struct EnsembleSummary {
  double rho = 1.0;
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n_paths = 0;
};

EnsembleSummary omega_moment(const std::vector<double>& samples, double rho,
                             std::size_t bootstrap_resamples = 200);

}  // namespace snls
