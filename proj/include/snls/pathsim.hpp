#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "snls/dynamics.hpp"
#include "snls/grid.hpp"
#include "snls/noise.hpp"
#include "snls/norms.hpp"

namespace snls {

struct GridSpec {
  std::size_t n_points = 1024;
  double length = 50.0;
};

struct NoiseSpec {
  std::size_t rank = 4;
  double width = 0.0;  // 0 means length/30
  double amplitude = 0.5;
  std::vector<std::string> mode_files;  // when nonempty, replaces the Hermite modes

  CovarianceOperator build(const GridPtr& grid) const;
};

// gaussian:  mass-normalized exp(-((x-center)/width)^2)
// soliton:   scale * 3^(1/4) sech^(1/2)(2(x-center))
// two_bump:  mass-normalized pair of gaussians at center -/+ separation/2
// file:      columns x re [im], linearly interpolated
struct InitialDataSpec {
  std::string kind = "gaussian";
  double mass = 1.0;
  double width = 1.0;
  double center = 0.0;
  double separation = 10.0;
  double scale = 1.0;
  std::string file;

  Field build(const GridPtr& grid) const;
};

enum class Integrator { strat, ito };

struct PathConfig {
  GridSpec grid;
  NoiseSpec noise;
  ModelParams params;
  InitialDataSpec initial;
  Integrator integrator = Integrator::strat;
  double dt = 1e-3;
  double t_end = 1.0;  // the unit interval is the basic run; longer runs restart it
  std::uint64_t seed = 1;
  std::size_t output_stride = 10;
  bool keep_log = true;
  bool save_final_field = false;  // controls serialization, not the run
  bool save_norm_csv = false;     // persist writes norms_<seed>.csv per path
  bool track_h1 = false;          // sample the H^1 norm at output steps
  double boundary_threshold = 1e-8;

  std::size_t n_steps() const;
  void validate() const;
};

constexpr double kNeverHit = std::numeric_limits<double>::infinity();

struct PathRecord {
  std::uint64_t seed = 0;
  double initial_l2 = 0.0;
  double final_sup_l2 = 0.0;
  double final_x2_fifth = 0.0;
  double final_x_norm = 0.0;
  double final_l10 = 0.0;
  double mass_drift = 0.0;      // max relative L^2 deviation over the run
  double boundary_mass = 0.0;   // max edge-mass fraction over output steps
  double stopping_time_m = kNeverHit;      // first t with x2_fifth >= m-1
  double stopping_time_m_eps = kNeverHit;  // first t with x2_fifth >= m
  double first_theta_below_one_t = kNeverHit;  // cutoff left its plateau
  double first_theta_zero_t = kNeverHit;       // nonlinearity fully off
  bool aborted = false;
  std::size_t abort_step = 0;
  bool boundary_warning = false;
  bool mass_flagged = false;            // Stratonovich drift above 1e-10
  bool focusing_mass_warning = false;   // focusing with mass >= ||Q||_2
  double initial_h1 = 0.0;              // only when track_h1
  double max_h1 = 0.0;
  std::vector<StepLogRow> norm_series;  // thinned by output_stride
  Field final_field;
};

// L^2 mass of the ground state Q(x) = 3^(1/4) sech^(1/2)(2x).
double ground_state_mass();

PathRecord run_path(const PathConfig& cfg);

struct PairDiffRow {
  double t = 0.0;
  double sup_l2_diff = 0.0;   // X1 norm of the difference over [0,t]
  double x2_fifth_diff = 0.0; // X2^5 of the difference over [0,t]
};

struct PairResult {
  PathRecord a;
  PathRecord b;
  std::vector<PairDiffRow> diff_series;
  double diff_x_norm = 0.0;  // X(0,t_end) norm of the coupled difference
};

// Coupled evolution: both parameter sets consume identical increments at
// identical step indices (same seed, same grid and noise). The second
// overload starts leg b from its own initial data (stability experiments).
PairResult run_pair(const PathConfig& cfg, const ModelParams& params_a,
                    const ModelParams& params_b);
PairResult run_pair(const PathConfig& cfg, const ModelParams& params_a,
                    const ModelParams& params_b, const Field& initial_b);

// Pre-sampled increments for picard_solve, drawn exactly as run_path draws
// them (stream per step index).
NoisePath frozen_noise_path(const CovarianceOperator& op, std::uint64_t seed, double dt,
                            std::size_t n_steps, const std::vector<double>* f_phi);

}  // namespace snls
