#pragma once

#include <functional>
#include <string>
#include <vector>

#include "snls/ensemble.hpp"

namespace snls {

// Shared specification for the ladder studies. `base` fixes grid, noise,
// dt and integrator; the studies override epsilon/m/initial data per column.
struct LadderSpec {
  PathConfig base;
  std::vector<double> epsilon_list = {0.8, 0.4, 0.2, 0.1, 0.05, 0.0};
  std::vector<double> m_list = {0.5, 1.0, 2.0, 4.0, 8.0,
                                std::numeric_limits<double>::infinity()};
  std::vector<double> kappa_list = {0.1, 0.03, 0.01};
  double m_mass = 1.0;   // initial-mass scale M
  double rho0 = 6.0;     // moment order for the L^rho_omega columns
  std::size_t n_paths = 200;
  std::uint64_t seed_base = 1;
  std::size_t workers = 0;
  std::string perturbation = "bump";  // bump | mollify (stability study)
  double h1_growth_factor = 10.0;     // regularity study bound

  void validate() const;
};

json to_json(const LadderSpec& s);
LadderSpec ladder_spec_from_json(const json& j);

// Successive coupled differences ||u_{m,eps_i} - u_{m,eps_{i+1}}|| in
// L^rho0_omega X(0,t_end) down the epsilon ladder, common seeds. Requires a
// finite truncation m in base.params.
struct EpsStudyResult {
  struct Row {
    double eps_hi = 0.0, eps_lo = 0.0;
    double value = 0.0, stderr_ = 0.0;
    std::size_t n_paths = 0;
  };
  std::vector<Row> rows;
  bool decreasing_within_2se = false;
  std::string csv;
};
EpsStudyResult eps_convergence_study(const LadderSpec& spec);

// ||u_m||_{L^rho0_omega X(0,t_end)} over the m ladder at eps = 0, with
// saturation counts; flat within 3 stderr beyond the first saturation-free m.
struct MStudyResult {
  struct Row {
    double m = 0.0;
    double value = 0.0, stderr_ = 0.0;
    std::size_t n_saturated = 0, n_paths = 0;
  };
  std::vector<Row> rows;
  int first_saturation_free = -1;  // index into rows, -1 when none
  bool flat_beyond_free = false;
  std::string csv;
};
MStudyResult m_uniformity_study(const LadderSpec& spec);

// delta(kappa) = ||u - v||_{L^rho0_omega X} for perturbed initial data at
// distance kappa, coupled seeds; monotone decreasing in kappa.
struct StabilityStudyResult {
  struct Row {
    double kappa = 0.0;
    double delta = 0.0, stderr_ = 0.0;
  };
  std::vector<Row> rows;
  bool monotone_within_2se = false;
  std::string csv;
};
StabilityStudyResult stability_study(const LadderSpec& spec);

// Max-over-time H^1 growth ratio for H^1 initial data across the epsilon
// ladder; bounded by h1_growth_factor.
struct RegularityStudyResult {
  struct Row {
    double epsilon = 0.0;
    double max_ratio = 0.0, mean_ratio = 0.0;
    std::size_t n_paths = 0;
  };
  std::vector<Row> rows;
  bool bounded = false;
  std::string csv;
};
RegularityStudyResult regularity_persistence_study(const LadderSpec& spec);

// Deterministic X norms across the coupling mu and data-mass grid, recorded
// as descriptive evidence (no assertion); includes focusing probes around
// the ground-state mass.
struct DodsonProbeResult {
  struct Row {
    double mu = 0.0, mass = 0.0;
    int sign = +1;
    double x2_norm = 0.0, x_norm = 0.0;
    bool saturated = false, growth_flag = false;
  };
  std::vector<Row> rows;
  std::string csv;
};
DodsonProbeResult dodson_bound_probe(const LadderSpec& spec);

// Writes <name>.csv plus manifest.json (kind "ladder-<name>") into dir.
void write_study_outputs(const std::string& dir, const std::string& name,
                         const LadderSpec& spec, const std::string& csv);

}  // namespace snls
