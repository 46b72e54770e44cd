#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "snls/norms.hpp"
#include "snls/pathsim.hpp"

namespace snls {

using json = nlohmann::ordered_json;

// Named path statistic fed into the L^rho_omega moments.
//   x_norm        final X(0,t_end) norm
//   x2_norm       final X2(0,t_end) norm
//   diff_x_norm   X norm of the coupled difference (needs params_b)
//   mass_drift    max relative L^2 deviation
//   stopping_time t_end ^ tau_m (the capped stopping time)
struct EnsembleConfig {
  PathConfig base;
  std::size_t n_paths = 2;
  std::uint64_t seed_base = 1;
  std::vector<double> rho_list = {1.0, 2.0, 6.0};
  std::string functional = "x_norm";
  std::optional<ModelParams> params_b;  // enables coupled-pair functionals
  std::size_t workers = 0;              // 0 = hardware concurrency

  void validate() const;
};

struct EnsembleResult {
  std::vector<PathRecord> records;  // seed-sorted, aborted ones included
  std::vector<double> samples;      // functional values of non-aborted paths
  std::vector<EnsembleSummary> summaries;  // one per rho
  std::size_t n_aborted = 0;
  std::size_t n_used = 0;
};

// Runs n_paths independent trajectories with seeds seed_base .. seed_base +
// n_paths - 1 over a worker pool. Results are identical for any worker
// count; throws run_error if more than 1% of paths abort.
EnsembleResult run_ensemble(const EnsembleConfig& cfg);

// Work-stealing map over [0, n); fn(i) must only write to slot i of its
// outputs. workers = 0 uses hardware concurrency. Exceptions from workers
// are rethrown after the pool joins.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn);

double path_functional(const EnsembleConfig& cfg, const PathRecord& rec,
                       const std::optional<PairResult>& pair);

struct TailPoint {
  double k = 0.0;
  double survival = 0.0;  // empirical P(x2_fifth(t_end) >= k)
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  std::size_t exceed_count = 0;
};

// Empirical survival function of x2_fifth(t_end) with Wilson 95% intervals.
// Needs at least 100 usable records.
std::vector<TailPoint> tail_estimate(const std::vector<PathRecord>& records,
                                     const std::vector<double>& k_list);

// Log-spaced grid between the 30% and 99.5% sample quantiles.
std::vector<double> default_k_grid(const std::vector<PathRecord>& records,
                                   std::size_t n_points = 9);

// --- JSON (all doubles emitted in shortest round-trip form) ---------------

json to_json(const ModelParams& p);
ModelParams model_params_from_json(const json& j);
json to_json(const PathConfig& c);
PathConfig path_config_from_json(const json& j);
json to_json(const EnsembleConfig& c);
EnsembleConfig ensemble_config_from_json(const json& j);
json record_to_json(const PathRecord& r, bool include_field);
PathRecord record_from_json(const json& j);
bool records_equal(const PathRecord& a, const PathRecord& b, bool compare_fields);

std::string summaries_csv(const std::string& functional,
                          const std::vector<EnsembleSummary>& summaries);

// --- Persistence -----------------------------------------------------------

// Writes records.jsonl, summaries.csv and manifest.json into `dir`
// (created if missing). Files are written to temporaries and renamed;
// partially written temporaries are removed on failure. Returns the
// manifest.
json persist(const EnsembleConfig& cfg, const EnsembleResult& result,
             const std::string& dir);

// Generic manifest helpers shared with the study drivers.
json make_manifest(const std::string& kind, const json& config,
                   const std::vector<std::string>& outputs);
void write_file_atomic(const std::string& dir, const std::string& name,
                       const std::string& content);
json load_manifest(const std::string& path);

}  // namespace snls
