#include "snls/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "snls/errors.hpp"
#include "snls/io.hpp"
#include "snls/version.hpp"

namespace snls {

namespace fs = std::filesystem;

void EnsembleConfig::validate() const {
  base.validate();
  if (params_b) params_b->validate();
  if (n_paths == 0) throw config_error("ensemble: n_paths must be positive");
  if (rho_list.empty()) throw config_error("ensemble: rho_list must be nonempty");
  for (double rho : rho_list)
    if (!(rho >= 1.0)) throw config_error("ensemble: every rho must be >= 1");
  const bool needs_pair = (functional == "diff_x_norm");
  if (needs_pair && !params_b)
    throw config_error("ensemble: diff_x_norm requires params_b");
  if (functional != "x_norm" && functional != "x2_norm" && functional != "diff_x_norm" &&
      functional != "mass_drift" && functional != "stopping_time")
    throw config_error("ensemble: unknown functional '" + functional + "'");
}

double path_functional(const EnsembleConfig& cfg, const PathRecord& rec,
                       const std::optional<PairResult>& pair) {
  if (cfg.functional == "x_norm") return rec.final_x_norm;
  if (cfg.functional == "x2_norm") return std::pow(rec.final_x2_fifth, 0.2);
  if (cfg.functional == "mass_drift") return rec.mass_drift;
  if (cfg.functional == "stopping_time")
    return std::min(rec.stopping_time_m, cfg.base.t_end);
  if (cfg.functional == "diff_x_norm") {
    if (!pair) throw config_error("ensemble: diff functional without pair result");
    return pair->diff_x_norm;
  }
  throw config_error("ensemble: unknown functional '" + cfg.functional + "'");
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(n, 1));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto work = [&]() {
    try {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  };

  std::vector<std::thread> pool;
  for (std::size_t w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

EnsembleResult run_ensemble(const EnsembleConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.n_paths;
  std::vector<PathRecord> records(n);
  std::vector<double> values(n, 0.0);
  std::vector<char> usable(n, 0);

  parallel_for(n, cfg.workers, [&](std::size_t i) {
    PathConfig pc = cfg.base;
    pc.seed = cfg.seed_base + i;
    if (cfg.params_b) {
      PairResult pair = run_pair(pc, cfg.base.params, *cfg.params_b);
      const bool ok = !pair.a.aborted && !pair.b.aborted;
      if (ok) values[i] = path_functional(cfg, pair.a, pair);
      usable[i] = ok;
      records[i] = std::move(pair.a);
    } else {
      PathRecord rec = run_path(pc);
      const bool ok = !rec.aborted;
      if (ok) values[i] = path_functional(cfg, rec, std::nullopt);
      usable[i] = ok;
      records[i] = std::move(rec);
    }
  });

  EnsembleResult out;
  out.records = std::move(records);
  for (std::size_t i = 0; i < n; ++i) {
    if (usable[i])
      out.samples.push_back(values[i]);
    else
      ++out.n_aborted;
  }
  out.n_used = out.samples.size();

  if (out.n_used > 0)
    for (double rho : cfg.rho_list) out.summaries.push_back(omega_moment(out.samples, rho));

  if (out.n_aborted * 100 > n)
    throw run_error("ensemble: " + std::to_string(out.n_aborted) + " of " +
                    std::to_string(n) + " paths aborted (>1%)");
  return out;
}

std::vector<TailPoint> tail_estimate(const std::vector<PathRecord>& records,
                                     const std::vector<double>& k_list) {
  std::vector<double> samples;
  for (const auto& r : records)
    if (!r.aborted) samples.push_back(r.final_x2_fifth);
  if (samples.size() < 100)
    throw config_error("tail_estimate: need at least 100 usable records");

  const double n = static_cast<double>(samples.size());
  const double z = 1.959963984540054;  // 95% normal quantile
  std::vector<TailPoint> out;
  for (double k : k_list) {
    TailPoint p;
    p.k = k;
    for (double s : samples)
      if (s >= k) ++p.exceed_count;
    const double phat = static_cast<double>(p.exceed_count) / n;
    p.survival = phat;
    const double denom = 1.0 + z * z / n;
    const double center = (phat + z * z / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    // one-sided at the boundaries
    p.wilson_lo = (p.exceed_count == 0) ? 0.0 : std::max(0.0, center - half);
    p.wilson_hi = (p.exceed_count == samples.size()) ? 1.0 : std::min(1.0, center + half);
    out.push_back(p);
  }
  return out;
}

std::vector<double> default_k_grid(const std::vector<PathRecord>& records,
                                   std::size_t n_points) {
  std::vector<double> samples;
  for (const auto& r : records)
    if (!r.aborted && r.final_x2_fifth > 0.0) samples.push_back(r.final_x2_fifth);
  if (samples.size() < 2) throw config_error("default_k_grid: not enough samples");
  std::sort(samples.begin(), samples.end());
  const auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(lo);
    return (lo + 1 < samples.size()) ? (1.0 - w) * samples[lo] + w * samples[lo + 1]
                                     : samples[lo];
  };
  const double k_lo = quantile(0.30), k_hi = quantile(0.995);
  std::vector<double> grid;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n_points - 1);
    grid.push_back(k_lo * std::pow(k_hi / k_lo, f));
  }
  return grid;
}

// --- JSON -------------------------------------------------------------------

namespace {

json finite_or_inf(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

double from_finite_or_inf(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    throw config_error("config: expected number or \"inf\"");
  }
  return j.get<double>();
}

json opt_time(double v) {
  if (v == kNeverHit) return nullptr;
  return v;
}

double time_or_never(const json& j) {
  return j.is_null() ? kNeverHit : j.get<double>();
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const ModelParams& p) {
  return json{{"epsilon", p.epsilon},
              {"m_trunc", finite_or_inf(p.m_trunc)},
              {"mu", p.mu},
              {"sign", p.sign},
              {"trunc_offset", p.trunc_offset}};
}

ModelParams model_params_from_json(const json& j) {
  ModelParams p;
  get_if_present(j, "epsilon", p.epsilon);
  if (j.contains("m_trunc")) p.m_trunc = from_finite_or_inf(j.at("m_trunc"));
  get_if_present(j, "mu", p.mu);
  get_if_present(j, "sign", p.sign);
  get_if_present(j, "trunc_offset", p.trunc_offset);
  p.validate();
  return p;
}

json to_json(const PathConfig& c) {
  json j;
  j["grid"] = {{"n_points", c.grid.n_points}, {"length", c.grid.length}};
  j["noise"] = {{"rank", c.noise.rank},
                {"width", c.noise.width},
                {"amplitude", c.noise.amplitude},
                {"mode_files", c.noise.mode_files}};
  j["params"] = to_json(c.params);
  j["initial"] = {{"kind", c.initial.kind},     {"mass", c.initial.mass},
                  {"width", c.initial.width},   {"center", c.initial.center},
                  {"separation", c.initial.separation}, {"scale", c.initial.scale},
                  {"file", c.initial.file}};
  j["integrator"] = (c.integrator == Integrator::strat) ? "strat" : "ito";
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["seed"] = c.seed;
  j["output_stride"] = c.output_stride;
  j["keep_log"] = c.keep_log;
  j["save_final_field"] = c.save_final_field;
  j["save_norm_csv"] = c.save_norm_csv;
  j["track_h1"] = c.track_h1;
  j["boundary_threshold"] = c.boundary_threshold;
  return j;
}

PathConfig path_config_from_json(const json& j) {
  PathConfig c;
  if (j.contains("grid")) {
    get_if_present(j.at("grid"), "n_points", c.grid.n_points);
    get_if_present(j.at("grid"), "length", c.grid.length);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    get_if_present(n, "rank", c.noise.rank);
    get_if_present(n, "width", c.noise.width);
    get_if_present(n, "amplitude", c.noise.amplitude);
    get_if_present(n, "mode_files", c.noise.mode_files);
  }
  if (j.contains("params")) c.params = model_params_from_json(j.at("params"));
  if (j.contains("initial")) {
    const auto& i = j.at("initial");
    get_if_present(i, "kind", c.initial.kind);
    get_if_present(i, "mass", c.initial.mass);
    get_if_present(i, "width", c.initial.width);
    get_if_present(i, "center", c.initial.center);
    get_if_present(i, "separation", c.initial.separation);
    get_if_present(i, "scale", c.initial.scale);
    get_if_present(i, "file", c.initial.file);
  }
  if (j.contains("integrator")) {
    const auto s = j.at("integrator").get<std::string>();
    if (s == "strat")
      c.integrator = Integrator::strat;
    else if (s == "ito")
      c.integrator = Integrator::ito;
    else
      throw config_error("config: integrator must be 'strat' or 'ito'");
  }
  get_if_present(j, "dt", c.dt);
  get_if_present(j, "t_end", c.t_end);
  get_if_present(j, "seed", c.seed);
  get_if_present(j, "output_stride", c.output_stride);
  get_if_present(j, "keep_log", c.keep_log);
  get_if_present(j, "save_final_field", c.save_final_field);
  get_if_present(j, "save_norm_csv", c.save_norm_csv);
  get_if_present(j, "track_h1", c.track_h1);
  get_if_present(j, "boundary_threshold", c.boundary_threshold);
  c.validate();
  return c;
}

json to_json(const EnsembleConfig& c) {
  json j;
  j["base"] = to_json(c.base);
  j["n_paths"] = c.n_paths;
  j["seed_base"] = c.seed_base;
  j["rho_list"] = c.rho_list;
  j["functional"] = c.functional;
  if (c.params_b) j["params_b"] = to_json(*c.params_b);
  return j;
}

EnsembleConfig ensemble_config_from_json(const json& j) {
  EnsembleConfig c;
  if (j.contains("base")) c.base = path_config_from_json(j.at("base"));
  get_if_present(j, "n_paths", c.n_paths);
  get_if_present(j, "seed_base", c.seed_base);
  get_if_present(j, "rho_list", c.rho_list);
  get_if_present(j, "functional", c.functional);
  if (j.contains("params_b")) c.params_b = model_params_from_json(j.at("params_b"));
  c.validate();
  return c;
}

json record_to_json(const PathRecord& r, bool include_field) {
  json j;
  j["seed"] = r.seed;
  j["initial_l2"] = r.initial_l2;
  j["final_sup_l2"] = r.final_sup_l2;
  j["final_x2_fifth"] = r.final_x2_fifth;
  j["final_x_norm"] = r.final_x_norm;
  j["final_l10"] = r.final_l10;
  j["mass_drift"] = r.mass_drift;
  j["boundary_mass"] = r.boundary_mass;
  j["stopping_time_m"] = opt_time(r.stopping_time_m);
  j["stopping_time_m_eps"] = opt_time(r.stopping_time_m_eps);
  j["first_theta_below_one_t"] = opt_time(r.first_theta_below_one_t);
  j["first_theta_zero_t"] = opt_time(r.first_theta_zero_t);
  j["aborted"] = r.aborted;
  j["abort_step"] = r.abort_step;
  j["boundary_warning"] = r.boundary_warning;
  j["mass_flagged"] = r.mass_flagged;
  j["focusing_mass_warning"] = r.focusing_mass_warning;
  j["initial_h1"] = r.initial_h1;
  j["max_h1"] = r.max_h1;
  json series = json::array();
  for (const auto& row : r.norm_series)
    series.push_back(json::array({row.t, row.l2, row.l10, row.x2_fifth}));
  j["norm_series"] = std::move(series);
  if (include_field && r.final_field.grid) {
    json re = json::array(), im = json::array();
    for (const auto& z : r.final_field.values) {
      re.push_back(z.real());
      im.push_back(z.imag());
    }
    j["final_field"] = {{"n_points", r.final_field.grid->n},
                        {"length", r.final_field.grid->length},
                        {"re", std::move(re)},
                        {"im", std::move(im)}};
  }
  return j;
}

PathRecord record_from_json(const json& j) {
  PathRecord r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.initial_l2 = j.at("initial_l2").get<double>();
  r.final_sup_l2 = j.at("final_sup_l2").get<double>();
  r.final_x2_fifth = j.at("final_x2_fifth").get<double>();
  r.final_x_norm = j.at("final_x_norm").get<double>();
  r.final_l10 = j.at("final_l10").get<double>();
  r.mass_drift = j.at("mass_drift").get<double>();
  r.boundary_mass = j.at("boundary_mass").get<double>();
  r.stopping_time_m = time_or_never(j.at("stopping_time_m"));
  r.stopping_time_m_eps = time_or_never(j.at("stopping_time_m_eps"));
  r.first_theta_below_one_t = time_or_never(j.at("first_theta_below_one_t"));
  r.first_theta_zero_t = time_or_never(j.at("first_theta_zero_t"));
  r.aborted = j.at("aborted").get<bool>();
  r.abort_step = j.at("abort_step").get<std::size_t>();
  r.boundary_warning = j.at("boundary_warning").get<bool>();
  r.mass_flagged = j.at("mass_flagged").get<bool>();
  r.focusing_mass_warning = j.at("focusing_mass_warning").get<bool>();
  r.initial_h1 = j.at("initial_h1").get<double>();
  r.max_h1 = j.at("max_h1").get<double>();
  for (const auto& row : j.at("norm_series"))
    r.norm_series.push_back({row.at(0).get<double>(), row.at(1).get<double>(),
                             row.at(2).get<double>(), row.at(3).get<double>()});
  if (j.contains("final_field")) {
    const auto& f = j.at("final_field");
    auto grid = SpatialGrid::make(f.at("n_points").get<std::size_t>(),
                                  f.at("length").get<double>());
    Field field(grid);
    const auto& re = f.at("re");
    const auto& im = f.at("im");
    for (std::size_t i = 0; i < grid->n; ++i)
      field.values[i] = cplx(re.at(i).get<double>(), im.at(i).get<double>());
    r.final_field = std::move(field);
  }
  return r;
}

bool records_equal(const PathRecord& a, const PathRecord& b, bool compare_fields) {
  return record_to_json(a, compare_fields) == record_to_json(b, compare_fields);
}

std::string summaries_csv(const std::string& functional,
                          const std::vector<EnsembleSummary>& summaries) {
  std::ostringstream out;
  out << "functional,rho,value,stderr,n_paths\n";
  for (const auto& s : summaries)
    out << functional << ',' << fmt_double(s.rho) << ',' << fmt_double(s.value) << ','
        << fmt_double(s.stderr_) << ',' << s.n_paths << '\n';
  return out.str();
}

// --- Persistence ------------------------------------------------------------

void write_file_atomic(const std::string& dir, const std::string& name,
                       const std::string& content) {
  fs::create_directories(dir);
  const fs::path target = fs::path(dir) / name;
  const fs::path tmp = fs::path(dir) / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw run_error("persist: cannot open " + tmp.string());
    out << content;
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw run_error("persist: write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw run_error("persist: rename failed for " + target.string());
  }
}

json make_manifest(const std::string& kind, const json& config,
                   const std::vector<std::string>& outputs) {
  json m;
  m["tool"] = "snls";
  m["version"] = kVersion;
  const auto now = std::chrono::system_clock::now();
  m["created_unix"] = std::chrono::duration_cast<std::chrono::seconds>(
                          now.time_since_epoch())
                          .count();
  m["kind"] = kind;
  m["config"] = config;
  m["outputs"] = outputs;
  return m;
}

json persist(const EnsembleConfig& cfg, const EnsembleResult& result,
             const std::string& dir) {
  std::vector<std::string> outputs;
  if (!result.records.empty()) {
    std::ostringstream records;
    for (const auto& r : result.records)
      records << record_to_json(r, cfg.base.save_final_field).dump() << '\n';
    write_file_atomic(dir, "records.jsonl", records.str());
    write_file_atomic(dir, "summaries.csv",
                      summaries_csv(cfg.functional, result.summaries));
    outputs = {"records.jsonl", "summaries.csv"};
    if (cfg.base.save_norm_csv) {
      for (const auto& r : result.records) {
        std::ostringstream csv;
        csv << "t,l2,l10,x2_fifth\n";
        for (const auto& row : r.norm_series)
          csv << fmt_double(row.t) << ',' << fmt_double(row.l2) << ','
              << fmt_double(row.l10) << ',' << fmt_double(row.x2_fifth) << '\n';
        const std::string name = "norms_" + std::to_string(r.seed) + ".csv";
        write_file_atomic(dir, name, csv.str());
        outputs.push_back(name);
      }
    }
  }

  json manifest = make_manifest("simulate", to_json(cfg), outputs);
  manifest["n_paths"] = cfg.n_paths;
  manifest["n_used"] = result.n_used;
  manifest["n_aborted"] = result.n_aborted;
  write_file_atomic(dir, "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

json load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("replay: cannot open manifest " + path);
  json j;
  in >> j;
  return j;
}

}  // namespace snls
