#include "snls/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "snls/errors.hpp"
#include "snls/io.hpp"

namespace snls {

void LadderSpec::validate() const {
  base.validate();
  if (epsilon_list.size() < 2) throw config_error("ladder: need at least two epsilons");
  for (std::size_t i = 1; i < epsilon_list.size(); ++i)
    if (!(epsilon_list[i] < epsilon_list[i - 1]))
      throw config_error("ladder: epsilon_list must be strictly decreasing");
  if (epsilon_list.back() != 0.0)
    throw config_error("ladder: epsilon_list must end at 0");
  for (std::size_t i = 1; i < m_list.size(); ++i)
    if (!(m_list[i] > m_list[i - 1]))
      throw config_error("ladder: m_list must be strictly increasing");
  for (std::size_t i = 1; i < kappa_list.size(); ++i)
    if (!(kappa_list[i] < kappa_list[i - 1]))
      throw config_error("ladder: kappa_list must be strictly decreasing");
  if (!(m_mass > 0.0)) throw config_error("ladder: m_mass must be positive");
  if (!(rho0 >= 1.0)) throw config_error("ladder: rho0 must be >= 1");
  if (n_paths == 0) throw config_error("ladder: n_paths must be positive");
  if (perturbation != "bump" && perturbation != "mollify")
    throw config_error("ladder: perturbation must be 'bump' or 'mollify'");
  if (!(h1_growth_factor > 1.0))
    throw config_error("ladder: h1_growth_factor must exceed 1");
}

json to_json(const LadderSpec& s) {
  json j;
  j["base"] = to_json(s.base);
  json ms = json::array();
  for (double m : s.m_list) ms.push_back(std::isinf(m) ? json("inf") : json(m));
  j["epsilon_list"] = s.epsilon_list;
  j["m_list"] = std::move(ms);
  j["kappa_list"] = s.kappa_list;
  j["m_mass"] = s.m_mass;
  j["rho0"] = s.rho0;
  j["n_paths"] = s.n_paths;
  j["seed_base"] = s.seed_base;
  j["perturbation"] = s.perturbation;
  j["h1_growth_factor"] = s.h1_growth_factor;
  return j;
}

LadderSpec ladder_spec_from_json(const json& j) {
  LadderSpec s;
  if (j.contains("base")) s.base = path_config_from_json(j.at("base"));
  if (j.contains("epsilon_list")) s.epsilon_list = j.at("epsilon_list").get<std::vector<double>>();
  if (j.contains("m_list")) {
    s.m_list.clear();
    for (const auto& v : j.at("m_list"))
      s.m_list.push_back(v.is_string() ? std::numeric_limits<double>::infinity()
                                       : v.get<double>());
  }
  if (j.contains("kappa_list")) s.kappa_list = j.at("kappa_list").get<std::vector<double>>();
  if (j.contains("m_mass")) s.m_mass = j.at("m_mass").get<double>();
  if (j.contains("rho0")) s.rho0 = j.at("rho0").get<double>();
  if (j.contains("n_paths")) s.n_paths = j.at("n_paths").get<std::size_t>();
  if (j.contains("seed_base")) s.seed_base = j.at("seed_base").get<std::uint64_t>();
  if (j.contains("perturbation")) s.perturbation = j.at("perturbation").get<std::string>();
  if (j.contains("h1_growth_factor")) s.h1_growth_factor = j.at("h1_growth_factor").get<double>();
  s.validate();
  return s;
}

namespace {

// Deterministic noise collapses every path to the same trajectory; one path
// then carries the whole column.
std::size_t effective_paths(const LadderSpec& spec) {
  return (spec.base.noise.amplitude == 0.0) ? 1 : spec.n_paths;
}

std::string csv_header(const char* study, const LadderSpec& spec) {
  std::ostringstream out;
  out << "# study=" << study << '\n';
  out << "# n_paths=" << effective_paths(spec) << " seed_base=" << spec.seed_base
      << " rho0=" << fmt_double(spec.rho0) << " m_mass=" << fmt_double(spec.m_mass)
      << '\n';
  out << "# grid_n=" << spec.base.grid.n_points
      << " grid_length=" << fmt_double(spec.base.grid.length)
      << " dt=" << fmt_double(spec.base.dt)
      << " amplitude=" << fmt_double(spec.base.noise.amplitude) << '\n';
  return out.str();
}

PathConfig column_base(const LadderSpec& spec) {
  PathConfig pc = spec.base;
  pc.initial.mass = spec.m_mass;
  pc.keep_log = false;
  pc.save_final_field = false;
  return pc;
}

EnsembleSummary column_moment(std::vector<double> samples, double rho0) {
  return omega_moment(samples, rho0);
}

}  // namespace

EpsStudyResult eps_convergence_study(const LadderSpec& spec) {
  spec.validate();
  if (std::isinf(spec.base.params.m_trunc))
    throw config_error("eps study: requires a finite truncation m");

  const std::size_t n = effective_paths(spec);
  EpsStudyResult res;

  for (std::size_t p = 0; p + 1 < spec.epsilon_list.size(); ++p) {
    const double eps_hi = spec.epsilon_list[p];
    const double eps_lo = spec.epsilon_list[p + 1];
    std::vector<double> diffs(n, 0.0);
    parallel_for(n, spec.workers, [&](std::size_t i) {
      PathConfig pc = column_base(spec);
      pc.seed = spec.seed_base + i;
      ModelParams pa = pc.params;
      pa.epsilon = eps_hi;
      ModelParams pb = pc.params;
      pb.epsilon = eps_lo;
      PairResult pr = run_pair(pc, pa, pb);
      if (pr.a.aborted || pr.b.aborted) throw run_error("eps study: path aborted");
      diffs[i] = pr.diff_x_norm;
    });
    const EnsembleSummary s = column_moment(diffs, spec.rho0);
    res.rows.push_back({eps_hi, eps_lo, s.value, s.stderr_, n});
  }

  res.decreasing_within_2se = true;
  for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
    const double slack = 2.0 * std::hypot(res.rows[i].stderr_, res.rows[i + 1].stderr_);
    if (!(res.rows[i + 1].value < res.rows[i].value + slack))
      res.decreasing_within_2se = false;
  }

  std::ostringstream csv;
  csv << csv_header("eps_convergence", spec);
  csv << "# m_trunc=" << fmt_double(spec.base.params.m_trunc) << '\n';
  csv << "# decreasing_within_2se=" << (res.decreasing_within_2se ? 1 : 0) << '\n';
  csv << "eps_hi,eps_lo,diff_lrho_x,stderr,n_paths\n";
  for (const auto& r : res.rows)
    csv << fmt_double(r.eps_hi) << ',' << fmt_double(r.eps_lo) << ','
        << fmt_double(r.value) << ',' << fmt_double(r.stderr_) << ',' << r.n_paths
        << '\n';
  res.csv = csv.str();
  return res;
}

MStudyResult m_uniformity_study(const LadderSpec& spec) {
  spec.validate();
  const std::size_t n = effective_paths(spec);
  MStudyResult res;

  for (double m : spec.m_list) {
    std::vector<double> xnorms(n, 0.0);
    std::vector<char> saturated(n, 0);
    parallel_for(n, spec.workers, [&](std::size_t i) {
      PathConfig pc = column_base(spec);
      pc.seed = spec.seed_base + i;
      pc.params.epsilon = 0.0;
      pc.params.m_trunc = m;
      PathRecord rec = run_path(pc);
      if (rec.aborted) throw run_error("m study: path aborted");
      xnorms[i] = rec.final_x_norm;
      saturated[i] = (rec.first_theta_below_one_t != kNeverHit);
    });
    const EnsembleSummary s = column_moment(xnorms, spec.rho0);
    MStudyResult::Row row;
    row.m = m;
    row.value = s.value;
    row.stderr_ = s.stderr_;
    row.n_paths = n;
    for (char c : saturated) row.n_saturated += c;
    res.rows.push_back(row);
  }

  for (std::size_t i = 0; i < res.rows.size(); ++i)
    if (res.rows[i].n_saturated == 0) {
      res.first_saturation_free = static_cast<int>(i);
      break;
    }
  res.flat_beyond_free = (res.first_saturation_free >= 0);
  if (res.flat_beyond_free) {
    const auto i0 = static_cast<std::size_t>(res.first_saturation_free);
    for (std::size_t i = i0; i < res.rows.size(); ++i)
      for (std::size_t j = i + 1; j < res.rows.size(); ++j) {
        const double gap = std::abs(res.rows[i].value - res.rows[j].value);
        const double tol = 3.0 * std::hypot(res.rows[i].stderr_, res.rows[j].stderr_);
        if (gap > std::max(tol, 1e-12)) res.flat_beyond_free = false;
      }
  }

  std::ostringstream csv;
  csv << csv_header("m_uniformity", spec);
  csv << "# first_saturation_free_index=" << res.first_saturation_free << '\n';
  csv << "# flat_beyond_free=" << (res.flat_beyond_free ? 1 : 0) << '\n';
  csv << "m,xnorm_lrho,stderr,n_saturated,n_paths\n";
  for (const auto& r : res.rows)
    csv << fmt_double(r.m) << ',' << fmt_double(r.value) << ',' << fmt_double(r.stderr_)
        << ',' << r.n_saturated << ',' << r.n_paths << '\n';
  res.csv = csv.str();
  return res;
}

namespace {

Field perturb_initial(const LadderSpec& spec, const Field& u0, double kappa) {
  if (kappa == 0.0) return u0;
  if (spec.perturbation == "bump") {
    // Unit-mass smooth bump, narrower than the data, appended at distance
    // kappa in L^2.
    Field bump(u0.grid);
    const double w = 0.5 * spec.base.initial.width;
    for (std::size_t j = 0; j < bump.size(); ++j) {
      const double xi = (u0.grid->x[j] - spec.base.initial.center) / w;
      bump.values[j] = std::exp(-xi * xi);
    }
    const double s = kappa / l2_norm(bump);
    Field out = u0;
    for (std::size_t j = 0; j < out.size(); ++j) out.values[j] += s * bump.values[j];
    return out;
  }
  // Mollification: bisect the smoothing scale until the L^2 distance matches
  // kappa to 1%. The distance grows monotonically with delta.
  const auto distance = [&](double delta) {
    Field m = mollify(u0, delta);
    double acc = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j) acc += std::norm(m.values[j] - u0.values[j]);
    return std::sqrt(acc * u0.grid->dx);
  };
  double lo = 0.0, hi = spec.base.initial.width;
  while (distance(hi) < kappa) {
    hi *= 2.0;
    if (hi > 1e6) throw run_error("stability study: mollifier cannot reach kappa");
  }
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (distance(mid) < kappa) ? lo = mid : hi = mid;
  }
  return mollify(u0, 0.5 * (lo + hi));
}

}  // namespace

StabilityStudyResult stability_study(const LadderSpec& spec) {
  spec.validate();
  const std::size_t n = effective_paths(spec);
  StabilityStudyResult res;

  PathConfig proto = column_base(spec);
  auto grid = SpatialGrid::make(proto.grid.n_points, proto.grid.length);
  const Field u0 = proto.initial.build(grid);

  for (double kappa : spec.kappa_list) {
    const Field v0 = perturb_initial(spec, u0, kappa);
    std::vector<double> diffs(n, 0.0);
    parallel_for(n, spec.workers, [&](std::size_t i) {
      PathConfig pc = proto;
      pc.seed = spec.seed_base + i;
      PairResult pr = run_pair(pc, pc.params, pc.params, v0);
      if (pr.a.aborted || pr.b.aborted) throw run_error("stability study: path aborted");
      diffs[i] = pr.diff_x_norm;
    });
    const EnsembleSummary s = column_moment(diffs, spec.rho0);
    res.rows.push_back({kappa, s.value, s.stderr_});
  }

  res.monotone_within_2se = true;
  for (std::size_t i = 0; i + 1 < res.rows.size(); ++i) {
    const double slack = 2.0 * std::hypot(res.rows[i].stderr_, res.rows[i + 1].stderr_);
    if (!(res.rows[i + 1].delta < res.rows[i].delta + slack))
      res.monotone_within_2se = false;
  }

  std::ostringstream csv;
  csv << csv_header("stability", spec);
  csv << "# perturbation=" << spec.perturbation << '\n';
  csv << "# monotone_within_2se=" << (res.monotone_within_2se ? 1 : 0) << '\n';
  csv << "kappa,delta_lrho_x,stderr\n";
  for (const auto& r : res.rows)
    csv << fmt_double(r.kappa) << ',' << fmt_double(r.delta) << ','
        << fmt_double(r.stderr_) << '\n';
  res.csv = csv.str();
  return res;
}

RegularityStudyResult regularity_persistence_study(const LadderSpec& spec) {
  spec.validate();
  const std::size_t n = effective_paths(spec);
  RegularityStudyResult res;

  for (double eps : spec.epsilon_list) {
    std::vector<double> ratios(n, 0.0);
    parallel_for(n, spec.workers, [&](std::size_t i) {
      PathConfig pc = column_base(spec);
      pc.seed = spec.seed_base + i;
      pc.params.epsilon = eps;
      pc.track_h1 = true;
      PathRecord rec = run_path(pc);
      if (rec.aborted) throw run_error("regularity study: path aborted");
      ratios[i] = rec.max_h1 / rec.initial_h1;
    });
    RegularityStudyResult::Row row;
    row.epsilon = eps;
    row.n_paths = n;
    row.max_ratio = *std::max_element(ratios.begin(), ratios.end());
    double mean = 0.0;
    for (double r : ratios) mean += r;
    row.mean_ratio = mean / static_cast<double>(n);
    res.rows.push_back(row);
  }

  res.bounded = std::all_of(res.rows.begin(), res.rows.end(), [&](const auto& r) {
    return r.max_ratio <= spec.h1_growth_factor;
  });

  std::ostringstream csv;
  csv << csv_header("regularity_persistence", spec);
  csv << "# h1_growth_factor=" << fmt_double(spec.h1_growth_factor) << '\n';
  csv << "# bounded=" << (res.bounded ? 1 : 0) << '\n';
  csv << "epsilon,max_h1_ratio,mean_h1_ratio,n_paths\n";
  for (const auto& r : res.rows)
    csv << fmt_double(r.epsilon) << ',' << fmt_double(r.max_ratio) << ','
        << fmt_double(r.mean_ratio) << ',' << r.n_paths << '\n';
  res.csv = csv.str();
  return res;
}

DodsonProbeResult dodson_bound_probe(const LadderSpec& spec) {
  spec.validate();
  DodsonProbeResult res;

  const std::vector<double> mu_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> mass_grid = {0.5 * spec.m_mass, spec.m_mass,
                                         2.0 * spec.m_mass};

  struct Case {
    double mu, mass;
    int sign;
  };
  std::vector<Case> cases;
  for (double mu : mu_grid)
    for (double mass : mass_grid) cases.push_back({mu, mass, +1});
  // Focusing probes bracketing the ground-state mass; recorded, not asserted.
  const double qm = ground_state_mass();
  cases.push_back({1.0, 0.9 * qm, -1});
  cases.push_back({1.0, 1.1 * qm, -1});

  std::vector<DodsonProbeResult::Row> rows(cases.size());
  parallel_for(cases.size(), spec.workers, [&](std::size_t i) {
    PathConfig pc = column_base(spec);
    pc.noise.amplitude = 0.0;  // deterministic probe
    pc.seed = spec.seed_base;
    pc.params.epsilon = 0.0;
    pc.params.m_trunc = std::numeric_limits<double>::infinity();
    pc.params.mu = cases[i].mu;
    pc.params.sign = cases[i].sign;
    pc.initial.mass = cases[i].mass;
    PathRecord rec = run_path(pc);
    DodsonProbeResult::Row row;
    row.mu = cases[i].mu;
    row.mass = cases[i].mass;
    row.sign = cases[i].sign;
    row.x2_norm = std::pow(rec.final_x2_fifth, 0.2);
    row.x_norm = rec.final_x_norm;
    row.saturated = (rec.first_theta_below_one_t != kNeverHit);
    row.growth_flag = rec.aborted || rec.final_x2_fifth > 100.0;
    rows[i] = row;
  });
  res.rows = std::move(rows);

  std::ostringstream csv;
  csv << csv_header("dodson_probe", spec);
  csv << "mu,mass,sign,x2_norm,x_norm,saturated,growth_flag\n";
  for (const auto& r : res.rows)
    csv << fmt_double(r.mu) << ',' << fmt_double(r.mass) << ',' << r.sign << ','
        << fmt_double(r.x2_norm) << ',' << fmt_double(r.x_norm) << ','
        << (r.saturated ? 1 : 0) << ',' << (r.growth_flag ? 1 : 0) << '\n';
  res.csv = csv.str();
  return res;
}

void write_study_outputs(const std::string& dir, const std::string& name,
                         const LadderSpec& spec, const std::string& csv) {
  const std::string csv_name = name + ".csv";
  write_file_atomic(dir, csv_name, csv);
  json manifest = make_manifest("ladder-" + name, to_json(spec), {csv_name});
  write_file_atomic(dir, "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace snls
