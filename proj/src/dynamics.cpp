#include "snls/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "snls/errors.hpp"

namespace snls {

void ModelParams::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw config_error("params: epsilon must be in [0,1]");
  if (!(mu >= 0.0 && mu <= 1.0)) throw config_error("params: mu must be in [0,1]");
  if (!(m_trunc > 0.0)) throw config_error("params: m_trunc must be positive");
  if (sign != 1 && sign != -1) throw config_error("params: sign must be +1 or -1");
  if (!(trunc_offset >= 0.0)) throw config_error("params: trunc_offset must be >= 0");
}

double theta(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return 1.0;
  if (ax >= 2.0) return 0.0;
  const double a = std::exp(-1.0 / (2.0 - ax));  // psi(2-x)
  const double b = std::exp(-1.0 / (ax - 1.0));  // psi(x-1)
  return a / (a + b);
}

double theta_m(double x, double m) {
  if (std::isinf(m)) return 1.0;
  if (!(m > 0.0)) throw config_error("theta_m: m must be positive");
  return theta(x / m);
}

double nonlinear_coefficient(const ModelParams& p, double x2_fifth) {
  return static_cast<double>(p.sign) * p.mu * theta_m(p.trunc_offset + x2_fifth, p.m_trunc);
}

Field nonlinearity(const Field& f, double epsilon, int sign) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw config_error("nonlinearity: epsilon must be in [0,1]");
  Field out = f;
  const double half_power = 0.5 * (4.0 - epsilon);  // exponent of |u|^2
  for (auto& z : out.values) {
    const double a2 = std::norm(z);
    z *= (a2 > 0.0) ? static_cast<double>(sign) * std::pow(a2, half_power) : 0.0;
  }
  return out;
}

Field strat_split_step(const Field& f, double dt, const std::vector<double>* dw,
                       double x2_fifth_at_step_start, const ModelParams& p) {
  if (!(dt > 0.0)) throw config_error("strat_split_step: dt must be positive");
  if (dw && dw->size() != f.size())
    throw config_error("strat_split_step: increment length does not match grid");

  const double coef = nonlinear_coefficient(p, x2_fifth_at_step_start);
  const double half_power = 0.5 * (4.0 - p.epsilon);

  Field u = free_propagate(f, 0.5 * dt);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double a2 = std::norm(u.values[j]);
    const double amp_pow = (a2 > 0.0) ? std::pow(a2, half_power) : 0.0;
    const double phase = coef * amp_pow * dt + (dw ? (*dw)[j] : 0.0);
    u.values[j] *= std::polar(1.0, -phase);
  }
  return free_propagate(u, 0.5 * dt);
}

Field ito_em_step(const Field& f, double dt, const std::vector<double>& dw,
                  const std::vector<double>& f_phi, double x2_fifth_at_step_start,
                  const ModelParams& p) {
  if (!(dt > 0.0)) throw config_error("ito_em_step: dt must be positive");
  if (dw.size() != f.size() || f_phi.size() != f.size())
    throw config_error("ito_em_step: noise arrays do not match grid");

  const double coef = nonlinear_coefficient(p, x2_fifth_at_step_start);
  const double half_power = 0.5 * (4.0 - p.epsilon);
  const cplx I(0.0, 1.0);

  Field u = f;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const cplx z = f.values[j];
    const double a2 = std::norm(z);
    const double amp_pow = (a2 > 0.0) ? std::pow(a2, half_power) : 0.0;
    u.values[j] = z - I * (coef * amp_pow * dt) * z - I * z * dw[j] -
                  (0.5 * dt * f_phi[j]) * z;
  }
  return free_propagate(u, dt);
}

double trajectory_x_distance(const std::vector<Field>& u, const std::vector<Field>& v,
                             double dt) {
  if (u.size() != v.size() || u.empty())
    throw config_error("trajectory_x_distance: mismatched trajectories");
  double sup2 = 0.0, x2f = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    Field d = u[j];
    for (std::size_t i = 0; i < d.size(); ++i) d.values[i] -= v[j].values[i];
    sup2 = std::max(sup2, l2_norm(d));
    if (j + 1 < u.size()) x2f += std::pow(lp_norm(d, 10.0), 5.0) * dt;
  }
  return sup2 + std::pow(x2f, 0.2);
}

namespace {

// One Duhamel sweep: given the iterate v on the step grid, produce Gamma(v).
// Works in the interaction picture so each step adds one term to a running
// spectral sum instead of re-propagating the whole history.
std::vector<Field> duhamel_sweep(const std::vector<Field>& v, const Field& u_start,
                                 double dt, const NoisePath& noise, std::size_t step0,
                                 const ModelParams& p, double x2_fifth_at_a) {
  const std::size_t n_steps = v.size() - 1;
  const auto& k = u_start.grid->k;
  const cplx I(0.0, 1.0);

  SpectralField ua = to_spectrum(u_start);
  std::vector<cplx> partial(ua.coeff.size(), cplx(0.0));
  std::vector<Field> out;
  out.reserve(v.size());

  double x2f = x2_fifth_at_a;
  for (std::size_t n = 0; n <= n_steps; ++n) {
    const double tn = static_cast<double>(n) * dt;
    SpectralField s;
    s.grid = ua.grid;
    s.coeff.resize(ua.coeff.size());
    for (std::size_t j = 0; j < s.coeff.size(); ++j)
      s.coeff[j] = std::exp(cplx(0.0, -k[j] * k[j] * tn)) * (ua.coeff[j] - partial[j]);
    out.push_back(from_spectrum(s));

    if (n == n_steps) break;

    const double coef = nonlinear_coefficient(p, x2f);
    const Field& vn = v[n];
    Field term(vn.grid);
    const double half_power = 0.5 * (4.0 - p.epsilon);
    const bool has_noise = !noise.increments.empty();
    const std::vector<double>* dw =
        has_noise ? &noise.increments[step0 + n] : nullptr;
    for (std::size_t j = 0; j < term.size(); ++j) {
      const cplx z = vn.values[j];
      const double a2 = std::norm(z);
      const double amp_pow = (a2 > 0.0) ? std::pow(a2, half_power) : 0.0;
      cplx t = I * (coef * amp_pow * dt) * z;
      if (dw) t += I * z * (*dw)[j];
      if (noise.f_phi) t += (0.5 * dt * (*noise.f_phi)[j]) * z;
      term.values[j] = t;
    }
    SpectralField ts = to_spectrum(term);
    for (std::size_t j = 0; j < partial.size(); ++j)
      partial[j] += std::exp(cplx(0.0, k[j] * k[j] * tn)) * ts.coeff[j];

    x2f += std::pow(lp_norm(vn, 10.0), 5.0) * dt;
  }
  return out;
}

PicardResult picard_recurse(const Field& u_start, double a, double b,
                            const NoisePath& noise, std::size_t step0,
                            const ModelParams& p, double tol, double x2_fifth_at_a,
                            std::size_t max_iters, std::size_t depth) {
  const double dt = noise.dt;
  const auto n_steps = static_cast<std::size_t>(std::llround((b - a) / dt));
  if (n_steps == 0 || std::abs(a + static_cast<double>(n_steps) * dt - b) > 1e-9 * std::max(1.0, b))
    throw config_error("picard_solve: interval is not a whole number of noise steps");

  // Initial iterate: free evolution.
  std::vector<Field> v;
  v.reserve(n_steps + 1);
  for (std::size_t n = 0; n <= n_steps; ++n)
    v.push_back(free_propagate(u_start, static_cast<double>(n) * dt));

  PicardResult res;
  double prev_dist = -1.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    std::vector<Field> next =
        duhamel_sweep(v, u_start, dt, noise, step0, p, x2_fifth_at_a);
    const double dist = trajectory_x_distance(next, v, dt);
    v = std::move(next);
    ++res.iterations;
    if (prev_dist > 0.0 && dist > 0.0) res.contraction_estimate = dist / prev_dist;
    prev_dist = dist;
    if (dist < tol) {
      res.trajectory = std::move(v);
      return res;
    }
  }

  // Not contracting fast enough: bisect (mirrors the short-interval local
  // theory, where the contraction constant shrinks with the interval).
  if (depth == 0) throw run_error("picard_solve: interval too rough");
  const std::size_t half = n_steps / 2;
  if (half == 0) throw run_error("picard_solve: interval too rough");
  const double mid = a + static_cast<double>(half) * dt;

  PicardResult left = picard_recurse(u_start, a, mid, noise, step0, p, tol,
                                     x2_fifth_at_a, max_iters, depth - 1);
  double x2f_mid = x2_fifth_at_a;
  for (std::size_t n = 0; n < half; ++n)
    x2f_mid += std::pow(lp_norm(left.trajectory[n], 10.0), 5.0) * dt;

  PicardResult right =
      picard_recurse(left.trajectory.back(), mid, b, noise, step0 + half, p, tol,
                     x2f_mid, max_iters, depth - 1);

  PicardResult out;
  out.trajectory = std::move(left.trajectory);
  out.trajectory.pop_back();
  out.trajectory.insert(out.trajectory.end(), right.trajectory.begin(),
                        right.trajectory.end());
  out.iterations = res.iterations + left.iterations + right.iterations;
  out.bisections = 1 + left.bisections + right.bisections;
  out.contraction_estimate =
      std::max(left.contraction_estimate, right.contraction_estimate);
  return out;
}

}  // namespace

PicardResult picard_solve(const Field& u_start, double a, double b,
                          const NoisePath& noise, const ModelParams& p, double tol,
                          double x2_fifth_at_a, std::size_t max_iters,
                          std::size_t max_depth) {
  p.validate();
  if (!(b > a)) throw config_error("picard_solve: need b > a");
  if (!(noise.dt > 0.0)) throw config_error("picard_solve: noise.dt must be positive");
  if (!(tol > 0.0)) throw config_error("picard_solve: tol must be positive");
  return picard_recurse(u_start, a, b, noise, 0, p, tol, x2_fifth_at_a, max_iters,
                        max_depth);
}

}  // namespace snls
