#include "snls/norms.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "snls/errors.hpp"
#include "snls/io.hpp"
#include "snls/rng.hpp"

namespace snls {

StrichartzAccumulator::StrichartzAccumulator(const Field& initial, bool keep_log)
    : keep_log_(keep_log) {
  sup_l2_ = l2_norm(initial);
}

void StrichartzAccumulator::update(const Field& f, double dt) {
  if (!(dt > 0.0)) throw config_error("StrichartzAccumulator::update: dt must be positive");
  const double l2 = l2_norm(f);
  const double l10 = lp_norm(f, 10.0);
  if (!std::isfinite(l2) || !std::isfinite(l10))
    throw run_error("StrichartzAccumulator::update: nonfinite norm");
  sup_l2_ = std::max(sup_l2_, l2);
  x2_fifth_ += std::pow(l10, 5.0) * dt;
  if (keep_log_) log_.push_back({t_now_, l2, l10, x2_fifth_});
  t_now_ += dt;
}

void StrichartzAccumulator::record_endpoint(const Field& f) {
  const double l2 = l2_norm(f);
  const double l10 = lp_norm(f, 10.0);
  if (!std::isfinite(l2) || !std::isfinite(l10))
    throw run_error("StrichartzAccumulator::record_endpoint: nonfinite norm");
  sup_l2_ = std::max(sup_l2_, l2);
  if (keep_log_) log_.push_back({t_now_, l2, l10, x2_fifth_});
}

double StrichartzAccumulator::x2_norm() const { return std::pow(x2_fifth_, 0.2); }

double StrichartzAccumulator::x_norm() const { return sup_l2_ + x2_norm(); }

std::string StrichartzAccumulator::per_step_log_csv() const {
  std::ostringstream out;
  out << "t,l2,l10,x2_fifth\n";
  for (const auto& row : log_)
    out << fmt_double(row.t) << ',' << fmt_double(row.l2) << ',' << fmt_double(row.l10)
        << ',' << fmt_double(row.x2_fifth) << '\n';
  return out.str();
}

double h1_norm(const Field& f) { return l2_norm(f) + l2_norm(spectral_derivative(f)); }

EnsembleSummary omega_moment(const std::vector<double>& samples, double rho,
                             std::size_t bootstrap_resamples) {
  if (samples.empty()) throw config_error("omega_moment: empty sample set");
  if (!(rho >= 1.0)) throw config_error("omega_moment: rho must be >= 1");

  const auto moment = [rho](const std::vector<double>& s) {
    double acc = 0.0;
    for (double v : s) acc += std::pow(v, rho);
    return std::pow(acc / static_cast<double>(s.size()), 1.0 / rho);
  };

  EnsembleSummary out;
  out.rho = rho;
  out.n_paths = samples.size();
  out.value = moment(samples);

  if (samples.size() >= 2 && bootstrap_resamples > 0) {
    // Deterministic bootstrap: seeded from (n, rho) so summaries replay
    // bit-exactly.
    std::uint64_t rho_bits;
    static_assert(sizeof rho_bits == sizeof rho);
    std::memcpy(&rho_bits, &rho, sizeof rho_bits);
    RngStream rng(0x626F6F74ull ^ rho_bits, samples.size());
    double mean = 0.0, m2 = 0.0;
    std::vector<double> resample(samples.size());
    for (std::size_t b = 0; b < bootstrap_resamples; ++b) {
      for (auto& slot : resample)
        slot = samples[rng.next_u64() % samples.size()];
      const double v = moment(resample);
      const double d = v - mean;
      mean += d / static_cast<double>(b + 1);
      m2 += d * (v - mean);
    }
    out.stderr_ = std::sqrt(m2 / static_cast<double>(bootstrap_resamples - 1));
  }
  return out;
}

}  // namespace snls
