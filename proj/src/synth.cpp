#include "bayeswind/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bayeswind/error.hpp"

namespace bayeswind::synth {

numerics::Matrix SynthConfig::uniform_correlation(std::size_t n, double rho) {
  numerics::Matrix m(n, n, rho);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void SynthConfig::validate() const {
  auto invalid = [](const std::string& what) { throw Error(ErrorCode::kConfigInvalid, what); };
  if (n_farms == 0) invalid("n_farms must be positive");
  if (n_steps < 2) invalid("n_steps must be at least 2");
  if (step_minutes <= 0) invalid("step_minutes must be positive");
  if (capacity.size() != n_farms) invalid("capacity needs one entry per farm");
  for (double c : capacity) {
    if (!(c > 0.0)) invalid("capacity must be positive");
  }
  if (!(ar_coeff > 0.0 && ar_coeff < 1.0)) invalid("ar_coeff must lie in (0, 1)");
  if (!(noise_std > 0.0)) invalid("noise_std must be positive");
  if (target_corr.rows() != n_farms || target_corr.cols() != n_farms) {
    invalid("target_corr must be n_farms x n_farms");
  }
  for (std::size_t i = 0; i < n_farms; ++i) {
    if (target_corr(i, i) != 1.0) invalid("target_corr needs a unit diagonal");
    for (std::size_t j = 0; j < i; ++j) {
      if (target_corr(i, j) != target_corr(j, i)) invalid("target_corr must be symmetric");
    }
  }
  numerics::cholesky(target_corr);
  ingest::parse_iso8601(start);
}

GeneratedData generate_with_latent(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.n_farms;
  const std::size_t steps = config.n_steps;
  const numerics::Matrix chol = numerics::cholesky(config.target_corr);
  numerics::RngStream rng(config.seed, 0);

  GeneratedData out;
  out.latent.assign(n, std::vector<double>(steps));
  const double period = 1440.0 / static_cast<double>(config.step_minutes);
  const double stationary_scale = 1.0 / std::sqrt(1.0 - config.ar_coeff * config.ar_coeff);

  std::vector<double> z(n, 0.0);
  std::vector<double> eps(n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (auto& e : eps) e = rng.normal();
    const double keep = t == 0 ? 0.0 : config.ar_coeff;
    const double scale = t == 0 ? config.noise_std * stationary_scale : config.noise_std;
    for (std::size_t i = 0; i < n; ++i) {
      double shock = 0.0;
      for (std::size_t k = 0; k <= i; ++k) shock += chol(i, k) * eps[k];
      z[i] = keep * z[i] + scale * shock;
      out.latent[i][t] = z[i];
    }
  }

  const ingest::Timestamp start = ingest::parse_iso8601(config.start);
  out.series.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ingest::PowerSeries& s = out.series[i];
    s.farm_id = static_cast<int>(i);
    s.start = start;
    s.step_seconds = static_cast<std::int64_t>(config.step_minutes) * 60;
    s.values.resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const double daily = config.diurnal_amplitude *
                           std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
      s.values[t] = config.capacity[i] * numerics::sigmoid(out.latent[i][t] + daily);
    }
  }
  for (const auto& ev : config.events) {
    out.series = inject_extreme_event(std::move(out.series), ev, config.capacity, rng);
  }
  return out;
}

std::vector<ingest::PowerSeries> generate(const SynthConfig& config) {
  return generate_with_latent(config).series;
}

std::vector<ingest::PowerSeries> inject_extreme_event(std::vector<ingest::PowerSeries> series,
                                                      const ExtremeEvent& event,
                                                      std::span<const double> capacity,
                                                      numerics::RngStream& rng) {
  if (capacity.size() != series.size()) {
    throw Error(ErrorCode::kOutOfRange, "capacity needs one entry per farm");
  }
  const std::size_t len = series.empty() ? 0 : series.front().size();
  if (event.duration == 0 || event.t0 + event.duration > len) {
    throw Error(ErrorCode::kOutOfRange, "event [" + std::to_string(event.t0) + ", " +
                                            std::to_string(event.t0 + event.duration) +
                                            ") outside series of length " + std::to_string(len));
  }
  for (std::size_t f : event.farms) {
    if (f >= series.size() || series[f].size() != len) {
      throw Error(ErrorCode::kOutOfRange, "event farm " + std::to_string(f));
    }
  }
  const double d = static_cast<double>(event.duration);
  for (std::size_t k = 0; k < event.duration; ++k) {
    // Triangle envelope peaking mid-event.
    const double envelope = 1.0 - std::fabs(2.0 * (static_cast<double>(k) + 0.5) / d - 1.0);
    const double noise = rng.normal();
    const double shock = event.magnitude * envelope * (0.5 + noise);
    if (shock == 0.0) continue;
    const std::size_t t = event.t0 + k;
    for (std::size_t f : event.farms) {
      series[f].values[t] = std::clamp(series[f].values[t] + shock, 0.0, capacity[f]);
    }
  }
  return series;
}

}  // namespace bayeswind::synth
