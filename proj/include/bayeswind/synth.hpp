#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bayeswind/data_ingest.hpp"
#include "bayeswind/numerics.hpp"

namespace bayeswind::synth {

struct ExtremeEvent {
  std::size_t t0 = 0;
  std::size_t duration = 0;
  std::vector<std::size_t> farms;
  double magnitude = 0.0;  // MW
};

struct SynthConfig {
  std::size_t n_farms = 6;
  std::size_t n_steps = 43164;
  int step_minutes = 15;
  std::string start = "2018-01-01T00:00:00Z";
  std::vector<double> capacity = std::vector<double>(6, 100.0);  // MW per farm
  numerics::Matrix target_corr = uniform_correlation(6, 0.75);
  double ar_coeff = 0.95;
  double noise_std = 0.3;
  double diurnal_amplitude = 0.3;
  std::uint64_t seed = 0;
  std::vector<ExtremeEvent> events;

  // n x n matrix with unit diagonal and `rho` elsewhere.
  static numerics::Matrix uniform_correlation(std::size_t n, double rho);

  // Throws ConfigInvalid, or NotPositiveDefinite for target_corr.
  void validate() const;
};

struct GeneratedData {
  std::vector<ingest::PowerSeries> series;
  std::vector<std::vector<double>> latent;  // [farm][t], before the output map
};

// Latent field z_t = phi z_{t-1} + noise_std * chol(target_corr) eps_t started
// from its stationary law, plus a shared sinusoidal daily cycle, mapped
// through capacity * sigmoid(.). Configured events are injected afterwards.
// All draws come from one stream, sequentially.
GeneratedData generate_with_latent(const SynthConfig& config);
std::vector<ingest::PowerSeries> generate(const SynthConfig& config);

// Adds a shared shock (triangular ramp plus ramp-scaled noise) to `farms`
// over [t0, t0 + duration), clipping to [0, capacity]. Throws OutOfRange.
std::vector<ingest::PowerSeries> inject_extreme_event(std::vector<ingest::PowerSeries> series,
                                                      const ExtremeEvent& event,
                                                      std::span<const double> capacity,
                                                      numerics::RngStream& rng);

}  // namespace bayeswind::synth
