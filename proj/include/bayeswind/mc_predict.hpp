#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bayeswind/bbb.hpp"
#include "bayeswind/data_ingest.hpp"

namespace bayeswind::mc {

enum class Level { k90 = 0, k95 = 1, k99 = 2 };
inline constexpr std::array<Level, 3> kLevels = {Level::k90, Level::k95, Level::k99};
// Gaussian multipliers for the 90/95/99% intervals, as rounded in the method.
inline constexpr std::array<double, 3> kZ = {1.64, 1.96, 2.56};
inline constexpr std::array<int, 3> kLevelPercent = {90, 95, 99};

inline double z_value(Level l) { return kZ[static_cast<std::size_t>(l)]; }

struct PredictionSamples {
  std::size_t window_index = 0;
  std::vector<double> samples;  // MW
};

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
  double width = 0.0;
};

struct IntervalEstimate {
  double mu_hat = 0.0;
  double sigma_hat = 0.0;
  std::array<Bounds, 3> bounds{};

  const Bounds& at(Level l) const { return bounds[static_cast<std::size_t>(l)]; }
  double width(Level l) const { return at(l).width; }
};

// Interval mu_hat +- z * sigma; width stored as 2 * z * sigma.
IntervalEstimate interval_from_moments(double mu_hat, double sigma_hat);

// n_samples weight draws pushed through the network; outputs denormalized to
// MW with `norm`. The window is in normalized units. Throws TooFewSamples.
PredictionSamples sample_predictions(const bbb::VariationalParams& vp,
                                     const ingest::NormalizationSpec& norm,
                                     std::span<const double> window, std::size_t n_samples,
                                     numerics::RngStream& rng);

// Sample mean and population (1/n) standard deviation. Throws TooFewSamples.
IntervalEstimate estimate_interval(const PredictionSamples& ps);
IntervalEstimate estimate_interval(std::span<const double> samples);

struct SampleMoments {
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
};
// Diagnostics only; zero for degenerate (constant) samples.
SampleMoments sample_moments(std::span<const double> samples);

// Window i draws from substream i of `base`, so results do not depend on
// evaluation order. Throws EmptyDataset.
std::vector<PredictionSamples> sample_dataset(const bbb::VariationalParams& vp,
                                              const ingest::NormalizationSpec& norm,
                                              const ingest::WindowedDataset& data,
                                              std::size_t n_samples,
                                              const numerics::RngStream& base);

struct WidthSeries {
  std::vector<ingest::Timestamp> timestamps;
  std::vector<IntervalEstimate> estimates;
  std::array<double, 3> mean_width{};
};

WidthSeries summarize(std::span<const IntervalEstimate> estimates,
                      std::vector<ingest::Timestamp> timestamps);

WidthSeries width_series(const bbb::VariationalParams& vp, const ingest::NormalizationSpec& norm,
                         const ingest::WindowedDataset& data, std::size_t n_samples,
                         const numerics::RngStream& base);

// Prediction CSV:
// timestamp,mu_hat,sigma_hat,lo90,hi90,lo95,hi95,lo99,hi99,w90,w95,w99
// With clamp_lower, lower bounds are floored at 0 MW; widths are unchanged.
void write_prediction_csv(std::ostream& out, const WidthSeries& series,
                          std::span<const std::string> metadata = {}, bool clamp_lower = false);
void write_prediction_csv(const std::filesystem::path& path, const WidthSeries& series,
                          std::span<const std::string> metadata = {}, bool clamp_lower = false);
WidthSeries read_prediction_csv(std::istream& in);
WidthSeries read_prediction_csv(const std::filesystem::path& path);

inline const char* kPredictionHeader =
    "timestamp,mu_hat,sigma_hat,lo90,hi90,lo95,hi95,lo99,hi99,w90,w95,w99";

}  // namespace bayeswind::mc
