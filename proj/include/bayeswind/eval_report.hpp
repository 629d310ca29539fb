#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bayeswind/bbb.hpp"
#include "bayeswind/mc_predict.hpp"

namespace bayeswind::eval {

// Throws LengthMismatch for unequal or empty inputs.
double rmse(std::span<const double> pred, std::span<const double> obs);

// Fraction of obs inside [lower, upper] at `level`. Throws LengthMismatch.
double coverage(std::span<const mc::IntervalEstimate> intervals, std::span<const double> obs,
                mc::Level level);
// Same for symmetric intervals centre +- width / 2 (used for corrected widths).
double coverage(std::span<const double> centre, std::span<const double> width,
                std::span<const double> obs);

struct VolatilityStats {
  std::array<double, 3> mean_width{};       // MW
  std::array<double, 3> normalized_width{};  // mean width / mean predicted power
  std::array<double, 3> width_cv{};          // std / mean of the width over time
  double mean_power = 0.0;                   // mean of mu_hat, MW
};

VolatilityStats volatility(std::span<const mc::IntervalEstimate> estimates);

struct AggregateSummary {
  std::vector<mc::IntervalEstimate> aggregate;  // per timestamp
  VolatilityStats aggregate_stats;
  std::vector<VolatilityStats> farm_stats;
};

// farm_samples[s][t] holds farm s's draws at timestamp t. Draw k of every farm
// is summed into aggregate draw k. Throws LengthMismatch.
AggregateSummary aggregate_analysis(
    std::span<const std::vector<mc::PredictionSamples>> farm_samples);

struct SweepColumn {
  std::size_t n_samples = 0;
  std::array<double, 3> mean_width{};
  double rmse = 0.0;
};

// Mean widths and RMSE of mu_hat for each sampling count. obs in MW.
std::vector<SweepColumn> sampling_sweep(const bbb::VariationalParams& vp,
                                        const ingest::NormalizationSpec& norm,
                                        const ingest::WindowedDataset& data,
                                        std::span<const double> obs,
                                        std::span<const std::size_t> sample_counts,
                                        const numerics::RngStream& base);

struct EventCoverage {
  std::size_t begin = 0;  // test-window index range [begin, end)
  std::size_t end = 0;
  double before = 0.0;    // 99% coverage with uncorrected widths
  double after = 0.0;     // 99% coverage with corrected widths
};

struct FarmMetrics {
  int farm_id = 0;
  double rmse = 0.0;
  std::array<double, 3> mean_width{};
  std::array<double, 3> coverage{};
  std::array<double, 3> mean_width_corrected{};
  std::array<double, 3> coverage_corrected{};
  std::optional<EventCoverage> event;
};

FarmMetrics farm_metrics(int farm_id, const mc::WidthSeries& series,
                         const std::array<std::vector<double>, 3>& corrected,
                         std::span<const double> obs);

struct EvalReport {
  std::vector<FarmMetrics> farms;
  int sweep_farm = 0;
  std::vector<SweepColumn> sweep;
  std::optional<AggregateSummary> aggregate;
};

struct RenderedTables {
  std::string text;
  std::string table1_csv;  // mean widths per farm and level
  std::string table2_csv;  // sampling sweep: 3 levels + RMSE
  std::string table3_csv;  // mean 99% width after correction per farm
  std::string aggregate_csv;
};

RenderedTables render_tables(const EvalReport& report);

// Writes report.txt, table1.csv, table2.csv, table3.csv, aggregate.csv.
// Each CSV is prefixed by "# <line>" metadata lines.
void write_report_bundle(const std::filesystem::path& dir, const RenderedTables& tables,
                         std::span<const std::string> metadata = {});

}  // namespace bayeswind::eval
