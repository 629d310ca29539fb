#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bayeswind/data_ingest.hpp"
#include "bayeswind/mc_predict.hpp"
#include "bayeswind/numerics.hpp"
#include "json.hpp"

namespace bayeswind::spatial {

// Throws LengthMismatch (unequal or < 2 points) and ZeroVariance.
double pearson(std::span<const double> x, std::span<const double> y);

// Undirected graph over farms; {i, j} is an edge iff corr(i, j) >= threshold.
struct FarmGraph {
  std::size_t n_farms = 0;
  numerics::Matrix corr;
  double threshold = 0.7;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // i < j, lexicographic

  // Throws ShapeMismatch for a non-square matrix.
  static FarmGraph from_correlation(numerics::Matrix corr, double threshold);

  bool adjacent(std::size_t i, std::size_t j) const;
  std::vector<std::size_t> neighbors(std::size_t i) const;
};

// Pairwise Pearson over aligned series. Throws LengthMismatch for fewer than
// two farms or misaligned lengths; propagates pearson errors.
FarmGraph build_graph(std::span<const ingest::PowerSeries> series, double threshold = 0.7);

struct CorrectionConfig {
  double beta = 20.0;  // MW
  double alpha = 0.5;

  // Throws ConfigInvalid.
  void validate() const;
};

// One-pass correction of the widths of all farms at one timestamp. Farm i
// moves by alpha * mean(W_j - W_i) over adjacent j with |W_j - W_i| > beta;
// every term reads the uncorrected snapshot. Throws NegativeWidth and
// LengthMismatch.
std::vector<double> correct_widths(std::span<const double> widths, const FarmGraph& graph,
                                   const CorrectionConfig& cfg);

// corrected[farm][level][t]; the per-farm series must share timestamps.
using CorrectedWidths = std::vector<std::array<std::vector<double>, 3>>;
CorrectedWidths correct_series(std::span<const mc::WidthSeries> farms, const FarmGraph& graph,
                               const CorrectionConfig& cfg);

nlohmann::json graph_to_json(const FarmGraph& graph);
FarmGraph graph_from_json(const nlohmann::json& j);
void write_heatmap_csv(std::ostream& out, const FarmGraph& graph);

// Prediction CSV columns followed by w90c,w95c,w99c.
void write_corrected_csv(std::ostream& out, const mc::WidthSeries& series,
                         const std::array<std::vector<double>, 3>& corrected,
                         std::span<const std::string> metadata = {});
void write_corrected_csv(const std::filesystem::path& path, const mc::WidthSeries& series,
                         const std::array<std::vector<double>, 3>& corrected,
                         std::span<const std::string> metadata = {});

struct CorrectedSeries {
  mc::WidthSeries series;
  std::array<std::vector<double>, 3> corrected;
};
CorrectedSeries read_corrected_csv(const std::filesystem::path& path);

}  // namespace bayeswind::spatial
