#include "bayeswind/spatial.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "bayeswind/error.hpp"

namespace bayeswind::spatial {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kLengthMismatch, "pearson on lengths " + std::to_string(x.size()) +
                                                " and " + std::to_string(y.size()));
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = x[k] - mx;
    const double dy = y[k] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw Error(ErrorCode::kZeroVariance, "constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

FarmGraph FarmGraph::from_correlation(numerics::Matrix corr, double threshold) {
  if (corr.rows() != corr.cols()) throw Error(ErrorCode::kShapeMismatch, "correlation not square");
  FarmGraph g;
  g.n_farms = corr.rows();
  g.threshold = threshold;
  g.corr = std::move(corr);
  for (std::size_t i = 0; i < g.n_farms; ++i) {
    for (std::size_t j = i + 1; j < g.n_farms; ++j) {
      if (g.corr(i, j) >= threshold) g.edges.emplace_back(i, j);
    }
  }
  return g;
}

bool FarmGraph::adjacent(std::size_t i, std::size_t j) const {
  if (i == j) return false;
  const auto key = std::minmax(i, j);
  return std::binary_search(edges.begin(), edges.end(), std::pair(key.first, key.second));
}

std::vector<std::size_t> FarmGraph::neighbors(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_farms; ++j) {
    if (adjacent(i, j)) out.push_back(j);
  }
  return out;
}

FarmGraph build_graph(std::span<const ingest::PowerSeries> series, double threshold) {
  if (series.size() < 2) throw Error(ErrorCode::kLengthMismatch, "need at least two farms");
  const std::size_t n = series.size();
  numerics::Matrix corr(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    corr(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r = pearson(series[i].values, series[j].values);
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return FarmGraph::from_correlation(std::move(corr), threshold);
}

void CorrectionConfig::validate() const {
  if (!(beta >= 0.0) || !(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kConfigInvalid, "correction needs beta >= 0 and alpha in [0, 1]");
  }
}

std::vector<double> correct_widths(std::span<const double> widths, const FarmGraph& graph,
                                   const CorrectionConfig& cfg) {
  cfg.validate();
  if (widths.size() != graph.n_farms) {
    throw Error(ErrorCode::kLengthMismatch, std::to_string(widths.size()) + " widths for " +
                                                std::to_string(graph.n_farms) + " farms");
  }
  for (double w : widths) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::kNegativeWidth, "width " + std::to_string(w));
    }
  }
  std::vector<double> out(widths.begin(), widths.end());
  std::vector<double> diffs;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    diffs.clear();
    for (std::size_t j = 0; j < widths.size(); ++j) {
      if (!graph.adjacent(i, j)) continue;
      const double diff = widths[j] - widths[i];
      if (std::fabs(diff) > cfg.beta) diffs.push_back(diff);
    }
    if (diffs.empty()) continue;
    // Summing in value order makes the result independent of farm numbering.
    std::sort(diffs.begin(), diffs.end());
    double pull = 0.0;
    for (double d : diffs) pull += d;
    out[i] = widths[i] + cfg.alpha * (pull / static_cast<double>(diffs.size()));
  }
  return out;
}

CorrectedWidths correct_series(std::span<const mc::WidthSeries> farms, const FarmGraph& graph,
                               const CorrectionConfig& cfg) {
  if (farms.size() != graph.n_farms) {
    throw Error(ErrorCode::kLengthMismatch, "farm count differs from graph");
  }
  const std::size_t steps = farms.empty() ? 0 : farms.front().estimates.size();
  for (const auto& f : farms) {
    if (f.estimates.size() != steps || f.timestamps != farms.front().timestamps) {
      throw Error(ErrorCode::kLengthMismatch, "farm width series are not aligned");
    }
  }
  CorrectedWidths out(farms.size());
  for (auto& per_level : out) {
    for (auto& v : per_level) v.resize(steps);
  }
  std::vector<double> snapshot(farms.size());
  for (mc::Level l : mc::kLevels) {
    const auto li = static_cast<std::size_t>(l);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t s = 0; s < farms.size(); ++s) snapshot[s] = farms[s].estimates[t].width(l);
      const auto corrected = correct_widths(snapshot, graph, cfg);
      for (std::size_t s = 0; s < farms.size(); ++s) out[s][li][t] = corrected[s];
    }
  }
  return out;
}

nlohmann::json graph_to_json(const FarmGraph& graph) {
  nlohmann::json j;
  j["n_farms"] = graph.n_farms;
  j["threshold"] = graph.threshold;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < graph.n_farms; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < graph.n_farms; ++k) row.push_back(graph.corr(i, k));
    rows.push_back(std::move(row));
  }
  j["correlation"] = std::move(rows);
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [a, b] : graph.edges) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  return j;
}

FarmGraph graph_from_json(const nlohmann::json& j) {
  try {
    const std::size_t n = j.at("n_farms").get<std::size_t>();
    numerics::Matrix corr(n, n);
    const auto& rows = j.at("correlation");
    if (rows.size() != n) throw Error(ErrorCode::kSchemaMismatch, "correlation row count");
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) throw Error(ErrorCode::kSchemaMismatch, "correlation row length");
      for (std::size_t k = 0; k < n; ++k) corr(i, k) = rows[i][k].get<double>();
    }
    return FarmGraph::from_correlation(std::move(corr), j.at("threshold").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaMismatch, std::string("graph json: ") + e.what());
  }
}

void write_heatmap_csv(std::ostream& out, const FarmGraph& graph) {
  out << "farm";
  for (std::size_t k = 0; k < graph.n_farms; ++k) out << ",farm_" << k;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < graph.n_farms; ++i) {
    out << "farm_" << i;
    for (std::size_t k = 0; k < graph.n_farms; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", graph.corr(i, k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_corrected_csv(std::ostream& out, const mc::WidthSeries& series,
                         const std::array<std::vector<double>, 3>& corrected,
                         std::span<const std::string> metadata) {
  for (const auto& c : corrected) {
    if (c.size() != series.estimates.size()) {
      throw Error(ErrorCode::kLengthMismatch, "corrected widths do not match series");
    }
  }
  std::ostringstream base;
  mc::write_prediction_csv(base, series, metadata);
  std::istringstream lines(base.str());
  std::string line;
  std::size_t row = 0;
  bool header_done = false;
  char buf[32];
  while (std::getline(lines, line)) {
    if (!header_done) {
      if (line.rfind("#", 0) == 0) {
        out << line << '\n';
        continue;
      }
      out << line << ",w90c,w95c,w99c\n";
      header_done = true;
      continue;
    }
    out << line;
    for (const auto& c : corrected) {
      std::snprintf(buf, sizeof buf, "%.17g", c[row]);
      out << ',' << buf;
    }
    out << '\n';
    ++row;
  }
}

void write_corrected_csv(const std::filesystem::path& path, const mc::WidthSeries& series,
                         const std::array<std::vector<double>, 3>& corrected,
                         std::span<const std::string> metadata) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_corrected_csv(out, series, corrected, metadata);
}

CorrectedSeries read_corrected_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUpstreamMissing, "missing corrected file " + path.string());
  // Split into a plain prediction CSV plus the three trailing columns.
  std::ostringstream base;
  CorrectedSeries out;
  std::string line;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::size_t cut = line.size();
    for (int k = 0; k < 3; ++k) {
      cut = line.rfind(',', cut - 1);
      if (cut == std::string::npos) throw Error(ErrorCode::kSchemaMismatch, "short corrected row");
    }
    if (header_done) {
      std::stringstream tail(line.substr(cut + 1));
      std::string cell;
      for (auto& c : out.corrected) {
        std::getline(tail, cell, ',');
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc()) throw Error(ErrorCode::kMissingValue, "bad corrected cell");
        c.push_back(v);
      }
    } else if (line.substr(cut) != ",w90c,w95c,w99c") {
      throw Error(ErrorCode::kSchemaMismatch, "corrected header '" + line + "'");
    }
    header_done = true;
    base << line.substr(0, cut) << '\n';
  }
  std::istringstream base_in(base.str());
  out.series = mc::read_prediction_csv(base_in);
  return out;
}

}  // namespace bayeswind::spatial
