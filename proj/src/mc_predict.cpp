#include "bayeswind/mc_predict.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bayeswind/error.hpp"
#include "bayeswind/lstm.hpp"

namespace bayeswind::mc {

IntervalEstimate interval_from_moments(double mu_hat, double sigma_hat) {
  IntervalEstimate est;
  est.mu_hat = mu_hat;
  est.sigma_hat = sigma_hat;
  for (Level l : kLevels) {
    const double half = z_value(l) * sigma_hat;
    est.bounds[static_cast<std::size_t>(l)] = {mu_hat - half, mu_hat + half, 2.0 * half};
  }
  return est;
}

PredictionSamples sample_predictions(const bbb::VariationalParams& vp,
                                     const ingest::NormalizationSpec& norm,
                                     std::span<const double> window, std::size_t n_samples,
                                     numerics::RngStream& rng) {
  if (n_samples < 2) {
    throw Error(ErrorCode::kTooFewSamples, "need at least 2 samples, got " +
                                               std::to_string(n_samples));
  }
  norm.validate();
  PredictionSamples ps;
  ps.samples.reserve(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const auto sampled = bbb::sample_weights(vp, rng);
    ps.samples.push_back(norm.invert(lstm::predict(window, sampled.theta)));
  }
  return ps;
}

IntervalEstimate estimate_interval(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kTooFewSamples, "need at least 2 samples, got " +
                                               std::to_string(samples.size()));
  }
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  return interval_from_moments(mean, std::sqrt(ss / n));
}

IntervalEstimate estimate_interval(const PredictionSamples& ps) {
  return estimate_interval(ps.samples);
}

SampleMoments sample_moments(std::span<const double> samples) {
  if (samples.size() < 2) return {};
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double s : samples) {
    const double d = s - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) return {};
  return {m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

std::vector<PredictionSamples> sample_dataset(const bbb::VariationalParams& vp,
                                              const ingest::NormalizationSpec& norm,
                                              const ingest::WindowedDataset& data,
                                              std::size_t n_samples,
                                              const numerics::RngStream& base) {
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "no windows to predict");
  std::vector<PredictionSamples> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    numerics::RngStream rng = base.substream(i);
    PredictionSamples ps = sample_predictions(vp, norm, data.window(i), n_samples, rng);
    ps.window_index = i;
    out.push_back(std::move(ps));
  }
  return out;
}

WidthSeries summarize(std::span<const IntervalEstimate> estimates,
                      std::vector<ingest::Timestamp> timestamps) {
  WidthSeries ws;
  ws.estimates.assign(estimates.begin(), estimates.end());
  ws.timestamps = std::move(timestamps);
  if (ws.timestamps.size() != ws.estimates.size()) {
    throw Error(ErrorCode::kLengthMismatch, "timestamps and estimates differ in length");
  }
  if (estimates.empty()) return ws;
  for (Level l : kLevels) {
    double acc = 0.0;
    for (const auto& e : estimates) acc += e.width(l);
    ws.mean_width[static_cast<std::size_t>(l)] = acc / static_cast<double>(estimates.size());
  }
  return ws;
}

WidthSeries width_series(const bbb::VariationalParams& vp, const ingest::NormalizationSpec& norm,
                         const ingest::WindowedDataset& data, std::size_t n_samples,
                         const numerics::RngStream& base) {
  const auto samples = sample_dataset(vp, norm, data, n_samples, base);
  std::vector<IntervalEstimate> estimates;
  std::vector<ingest::Timestamp> stamps;
  estimates.reserve(samples.size());
  for (const auto& ps : samples) {
    estimates.push_back(estimate_interval(ps));
    stamps.push_back(data.label_timestamp(ps.window_index));
  }
  return summarize(estimates, std::move(stamps));
}

void write_prediction_csv(std::ostream& out, const WidthSeries& series,
                          std::span<const std::string> metadata, bool clamp_lower) {
  for (const auto& m : metadata) out << "# " << m << '\n';
  out << kPredictionHeader << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (std::size_t i = 0; i < series.estimates.size(); ++i) {
    const IntervalEstimate& e = series.estimates[i];
    out << ingest::format_iso8601(series.timestamps[i]);
    put(e.mu_hat);
    put(e.sigma_hat);
    for (Level l : kLevels) {
      put(clamp_lower ? std::max(0.0, e.at(l).lower) : e.at(l).lower);
      put(e.at(l).upper);
    }
    for (Level l : kLevels) put(e.width(l));
    out << '\n';
  }
}

void write_prediction_csv(const std::filesystem::path& path, const WidthSeries& series,
                          std::span<const std::string> metadata, bool clamp_lower) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_prediction_csv(out, series, metadata, clamp_lower);
}

WidthSeries read_prediction_csv(std::istream& in) {
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kPredictionHeader) {
      throw Error(ErrorCode::kSchemaMismatch, "unexpected prediction header '" + line + "'");
    }
    header = true;
    break;
  }
  if (!header) throw Error(ErrorCode::kSchemaMismatch, "missing prediction header");
  std::vector<IntervalEstimate> estimates;
  std::vector<ingest::Timestamp> stamps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 12) {
      throw Error(ErrorCode::kSchemaMismatch, "prediction row with " +
                                                  std::to_string(cells.size()) + " cells");
    }
    std::array<double, 11> v{};
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::string& c = cells[k + 1];
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v[k]);
      if (ec != std::errc() || ptr != c.data() + c.size()) {
        throw Error(ErrorCode::kMissingValue, "bad prediction cell '" + c + "'");
      }
    }
    stamps.push_back(ingest::parse_iso8601(cells[0]));
    // Bounds come from the moments; stored (possibly clamped) bounds are not trusted.
    estimates.push_back(interval_from_moments(v[0], v[1]));
  }
  return summarize(estimates, std::move(stamps));
}

WidthSeries read_prediction_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kUpstreamMissing, "missing prediction file " + path.string());
  return read_prediction_csv(in);
}

}  // namespace bayeswind::mc
