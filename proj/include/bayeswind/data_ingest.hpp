#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bayeswind::ingest {

// Seconds since 1970-01-01T00:00:00 UTC.
using Timestamp = std::int64_t;

// Accepts "YYYY-MM-DDTHH:MM:SS" with optional trailing 'Z' (space also allowed
// as the date/time separator). Throws SchemaMismatch on malformed input.
Timestamp parse_iso8601(std::string_view text);
std::string format_iso8601(Timestamp t);

// Power output of one farm at a fixed sampling step.
struct PowerSeries {
  int farm_id = 0;
  Timestamp start = 0;
  std::int64_t step_seconds = 900;
  std::vector<double> values;  // MW

  std::size_t size() const { return values.size(); }
  Timestamp timestamp(std::size_t i) const {
    return start + static_cast<Timestamp>(i) * step_seconds;
  }
  // Checks finiteness and non-negativity. Throws MissingValue.
  void validate() const;
};

struct NormalizationSpec {
  int farm_id = 0;
  double min_val = 0.0;
  double max_val = 1.0;

  // Min/max of a (training) series. Throws DegenerateRange for constant input.
  static NormalizationSpec fit(const PowerSeries& train);

  double apply(double v) const { return (v - min_val) / (max_val - min_val); }
  double invert(double u) const { return u * (max_val - min_val) + min_val; }
  // Throws DegenerateRange unless max_val > min_val.
  void validate() const;
};

enum class SplitTag { kTrain, kTest };

// Sliding windows with stride 1: window i covers points [i, i + L) and its
// label is point i + L of the source series.
struct WindowedDataset {
  std::size_t window_len = 12;
  SplitTag split_tag = SplitTag::kTrain;
  std::vector<double> features;  // size() * window_len, row-major
  std::vector<double> labels;
  // Timestamp of labels[i] is label_start + i * step_seconds.
  Timestamp label_start = 0;
  std::int64_t step_seconds = 900;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const double> window(std::size_t i) const {
    return std::span<const double>(features).subspan(i * window_len, window_len);
  }
  Timestamp label_timestamp(std::size_t i) const {
    return label_start + static_cast<Timestamp>(i) * step_seconds;
  }
};

// Header must be `timestamp,farm_0,...,farm_{N-1}`. Lines starting with '#'
// before the header are metadata and skipped.
std::vector<PowerSeries> read_csv(std::istream& in);
std::vector<PowerSeries> load_csv(const std::filesystem::path& path);

// All series must share start, step and length. Values are written with 9
// significant digits; each metadata line is emitted as "# <line>".
void write_csv(std::ostream& out, std::span<const PowerSeries> series,
               std::span<const std::string> metadata = {});
void write_csv(const std::filesystem::path& path, std::span<const PowerSeries> series,
               std::span<const std::string> metadata = {});

struct TrainTestSplit {
  PowerSeries train;
  PowerSeries test;
};

// train holds points with timestamp < boundary. Throws EmptySplit when either
// side has fewer than window_len + 1 points.
TrainTestSplit split_train_test(const PowerSeries& series, Timestamp boundary,
                                std::size_t window_len = 12);

PowerSeries normalize(const PowerSeries& series, const NormalizationSpec& spec);
PowerSeries denormalize(const PowerSeries& series, const NormalizationSpec& spec);

// Throws TooShort when series.size() <= window_len.
WindowedDataset make_windows(const PowerSeries& series, std::size_t window_len,
                             SplitTag tag = SplitTag::kTrain);

}  // namespace bayeswind::ingest
