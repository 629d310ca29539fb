#include "bayeswind/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "bayeswind/error.hpp"

namespace bayeswind::ingest {

namespace {

int parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len) {
  int value = 0;
  const char* first = text.data() + pos;
  const auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc() || ptr != first + len) {
    throw Error(ErrorCode::kSchemaMismatch, "bad timestamp '" + std::string(text) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    out.push_back(trim(line.substr(begin, comma - begin)));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  return out;
}

}  // namespace

Timestamp parse_iso8601(std::string_view text) {
  std::string_view t = trim(text);
  if (!t.empty() && t.back() == 'Z') t.remove_suffix(1);
  if (t.size() != 19 || t[4] != '-' || t[7] != '-' || (t[10] != 'T' && t[10] != ' ') ||
      t[13] != ':' || t[16] != ':') {
    throw Error(ErrorCode::kSchemaMismatch, "bad timestamp '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{parse_fixed_int(t, 0, 4)},
                           month{static_cast<unsigned>(parse_fixed_int(t, 5, 2))},
                           day{static_cast<unsigned>(parse_fixed_int(t, 8, 2))}};
  const int hh = parse_fixed_int(t, 11, 2);
  const int mm = parse_fixed_int(t, 14, 2);
  const int ss = parse_fixed_int(t, 17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    throw Error(ErrorCode::kSchemaMismatch, "bad timestamp '" + std::string(text) + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  Timestamp days = t / 86400;
  Timestamp secs = t % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60),
                static_cast<int>(secs % 60));
  return buf;
}

void PowerSeries::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw Error(ErrorCode::kMissingValue, "farm " + std::to_string(farm_id) + " index " +
                                                std::to_string(i) + " value " +
                                                std::to_string(values[i]));
    }
  }
}

NormalizationSpec NormalizationSpec::fit(const PowerSeries& train) {
  if (train.values.empty()) throw Error(ErrorCode::kDegenerateRange, "empty series");
  const auto [lo, hi] = std::minmax_element(train.values.begin(), train.values.end());
  NormalizationSpec spec{train.farm_id, *lo, *hi};
  spec.validate();
  return spec;
}

void NormalizationSpec::validate() const {
  if (!(max_val > min_val)) {
    throw Error(ErrorCode::kDegenerateRange, "farm " + std::to_string(farm_id) + " range [" +
                                                 std::to_string(min_val) + ", " +
                                                 std::to_string(max_val) + "]");
  }
}

std::vector<PowerSeries> read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw Error(ErrorCode::kSchemaMismatch, "missing header");

  const auto header = split_commas(trim(line));
  if (header.size() < 2 || header[0] != "timestamp") {
    throw Error(ErrorCode::kSchemaMismatch, "header must start with 'timestamp'");
  }
  const std::size_t n_farms = header.size() - 1;
  for (std::size_t s = 0; s < n_farms; ++s) {
    if (header[s + 1] != "farm_" + std::to_string(s)) {
      throw Error(ErrorCode::kSchemaMismatch, "expected column farm_" + std::to_string(s) +
                                                  ", got '" + std::string(header[s + 1]) + "'");
    }
  }

  std::vector<PowerSeries> series(n_farms);
  for (std::size_t s = 0; s < n_farms; ++s) series[s].farm_id = static_cast<int>(s);
  std::vector<Timestamp> stamps;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty()) continue;
    const auto cells = split_commas(t);
    if (cells.size() != n_farms + 1) {
      // A short row is a missing cell, a long one a schema problem.
      throw Error(cells.size() < n_farms + 1 ? ErrorCode::kMissingValue
                                             : ErrorCode::kSchemaMismatch,
                  "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " cells");
    }
    stamps.push_back(parse_iso8601(cells[0]));
    for (std::size_t s = 0; s < n_farms; ++s) {
      const std::string_view cell = cells[s + 1];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(v)) {
        throw Error(ErrorCode::kMissingValue, "line " + std::to_string(line_no) + " farm_" +
                                                  std::to_string(s) + " value '" +
                                                  std::string(cell) + "'");
      }
      series[s].values.push_back(v);
    }
  }

  const Timestamp start = stamps.empty() ? 0 : stamps.front();
  const std::int64_t step = stamps.size() >= 2 ? stamps[1] - stamps[0] : 900;
  for (std::size_t i = 1; i < stamps.size(); ++i) {
    if (stamps[i] <= stamps[i - 1]) {
      throw Error(ErrorCode::kNonMonotonicTime,
                  "timestamp " + format_iso8601(stamps[i]) + " does not increase");
    }
    if (stamps[i] - stamps[i - 1] != step) {
      throw Error(ErrorCode::kNonMonotonicTime,
                  "irregular step before " + format_iso8601(stamps[i]));
    }
  }
  for (auto& s : series) {
    s.start = start;
    s.step_seconds = step;
    s.validate();
  }
  return series;
}

std::vector<PowerSeries> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_csv(in);
}

void write_csv(std::ostream& out, std::span<const PowerSeries> series,
               std::span<const std::string> metadata) {
  for (const auto& m : metadata) out << "# " << m << '\n';
  out << "timestamp";
  for (std::size_t s = 0; s < series.size(); ++s) out << ",farm_" << s;
  out << '\n';
  if (series.empty()) return;
  const PowerSeries& first = series.front();
  for (const auto& s : series) {
    if (s.size() != first.size() || s.start != first.start ||
        s.step_seconds != first.step_seconds) {
      throw Error(ErrorCode::kLengthMismatch, "series are not aligned");
    }
  }
  char buf[40];
  for (std::size_t i = 0; i < first.size(); ++i) {
    out << format_iso8601(first.timestamp(i));
    for (const auto& s : series) {
      std::snprintf(buf, sizeof buf, "%.9g", s.values[i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

void write_csv(const std::filesystem::path& path, std::span<const PowerSeries> series,
               std::span<const std::string> metadata) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  write_csv(out, series, metadata);
}

TrainTestSplit split_train_test(const PowerSeries& series, Timestamp boundary,
                                std::size_t window_len) {
  std::size_t cut = 0;
  if (boundary > series.start) {
    cut = static_cast<std::size_t>((boundary - series.start + series.step_seconds - 1) /
                                   series.step_seconds);
    cut = std::min(cut, series.size());
  }
  const std::size_t need = window_len + 1;
  if (cut < need || series.size() - cut < need) {
    throw Error(ErrorCode::kEmptySplit, "split at " + format_iso8601(boundary) + " leaves " +
                                            std::to_string(cut) + "/" +
                                            std::to_string(series.size() - cut) +
                                            " points; need " + std::to_string(need) + " each");
  }
  TrainTestSplit out;
  out.train = PowerSeries{series.farm_id, series.start, series.step_seconds,
                          {series.values.begin(), series.values.begin() + cut}};
  out.test = PowerSeries{series.farm_id, series.timestamp(cut), series.step_seconds,
                         {series.values.begin() + cut, series.values.end()}};
  return out;
}

PowerSeries normalize(const PowerSeries& series, const NormalizationSpec& spec) {
  spec.validate();
  PowerSeries out = series;
  for (auto& v : out.values) v = spec.apply(v);
  return out;
}

PowerSeries denormalize(const PowerSeries& series, const NormalizationSpec& spec) {
  spec.validate();
  PowerSeries out = series;
  for (auto& v : out.values) v = spec.invert(v);
  return out;
}

WindowedDataset make_windows(const PowerSeries& series, std::size_t window_len, SplitTag tag) {
  if (window_len == 0 || series.size() <= window_len) {
    throw Error(ErrorCode::kTooShort, "series of length " + std::to_string(series.size()) +
                                          " with window " + std::to_string(window_len));
  }
  WindowedDataset ds;
  ds.window_len = window_len;
  ds.split_tag = tag;
  ds.label_start = series.timestamp(window_len);
  ds.step_seconds = series.step_seconds;
  const std::size_t count = series.size() - window_len;
  ds.features.reserve(count * window_len);
  ds.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.features.insert(ds.features.end(), series.values.begin() + i,
                       series.values.begin() + i + window_len);
    ds.labels.push_back(series.values[i + window_len]);
  }
  return ds;
}

}  // namespace bayeswind::ingest
