#include "bayeswind/eval_report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "bayeswind/error.hpp"

namespace bayeswind::eval {

double rmse(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size() || pred.empty()) {
    throw Error(ErrorCode::kLengthMismatch, "rmse on lengths " + std::to_string(pred.size()) +
                                                " and " + std::to_string(obs.size()));
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) acc += (pred[k] - obs[k]) * (pred[k] - obs[k]);
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

double coverage(std::span<const mc::IntervalEstimate> intervals, std::span<const double> obs,
                mc::Level level) {
  if (intervals.size() != obs.size()) {
    throw Error(ErrorCode::kLengthMismatch, "coverage: intervals and observations differ");
  }
  if (obs.empty()) return 0.0;
  std::size_t inside = 0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const auto& b = intervals[k].at(level);
    if (obs[k] >= b.lower && obs[k] <= b.upper) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(obs.size());
}

double coverage(std::span<const double> centre, std::span<const double> width,
                std::span<const double> obs) {
  if (centre.size() != obs.size() || width.size() != obs.size()) {
    throw Error(ErrorCode::kLengthMismatch, "coverage: centre, width and observations differ");
  }
  if (obs.empty()) return 0.0;
  std::size_t inside = 0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (std::fabs(obs[k] - centre[k]) <= 0.5 * width[k]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(obs.size());
}

VolatilityStats volatility(std::span<const mc::IntervalEstimate> estimates) {
  VolatilityStats v;
  if (estimates.empty()) return v;
  const double n = static_cast<double>(estimates.size());
  for (const auto& e : estimates) v.mean_power += e.mu_hat;
  v.mean_power /= n;
  for (mc::Level l : mc::kLevels) {
    const auto li = static_cast<std::size_t>(l);
    double mean = 0.0;
    for (const auto& e : estimates) mean += e.width(l);
    mean /= n;
    double var = 0.0;
    for (const auto& e : estimates) var += (e.width(l) - mean) * (e.width(l) - mean);
    var /= n;
    v.mean_width[li] = mean;
    v.normalized_width[li] = mean / v.mean_power;
    v.width_cv[li] = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
  }
  return v;
}

AggregateSummary aggregate_analysis(
    std::span<const std::vector<mc::PredictionSamples>> farm_samples) {
  AggregateSummary out;
  if (farm_samples.empty()) return out;
  const std::size_t steps = farm_samples.front().size();
  for (const auto& farm : farm_samples) {
    if (farm.size() != steps) throw Error(ErrorCode::kLengthMismatch, "farms differ in length");
  }
  std::vector<double> sum;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t draws = farm_samples.front()[t].samples.size();
    sum.assign(draws, 0.0);
    for (const auto& farm : farm_samples) {
      if (farm[t].samples.size() != draws) {
        throw Error(ErrorCode::kLengthMismatch, "farms differ in sample count");
      }
      for (std::size_t k = 0; k < draws; ++k) sum[k] += farm[t].samples[k];
    }
    out.aggregate.push_back(mc::estimate_interval(sum));
  }
  out.aggregate_stats = volatility(out.aggregate);
  for (const auto& farm : farm_samples) {
    std::vector<mc::IntervalEstimate> est;
    est.reserve(steps);
    for (const auto& ps : farm) est.push_back(mc::estimate_interval(ps));
    out.farm_stats.push_back(volatility(est));
  }
  return out;
}

std::vector<SweepColumn> sampling_sweep(const bbb::VariationalParams& vp,
                                        const ingest::NormalizationSpec& norm,
                                        const ingest::WindowedDataset& data,
                                        std::span<const double> obs,
                                        std::span<const std::size_t> sample_counts,
                                        const numerics::RngStream& base) {
  std::vector<SweepColumn> out;
  for (std::size_t n : sample_counts) {
    const auto ws = mc::width_series(vp, norm, data, n, base);
    std::vector<double> mu;
    mu.reserve(ws.estimates.size());
    for (const auto& e : ws.estimates) mu.push_back(e.mu_hat);
    out.push_back({n, ws.mean_width, rmse(mu, obs)});
  }
  return out;
}

FarmMetrics farm_metrics(int farm_id, const mc::WidthSeries& series,
                         const std::array<std::vector<double>, 3>& corrected,
                         std::span<const double> obs) {
  FarmMetrics m;
  m.farm_id = farm_id;
  std::vector<double> mu;
  mu.reserve(series.estimates.size());
  for (const auto& e : series.estimates) mu.push_back(e.mu_hat);
  m.rmse = rmse(mu, obs);
  m.mean_width = series.mean_width;
  for (mc::Level l : mc::kLevels) {
    const auto li = static_cast<std::size_t>(l);
    m.coverage[li] = coverage(series.estimates, obs, l);
    const auto& c = corrected[li];
    double acc = 0.0;
    for (double w : c) acc += w;
    m.mean_width_corrected[li] = c.empty() ? 0.0 : acc / static_cast<double>(c.size());
    m.coverage_corrected[li] = coverage(mu, c, obs);
  }
  return m;
}

namespace {

std::string fmt(double v, const char* spec = "%.4f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

RenderedTables render_tables(const EvalReport& report) {
  RenderedTables r;
  std::ostringstream text, t1, t2, t3, agg;

  t1 << "farm,w90,w95,w99,rmse,cov90,cov95,cov99\n";
  text << "Uncertain width per farm (MW)\n";
  text << "  farm      90%       95%       99%      RMSE    cov90   cov95   cov99\n";
  for (const auto& f : report.farms) {
    t1 << f.farm_id << ',' << fmt(f.mean_width[0], "%.6f") << ','
       << fmt(f.mean_width[1], "%.6f") << ',' << fmt(f.mean_width[2], "%.6f") << ','
       << fmt(f.rmse, "%.6f") << ',' << fmt(f.coverage[0]) << ',' << fmt(f.coverage[1]) << ','
       << fmt(f.coverage[2]) << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "  %3d# %9.2f %9.2f %9.2f %9.2f   %.3f   %.3f   %.3f\n",
                  f.farm_id + 1, f.mean_width[0], f.mean_width[1], f.mean_width[2], f.rmse,
                  f.coverage[0], f.coverage[1], f.coverage[2]);
    text << line;
  }

  t2 << "row";
  for (const auto& c : report.sweep) t2 << ",n" << c.n_samples;
  t2 << '\n';
  text << "\nSampling sweep, farm " << report.sweep_farm + 1 << "#\n";
  text << "  row      ";
  for (const auto& c : report.sweep) text << fmt(static_cast<double>(c.n_samples), "%9.0f");
  text << '\n';
  static constexpr const char* kRowNames[] = {"w90", "w95", "w99"};
  for (mc::Level l : mc::kLevels) {
    const auto li = static_cast<std::size_t>(l);
    t2 << kRowNames[li];
    text << "  " << mc::kLevelPercent[li] << "%      ";
    for (const auto& c : report.sweep) {
      t2 << ',' << fmt(c.mean_width[li], "%.6f");
      text << fmt(c.mean_width[li], "%9.2f");
    }
    t2 << '\n';
    text << '\n';
  }
  t2 << "rmse";
  text << "  RMSE     ";
  for (const auto& c : report.sweep) {
    t2 << ',' << fmt(c.rmse, "%.6f");
    text << fmt(c.rmse, "%9.2f");
  }
  t2 << '\n';
  text << '\n';

  t3 << "farm,w99,w99c,cov99,cov99c\n";
  text << "\n99% width after correction (MW)\n";
  for (const auto& f : report.farms) {
    t3 << f.farm_id << ',' << fmt(f.mean_width[2], "%.6f") << ','
       << fmt(f.mean_width_corrected[2], "%.6f") << ',' << fmt(f.coverage[2]) << ','
       << fmt(f.coverage_corrected[2]) << '\n';
    char line[120];
    std::snprintf(line, sizeof line, "  %3d# %9.2f -> %9.2f   cov99 %.3f -> %.3f\n",
                  f.farm_id + 1, f.mean_width[2], f.mean_width_corrected[2], f.coverage[2],
                  f.coverage_corrected[2]);
    text << line;
    if (f.event) {
      std::snprintf(line, sizeof line, "        event windows [%zu, %zu): cov99 %.3f -> %.3f\n",
                    f.event->begin, f.event->end, f.event->before, f.event->after);
      text << line;
    }
  }

  agg << "series,mean_power,w99,normalized_w99,cv_w99\n";
  if (report.aggregate) {
    const auto& a = *report.aggregate;
    auto row = [&](const std::string& name, const VolatilityStats& v) {
      agg << name << ',' << fmt(v.mean_power, "%.6f") << ',' << fmt(v.mean_width[2], "%.6f")
          << ',' << fmt(v.normalized_width[2], "%.6f") << ',' << fmt(v.width_cv[2], "%.6f")
          << '\n';
    };
    row("aggregate", a.aggregate_stats);
    text << "\nAggregate vs single farm (99% level)\n";
    char line[120];
    std::snprintf(line, sizeof line, "  aggregate  normalized width %.4f  width CV %.4f\n",
                  a.aggregate_stats.normalized_width[2], a.aggregate_stats.width_cv[2]);
    text << line;
    for (std::size_t s = 0; s < a.farm_stats.size(); ++s) {
      row("farm_" + std::to_string(s), a.farm_stats[s]);
      std::snprintf(line, sizeof line, "  %3zu#       normalized width %.4f  width CV %.4f\n",
                    s + 1, a.farm_stats[s].normalized_width[2], a.farm_stats[s].width_cv[2]);
      text << line;
    }
  }

  r.text = text.str();
  r.table1_csv = t1.str();
  r.table2_csv = t2.str();
  r.table3_csv = t3.str();
  r.aggregate_csv = agg.str();
  return r;
}

void write_report_bundle(const std::filesystem::path& dir, const RenderedTables& tables,
                         std::span<const std::string> metadata) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
    for (const auto& m : metadata) out << "# " << m << '\n';
    out << body;
  };
  write("report.txt", tables.text);
  write("table1.csv", tables.table1_csv);
  write("table2.csv", tables.table2_csv);
  write("table3.csv", tables.table3_csv);
  write("aggregate.csv", tables.aggregate_csv);
}

}  // namespace bayeswind::eval
