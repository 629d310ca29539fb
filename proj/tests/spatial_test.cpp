#include "bayeswind/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bayeswind/error.hpp"
#include "gtest/gtest.h"

namespace bayeswind::spatial {
namespace {

using numerics::Matrix;
using numerics::RngStream;

FarmGraph complete_graph(std::size_t n) {
  return FarmGraph::from_correlation(Matrix(n, n, 1.0), 0.7);
}

FarmGraph random_graph(std::size_t n, RngStream& rng) {
  Matrix c(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c(i, j) = c(j, i) = rng.uniform() < 0.5 ? 0.9 : 0.1;
  return FarmGraph::from_correlation(c, 0.7);
}

TEST(Pearson, HandComputed) {
  const std::vector<double> x = {1, 2, 3}, y = {1, 1, 2};
  EXPECT_NEAR(pearson(x, y), std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(Pearson, PerfectAndAnti) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9}, z = {4, 3, 2, 1};
  EXPECT_NEAR(pearson(x, y), 1.0, 1e-15);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-15);
  EXPECT_LE(pearson(x, y), 1.0);
}

TEST(Pearson, Errors) {
  const std::vector<double> x = {1, 2, 3}, c = {2, 2, 2}, s = {1, 2};
  try {
    pearson(x, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVariance);
  }
  try {
    pearson(x, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(FarmGraph, ThresholdIsInclusive) {
  const auto g = FarmGraph::from_correlation(Matrix{{1, 0.7, 0.69999}, {0.7, 1, 0.2}, {0.69999, 0.2, 1}}, 0.7);
  EXPECT_TRUE(g.adjacent(0, 1));
  EXPECT_TRUE(g.adjacent(1, 0));
  EXPECT_FALSE(g.adjacent(0, 2));
  EXPECT_FALSE(g.adjacent(0, 0));
  ASSERT_EQ(g.edges.size(), 1u);
  EXPECT_EQ(g.edges[0], (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_EQ(g.neighbors(0), (std::vector<std::size_t>{1}));
}

TEST(FarmGraph, NonSquare) {
  EXPECT_THROW(FarmGraph::from_correlation(Matrix(2, 3), 0.7), Error);
}

TEST(BuildGraph, SymmetricWithUnitDiagonal) {
  RngStream rng(1);
  std::vector<ingest::PowerSeries> series(4);
  std::vector<double> common(300);
  for (auto& v : common) v = rng.normal();
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t t = 0; t < 300; ++t)
      series[f].values.push_back(common[t] * (f < 2 ? 1.0 : 0.0) + 0.3 * rng.normal());
  }
  const auto g = build_graph(series, 0.7);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(g.corr(i, i), 1.0);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(g.corr(i, j), g.corr(j, i));
  }
  EXPECT_TRUE(g.adjacent(0, 1));
  EXPECT_FALSE(g.adjacent(2, 3));
  EXPECT_THROW(build_graph(std::span<const ingest::PowerSeries>(series).first(1), 0.7), Error);
}

TEST(GraphJson, RoundTrip) {
  RngStream rng(2);
  const auto g = random_graph(5, rng);
  const auto back = graph_from_json(graph_to_json(g));
  EXPECT_EQ(back.corr, g.corr);
  EXPECT_EQ(back.edges, g.edges);
  EXPECT_EQ(back.threshold, g.threshold);
}

TEST(CorrectWidths, PullsTowardWiderNeighbour) {
  const std::vector<double> w = {10, 40};
  const auto out = correct_widths(w, complete_graph(2), {20, 0.5});
  EXPECT_EQ(out[0], 25.0);
  EXPECT_EQ(out[1], 25.0);
}

TEST(CorrectWidths, BoundaryIsNoOp) {
  const std::vector<double> w = {10, 30};
  EXPECT_EQ(correct_widths(w, complete_graph(2), {20, 0.5}), w);
}

TEST(CorrectWidths, NonAdjacentUntouched) {
  const std::vector<double> w = {10, 40};
  const auto g = FarmGraph::from_correlation(Matrix{{1, 0.1}, {0.1, 1}}, 0.7);
  EXPECT_EQ(correct_widths(w, g, {20, 0.5}), w);
}

TEST(CorrectWidths, SnapshotSemanticsAndAveraging) {
  // Farm 0 sees two neighbours 30 and 40 MW wider; the average pull is 35.
  const std::vector<double> w = {10, 40, 50};
  const auto out = correct_widths(w, complete_graph(3), {20, 0.5});
  EXPECT_EQ(out[0], 10 + 0.5 * 35.0);
  EXPECT_EQ(out[1], 40 + 0.5 * -30.0);
  EXPECT_EQ(out[2], 50 + 0.5 * -40.0);
}

TEST(CorrectWidths, Errors) {
  const std::vector<double> neg = {-1, 5};
  try {
    correct_widths(neg, complete_graph(2), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNegativeWidth);
  }
  const std::vector<double> three = {1, 2, 3};
  EXPECT_THROW(correct_widths(three, complete_graph(2), {}), Error);
  EXPECT_THROW((CorrectionConfig{-1, 0.5}.validate()), Error);
  EXPECT_THROW((CorrectionConfig{20, 1.5}.validate()), Error);
}

TEST(CorrectWidths, PermutationEquivariant) {
  RngStream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(6);
    const auto g = random_graph(n, rng);
    std::vector<double> w(n);
    for (auto& v : w) v = 80 * rng.uniform();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
    Matrix pc(n, n);
    std::vector<double> pw(n);
    for (std::size_t i = 0; i < n; ++i) {
      pw[i] = w[perm[i]];
      for (std::size_t j = 0; j < n; ++j) pc(i, j) = g.corr(perm[i], perm[j]);
    }
    const auto out = correct_widths(w, g, {20, 0.5});
    const auto pout = correct_widths(pw, FarmGraph::from_correlation(pc, 0.7), {20, 0.5});
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(pout[i], out[perm[i]]);
  }
}

TEST(CorrectWidths, StaysWithinNeighbourRange) {
  RngStream rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(6);
    const auto g = random_graph(n, rng);
    std::vector<double> w(n);
    for (auto& v : w) v = 80 * rng.uniform();
    const auto out = correct_widths(w, g, {20, 0.5});
    for (std::size_t i = 0; i < n; ++i) {
      double lo = w[i], hi = w[i];
      for (std::size_t j : g.neighbors(i)) {
        lo = std::min(lo, w[j]);
        hi = std::max(hi, w[j]);
      }
      EXPECT_GE(out[i], lo);
      EXPECT_LE(out[i], hi);
    }
  }
}

TEST(CorrectedCsv, AppendsColumns) {
  const auto ws = mc::summarize(std::vector<mc::IntervalEstimate>{mc::interval_from_moments(5, 1)}, {0});
  std::array<std::vector<double>, 3> corr = {{{1.0}, {2.0}, {3.0}}};
  std::stringstream buf;
  write_corrected_csv(buf, ws, corr);
  std::string header;
  std::getline(buf, header);
  EXPECT_EQ(header, std::string(mc::kPredictionHeader) + ",w90c,w95c,w99c");
}

TEST(Heatmap, SquareCsv) {
  std::stringstream buf;
  write_heatmap_csv(buf, complete_graph(3));
  std::string line;
  int rows = 0;
  while (std::getline(buf, line)) ++rows;
  EXPECT_EQ(rows, 4);
}

}  // namespace
}  // namespace bayeswind::spatial
