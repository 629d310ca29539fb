// Independent reference implementations used to check the library.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bayeswind::testing {

// Plain-loop LSTM over the flat parameter layout
//   W_f W_i W_c W_o | b_f b_i b_c b_o | W_out | b_out
// with gate matrices acting on [h_{t-1}, x_t]. Scalar input. T = long double
// gives finite differences far below double roundoff.
template <typename T>
T reference_lstm(std::span<const T> p, std::size_t hidden, std::span<const double> window) {
  const std::size_t h_n = hidden, c_n = hidden + 1;
  auto w = [&](std::size_t gate, std::size_t r, std::size_t c) {
    return p[gate * h_n * c_n + r * c_n + c];
  };
  auto b = [&](std::size_t gate, std::size_t r) { return p[4 * h_n * c_n + gate * h_n + r]; };
  auto logistic = [](T x) { return T(1) / (T(1) + std::exp(-x)); };
  std::vector<T> h(h_n, T(0)), c(h_n, T(0));
  for (double x : window) {
    std::vector<T> z(h);
    z.push_back(T(x));
    std::vector<T> h_new(h_n), c_new(h_n);
    for (std::size_t r = 0; r < h_n; ++r) {
      T a[4];
      for (std::size_t g = 0; g < 4; ++g) {
        a[g] = b(g, r);
        for (std::size_t k = 0; k < c_n; ++k) a[g] += w(g, r, k) * z[k];
      }
      const T f = logistic(a[0]), i = logistic(a[1]), g = std::tanh(a[2]), o = logistic(a[3]);
      c_new[r] = f * c[r] + i * g;
      h_new[r] = o * std::tanh(c_new[r]);
    }
    h = h_new;
    c = c_new;
  }
  const std::size_t head = 4 * h_n * c_n + 4 * h_n;
  T y = p[head + h_n];
  for (std::size_t r = 0; r < h_n; ++r) y += p[head + r] * h[r];
  return y;
}

inline double reference_lstm(std::span<const double> p, std::size_t hidden,
                             std::span<const double> window) {
  return reference_lstm<double>(p, hidden, window);
}

template <typename T>
std::vector<T> widen(std::span<const double> x) {
  return std::vector<T>(x.begin(), x.end());
}

// Central difference of f at x along coordinate k.
template <typename T>
double central_difference(const std::function<T(std::span<const T>)>& f, std::vector<T> x,
                          std::size_t k, T eps = T(1e-5)) {
  const T x0 = x[k];
  x[k] = x0 + eps;
  const T up = f(x);
  x[k] = x0 - eps;
  const T down = f(x);
  return static_cast<double>((up - down) / (T(2) * eps));
}

// Relative error with an absolute floor for near-zero gradients.
inline double gradient_error(double analytic, double numeric, double floor = 1e-8) {
  const double scale = std::max(std::fabs(analytic), std::fabs(numeric));
  if (scale < floor) return std::fabs(analytic - numeric);
  return std::fabs(analytic - numeric) / scale;
}

inline double mean(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double population_std(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace bayeswind::testing
