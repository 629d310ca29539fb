#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace bayeswind::numerics {

// Dense row-major matrix of finite doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Throws ShapeMismatch unless a.cols() == b.rows().
Matrix matmul(const Matrix& a, const Matrix& b);

// Lower-triangular L with L * L^T = a. Throws NotPositiveDefinite.
Matrix cholesky(const Matrix& a);

// y = W x + b over raw row-major storage; W is rows x x.size().
void affine(std::span<const double> w, std::span<const double> x,
            std::span<const double> b, std::span<double> y);

// Reproducible Gaussian source.
//
// Engine: xoshiro256** seeded by running splitmix64 over (seed, stream_id).
// Uniforms take the top 53 bits; normals use the Box-Muller transform and
// emit both values of each pair (cosine branch first). The algorithm is fixed
// so golden values are portable across platforms.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent stream sharing this stream's seed.
  RngStream substream(std::uint64_t stream_id) const { return RngStream(seed_, stream_id); }

  std::uint64_t next_u64();
  // Uniform on [0, 1).
  double uniform();
  // Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::vector<double> sample_standard_normal(RngStream& rng, std::size_t n);

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178;

// Evaluated as 1/(1+e^-|x|) and reflected, so sigmoid(x) + sigmoid(-x) == 1.
double sigmoid(double x);
// ln(1 + e^x) without overflow.
double softplus(double x);
// Inverse of softplus for y > 0.
double inverse_softplus(double y);

// Throws NonPositiveSigma.
double gaussian_logpdf(double x, double mu, double sigma);

// Two-component zero-mean scale mixture  pi N(0, sigma1^2) + (1 - pi) N(0, sigma2^2).
struct MixturePrior {
  double pi = 1.0;
  double sigma1 = 1.0;
  double sigma2 = 0.1;

  // Throws InvalidPrior.
  void validate() const;
};

double mixture_logpdf(double x, const MixturePrior& prior);
// d/dx of mixture_logpdf.
double mixture_logpdf_grad(double x, const MixturePrior& prior);

}  // namespace bayeswind::numerics
