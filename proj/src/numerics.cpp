#include "bayeswind/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bayeswind/error.hpp"

namespace bayeswind::numerics {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kShapeMismatch, "matrix data length " + std::to_string(data_.size()) +
                                               " != " + std::to_string(rows_ * cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw Error(ErrorCode::kShapeMismatch, "ragged matrix literal");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " by " +
                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Matrix cholesky(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::kShapeMismatch, "cholesky of non-square matrix");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) {
      throw Error(ErrorCode::kNotPositiveDefinite,
                  "non-positive pivot at column " + std::to_string(j));
    }
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

void affine(std::span<const double> w, std::span<const double> x, std::span<const double> b,
            std::span<double> y) {
  const std::size_t cols = x.size();
  for (std::size_t r = 0; r < y.size(); ++r) {
    const double* row = w.data() + r * cols;
    double acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t sm = seed;
  // Mix the stream id into the splitmix state through one extra round so
  // (seed, id) pairs with equal sums do not collide.
  sm ^= splitmix64(sm) + stream_id * 0xd1342543de82ef95ULL;
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<double> sample_standard_normal(RngStream& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = rng.normal();
  return out;
}

double sigmoid(double x) {
  const double pos = 1.0 / (1.0 + std::exp(-std::fabs(x)));
  return x >= 0.0 ? pos : 1.0 - pos;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double inverse_softplus(double y) {
  // ln(e^y - 1), rewritten for large y.
  return y > 30.0 ? y + std::log1p(-std::exp(-y)) : std::log(std::expm1(y));
}

double gaussian_logpdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kNonPositiveSigma, "sigma = " + std::to_string(sigma));
  }
  const double z = (x - mu) / sigma;
  return -kLogSqrtTwoPi - std::log(sigma) - 0.5 * z * z;
}

void MixturePrior::validate() const {
  if (!(pi >= 0.0 && pi <= 1.0) || !(sigma1 > 0.0) || !(sigma2 > 0.0)) {
    throw Error(ErrorCode::kInvalidPrior, "pi=" + std::to_string(pi) + " sigma1=" +
                                              std::to_string(sigma1) +
                                              " sigma2=" + std::to_string(sigma2));
  }
}

namespace {

// Log weights of the two components at x; -inf marks an absent component.
struct MixtureTerms {
  double a;
  double b;
};

MixtureTerms mixture_terms(double x, const MixturePrior& prior) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  return {prior.pi > 0.0 ? std::log(prior.pi) + gaussian_logpdf(x, 0.0, prior.sigma1) : kNegInf,
          prior.pi < 1.0 ? std::log1p(-prior.pi) + gaussian_logpdf(x, 0.0, prior.sigma2)
                         : kNegInf};
}

}  // namespace

double mixture_logpdf(double x, const MixturePrior& prior) {
  prior.validate();
  const auto [a, b] = mixture_terms(x, prior);
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double mixture_logpdf_grad(double x, const MixturePrior& prior) {
  prior.validate();
  const auto [a, b] = mixture_terms(x, prior);
  // Responsibility of the first component.
  const double r1 = a >= b ? 1.0 / (1.0 + std::exp(b - a)) : 1.0 - 1.0 / (1.0 + std::exp(a - b));
  const double r2 = 1.0 - r1;
  return -x * (r1 / (prior.sigma1 * prior.sigma1) + r2 / (prior.sigma2 * prior.sigma2));
}

}  // namespace bayeswind::numerics
