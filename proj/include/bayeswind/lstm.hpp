#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bayeswind::lstm {

enum class Gate { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };
inline constexpr std::array<Gate, 4> kGates = {Gate::kForget, Gate::kInput, Gate::kCandidate,
                                               Gate::kOutput};

struct LstmShape {
  std::size_t hidden = 64;
  std::size_t input = 1;

  std::size_t concat() const { return hidden + input; }
  std::size_t param_count() const { return 4 * hidden * concat() + 4 * hidden + hidden + 1; }
  bool operator==(const LstmShape&) const = default;
};

// One named tensor inside the flat parameter vector.
struct TensorSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
  std::size_t offset;

  std::size_t size() const { return rows * cols; }
};

// W_f, W_i, W_c, W_o (hidden x (hidden+input)), b_f, b_i, b_c, b_o (hidden),
// W_out (1 x hidden), b_out (scalar), in that order.
std::vector<TensorSpec> tensor_layout(const LstmShape& shape);

// Every tensor of a single-layer LSTM with a linear head, stored flat. The
// gate matrices act on the concatenation [h_{t-1}, x_t].
class LstmParams {
 public:
  LstmParams() = default;
  explicit LstmParams(const LstmShape& shape);
  // Throws ShapeMismatch if values.size() != shape.param_count().
  LstmParams(const LstmShape& shape, std::vector<double> values);

  const LstmShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  std::span<const double> gate_weights(Gate g) const;
  std::span<double> gate_weights(Gate g);
  std::span<const double> gate_bias(Gate g) const;
  std::span<double> gate_bias(Gate g);
  std::span<const double> head_weights() const;
  std::span<double> head_weights();
  double head_bias() const { return values_.back(); }
  double& head_bias() { return values_.back(); }

  bool operator==(const LstmParams&) const = default;

 private:
  std::size_t gate_weight_offset(Gate g) const;
  std::size_t gate_bias_offset(Gate g) const;

  LstmShape shape_;
  std::vector<double> values_;
};

using LstmWeights = LstmParams;
using LstmGradients = LstmParams;

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  static LstmState zeros(std::size_t hidden) { return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)}; }
};

// Activations of one step, kept for backpropagation.
struct StepCache {
  std::vector<double> z;  // [h_{t-1}, x_t]
  std::vector<double> f, i, g, o;
  std::vector<double> c_prev, c, tanh_c;
};

struct CellOutput {
  LstmState state;
  StepCache cache;
};

// Throws ShapeMismatch when state or x sizes disagree with w.shape().
CellOutput cell_forward(const LstmState& state, std::span<const double> x, const LstmWeights& w);

struct SequenceCache {
  LstmShape shape;
  std::vector<StepCache> steps;
  std::vector<double> h_last;
};

struct SequenceOutput {
  double prediction;
  SequenceCache cache;
};

// Unrolls the cell over `window` (window.size() / input steps) from a zero
// state, then applies the linear head. Throws EmptyWindow / ShapeMismatch.
SequenceOutput sequence_forward(std::span<const double> window, const LstmWeights& w);

// Forward pass without caches.
double predict(std::span<const double> window, const LstmWeights& w);

// BPTT: gradient of grad_output * prediction w.r.t. every parameter.
// Throws CacheMismatch if the cache came from a different shape.
LstmGradients sequence_backward(const SequenceCache& cache, double grad_output,
                                const LstmWeights& w);
// As sequence_backward, but adds into `grads`.
void accumulate_sequence_backward(const SequenceCache& cache, double grad_output,
                                  const LstmWeights& w, LstmGradients& grads);

}  // namespace bayeswind::lstm
