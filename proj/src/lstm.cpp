#include "bayeswind/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bayeswind/error.hpp"
#include "bayeswind/numerics.hpp"

namespace bayeswind::lstm {

using numerics::sigmoid;

std::vector<TensorSpec> tensor_layout(const LstmShape& shape) {
  const std::size_t h = shape.hidden;
  const std::size_t k = shape.concat();
  std::vector<TensorSpec> out;
  std::size_t offset = 0;
  auto add = [&](const char* name, std::size_t rows, std::size_t cols) {
    out.push_back({name, rows, cols, offset});
    offset += rows * cols;
  };
  add("W_f", h, k);
  add("W_i", h, k);
  add("W_c", h, k);
  add("W_o", h, k);
  add("b_f", h, 1);
  add("b_i", h, 1);
  add("b_c", h, 1);
  add("b_o", h, 1);
  add("W_out", 1, h);
  add("b_out", 1, 1);
  return out;
}

LstmParams::LstmParams(const LstmShape& shape)
    : shape_(shape), values_(shape.param_count(), 0.0) {}

LstmParams::LstmParams(const LstmShape& shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.param_count()) {
    throw Error(ErrorCode::kShapeMismatch, "expected " + std::to_string(shape_.param_count()) +
                                               " parameters, got " +
                                               std::to_string(values_.size()));
  }
}

std::size_t LstmParams::gate_weight_offset(Gate g) const {
  return static_cast<std::size_t>(g) * shape_.hidden * shape_.concat();
}

std::size_t LstmParams::gate_bias_offset(Gate g) const {
  return 4 * shape_.hidden * shape_.concat() + static_cast<std::size_t>(g) * shape_.hidden;
}

std::span<const double> LstmParams::gate_weights(Gate g) const {
  return std::span<const double>(values_).subspan(gate_weight_offset(g),
                                                  shape_.hidden * shape_.concat());
}
std::span<double> LstmParams::gate_weights(Gate g) {
  return std::span<double>(values_).subspan(gate_weight_offset(g), shape_.hidden * shape_.concat());
}
std::span<const double> LstmParams::gate_bias(Gate g) const {
  return std::span<const double>(values_).subspan(gate_bias_offset(g), shape_.hidden);
}
std::span<double> LstmParams::gate_bias(Gate g) {
  return std::span<double>(values_).subspan(gate_bias_offset(g), shape_.hidden);
}
std::span<const double> LstmParams::head_weights() const {
  return std::span<const double>(values_).subspan(values_.size() - 1 - shape_.hidden,
                                                  shape_.hidden);
}
std::span<double> LstmParams::head_weights() {
  return std::span<double>(values_).subspan(values_.size() - 1 - shape_.hidden, shape_.hidden);
}

CellOutput cell_forward(const LstmState& state, std::span<const double> x, const LstmWeights& w) {
  const LstmShape& shape = w.shape();
  const std::size_t hidden = shape.hidden;
  if (x.size() != shape.input || state.h.size() != hidden || state.c.size() != hidden) {
    throw Error(ErrorCode::kShapeMismatch,
                "cell input " + std::to_string(x.size()) + "/state " +
                    std::to_string(state.h.size()) + " vs shape (" + std::to_string(hidden) +
                    ", " + std::to_string(shape.input) + ")");
  }
  CellOutput out;
  StepCache& k = out.cache;
  k.z.reserve(shape.concat());
  k.z.insert(k.z.end(), state.h.begin(), state.h.end());
  k.z.insert(k.z.end(), x.begin(), x.end());
  k.f.resize(hidden);
  k.i.resize(hidden);
  k.g.resize(hidden);
  k.o.resize(hidden);
  numerics::affine(w.gate_weights(Gate::kForget), k.z, w.gate_bias(Gate::kForget), k.f);
  numerics::affine(w.gate_weights(Gate::kInput), k.z, w.gate_bias(Gate::kInput), k.i);
  numerics::affine(w.gate_weights(Gate::kCandidate), k.z, w.gate_bias(Gate::kCandidate), k.g);
  numerics::affine(w.gate_weights(Gate::kOutput), k.z, w.gate_bias(Gate::kOutput), k.o);
  k.c_prev = state.c;
  k.c.resize(hidden);
  k.tanh_c.resize(hidden);
  out.state.h.resize(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    k.f[j] = sigmoid(k.f[j]);
    k.i[j] = sigmoid(k.i[j]);
    k.g[j] = std::tanh(k.g[j]);
    k.o[j] = sigmoid(k.o[j]);
    k.c[j] = k.f[j] * k.c_prev[j] + k.i[j] * k.g[j];
    k.tanh_c[j] = std::tanh(k.c[j]);
    out.state.h[j] = k.o[j] * k.tanh_c[j];
  }
  out.state.c = k.c;
  return out;
}

namespace {

std::size_t step_count(std::span<const double> window, const LstmShape& shape) {
  if (window.empty()) throw Error(ErrorCode::kEmptyWindow, "empty input window");
  if (window.size() % shape.input != 0) {
    throw Error(ErrorCode::kShapeMismatch, "window of " + std::to_string(window.size()) +
                                               " values is not a multiple of input size " +
                                               std::to_string(shape.input));
  }
  return window.size() / shape.input;
}

double head(const std::vector<double>& h, const LstmWeights& w) {
  const auto wo = w.head_weights();
  double acc = w.head_bias();
  for (std::size_t j = 0; j < h.size(); ++j) acc += wo[j] * h[j];
  return acc;
}

}  // namespace

SequenceOutput sequence_forward(std::span<const double> window, const LstmWeights& w) {
  const LstmShape& shape = w.shape();
  const std::size_t steps = step_count(window, shape);
  SequenceOutput out{0.0, {shape, {}, {}}};
  out.cache.steps.reserve(steps);
  LstmState state = LstmState::zeros(shape.hidden);
  for (std::size_t t = 0; t < steps; ++t) {
    CellOutput step = cell_forward(state, window.subspan(t * shape.input, shape.input), w);
    state = std::move(step.state);
    out.cache.steps.push_back(std::move(step.cache));
  }
  out.prediction = head(state.h, w);
  out.cache.h_last = std::move(state.h);
  return out;
}

double predict(std::span<const double> window, const LstmWeights& w) {
  const LstmShape& shape = w.shape();
  const std::size_t steps = step_count(window, shape);
  LstmState state = LstmState::zeros(shape.hidden);
  for (std::size_t t = 0; t < steps; ++t) {
    state = cell_forward(state, window.subspan(t * shape.input, shape.input), w).state;
  }
  return head(state.h, w);
}

LstmGradients sequence_backward(const SequenceCache& cache, double grad_output,
                                const LstmWeights& w) {
  LstmGradients grads(w.shape());
  accumulate_sequence_backward(cache, grad_output, w, grads);
  return grads;
}

void accumulate_sequence_backward(const SequenceCache& cache, double grad_output,
                                  const LstmWeights& w, LstmGradients& grads) {
  const LstmShape& shape = w.shape();
  if (!(cache.shape == shape) || !(grads.shape() == shape) || cache.steps.empty() ||
      cache.h_last.size() != shape.hidden) {
    throw Error(ErrorCode::kCacheMismatch, "cache does not match weight shape");
  }
  const std::size_t hidden = shape.hidden;
  const std::size_t width = shape.concat();

  auto gw_out = grads.head_weights();
  const auto w_out = w.head_weights();
  std::vector<double> dh(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    gw_out[j] += grad_output * cache.h_last[j];
    dh[j] = grad_output * w_out[j];
  }
  grads.head_bias() += grad_output;

  std::vector<double> dc_next(hidden, 0.0);
  std::array<std::vector<double>, 4> dpre;
  for (auto& v : dpre) v.resize(hidden);
  std::vector<double> dz(width);

  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const StepCache& k = cache.steps[t];
    for (std::size_t j = 0; j < hidden; ++j) {
      const double dc = dc_next[j] + dh[j] * k.o[j] * (1.0 - k.tanh_c[j] * k.tanh_c[j]);
      const double d_o = dh[j] * k.tanh_c[j];
      const double d_f = dc * k.c_prev[j];
      const double d_i = dc * k.g[j];
      const double d_g = dc * k.i[j];
      dc_next[j] = dc * k.f[j];
      dpre[0][j] = d_f * k.f[j] * (1.0 - k.f[j]);
      dpre[1][j] = d_i * k.i[j] * (1.0 - k.i[j]);
      dpre[2][j] = d_g * (1.0 - k.g[j] * k.g[j]);
      dpre[3][j] = d_o * k.o[j] * (1.0 - k.o[j]);
    }
    std::fill(dz.begin(), dz.end(), 0.0);
    for (Gate gate : kGates) {
      const auto& da = dpre[static_cast<std::size_t>(gate)];
      auto gW = grads.gate_weights(gate);
      auto gb = grads.gate_bias(gate);
      const auto W = w.gate_weights(gate);
      for (std::size_t r = 0; r < hidden; ++r) {
        const double a = da[r];
        gb[r] += a;
        double* grow = gW.data() + r * width;
        const double* wrow = W.data() + r * width;
        for (std::size_t c = 0; c < width; ++c) {
          grow[c] += a * k.z[c];
          dz[c] += a * wrow[c];
        }
      }
    }
    std::copy(dz.begin(), dz.begin() + static_cast<std::ptrdiff_t>(hidden), dh.begin());
  }
}

}  // namespace bayeswind::lstm
