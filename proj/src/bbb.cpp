#include "bayeswind/bbb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bayeswind/error.hpp"

namespace bayeswind::bbb {

using numerics::gaussian_logpdf;
using numerics::mixture_logpdf;
using numerics::mixture_logpdf_grad;
using numerics::sigmoid;
using numerics::softplus;

VariationalParams VariationalParams::initialize(const lstm::LstmShape& shape,
                                                numerics::RngStream& rng, double mu_std,
                                                double rho0) {
  VariationalParams vp{lstm::LstmParams(shape), lstm::LstmParams(shape)};
  for (auto& m : vp.mu.values()) m = mu_std * rng.normal();
  std::fill(vp.rho.values().begin(), vp.rho.values().end(), rho0);
  return vp;
}

VariationalParams VariationalParams::point_mass(const lstm::LstmWeights& weights, double rho0) {
  VariationalParams vp{weights, lstm::LstmParams(weights.shape())};
  std::fill(vp.rho.values().begin(), vp.rho.values().end(), rho0);
  return vp;
}

SampledWeights weights_from_noise(const VariationalParams& vp, std::vector<double> epsilon) {
  if (epsilon.size() != vp.size()) {
    throw Error(ErrorCode::kShapeMismatch, "noise length " + std::to_string(epsilon.size()) +
                                               " != " + std::to_string(vp.size()));
  }
  SampledWeights out{lstm::LstmWeights(vp.shape()), std::move(epsilon)};
  const auto mu = vp.mu.values();
  auto theta = out.theta.values();
  for (std::size_t k = 0; k < theta.size(); ++k) theta[k] = mu[k] + vp.sigma(k) * out.epsilon[k];
  return out;
}

SampledWeights sample_weights(const VariationalParams& vp, numerics::RngStream& rng) {
  return weights_from_noise(vp, numerics::sample_standard_normal(rng, vp.size()));
}

double log_posterior(const VariationalParams& vp, const lstm::LstmWeights& theta) {
  const auto mu = vp.mu.values();
  const auto th = theta.values();
  double acc = 0.0;
  for (std::size_t k = 0; k < th.size(); ++k) acc += gaussian_logpdf(th[k], mu[k], vp.sigma(k));
  return acc;
}

double log_prior(const lstm::LstmWeights& theta, const MixturePrior& prior) {
  prior.validate();
  double acc = 0.0;
  for (double t : theta.values()) acc += mixture_logpdf(t, prior);
  return acc;
}

CostEvaluation variational_cost(const VariationalParams& vp, const SampledWeights& sampled,
                                const ingest::WindowedDataset& data,
                                std::span<const std::size_t> indices, const MixturePrior& prior,
                                double kl_weight) {
  if (indices.empty()) throw Error(ErrorCode::kEmptyBatch, "empty mini-batch");
  CostEvaluation eval;
  eval.kl_weight = kl_weight;
  eval.predictions.reserve(indices.size());
  eval.labels.reserve(indices.size());
  eval.caches.reserve(indices.size());
  double sse = 0.0;
  for (std::size_t idx : indices) {
    if (idx >= data.size()) throw Error(ErrorCode::kOutOfRange, "window index out of range");
    auto fwd = lstm::sequence_forward(data.window(idx), sampled.theta);
    const double err = fwd.prediction - data.labels[idx];
    sse += err * err;
    eval.predictions.push_back(fwd.prediction);
    eval.labels.push_back(data.labels[idx]);
    eval.caches.push_back(std::move(fwd.cache));
  }
  eval.mse = sse / static_cast<double>(indices.size());
  eval.logq = log_posterior(vp, sampled.theta);
  eval.logp = log_prior(sampled.theta, prior);
  eval.loss = eval.mse + kl_weight * (eval.logq - eval.logp);
  return eval;
}

VariationalGradients cost_gradients(const VariationalParams& vp, const SampledWeights& sampled,
                                    const CostEvaluation& eval, const MixturePrior& prior) {
  const std::size_t n = eval.predictions.size();
  if (n == 0 || eval.caches.size() != n || eval.labels.size() != n ||
      !(sampled.theta.shape() == vp.shape()) || sampled.epsilon.size() != vp.size()) {
    throw Error(ErrorCode::kCacheMismatch, "cost evaluation does not match parameters");
  }
  prior.validate();

  // Data term: dMSE/dtheta through BPTT.
  lstm::LstmGradients g_theta(vp.shape());
  for (std::size_t b = 0; b < n; ++b) {
    const double dpred = 2.0 * (eval.predictions[b] - eval.labels[b]) / static_cast<double>(n);
    lstm::accumulate_sequence_backward(eval.caches[b], dpred, sampled.theta, g_theta);
  }

  VariationalGradients out{lstm::LstmParams(vp.shape()), lstm::LstmParams(vp.shape())};
  const auto mu = vp.mu.values();
  const auto rho = vp.rho.values();
  const auto theta = sampled.theta.values();
  const auto gt = g_theta.values();
  auto d_mu = out.d_mu.values();
  auto d_rho = out.d_rho.values();
  const double kw = eval.kl_weight;
  for (std::size_t k = 0; k < vp.size(); ++k) {
    const double sigma = softplus(rho[k]);
    const double diff = theta[k] - mu[k];
    const double inv_var = 1.0 / (sigma * sigma);
    // F = log q(theta | mu, sigma) - log p(theta), partials at fixed theta.
    const double dF_dtheta = -diff * inv_var - mixture_logpdf_grad(theta[k], prior);
    const double dF_dmu = diff * inv_var;
    const double dF_dsigma = -1.0 / sigma + diff * diff * inv_var / sigma;
    const double total_theta = gt[k] + kw * dF_dtheta;
    d_mu[k] = total_theta + kw * dF_dmu;
    const double d_sigma = total_theta * sampled.epsilon[k] + kw * dF_dsigma;
    d_rho[k] = d_sigma * sigmoid(rho[k]);
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "epochs, batch_size and learning_rate must be positive");
  }
  if (kl_weight && !(*kl_weight >= 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "kl_weight must be non-negative");
  }
  try {
    prior.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
}

std::size_t batches_per_epoch(std::size_t n_windows, std::size_t batch_size) {
  return (n_windows + batch_size - 1) / batch_size;
}

BbbTrainer::BbbTrainer(const TrainConfig& config, VariationalParams init, double kl_weight)
    : config_(config),
      params_(std::move(init)),
      kl_weight_(kl_weight),
      m_mu_(params_.size(), 0.0),
      v_mu_(params_.size(), 0.0),
      m_rho_(params_.size(), 0.0),
      v_rho_(params_.size(), 0.0) {
  config_.validate();
}

StepReport BbbTrainer::step(const ingest::WindowedDataset& data,
                            std::span<const std::size_t> indices, numerics::RngStream& noise) {
  return step_with_noise(data, indices, numerics::sample_standard_normal(noise, params_.size()));
}

StepReport BbbTrainer::step_with_noise(const ingest::WindowedDataset& data,
                                       std::span<const std::size_t> indices,
                                       std::vector<double> epsilon) {
  const SampledWeights sampled = weights_from_noise(params_, std::move(epsilon));
  const double batch_kl_weight = kl_weight_ / static_cast<double>(indices.size());
  const CostEvaluation eval =
      variational_cost(params_, sampled, data, indices, config_.prior, batch_kl_weight);
  if (!std::isfinite(eval.loss)) {
    throw Error(ErrorCode::kDivergedLoss, "non-finite loss at step " + std::to_string(steps_));
  }
  const VariationalGradients grads = cost_gradients(params_, sampled, eval, config_.prior);
  ++steps_;
  apply(params_.mu.values(), grads.d_mu.values(), m_mu_, v_mu_);
  apply(params_.rho.values(), grads.d_rho.values(), m_rho_, v_rho_);
  return {eval.loss, eval.mse, eval.logq - eval.logp, indices.size()};
}

void BbbTrainer::apply(std::span<double> param, std::span<const double> grad,
                       std::vector<double>& m, std::vector<double>& v) {
  const double lr = config_.learning_rate;
  if (config_.optimizer == Optimizer::kSgd) {
    for (std::size_t k = 0; k < param.size(); ++k) param[k] -= lr * grad[k];
    return;
  }
  const double b1 = config_.adam_beta1;
  const double b2 = config_.adam_beta2;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < param.size(); ++k) {
    m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
    v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
    const double m_hat = m[k] / c1;
    const double v_hat = v[k] / c2;
    param[k] -= lr * m_hat / (std::sqrt(v_hat) + config_.adam_epsilon);
  }
}

std::vector<std::size_t> shuffled_indices(std::size_t n, numerics::RngStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

TrainResult train(const ingest::WindowedDataset& data, const TrainConfig& config,
                  const lstm::LstmShape& shape) {
  config.validate();
  numerics::RngStream init_rng(config.seed, kInitStream);
  return train(data, config,
               VariationalParams::initialize(shape, init_rng, config.init_mu_std, config.init_rho));
}

TrainResult train(const ingest::WindowedDataset& data, const TrainConfig& config,
                  VariationalParams init) {
  config.validate();
  if (data.empty()) throw Error(ErrorCode::kEmptyDataset, "no training windows");
  if (data.window_len % init.shape().input != 0) {
    throw Error(ErrorCode::kShapeMismatch, "window length incompatible with input size");
  }
  const std::size_t n_batches = batches_per_epoch(data.size(), config.batch_size);
  const double kl_weight = config.kl_weight.value_or(1.0 / static_cast<double>(n_batches));

  BbbTrainer trainer(config, std::move(init), kl_weight);
  numerics::RngStream shuffle_rng(config.seed, kShuffleStream);
  numerics::RngStream noise_rng(config.seed, kNoiseStream);

  TrainResult result;
  result.kl_weight = kl_weight;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = shuffled_indices(data.size(), shuffle_rng);
    double loss_sum = 0.0;
    double mse_sum = 0.0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, data.size());
      const auto batch = std::span<const std::size_t>(order).subspan(begin, end - begin);
      const StepReport rep = trainer.step(data, batch, noise_rng);
      loss_sum += rep.loss;
      mse_sum += rep.mse;
    }
    result.epoch_loss.push_back(loss_sum / static_cast<double>(n_batches));
    result.epoch_mse.push_back(mse_sum / static_cast<double>(n_batches));
  }
  result.params = trainer.params();
  return result;
}

}  // namespace bayeswind::bbb
