#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bayeswind/data_ingest.hpp"
#include "bayeswind/lstm.hpp"
#include "bayeswind/numerics.hpp"

namespace bayeswind::bbb {

using numerics::MixturePrior;

// Diagonal Gaussian posterior over every network parameter, sigma = softplus(rho).
struct VariationalParams {
  lstm::LstmParams mu;
  lstm::LstmParams rho;

  const lstm::LstmShape& shape() const { return mu.shape(); }
  std::size_t size() const { return mu.size(); }
  double sigma(std::size_t k) const { return numerics::softplus(rho.values()[k]); }

  // mu ~ N(0, mu_std^2), rho = rho0 everywhere.
  static VariationalParams initialize(const lstm::LstmShape& shape, numerics::RngStream& rng,
                                      double mu_std = 0.05, double rho0 = -5.0);
  // Posterior collapsed onto fixed weights (rho = rho0, typically -40).
  static VariationalParams point_mass(const lstm::LstmWeights& weights, double rho0 = -40.0);

  bool operator==(const VariationalParams&) const = default;
};

struct SampledWeights {
  lstm::LstmWeights theta;
  std::vector<double> epsilon;
};

// theta = mu + softplus(rho) * eps with eps ~ N(0, I); eps drawn in parameter order.
SampledWeights sample_weights(const VariationalParams& vp, numerics::RngStream& rng);
// Same transform with caller-supplied noise.
SampledWeights weights_from_noise(const VariationalParams& vp, std::vector<double> epsilon);

// Single-sample estimate of the variational cost on one mini-batch.
struct CostEvaluation {
  double loss = 0.0;  // mse + kl_weight * (logq - logp)
  double mse = 0.0;
  double logq = 0.0;
  double logp = 0.0;
  double kl_weight = 0.0;
  std::vector<double> predictions;
  std::vector<double> labels;
  std::vector<lstm::SequenceCache> caches;
};

// Throws EmptyBatch when `indices` is empty.
CostEvaluation variational_cost(const VariationalParams& vp, const SampledWeights& sampled,
                                const ingest::WindowedDataset& data,
                                std::span<const std::size_t> indices, const MixturePrior& prior,
                                double kl_weight);

// log q(theta | mu, sigma) and log p(theta) summed over all parameters.
double log_posterior(const VariationalParams& vp, const lstm::LstmWeights& theta);
double log_prior(const lstm::LstmWeights& theta, const MixturePrior& prior);

struct VariationalGradients {
  lstm::LstmParams d_mu;
  lstm::LstmParams d_rho;
};

// Reparameterization gradients of eval.loss w.r.t. (mu, rho):
//   d/dmu    = g_theta + kl_weight * dF/dmu
//   d/dsigma = g_theta * eps + kl_weight * dF/dsigma,  d/drho = d/dsigma * sigmoid(rho)
// where g_theta = dMSE/dtheta + kl_weight * dF/dtheta and F = log q - log p.
// Throws CacheMismatch when eval does not belong to (vp, sampled).
VariationalGradients cost_gradients(const VariationalParams& vp, const SampledWeights& sampled,
                                    const CostEvaluation& eval, const MixturePrior& prior);

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 800;
  double learning_rate = 0.001;
  MixturePrior prior{1.0, 1.0, 0.1};
  // Unset means 1 / (batches per epoch).
  std::optional<double> kl_weight;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double init_mu_std = 0.05;
  double init_rho = -5.0;

  // Throws ConfigInvalid.
  void validate() const;
};

std::size_t batches_per_epoch(std::size_t n_windows, std::size_t batch_size);

struct StepReport {
  double loss;
  double mse;
  double kl;  // logq - logp
  std::size_t batch_size;
};

// Applies Adam or SGD updates to (mu, rho) from one weight sample per batch.
//
// The per-batch objective is (sum of squared errors + kl_weight * (log q - log p))
// divided by the batch's true size, i.e. variational_cost with a KL weight of
// kl_weight / batch_size.
class BbbTrainer {
 public:
  BbbTrainer(const TrainConfig& config, VariationalParams init, double kl_weight);

  // Throws EmptyBatch, DivergedLoss.
  StepReport step(const ingest::WindowedDataset& data, std::span<const std::size_t> indices,
                  numerics::RngStream& noise);
  // Same update with fixed noise.
  StepReport step_with_noise(const ingest::WindowedDataset& data,
                             std::span<const std::size_t> indices, std::vector<double> epsilon);

  const VariationalParams& params() const { return params_; }
  double kl_weight() const { return kl_weight_; }
  std::size_t steps_taken() const { return steps_; }

 private:
  void apply(std::span<double> param, std::span<const double> grad, std::vector<double>& m,
             std::vector<double>& v);

  TrainConfig config_;
  VariationalParams params_;
  double kl_weight_;
  std::size_t steps_ = 0;
  std::vector<double> m_mu_, v_mu_, m_rho_, v_rho_;
};

struct TrainResult {
  VariationalParams params;
  double kl_weight = 0.0;
  std::vector<double> epoch_loss;  // mean per-batch loss
  std::vector<double> epoch_mse;
};

// Streams derived from config.seed: 0 initializes mu, 1 shuffles, 2 draws weight noise.
inline constexpr std::uint64_t kInitStream = 0;
inline constexpr std::uint64_t kShuffleStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

// Throws EmptyDataset, DivergedLoss, ConfigInvalid.
TrainResult train(const ingest::WindowedDataset& data, const TrainConfig& config,
                  const lstm::LstmShape& shape);
TrainResult train(const ingest::WindowedDataset& data, const TrainConfig& config,
                  VariationalParams init);

// In-place Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, numerics::RngStream& rng);

}  // namespace bayeswind::bbb
