#include "bayeswind/bbb.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "bayeswind/error.hpp"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace bayeswind::bbb {
namespace {

using numerics::RngStream;

ingest::WindowedDataset toy_dataset(std::size_t n, std::size_t len, RngStream& rng) {
  ingest::PowerSeries s;
  double v = 0.5;
  for (std::size_t i = 0; i < n + len; ++i) {
    v = std::clamp(0.9 * v + 0.05 + 0.05 * rng.normal(), 0.0, 1.0);
    s.values.push_back(v);
  }
  return ingest::make_windows(s, len);
}

VariationalParams random_posterior(const lstm::LstmShape& shape, RngStream& rng) {
  VariationalParams vp{lstm::LstmParams(shape), lstm::LstmParams(shape)};
  for (auto& m : vp.mu.values()) m = 0.5 * rng.normal();
  for (auto& r : vp.rho.values()) r = -3.0 + 3.0 * rng.uniform();
  return vp;
}

// Cost recomputed from scratch with the reference network and direct
// densities, as a function of the concatenated (mu, rho) vector.
template <typename T>
T reference_cost(std::span<const T> mu_rho, std::size_t hidden, std::span<const double> eps,
                 const ingest::WindowedDataset& data, std::span<const std::size_t> idx,
                 const numerics::MixturePrior& prior, double kl_weight) {
  const std::size_t n = eps.size();
  const T two_pi = T(2) * std::acos(T(-1));
  std::vector<T> theta(n);
  T logq = 0, logp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const T sigma = std::log1p(std::exp(mu_rho[n + k]));
    theta[k] = mu_rho[k] + sigma * T(eps[k]);
    logq += -T(0.5) * std::log(two_pi) - std::log(sigma) - T(0.5) * T(eps[k]) * T(eps[k]);
    const T t = theta[k];
    const T s1 = prior.sigma1, s2 = prior.sigma2;
    const T p1 = std::exp(-T(0.5) * t * t / (s1 * s1)) / (std::sqrt(two_pi) * s1);
    const T p2 = std::exp(-T(0.5) * t * t / (s2 * s2)) / (std::sqrt(two_pi) * s2);
    logp += std::log(T(prior.pi) * p1 + T(1 - prior.pi) * p2);
  }
  T sse = 0;
  for (std::size_t i : idx) {
    const T e = testing::reference_lstm<T>(theta, hidden, data.window(i)) - T(data.labels[i]);
    sse += e * e;
  }
  return sse / T(idx.size()) + T(kl_weight) * (logq - logp);
}

TEST(SampleWeights, Reparameterization) {
  RngStream rng(1);
  const auto vp = random_posterior({3, 1}, rng);
  std::vector<double> eps(vp.size());
  for (auto& e : eps) e = rng.normal();
  const auto sw = weights_from_noise(vp, eps);
  for (std::size_t k = 0; k < vp.size(); ++k) {
    EXPECT_EQ(sw.theta.values()[k], vp.mu.values()[k] + vp.sigma(k) * eps[k]);
  }
  EXPECT_THROW(weights_from_noise(vp, std::vector<double>(3)), Error);
}

TEST(SampleWeights, DrawsFollowTheStream) {
  RngStream a(4, 2), b(4, 2);
  RngStream init(0);
  const auto vp = VariationalParams::initialize({3, 1}, init);
  const auto sw = sample_weights(vp, a);
  EXPECT_EQ(sw.epsilon, numerics::sample_standard_normal(b, vp.size()));
}

TEST(VariationalParams, InitializeUsesGivenScales) {
  RngStream rng(2);
  const auto vp = VariationalParams::initialize({16, 1}, rng, 0.05, -5.0);
  for (double r : vp.rho.values()) EXPECT_EQ(r, -5.0);
  EXPECT_NEAR(testing::population_std(vp.mu.values()), 0.05, 0.005);
}

TEST(VariationalParams, PointMassCollapsesSamples) {
  RngStream rng(3);
  lstm::LstmParams w({3, 1});
  for (auto& v : w.values()) v = rng.normal();
  const auto vp = VariationalParams::point_mass(w);
  const auto sw = sample_weights(vp, rng);
  for (std::size_t k = 0; k < w.size(); ++k) {
    EXPECT_NEAR(sw.theta.values()[k], w.values()[k], 1e-16 * std::max(1.0, std::fabs(w.values()[k])) * 100);
  }
}

TEST(VariationalCost, MatchesReference) {
  RngStream rng(5);
  const auto data = toy_dataset(30, 4, rng);
  const auto vp = random_posterior({3, 1}, rng);
  const auto sw = sample_weights(vp, rng);
  const std::vector<std::size_t> idx = {0, 3, 7, 29};
  const numerics::MixturePrior prior{0.6, 1.0, 0.2};
  const auto eval = variational_cost(vp, sw, data, idx, prior, 0.01);
  std::vector<double> mu_rho(vp.mu.values().begin(), vp.mu.values().end());
  mu_rho.insert(mu_rho.end(), vp.rho.values().begin(), vp.rho.values().end());
  EXPECT_NEAR(eval.loss, reference_cost<double>(mu_rho, 3, sw.epsilon, data, idx, prior, 0.01),
              1e-10);
  EXPECT_NEAR(eval.logq, log_posterior(vp, sw.theta), 0.0);
  EXPECT_EQ(eval.predictions.size(), 4u);
}

TEST(VariationalCost, EmptyBatch) {
  RngStream rng(6);
  const auto data = toy_dataset(10, 4, rng);
  const auto vp = random_posterior({3, 1}, rng);
  const auto sw = sample_weights(vp, rng);
  try {
    variational_cost(vp, sw, data, {}, {}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBatch);
  }
}

TEST(CostGradients, MatchFiniteDifferencesAtFrozenNoise) {
  RngStream rng(7);
  const auto data = toy_dataset(40, 4, rng);
  const numerics::MixturePrior prior{0.5, 1.0, 0.3};
  for (int trial = 0; trial < 5; ++trial) {
    const auto vp = random_posterior({3, 1}, rng);
    const auto sw = sample_weights(vp, rng);
    const std::vector<std::size_t> idx = {1, 5, 9, 20, 33};
    const double kw = 0.02;
    const auto eval = variational_cost(vp, sw, data, idx, prior, kw);
    const auto g = cost_gradients(vp, sw, eval, prior);
    auto x = testing::widen<long double>(vp.mu.values());
    const auto rho = testing::widen<long double>(vp.rho.values());
    x.insert(x.end(), rho.begin(), rho.end());
    const std::function<long double(std::span<const long double>)> f = [&](auto p) {
      return reference_cost<long double>(p, 3, sw.epsilon, data, idx, prior, kw);
    };
    const std::size_t n = vp.size();
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const double analytic = k < n ? g.d_mu.values()[k] : g.d_rho.values()[k - n];
      EXPECT_LT(testing::gradient_error(analytic, testing::central_difference(f, x, k)), 1e-5)
          << "coordinate " << k;
    }
  }
}

TEST(CostGradients, MismatchedEvaluation) {
  RngStream rng(8);
  const auto data = toy_dataset(10, 4, rng);
  const auto vp3 = random_posterior({3, 1}, rng);
  const auto vp4 = random_posterior({4, 1}, rng);
  const auto sw3 = sample_weights(vp3, rng);
  const std::vector<std::size_t> idx = {0, 1};
  const auto eval = variational_cost(vp3, sw3, data, idx, {}, 0.0);
  try {
    cost_gradients(vp4, sample_weights(vp4, rng), CostEvaluation{}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCacheMismatch);
  }
  EXPECT_THROW(cost_gradients(vp4, sw3, eval, {}), Error);
}

TEST(KlEstimate, MatchesClosedFormForGaussianPrior) {
  // q = N(0, s^2) per weight, p = N(0, 1): KL = -ln s + (s^2 - 1) / 2.
  const lstm::LstmShape shape{3, 1};
  const double s = 0.4;
  VariationalParams vp{lstm::LstmParams(shape), lstm::LstmParams(shape)};
  for (auto& r : vp.rho.values()) r = numerics::inverse_softplus(s);
  const double exact = vp.size() * (-std::log(vp.sigma(0)) + (vp.sigma(0) * vp.sigma(0) - 1) / 2);
  RngStream rng(9);
  std::vector<double> kl(5000);
  const numerics::MixturePrior prior{1.0, 1.0, 0.1};
  for (auto& v : kl) {
    const auto sw = sample_weights(vp, rng);
    v = log_posterior(vp, sw.theta) - log_prior(sw.theta, prior);
  }
  const double stderr_ = testing::population_std(kl) / std::sqrt(kl.size());
  EXPECT_LT(std::fabs(testing::mean(kl) - exact), 4.0 * stderr_);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.validate();
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& t) { t.epochs = 0; }, [](TrainConfig& t) { t.batch_size = 0; },
           [](TrainConfig& t) { t.learning_rate = 0.0; },
           [](TrainConfig& t) { t.kl_weight = -1.0; },
           [](TrainConfig& t) { t.prior.pi = 2.0; }}) {
    TrainConfig bad;
    mutate(bad);
    try {
      bad.validate();
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfigInvalid);
    }
  }
}

TEST(BatchesPerEpoch, CeilingDivision) {
  EXPECT_EQ(batches_per_epoch(34521, 800), 44u);
  EXPECT_EQ(batches_per_epoch(800, 800), 1u);
  EXPECT_EQ(batches_per_epoch(801, 800), 2u);
}

TEST(ShuffledIndices, IsPermutation) {
  RngStream rng(10);
  for (std::size_t n : {1u, 2u, 17u, 1000u}) {
    auto idx = shuffled_indices(n, rng);
    std::sort(idx.begin(), idx.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(idx, expected);
  }
}

TEST(BbbTrainer, SgdStepFollowsGradient) {
  RngStream rng(11);
  const auto data = toy_dataset(20, 4, rng);
  const auto vp = random_posterior({3, 1}, rng);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::kSgd;
  cfg.learning_rate = 0.01;
  const std::vector<std::size_t> idx = {0, 2, 4, 6};
  std::vector<double> eps(vp.size());
  for (auto& e : eps) e = rng.normal();
  BbbTrainer trainer(cfg, vp, 0.3);
  trainer.step_with_noise(data, idx, eps);

  const auto sw = weights_from_noise(vp, eps);
  const auto eval = variational_cost(vp, sw, data, idx, cfg.prior, 0.3 / 4.0);
  const auto g = cost_gradients(vp, sw, eval, cfg.prior);
  for (std::size_t k = 0; k < vp.size(); ++k) {
    EXPECT_NEAR(trainer.params().mu.values()[k], vp.mu.values()[k] - 0.01 * g.d_mu.values()[k], 1e-15);
    EXPECT_NEAR(trainer.params().rho.values()[k], vp.rho.values()[k] - 0.01 * g.d_rho.values()[k], 1e-15);
  }
}

TEST(BbbTrainer, FirstAdamStepIsNormalizedGradient) {
  RngStream rng(12);
  const auto data = toy_dataset(20, 4, rng);
  const auto vp = random_posterior({3, 1}, rng);
  TrainConfig cfg;
  cfg.learning_rate = 0.003;
  const std::vector<std::size_t> idx = {0, 1, 2};
  std::vector<double> eps(vp.size());
  for (auto& e : eps) e = rng.normal();
  BbbTrainer trainer(cfg, vp, 0.1);
  trainer.step_with_noise(data, idx, eps);
  EXPECT_EQ(trainer.steps_taken(), 1u);

  // After bias correction m_hat = g and v_hat = g^2.
  const auto sw = weights_from_noise(vp, eps);
  const auto g = cost_gradients(vp, sw, variational_cost(vp, sw, data, idx, cfg.prior, 0.1 / 3.0),
                                cfg.prior);
  for (std::size_t k = 0; k < vp.size(); ++k) {
    const double gk = g.d_mu.values()[k];
    EXPECT_NEAR(trainer.params().mu.values()[k],
                vp.mu.values()[k] - 0.003 * gk / (std::fabs(gk) + 1e-8), 1e-15);
  }
}

TEST(BbbTrainer, DivergedLoss) {
  RngStream rng(13);
  auto data = toy_dataset(5, 4, rng);
  data.labels[0] = 1e300;
  BbbTrainer trainer(TrainConfig{}, random_posterior({3, 1}, rng), 0.0);
  try {
    trainer.step(data, std::vector<std::size_t>{0}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergedLoss);
  }
}

TEST(Train, EmptyDataset) {
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    train(ingest::WindowedDataset{}, cfg, lstm::LstmShape{3, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyDataset);
  }
}

TEST(Train, DeterministicAndLearns) {
  RngStream rng(14);
  const auto data = toy_dataset(400, 6, rng);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.01;
  cfg.seed = 3;
  const auto a = train(data, cfg, lstm::LstmShape{4, 1});
  const auto b = train(data, cfg, lstm::LstmShape{4, 1});
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  EXPECT_DOUBLE_EQ(a.kl_weight, 1.0 / 13.0);
  ASSERT_EQ(a.epoch_mse.size(), 8u);
  EXPECT_LT(a.epoch_mse.back(), a.epoch_mse.front());

  cfg.seed = 4;
  EXPECT_NE(train(data, cfg, lstm::LstmShape{4, 1}).params, a.params);
}

}  // namespace
}  // namespace bayeswind::bbb
