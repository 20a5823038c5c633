#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace mflight;
using mflight::testing::max_gradient_error;
using mflight::testing::random_batch;
using mflight::testing::randomize_biases;
using mflight::testing::small_agent;
using mflight::testing::train_toy;

namespace {

PolicyParams scalar_policy(std::uint64_t seed) {
  AgentConfig c;
  c.action_dim = 1;
  c.hidden = {8};
  Rng rng(seed);
  return make_params(c, rng);
}

// One record whose ratio under `p` is exactly `ratio`.
ExperienceBatch single_record(const PolicyParams& p, double ratio, double adv) {
  EpisodeRecord r;
  r.state = 0.2;
  r.action = {0.1};
  r.log_prob_old = gaussian_log_prob(r.action, forward_policy(p, r.state).mean, p.log_std) - std::log(ratio);
  r.advantage = adv;
  r.reward = r.ret = value(p, r.state);
  r.value_old = r.reward;
  return {{r}};
}

}  // namespace

TEST(ProbRatio, Examples) {
  EXPECT_EQ(prob_ratio(-1.3, -1.3), 1.0);
  EXPECT_NEAR(prob_ratio(std::log(2.0) - 0.7, -0.7), 2.0, 1e-15);
}

TEST(ProbRatio, MatchesExpDifference) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double a = 5.0 * rng.normal(), b = 5.0 * rng.normal();
    const double oracle = std::min(std::exp(a) / std::exp(b), kMaxRatio);
    EXPECT_LE(std::abs(prob_ratio(a, b) - oracle), 1e-12 * std::max(1.0, oracle));
  }
}

TEST(ProbRatio, ClampsOverflow) {
  const auto r = prob_ratio_checked(100.0, -100.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_EQ(r.value, kMaxRatio);
  EXPECT_FALSE(prob_ratio_checked(1.0, 0.0).clamped);
}

TEST(Surrogate, TermBranches) {
  const auto up = surrogate_term(1.5, 1.0, 0.2);
  EXPECT_DOUBLE_EQ(up.objective, 1.2);
  EXPECT_TRUE(up.clipped);
  EXPECT_EQ(up.d_ratio, 0.0);
  const auto down = surrogate_term(0.5, -1.0, 0.2);
  EXPECT_DOUBLE_EQ(down.objective, -0.8);
  EXPECT_TRUE(down.clipped);
  const auto in = surrogate_term(1.1, 2.0, 0.2);
  EXPECT_FALSE(in.clipped);
  EXPECT_EQ(in.d_ratio, 2.0);
  // tie at the kink takes the unclipped branch
  const auto tie = surrogate_term(1.2, 1.0, 0.2);
  EXPECT_FALSE(tie.clipped);
  EXPECT_EQ(tie.d_ratio, 1.0);
  // unfavourable side stays unclipped and keeps its gradient
  EXPECT_FALSE(surrogate_term(1.5, -1.0, 0.2).clipped);
}

TEST(Surrogate, PositiveAdvantageClippedAboveOnePlusEpsilon) {
  const auto p = scalar_policy(2);
  PpoConfig cfg;
  cfg.value_coeff = 0.0;
  const auto batch = single_record(p, 1.5, 1.0);
  const auto res = clipped_surrogate(batch, p, cfg);
  EXPECT_NEAR(res.policy_loss, -1.2, 1e-12);
  EXPECT_EQ(res.clip_fraction, 1.0);
  for (double g : res.grad.flatten()) EXPECT_EQ(g, 0.0);
  // finite differences agree: the loss is flat around this point
  const auto f = [&](const PolicyParams& q) { return clipped_surrogate(batch, q, cfg).loss; };
  EXPECT_LE(max_gradient_error(p, res.grad, f), 1e-4);
}

TEST(Surrogate, NegativeAdvantageClippedBelowOneMinusEpsilon) {
  const auto p = scalar_policy(3);
  PpoConfig cfg;
  cfg.value_coeff = 0.0;
  const auto res = clipped_surrogate(single_record(p, 0.5, -1.0), p, cfg);
  EXPECT_NEAR(res.policy_loss, 0.8, 1e-12);
}

TEST(Surrogate, EmptyBatchThrows) {
  const auto p = scalar_policy(4);
  AdamState adam = AdamState::for_params(p);
  auto q = p;
  EXPECT_THROW(clipped_surrogate(ExperienceBatch{}, p, PpoConfig{}), EmptyBatch);
  EXPECT_THROW(update(q, ExperienceBatch{}, PpoConfig{}, adam), EmptyBatch);
}

TEST(Surrogate, RatioOneGivesMinusMeanAdvantage) {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = randomize_biases(make_params(small_agent(rng), rng), rng);
    auto batch = random_batch(p, rng, 20, 0.0);
    double mean_adv = 0.0;
    for (const auto& r : batch.records) mean_adv += r.advantage / 20.0;
    const auto res = clipped_surrogate(batch, p, PpoConfig{});
    EXPECT_NEAR(res.policy_loss, -mean_adv, 1e-10);
    EXPECT_NEAR(res.policy_loss, 0.0, 1e-10);
    EXPECT_NEAR(res.mean_ratio, 1.0, 1e-12);
    EXPECT_EQ(res.clip_fraction, 0.0);
    // un-normalized advantages: still exactly minus their mean
    for (auto& r : batch.records) r.advantage += 0.37;
    EXPECT_NEAR(clipped_surrogate(batch, p, PpoConfig{}).policy_loss, -(mean_adv + 0.37), 1e-10);
  }
}

TEST(Surrogate, PerSampleObjectiveWithinEnvelope) {
  Rng rng(6);
  for (int i = 0; i < 10000; ++i) {
    const double r = std::exp(rng.normal()), a = rng.normal(), eps = 0.05 + 0.4 * rng.uniform();
    const auto t = surrogate_term(r, a, eps);
    EXPECT_LE(t.objective, std::max(r * a, std::max((1 + eps) * a, (1 - eps) * a)) + 1e-15);
    EXPECT_LE(t.objective, r * a + 1e-15);
    if ((a > 0 && r > 1 + eps) || (a < 0 && r < 1 - eps)) {
      EXPECT_EQ(t.d_ratio, 0.0);
    }
  }
}

TEST(Surrogate, FullGradientMatchesFiniteDifferences) {
  Rng rng(7);
  for (int net = 0; net < 20; ++net) {
    const auto p = randomize_biases(make_params(small_agent(rng), rng), rng);
    const auto batch = random_batch(p, rng, 12);
    PpoConfig cfg;
    cfg.entropy_coeff = 0.01;
    const auto res = clipped_surrogate(batch, p, cfg);
    const auto f = [&](const PolicyParams& q) { return clipped_surrogate(batch, q, cfg).loss; };
    EXPECT_LE(max_gradient_error(p, res.grad, f), 1e-4) << net;
  }
}

TEST(Surrogate, ClampedRatioContributesNoGradient) {
  const auto p = scalar_policy(8);
  PpoConfig cfg;
  cfg.value_coeff = 0.0;
  auto batch = single_record(p, 1.0, -1.0);
  batch.records[0].log_prob_old -= 50.0;
  const auto res = clipped_surrogate(batch, p, cfg);
  EXPECT_EQ(res.ratio_clamps, 1u);
  for (double g : res.grad.flatten()) EXPECT_EQ(g, 0.0);
}

TEST(Update, ZeroLearningRateIsBitExactNoOp) {
  Rng rng(9);
  auto p = make_params(AgentConfig{}, rng);
  const auto before = p;
  auto adam = AdamState::for_params(p);
  PpoConfig cfg;
  cfg.learning_rate = 0.0;
  const auto stats = update(p, random_batch(p, rng, 80), cfg, adam);
  EXPECT_TRUE(p == before);
  EXPECT_FALSE(stats.aborted);
}

TEST(Update, MeanMovesTowardPositiveAdvantageActions) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto p = scalar_policy(seed);
    Rng rng(seed + 100);
    const double before = forward_policy(p, 0.0).mean[0];
    ExperienceBatch b;
    for (int i = 0; i < 40; ++i) {
      auto a = act(p, 0.0, rng);
      // reward increases with the action, so above-mean actions get positive advantage
      b.records.push_back({0.0, a.action, a.log_prob, a.action[0], value(p, 0.0), 0.0, 0.0});
    }
    b.prepare();
    auto adam = AdamState::for_params(p);
    update(p, b, PpoConfig{}, adam);
    EXPECT_GT(forward_policy(p, 0.0).mean[0], before) << seed;
  }
}

TEST(Update, StatisticsAreBounded) {
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = randomize_biases(make_params(small_agent(rng), rng), rng);
    auto adam = AdamState::for_params(p);
    PpoConfig cfg;
    cfg.learning_rate = 0.01 * rng.uniform();
    const auto s = update(p, random_batch(p, rng, 20, 0.5), cfg, adam);
    EXPECT_GE(s.clip_fraction, 0.0);
    EXPECT_LE(s.clip_fraction, 1.0);
    EXPECT_LE(s.epochs, cfg.epochs_per_update);
    EXPECT_TRUE(p.all_finite());
    for (double l : p.log_std) {
      EXPECT_GE(l, kLogStdMin);
      EXPECT_LE(l, kLogStdMax);
    }
  }
}

TEST(Update, NonFiniteGradientRestoresParameters) {
  Rng rng(11);
  auto p = make_params(AgentConfig{}, rng);
  auto adam = AdamState::for_params(p);
  update(p, random_batch(p, rng, 20), PpoConfig{}, adam);
  const auto before = p;
  const auto adam_before = adam;
  auto batch = random_batch(p, rng, 20);
  batch.records[3].advantage = std::nan("");
  const auto stats = update(p, batch, PpoConfig{}, adam);
  EXPECT_TRUE(stats.aborted);
  EXPECT_TRUE(p == before);
  EXPECT_EQ(adam.steps, adam_before.steps);
  EXPECT_TRUE(adam.m == adam_before.m);
}

TEST(Update, KlSafeguardStopsLargeSteps) {
  Rng rng(12);
  auto p = make_params(AgentConfig{}, rng);
  auto adam = AdamState::for_params(p);
  PpoConfig cfg;
  cfg.learning_rate = 0.05;
  const auto stats = update(p, random_batch(p, rng, 80, 0.0), cfg, adam);
  EXPECT_TRUE(stats.early_stopped);
  EXPECT_LT(stats.epochs, cfg.epochs_per_update);
  EXPECT_GT(stats.approx_kl, cfg.target_kl);
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
  const auto p0 = scalar_policy(13);
  auto p = p0;
  auto g = p.zeros_like();
  Rng rng(14);
  g.for_each([&](auto t) {
    for (double& x : t) x = rng.normal();
  });
  auto st = AdamState::for_params(p);
  PpoConfig cfg;
  cfg.learning_rate = 1e-3;
  adam_step(p, g, st, cfg);
  const auto a = p0.flatten(), b = p.flatten(), gf = g.flatten();
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_NEAR(a[i] - b[i], 1e-3 * gf[i] / (std::abs(gf[i]) + 1e-8), 1e-15);
  EXPECT_EQ(st.steps, 1u);
}

TEST(Adam, GlobalNorm) {
  auto g = scalar_policy(15).zeros_like();
  g.log_std[0] = 3.0;
  g.value.layers()[0].bias[0] = 4.0;
  EXPECT_DOUBLE_EQ(global_norm(g), 5.0);
}

TEST(PpoConfig, Validation) {
  PpoConfig c;
  EXPECT_NO_THROW(c.validate());
  c.clip_epsilon = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = -1e-4;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.epochs_per_update = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Batch, PrepareSetsReturnsAndNormalizedAdvantages) {
  ExperienceBatch b;
  for (double r : {-0.01, -0.02, -0.015, -0.1}) b.records.push_back({0.0, {0.0}, 0.0, r, -0.02, 0.0, 0.0});
  b.prepare();
  double mean = 0.0;
  for (const auto& r : b.records) {
    EXPECT_EQ(r.ret, r.reward);
    mean += r.advantage / 4.0;
  }
  EXPECT_LT(std::abs(mean), 1e-12);
  EXPECT_GT(b.records[0].advantage, b.records[3].advantage);
}

TEST(ToyQuadratic, ConvergesToOptimum) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const double m = train_toy(seed, 500);
    hits += std::abs(m - mflight::testing::kToyOptimum) <= 0.05;
  }
  EXPECT_GE(hits, 9);
}
