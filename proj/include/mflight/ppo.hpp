#pragma once

// Clipped-surrogate policy optimization over a pooled batch of single-step episodes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mflight/agent.hpp"
#include "mflight/error.hpp"

namespace mflight {

struct PpoConfig {
  double clip_epsilon = 0.2;
  double learning_rate = 3e-4;
  std::size_t epochs_per_update = 10;
  double entropy_coeff = 0.0;
  double value_coeff = 0.5;
  double max_grad_norm = 0.5;
  double gamma = 0.99;  // inert for single-step episodes
  double target_kl = 0.05;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("ppo.clip_epsilon must lie in (0, 1)");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw ConfigError("ppo.learning_rate must be finite and non-negative");
    if (epochs_per_update == 0) throw ConfigError("ppo.epochs_per_update must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma must lie in [0, 1]");
    if (!(max_grad_norm > 0.0)) throw ConfigError("ppo.max_grad_norm must be positive");
    if (!(target_kl > 0.0)) throw ConfigError("ppo.target_kl must be positive");
    if (!(value_coeff >= 0.0) || !(entropy_coeff >= 0.0)) throw ConfigError("ppo loss coefficients must be non-negative");
  }
};

struct EpisodeRecord {
  double state = 0.0;           // normalized observation
  std::vector<double> action;   // pre-clip sample
  double log_prob_old = 0.0;
  double reward = 0.0;
  double value_old = 0.0;
  double advantage = 0.0;
  double ret = 0.0;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct ExperienceBatch {
  std::vector<EpisodeRecord> records;

  /// Fills returns (single-step episodes: G = r) and batch-normalized advantages.
  void prepare() {
    std::vector<double> adv(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const double r[1] = {records[i].reward};
      records[i].ret = compute_return(r, 1.0)[0];
      adv[i] = advantage(records[i].ret, records[i].value_old);
    }
    normalize_advantages(adv);
    for (std::size_t i = 0; i < records.size(); ++i) records[i].advantage = adv[i];
  }

  friend bool operator==(const ExperienceBatch&, const ExperienceBatch&) = default;
};

inline constexpr double kMaxRatio = 1e6;

struct Ratio {
  double value;
  bool clamped;
};

/// exp(new - old), clamped to kMaxRatio.
inline Ratio prob_ratio_checked(double log_prob_new, double log_prob_old) {
  const double d = log_prob_new - log_prob_old;
  static const double kMaxLog = std::log(kMaxRatio);
  if (d > kMaxLog) return {kMaxRatio, true};
  return {std::exp(d), false};
}

inline double prob_ratio(double log_prob_new, double log_prob_old) {
  return prob_ratio_checked(log_prob_new, log_prob_old).value;
}

struct SurrogateTerm {
  double objective;   // min(r A, clip(r) A)
  double d_ratio;     // d objective / d r
  bool clipped;       // clipped branch active
};

/// Per-sample clipped objective. Ties take the unclipped branch.
inline SurrogateTerm surrogate_term(double ratio, double adv, double eps) {
  const double unclipped = ratio * adv;
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
  if (unclipped <= clipped) return {unclipped, adv, false};
  return {clipped, 0.0, true};
}

struct SurrogateResult {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;  // mean squared error, before value_coeff
  double entropy = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  std::size_t ratio_clamps = 0;
  PolicyParams grad;
};

/// loss = -mean[min(r A, clip(r) A)] + c_v mean[(V - G)^2] - c_e entropy, with exact gradients.
inline SurrogateResult clipped_surrogate(const ExperienceBatch& batch, const PolicyParams& params,
                                         const PpoConfig& cfg) {
  if (batch.records.empty()) throw EmptyBatch("clipped surrogate needs a non-empty batch");
  SurrogateResult res;
  res.grad = params.zeros_like();
  const double inv_n = 1.0 / static_cast<double>(batch.records.size());
  std::size_t clipped_count = 0;
  for (const auto& rec : batch.records) {
    const double in[1] = {rec.state};
    Mlp::Cache cache;
    const auto mean = params.policy.forward(in, &cache);
    const double lp = gaussian_log_prob(rec.action, mean, params.log_std);
    const auto ratio = prob_ratio_checked(lp, rec.log_prob_old);
    res.ratio_clamps += ratio.clamped;
    const auto term = surrogate_term(ratio.value, rec.advantage, cfg.clip_epsilon);
    res.policy_loss -= term.objective * inv_n;
    res.mean_ratio += ratio.value * inv_n;
    res.approx_kl += (rec.log_prob_old - lp) * inv_n;
    if (std::abs(ratio.value - 1.0) > cfg.clip_epsilon) ++clipped_count;

    // d loss / d log_prob = -(1/n) * dobj/dr * r
    const double dlp = ratio.clamped ? 0.0 : -inv_n * term.d_ratio * ratio.value;
    if (dlp != 0.0) {
      std::vector<double> dmean(mean.size());
      for (std::size_t i = 0; i < mean.size(); ++i) {
        const double inv_var = std::exp(-2.0 * params.log_std[i]);
        const double diff = rec.action[i] - mean[i];
        dmean[i] = dlp * diff * inv_var;
        res.grad.log_std[i] += dlp * (diff * diff * inv_var - 1.0);
      }
      params.policy.backward(cache, dmean, res.grad.policy);
    }
    res.value_loss += inv_n * value_sq_error_backward(params, rec.state, rec.ret, cfg.value_coeff * inv_n, res.grad);
  }
  res.entropy = gaussian_entropy(params.log_std);
  for (auto& g : res.grad.log_std) g -= cfg.entropy_coeff;
  res.clip_fraction = static_cast<double>(clipped_count) * inv_n;
  res.loss = res.policy_loss + cfg.value_coeff * res.value_loss - cfg.entropy_coeff * res.entropy;
  return res;
}

/// Adaptive-moment optimizer state, shaped like the parameters.
struct AdamState {
  PolicyParams m;
  PolicyParams v;
  std::size_t steps = 0;

  static AdamState for_params(const PolicyParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

/// Descent step params -= lr * m_hat / (sqrt(v_hat) + eps).
inline void adam_step(PolicyParams& params, const PolicyParams& grad, AdamState& st, const PpoConfig& cfg) {
  ++st.steps;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.steps));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.steps));
  auto p = params.flatten();
  const auto g = grad.flatten();
  auto m = st.m.flatten();
  auto v = st.v.flatten();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.adam_epsilon);
  }
  params.assign(p);
  st.m.assign(m);
  st.v.assign(v);
}

inline double global_norm(const PolicyParams& g) {
  double s = 0.0;
  g.for_each([&](auto t) {
    for (double x : t) s += x * x;
  });
  return std::sqrt(s);
}

struct UpdateStats {
  double mean_ratio = 1.0;
  double clip_fraction = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  std::size_t epochs = 0;        // gradient steps actually taken
  bool early_stopped = false;    // KL safeguard fired
  bool aborted = false;          // non-finite gradient; parameters restored
  std::size_t ratio_clamps = 0;
};

/// Full-batch epochs of clipped-surrogate descent. On a non-finite loss,
/// gradient or parameter the update is rolled back and reported as aborted.
inline UpdateStats update(PolicyParams& params, const ExperienceBatch& batch, const PpoConfig& cfg,
                          AdamState& adam) {
  if (batch.records.empty()) throw EmptyBatch("update needs a non-empty batch");
  const PolicyParams saved = params;
  const AdamState saved_adam = adam;
  UpdateStats stats;
  for (std::size_t epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    auto res = clipped_surrogate(batch, params, cfg);
    stats.mean_ratio = res.mean_ratio;
    stats.clip_fraction = res.clip_fraction;
    stats.value_loss = res.value_loss;
    stats.entropy = res.entropy;
    stats.approx_kl = res.approx_kl;
    stats.ratio_clamps += res.ratio_clamps;
    if (epoch > 0 && res.approx_kl > cfg.target_kl) {
      stats.early_stopped = true;
      break;
    }
    const double norm = global_norm(res.grad);
    if (!std::isfinite(norm) || !std::isfinite(res.loss) || !res.grad.all_finite()) {
      params = saved;
      adam = saved_adam;
      stats.aborted = true;
      return stats;
    }
    if (norm > cfg.max_grad_norm) {
      const double s = cfg.max_grad_norm / norm;
      res.grad.for_each([&](auto t) {
        for (double& x : t) x *= s;
      });
    }
    adam_step(params, res.grad, adam, cfg);
    params.clamp_log_std();
    ++stats.epochs;
  }
  if (!params.all_finite()) {
    params = saved;
    adam = saved_adam;
    stats.aborted = true;
  }
  return stats;
}

}  // namespace mflight
