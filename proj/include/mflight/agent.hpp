#pragma once

// Gaussian policy and value function approximators.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "mflight/mlp.hpp"
#include "mflight/rng.hpp"

namespace mflight {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

struct AgentConfig {
  std::size_t state_dim = 1;
  std::size_t action_dim = 13;
  std::vector<std::size_t> hidden{64, 64};
  double log_std_init = -0.5;
  double hidden_gain = 1.0;
  double output_gain = 0.01;
};

/// All trainable parameters: policy mean network, state-independent
/// log standard deviation, and value network.
struct PolicyParams {
  Mlp policy;
  std::vector<double> log_std;
  Mlp value;

  PolicyParams zeros_like() const {
    return {policy.zeros_like(), std::vector<double>(log_std.size(), 0.0), value.zeros_like()};
  }

  /// Every parameter tensor in a fixed order.
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    for (auto& L : self.policy.layers()) {
      fn(std::span(L.weight));
      fn(std::span(L.bias));
    }
    fn(std::span(self.log_std));
    for (auto& L : self.value.layers()) {
      fn(std::span(L.weight));
      fn(std::span(L.bias));
    }
  }
  template <typename Fn>
  void for_each(Fn&& fn) {
    visit(*this, std::forward<Fn>(fn));
  }
  template <typename Fn>
  void for_each(Fn&& fn) const {
    visit(*this, std::forward<Fn>(fn));
  }

  std::size_t size() const {
    std::size_t n = 0;
    for_each([&](auto s) { n += s.size(); });
    return n;
  }

  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(size());
    for_each([&](auto s) { out.insert(out.end(), s.begin(), s.end()); });
    return out;
  }

  void assign(std::span<const double> flat) {
    std::size_t k = 0;
    for_each([&](auto s) {
      for (auto& v : s) v = flat[k++];
    });
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](auto s) {
      for (double v : s) ok = ok && std::isfinite(v);
    });
    return ok;
  }

  void clamp_log_std() {
    for (double& v : log_std) v = std::clamp(v, kLogStdMin, kLogStdMax);
  }

  friend bool operator==(const PolicyParams& a, const PolicyParams& b) {
    return a.flatten() == b.flatten();
  }
};

inline PolicyParams make_params(const AgentConfig& cfg, Rng& rng) {
  std::vector<std::size_t> psizes{cfg.state_dim};
  psizes.insert(psizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  auto vsizes = psizes;
  psizes.push_back(cfg.action_dim);
  vsizes.push_back(1);
  PolicyParams p{Mlp(psizes), std::vector<double>(cfg.action_dim, cfg.log_std_init), Mlp(vsizes)};
  p.policy.initialize(rng, cfg.hidden_gain, cfg.output_gain);
  p.value.initialize(rng, cfg.hidden_gain, cfg.output_gain);
  p.clamp_log_std();
  return p;
}

struct PolicyOutput {
  std::vector<double> mean;
  std::vector<double> std;
};

inline PolicyOutput forward_policy(const PolicyParams& params, double state) {
  const double in[1] = {state};
  PolicyOutput out;
  out.mean = params.policy.forward(in);
  out.std.resize(params.log_std.size());
  std::transform(params.log_std.begin(), params.log_std.end(), out.std.begin(),
                 [](double l) { return std::exp(l); });
  return out;
}

/// Diagonal-Gaussian log density.
inline double gaussian_log_prob(std::span<const double> action, std::span<const double> mean,
                                std::span<const double> log_std) {
  constexpr double half_log_2pi = 0.91893853320467274178;
  double lp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - half_log_2pi;
  }
  return lp;
}

/// Differential entropy of the diagonal Gaussian.
inline double gaussian_entropy(std::span<const double> log_std) {
  constexpr double half_log_2pi_e = 1.41893853320467274178;
  double h = 0.0;
  for (double l : log_std) h += l + half_log_2pi_e;
  return h;
}

struct GaussianAction {
  std::vector<double> action;          // pre-clip sample
  double log_prob = 0.0;               // density of the pre-clip sample
  std::vector<double> clipped_action;  // elementwise clamp to [-1, 1]
};

inline std::vector<double> clip_unit(std::span<const double> a) {
  std::vector<double> out(a.begin(), a.end());
  for (double& v : out) v = std::clamp(v, -1.0, 1.0);
  return out;
}

inline GaussianAction act(const PolicyParams& params, double state, Rng& rng) {
  const double in[1] = {state};
  const auto mean = params.policy.forward(in);
  GaussianAction out;
  out.action.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i)
    out.action[i] = mean[i] + std::exp(params.log_std[i]) * rng.normal();
  out.log_prob = gaussian_log_prob(out.action, mean, params.log_std);
  out.clipped_action = clip_unit(out.action);
  return out;
}

/// Mean action clipped to the action box; no sampling.
inline std::vector<double> greedy_action(const PolicyParams& params, double state) {
  const double in[1] = {state};
  return clip_unit(params.policy.forward(in));
}

inline double value(const PolicyParams& params, double state) {
  const double in[1] = {state};
  return params.value.forward(in)[0];
}

/// Discounted returns G_t = sum_{k >= t} gamma^(k - t) r_k.
inline std::vector<double> compute_return(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    g[t] = acc;
  }
  return g;
}

/// One-step advantage; with single-step episodes Q(s, a) = r.
inline double advantage(double reward, double value_estimate) { return reward - value_estimate; }

/// Shifts to zero mean and scales to unit (population) standard deviation.
/// A batch with zero spread is only centered.
inline void normalize_advantages(std::span<double> adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double sd = std::sqrt(var);
  for (double& a : adv) a = sd > 1e-12 ? (a - mean) / sd : a - mean;
}

// Gradient helpers. Each accumulates into `grad` and returns the primal value.

/// d log pi(action | state) scaled by `scale`.
inline double log_prob_backward(const PolicyParams& params, double state, std::span<const double> action,
                                double scale, PolicyParams& grad) {
  const double in[1] = {state};
  Mlp::Cache cache;
  const auto mean = params.policy.forward(in, &cache);
  const double lp = gaussian_log_prob(action, mean, params.log_std);
  std::vector<double> dmean(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double inv_var = std::exp(-2.0 * params.log_std[i]);
    const double diff = action[i] - mean[i];
    dmean[i] = scale * diff * inv_var;
    grad.log_std[i] += scale * (diff * diff * inv_var - 1.0);
  }
  params.policy.backward(cache, dmean, grad.policy);
  return lp;
}

/// Gradient of `scale` * (V(state) - target)^2.
inline double value_sq_error_backward(const PolicyParams& params, double state, double target,
                                      double scale, PolicyParams& grad) {
  const double in[1] = {state};
  Mlp::Cache cache;
  const double v = params.value.forward(in, &cache)[0];
  const double d[1] = {2.0 * scale * (v - target)};
  params.value.backward(cache, d, grad.value);
  return (v - target) * (v - target);
}

}  // namespace mflight
