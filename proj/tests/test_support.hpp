#pragma once

// Oracles and fixtures shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "mflight/mflight.hpp"

namespace mflight::testing {

/// NACA 4-digit symmetric section (closed trailing edge), cosine spacing,
/// ordered trailing edge -> lower -> leading edge -> upper -> trailing edge.
inline AirfoilShape naca_symmetric(double thickness, std::size_t panels) {
  const std::size_t m = panels / 2;
  auto half = [thickness](double x) {
    return 5.0 * thickness *
           (0.2969 * std::sqrt(x) - 0.1260 * x - 0.3516 * x * x + 0.2843 * x * x * x - 0.1036 * x * x * x * x);
  };
  std::vector<Point> pts;
  for (std::size_t i = m + 1; i-- > 0;) {
    const double x = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(m)));
    pts.push_back({x, -half(x)});
  }
  for (std::size_t i = 1; i <= m; ++i) {
    const double x = 0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(m)));
    pts.push_back({x, half(x)});
  }
  pts.front().y = 0.0;
  pts.back() = pts.front();
  return analyze_shape(std::move(pts), m);
}

/// Circle of unit diameter through (0, 0) and (1, 0), clockwise from (1, 0).
inline AirfoilShape cylinder(std::size_t panels) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i <= panels; ++i) {
    const double phi = -2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(panels);
    pts.push_back({0.5 + 0.5 * std::cos(phi), 0.5 * std::sin(phi)});
  }
  pts.back() = pts.front();
  AirfoilShape s;
  s.points = std::move(pts);
  s.leading_edge_index = panels / 2;
  s.valid = true;
  return s;
}

/// |a - b| / max(|a|, |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Largest elementwise relative error between an analytic gradient and
/// central differences of `f` over every parameter (step h).
inline double max_gradient_error(const PolicyParams& params, const PolicyParams& analytic,
                                 const std::function<double(const PolicyParams&)>& f, double h = 1e-6) {
  auto flat = params.flatten();
  const auto g = analytic.flatten();
  PolicyParams probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + h;
    probe.assign(flat);
    const double fp = f(probe);
    flat[i] = saved - h;
    probe.assign(flat);
    const double fm = f(probe);
    flat[i] = saved;
    worst = std::max(worst, relative_error((fp - fm) / (2.0 * h), g[i]));
  }
  return worst;
}

/// Random small network: 1-3 layers of at most 16 units, non-trivial output gain.
inline AgentConfig small_agent(Rng& rng, std::size_t action_dim = 3) {
  AgentConfig c;
  c.action_dim = action_dim;
  c.hidden.clear();
  const std::size_t layers = static_cast<std::size_t>(rng.uniform() * 2.0) + 1;  // 1 or 2 hidden -> 2 or 3 layers
  for (std::size_t l = 0; l < layers; ++l) c.hidden.push_back(2 + static_cast<std::size_t>(rng.uniform() * 15.0));
  c.output_gain = 0.5 + rng.uniform();
  c.log_std_init = -0.5 + 0.5 * rng.normal();
  return c;
}

inline PolicyParams randomize_biases(PolicyParams p, Rng& rng) {
  for (auto* net : {&p.policy, &p.value})
    for (auto& L : net->layers())
      for (double& b : L.bias) b = 0.3 * rng.normal();
  return p;
}

/// Batch of `n` records drawn from the policy itself, with perturbed old
/// log-probabilities so ratios differ from 1.
inline ExperienceBatch random_batch(const PolicyParams& p, Rng& rng, std::size_t n, double perturb = 0.15) {
  ExperienceBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.normal();
    auto a = act(p, s, rng);
    EpisodeRecord r;
    r.state = s;
    r.action = a.action;
    r.log_prob_old = a.log_prob + perturb * rng.normal();
    r.reward = rng.normal();
    r.value_old = value(p, s);
    b.records.push_back(r);
  }
  b.prepare();
  return b;
}

/// 1-state, 1-action toy problem with reward -(a - 0.3)^2 on the clipped action.
inline constexpr double kToyOptimum = 0.3;

inline double toy_reward(double a) {
  const double c = std::clamp(a, -1.0, 1.0);
  return -(c - kToyOptimum) * (c - kToyOptimum);
}

/// Trains the toy problem; returns the final policy mean.
inline double train_toy(std::uint64_t seed, std::size_t updates, std::size_t batch = 20,
                        const PpoConfig& cfg = {}) {
  AgentConfig ac;
  ac.action_dim = 1;
  Rng init(derive_seed({seed, 1}));
  PolicyParams p = make_params(ac, init);
  AdamState adam = AdamState::for_params(p);
  Rng rng(derive_seed({seed, 2}));
  for (std::size_t u = 0; u < updates; ++u) {
    ExperienceBatch b;
    for (std::size_t i = 0; i < batch; ++i) {
      auto a = act(p, 0.0, rng);
      b.records.push_back({0.0, a.action, a.log_prob, toy_reward(a.action[0]), value(p, 0.0), 0.0, 0.0});
    }
    b.prepare();
    update(p, b, cfg, adam);
  }
  return forward_policy(p, 0.0).mean[0];
}

/// Environment returning a fixed drag for every valid shape.
class ConstantEnvironment final : public Environment {
 public:
  ConstantEnvironment(double cd, Fidelity f = Fidelity::Low, EnvironmentConfig cfg = {})
      : Environment(std::move(cfg)), cd_(cd), fidelity_(f) {}
  Fidelity fidelity() const override { return fidelity_; }

  bool converged = true;
  bool throw_solver_error = false;

 protected:
  AeroResult do_evaluate(const AirfoilShape&, double) const override {
    if (throw_solver_error) throw SolverError("scripted singular system");
    AeroResult r;
    r.cd = cd_;
    r.converged = converged;
    return r;
  }

 private:
  double cd_;
  Fidelity fidelity_;
};

}  // namespace mflight::testing
