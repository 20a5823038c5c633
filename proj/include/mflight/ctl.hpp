#pragma once

// Variance-ratio convergence gate for transferring a policy between tasks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mflight/agent.hpp"
#include "mflight/error.hpp"

namespace mflight {

struct CtlConfig {
  std::size_t k = 50;       // look-back window
  double gamma_cut = 0.3;   // completion threshold on beta

  void validate() const {
    if (k < 2) throw ConfigError("ctl.k must be at least 2");
    if (!(gamma_cut > 0.0 && gamma_cut < 1.0)) throw ConfigError("ctl.gamma_cut must lie in (0, 1)");
  }
};

/// Population variance; a single reward gives 0. Deviations are taken from
/// the first reward, so a constant window is exactly 0.
inline double window_statistic(std::span<const double> rewards) {
  if (rewards.empty()) return 0.0;
  const double shift = rewards.front();
  double mean = 0.0;
  for (double r : rewards) mean += r - shift;
  mean /= static_cast<double>(rewards.size());
  double var = 0.0;
  for (double r : rewards) var += (r - shift - mean) * (r - shift - mean);
  return var / static_cast<double>(rewards.size());
}

inline constexpr double kDegenerateVariance = 1e-12;

/// beta_e = xi_e / max xi, with xi the window variance of the last min(e, k)
/// rewards. While the window fills the maximum runs over all xi so far; once
/// e >= k it runs over full-window variances only, so small-sample warm-up
/// estimates cannot pin the denominator.
class TransferController {
 public:
  TransferController() : TransferController(CtlConfig{}) {}
  explicit TransferController(const CtlConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  double update(double reward) {
    if (!std::isfinite(reward)) throw InvalidReward("non-finite reward passed to the transfer controller");
    rewards_.push_back(reward);
    const std::size_t e = rewards_.size();
    const std::size_t w = std::min(e, cfg_.k);
    const double xi = window_statistic(std::span(rewards_).last(w));
    xi_.push_back(xi);
    if (e < cfg_.k) {
      warmup_max_ = std::max(warmup_max_, xi);
    } else {
      full_max_ = std::max(full_max_, xi);
    }
    double beta;
    if (e == 1) {
      beta = 1.0;
    } else {
      const double denom = e < cfg_.k ? warmup_max_ : full_max_;
      beta = denom <= kDegenerateVariance ? 0.0 : xi / denom;
    }
    beta_.push_back(beta);
    if (!complete_ && e >= cfg_.k && beta <= cfg_.gamma_cut) {
      complete_ = true;
      completion_episode_ = e;
    }
    return beta;
  }

  const CtlConfig& config() const { return cfg_; }
  bool complete() const { return complete_; }
  /// 1-based episode at which completion fired.
  std::optional<std::size_t> completion_episode() const { return completion_episode_; }
  std::size_t episodes() const { return rewards_.size(); }
  const std::vector<double>& reward_history() const { return rewards_; }
  const std::vector<double>& xi_history() const { return xi_; }
  const std::vector<double>& beta_history() const { return beta_; }

  /// Rebuilds a controller by replaying a reward log.
  static TransferController replay(const CtlConfig& cfg, std::span<const double> rewards) {
    TransferController c(cfg);
    for (double r : rewards) c.update(r);
    return c;
  }

 private:
  CtlConfig cfg_;
  std::vector<double> rewards_;
  std::vector<double> xi_;
  std::vector<double> beta_;
  double warmup_max_ = 0.0;
  double full_max_ = 0.0;
  bool complete_ = false;
  std::optional<std::size_t> completion_episode_;
};

/// Deep copy of every network parameter; optimizer moments are not carried.
inline PolicyParams transfer(const PolicyParams& source) { return source; }

}  // namespace mflight
