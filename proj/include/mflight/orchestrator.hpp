#pragma once

// Training campaigns: source phase gated by the transfer controller, parameter
// transfer, target phase. Experience is collected by a pool of workers in
// rounds of T_L episodes and merged in episode order before each update.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mflight/aeroenv.hpp"
#include "mflight/agent.hpp"
#include "mflight/checkpoint.hpp"
#include "mflight/ctl.hpp"
#include "mflight/error.hpp"
#include "mflight/geometry.hpp"
#include "mflight/ppo.hpp"
#include "mflight/rng.hpp"

namespace mflight {

enum class Mode { Scratch, SingleFidelityCtl, MultiFidelityCtl };

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Scratch: return "scratch";
    case Mode::SingleFidelityCtl: return "single_fidelity_ctl";
    case Mode::MultiFidelityCtl: return "multi_fidelity_ctl";
  }
  return "scratch";
}

inline Mode mode_from_string(std::string_view s) {
  if (s == "scratch") return Mode::Scratch;
  if (s == "single_fidelity_ctl") return Mode::SingleFidelityCtl;
  if (s == "multi_fidelity_ctl") return Mode::MultiFidelityCtl;
  throw ConfigError("unknown mode '" + std::string(s) + "' (expected scratch|single_fidelity_ctl|multi_fidelity_ctl)");
}

enum class PhaseName { Source, Target };

inline std::string_view to_string(PhaseName p) { return p == PhaseName::Source ? "source" : "target"; }

struct PhaseConfig {
  Fidelity fidelity = Fidelity::Low;
  StateDistribution dist;
  std::size_t max_episodes = 5000;
};

/// Observation scaling, fixed for a whole campaign.
struct StateReference {
  double mu = 5.5e6;
  double sigma = 5e5;
};

struct RunConfig {
  Mode mode = Mode::MultiFidelityCtl;
  PhaseConfig source{Fidelity::Low, {}, 5000};
  PhaseConfig target{Fidelity::High, {}, 5000};
  AgentConfig agent;
  PpoConfig ppo;
  CtlConfig ctl;
  std::size_t workers = 4;
  std::size_t episodes_per_round = 20;  // T_L, pooled over all workers
  std::uint64_t seed = 0;
  GeometryBounds bounds = GeometryBounds::defaults();
  double penalty = kDefaultPenalty;
  StateReference state_reference;
  std::size_t low_fidelity_panels = 60;
  std::size_t high_fidelity_panels = 200;
  double alpha_deg = 0.0;
  bool force_transfer = false;          // transfer at the source budget even if not complete
  std::optional<double> threshold;      // episodes-to-threshold level on target trailing means
  std::size_t max_consecutive_aborts = 3;

  void validate() const {
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (episodes_per_round < 1) throw ConfigError("episodes_per_round must be >= 1");
    if (episodes_per_round % workers != 0)
      throw ConfigError("episodes_per_round (" + std::to_string(episodes_per_round) + ") must be divisible by workers (" +
                        std::to_string(workers) + ")");
    if (mode != Mode::Scratch) {
      if (source.max_episodes == 0) throw ConfigError("source.max_episodes must be positive");
      source.dist.validate();
    }
    if (target.max_episodes == 0) throw ConfigError("target.max_episodes must be positive");
    target.dist.validate();
    if (mode == Mode::SingleFidelityCtl && source.fidelity != target.fidelity)
      throw ConfigError("single_fidelity_ctl needs the same fidelity in both phases");
    if (mode == Mode::MultiFidelityCtl && (source.fidelity != Fidelity::Low || target.fidelity != Fidelity::High))
      throw ConfigError("multi_fidelity_ctl needs a low-fidelity source and a high-fidelity target");
    if (agent.state_dim != 1 || agent.action_dim != kDesignSize)
      throw ConfigError("agent must map 1 state to " + std::to_string(kDesignSize) + " actions");
    for (auto h : agent.hidden)
      if (h == 0) throw ConfigError("agent.hidden sizes must be positive");
    if (!(agent.log_std_init >= kLogStdMin && agent.log_std_init <= kLogStdMax))
      throw ConfigError("agent.log_std_init must lie in [-5, 2]");
    ppo.validate();
    ctl.validate();
    bounds.validate();
    if (!(std::isfinite(penalty))) throw ConfigError("penalty must be finite");
    if (!(std::isfinite(state_reference.mu)) || !(state_reference.sigma > 0.0))
      throw ConfigError("state_reference.sigma must be positive");
    for (auto n : {low_fidelity_panels, high_fidelity_panels})
      if (n < 40 || n % 2 != 0) throw ConfigError("panel counts must be even and >= 40");
    if (!std::isfinite(alpha_deg)) throw ConfigError("alpha_deg must be finite");
    if (max_consecutive_aborts < 1) throw ConfigError("max_consecutive_aborts must be >= 1");
  }

  EnvironmentConfig environment(Fidelity f) const {
    EnvironmentConfig c;
    c.bounds = bounds;
    c.n_points = f == Fidelity::Low ? low_fidelity_panels : high_fidelity_panels;
    c.alpha = alpha_deg * std::numbers::pi / 180.0;
    return c;
  }
};

inline double normalize_state(double re_c, const StateReference& ref) { return (re_c - ref.mu) / ref.sigma; }

// Seed-derivation tags.
inline constexpr std::uint64_t kInitTag = 0x1417;
inline constexpr std::uint64_t kEvalTag = 0xE7A1;

inline std::uint64_t episode_seed(std::uint64_t seed, PhaseName phase, std::uint64_t episode) {
  return derive_seed({seed, static_cast<std::uint64_t>(phase) + 1, episode});
}

/// Worker parallelism, optionally capped by MFLIGHT_THREADS.
inline std::size_t thread_count(std::size_t workers) {
  std::size_t n = workers;
  if (const char* env = std::getenv("MFLIGHT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) n = std::min(n, static_cast<std::size_t>(v));
  }
  return std::max<std::size_t>(n, 1);
}

struct CollectedEpisode {
  EpisodeRecord record;
  std::size_t worker = 0;
  double re_c = 0.0;
  bool penalized = false;
};

struct RoundSpec {
  PhaseName phase = PhaseName::Source;
  std::uint64_t first_episode = 0;  // phase-local, 0-based
  std::size_t episodes = 0;
  std::size_t workers = 1;
  std::size_t per_worker = 1;       // T_L / W; sets the worker of each slot
};

/// Runs one round of episodes against an immutable parameter snapshot.
/// Results are indexed by episode, so the merge order is independent of
/// thread scheduling and of the worker count.
inline std::vector<CollectedEpisode> collect_round(const RoundSpec& spec, const PolicyParams& snapshot,
                                                   const Environment& env, const StateDistribution& dist,
                                                   const StateReference& ref, std::uint64_t seed, double penalty) {
  std::vector<CollectedEpisode> out(spec.episodes);
  auto run_slot = [&](std::size_t i) {
    Rng rng(episode_seed(seed, spec.phase, spec.first_episode + i));
    const double re = sample_state(dist, rng);
    const double s = normalize_state(re, ref);
    auto a = act(snapshot, s, rng);
    const auto res = step(env, DesignVector(a.clipped_action), re, penalty);
    auto& c = out[i];
    c.record.state = s;
    c.record.action = std::move(a.action);
    c.record.log_prob_old = a.log_prob;
    c.record.reward = res.reward;
    c.record.value_old = value(snapshot, s);
    c.worker = std::min(i / spec.per_worker, spec.workers - 1);
    c.re_c = re;
    c.penalized = res.penalized;
  };
  const std::size_t threads = std::min(thread_count(spec.workers), std::max<std::size_t>(spec.episodes, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < spec.episodes; ++i) run_slot(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < spec.episodes; i += threads) run_slot(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline ExperienceBatch to_batch(const std::vector<CollectedEpisode>& eps) {
  ExperienceBatch b;
  b.records.reserve(eps.size());
  for (const auto& e : eps) b.records.push_back(e.record);
  b.prepare();
  return b;
}

struct EpisodeLog {
  std::size_t episode = 0;  // campaign-wide, 1-based
  PhaseName phase = PhaseName::Source;
  Fidelity fidelity = Fidelity::Low;
  std::size_t worker = 0;
  double re_c = 0.0;
  double reward = 0.0;
  double beta = std::numeric_limits<double>::quiet_NaN();  // NaN without a controller
  double clip_fraction = 0.0;
  bool penalized = false;
};

struct UpdateLog {
  std::size_t update = 0;  // campaign-wide, 1-based
  PhaseName phase = PhaseName::Source;
  std::size_t last_episode = 0;
  UpdateStats stats;
};

struct PhaseLog {
  PhaseName name = PhaseName::Source;
  Fidelity fidelity = Fidelity::Low;
  std::vector<EpisodeLog> episodes;
  std::vector<UpdateLog> updates;
  bool completed = false;                       // controller fired
  std::optional<std::size_t> completion_episode; // phase-local, 1-based
  std::uint64_t env_calls = 0;
};

/// Training state shared across phases.
struct Learner {
  PolicyParams params;
  AdamState adam;
  std::size_t episodes_done = 0;  // campaign-wide
  std::size_t updates_done = 0;
};

/// Repeats collect -> update -> controller until the controller completes or the budget is spent.
inline PhaseLog run_phase(PhaseName name, const PhaseConfig& phase, const Environment& env, Learner& learner,
                          TransferController* controller, const RunConfig& cfg) {
  PhaseLog log;
  log.name = name;
  log.fidelity = env.fidelity();
  const std::uint64_t calls_before = env.calls();
  std::size_t done = 0;
  std::size_t consecutive_aborts = 0;
  while (done < phase.max_episodes && !(controller && controller->complete())) {
    RoundSpec spec;
    spec.phase = name;
    spec.first_episode = done;
    spec.episodes = std::min(cfg.episodes_per_round, phase.max_episodes - done);
    spec.workers = cfg.workers;
    spec.per_worker = cfg.episodes_per_round / cfg.workers;
    const PolicyParams snapshot = learner.params;
    const auto eps = collect_round(spec, snapshot, env, phase.dist, cfg.state_reference, cfg.seed, cfg.penalty);
    const auto batch = to_batch(eps);
    const auto stats = update(learner.params, batch, cfg.ppo, learner.adam);
    consecutive_aborts = stats.aborted ? consecutive_aborts + 1 : 0;
    if (consecutive_aborts >= cfg.max_consecutive_aborts)
      throw TrainingAborted("training aborted: " + std::to_string(consecutive_aborts) +
                            " consecutive updates produced non-finite gradients (" + std::string(to_string(name)) +
                            " phase, episode " + std::to_string(learner.episodes_done + eps.size()) + ")");
    ++learner.updates_done;
    for (const auto& e : eps) {
      ++done;
      ++learner.episodes_done;
      EpisodeLog row;
      row.episode = learner.episodes_done;
      row.phase = name;
      row.fidelity = env.fidelity();
      row.worker = e.worker;
      row.re_c = e.re_c;
      row.reward = e.record.reward;
      row.clip_fraction = stats.clip_fraction;
      row.penalized = e.penalized;
      if (controller) {
        const bool was_complete = controller->complete();
        row.beta = controller->update(e.record.reward);
        if (!was_complete && controller->complete()) {
          log.completed = true;
          log.completion_episode = done;
        }
      }
      log.episodes.push_back(row);
    }
    log.updates.push_back({learner.updates_done, name, learner.episodes_done, stats});
  }
  log.env_calls = env.calls() - calls_before;
  return log;
}

/// Mean of the last min(e, k) rewards after each episode.
inline std::vector<double> trailing_means(std::span<const double> rewards, std::size_t k) {
  std::vector<double> out(rewards.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    sum += rewards[i];
    if (i >= k) sum -= rewards[i - k];
    out[i] = sum / static_cast<double>(std::min(i + 1, k));
  }
  return out;
}

/// First 1-based episode whose trailing mean over a full window reaches `threshold`.
inline std::optional<std::size_t> episodes_to_threshold(std::span<const double> rewards, std::size_t k,
                                                        double threshold) {
  const auto tm = trailing_means(rewards, k);
  for (std::size_t i = k > 0 ? k - 1 : 0; i < tm.size(); ++i)
    if (tm[i] >= threshold) return i + 1;
  return std::nullopt;
}

/// Threshold 95% of the way to a (negative) reference level: within 5% of |ref| below it.
inline double threshold_from_reference(double reference_final_mean) {
  return reference_final_mean - 0.05 * std::abs(reference_final_mean);
}

/// Final trailing-k mean of a reward stream.
inline double final_trailing_mean(std::span<const double> rewards, std::size_t k) {
  if (rewards.empty()) return std::numeric_limits<double>::quiet_NaN();
  return trailing_means(rewards, k).back();
}

struct RewardStats {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

inline RewardStats reward_stats(std::span<const double> r) {
  RewardStats s;
  s.count = r.size();
  if (r.empty()) return s;
  s.min = *std::min_element(r.begin(), r.end());
  s.max = *std::max_element(r.begin(), r.end());
  for (double v : r) s.mean += v;
  s.mean /= static_cast<double>(r.size());
  for (double v : r) s.variance += (v - s.mean) * (v - s.mean);
  s.variance /= static_cast<double>(r.size());
  return s;
}

inline constexpr std::size_t kFinalWindow = 500;

inline std::vector<double> rewards_of(const PhaseLog& log) {
  std::vector<double> r;
  r.reserve(log.episodes.size());
  for (const auto& e : log.episodes) r.push_back(e.reward);
  return r;
}

struct CampaignReport {
  Mode mode = Mode::Scratch;
  std::optional<PhaseLog> source;
  PhaseLog target;
  std::optional<Checkpoint> source_final;    // also the target's starting point
  Checkpoint target_final;
  std::uint64_t low_fidelity_calls = 0;
  std::uint64_t high_fidelity_calls = 0;
  std::uint64_t source_high_fidelity_calls = 0;
  RewardStats target_last;                   // last kFinalWindow target episodes
  double target_final_trailing_mean = 0.0;   // over the controller window k
  std::optional<std::size_t> episodes_to_threshold;  // target-phase episodes, when a threshold is set
};

inline std::vector<EpisodeLog> all_episodes(const CampaignReport& r) {
  std::vector<EpisodeLog> out;
  if (r.source) out = r.source->episodes;
  out.insert(out.end(), r.target.episodes.begin(), r.target.episodes.end());
  return out;
}

inline std::vector<UpdateLog> all_updates(const CampaignReport& r) {
  std::vector<UpdateLog> out;
  if (r.source) out = r.source->updates;
  out.insert(out.end(), r.target.updates.begin(), r.target.updates.end());
  return out;
}

inline CampaignReport run_campaign(const RunConfig& cfg) {
  cfg.validate();
  LowFidelityEnvironment low(cfg.environment(Fidelity::Low));
  HighFidelityEnvironment high(cfg.environment(Fidelity::High));
  auto env_for = [&](Fidelity f) -> const Environment& {
    if (f == Fidelity::Low) return low;
    return high;
  };

  CampaignReport rep;
  rep.mode = cfg.mode;
  Rng init_rng(derive_seed({cfg.seed, kInitTag}));
  Learner learner;
  learner.params = make_params(cfg.agent, init_rng);
  learner.adam = AdamState::for_params(learner.params);

  std::optional<TransferController> controller;
  if (cfg.mode != Mode::Scratch) {
    controller.emplace(cfg.ctl);
    const std::uint64_t high_before = high.calls();
    rep.source = run_phase(PhaseName::Source, cfg.source, env_for(cfg.source.fidelity), learner, &*controller, cfg);
    rep.source_high_fidelity_calls = high.calls() - high_before;
    if (!controller->complete() && !cfg.force_transfer)
      throw TrainingAborted("source phase spent its budget of " + std::to_string(cfg.source.max_episodes) +
                            " episodes without the transfer criterion firing (set force_transfer to transfer anyway)");
    rep.source_final = Checkpoint{learner.params, controller};
    learner.params = transfer(learner.params);
    learner.adam = AdamState::for_params(learner.params);
  }
  rep.target = run_phase(PhaseName::Target, cfg.target, env_for(cfg.target.fidelity), learner, nullptr, cfg);
  rep.target_final = Checkpoint{learner.params, controller};
  rep.low_fidelity_calls = low.calls();
  rep.high_fidelity_calls = high.calls();

  const auto rewards = rewards_of(rep.target);
  const std::size_t n_last = std::min(kFinalWindow, rewards.size());
  rep.target_last = reward_stats(std::span(rewards).last(n_last));
  rep.target_final_trailing_mean = final_trailing_mean(rewards, cfg.ctl.k);
  if (cfg.threshold) rep.episodes_to_threshold = episodes_to_threshold(rewards, cfg.ctl.k, *cfg.threshold);
  return rep;
}

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

inline constexpr std::size_t kHistogramBins = 50;

/// Equal-width bins spanning [min, max]; the last bin is closed.
inline std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins = kHistogramBins) {
  std::vector<HistogramBin> out;
  if (values.empty() || bins == 0) return out;
  const double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (hi == lo) hi = lo + 1e-12;
  const double w = (hi - lo) / static_cast<double>(bins);
  out.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + w * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + w * static_cast<double>(b + 1);
  }
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / w);
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

struct MeanShape {
  double re_c = 0.0;
  std::vector<double> action;  // clipped policy mean
  AirfoilShape shape;
  AeroResult aero;
  double reward = 0.0;
  bool penalized = false;
};

/// Shape proposed by the policy mean at a given Reynolds number.
inline MeanShape mean_predictive_shape(const PolicyParams& params, double re_c, const Environment& env,
                                       const StateReference& ref, double penalty = kDefaultPenalty) {
  MeanShape m;
  m.re_c = re_c;
  m.action = greedy_action(params, normalize_state(re_c, ref));
  auto res = step(env, DesignVector(m.action), re_c, penalty);
  m.shape = std::move(res.shape);
  m.aero = std::move(res.aero);
  m.reward = res.reward;
  m.penalized = res.penalized;
  return m;
}

struct EvaluationSummary {
  std::vector<double> rewards;
  RewardStats stats;
  std::size_t penalized = 0;
  std::vector<HistogramBin> bins;
  std::optional<MeanShape> mean_shape;  // absent for zero episodes
};

/// Greedy episodes (policy mean, no sampling) on states drawn from `dist`.
inline EvaluationSummary evaluate_policy(const PolicyParams& params, const StateDistribution& dist,
                                         const Environment& env, std::size_t n_episodes, std::uint64_t seed,
                                         const StateReference& ref, double penalty = kDefaultPenalty) {
  EvaluationSummary s;
  if (n_episodes == 0) return s;
  Rng rng(derive_seed({seed, kEvalTag}));
  s.rewards.reserve(n_episodes);
  for (std::size_t i = 0; i < n_episodes; ++i) {
    const double re = sample_state(dist, rng);
    const auto res = step(env, DesignVector(greedy_action(params, normalize_state(re, ref))), re, penalty);
    s.rewards.push_back(res.reward);
    s.penalized += res.penalized;
  }
  s.stats = reward_stats(s.rewards);
  s.bins = histogram(s.rewards);
  s.mean_shape = mean_predictive_shape(params, dist.mu, env, ref, penalty);
  return s;
}

}  // namespace mflight
