#pragma once

// Run directories: episodes.csv, updates.csv, summary.json, checkpoints and
// airfoil exports; plus the cross-run comparison table.

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mflight/checkpoint.hpp"
#include "mflight/config.hpp"
#include "mflight/io.hpp"
#include "mflight/orchestrator.hpp"

namespace mflight {

inline constexpr int kSummaryVersion = 1;

inline std::string format_beta(double b) { return std::isnan(b) ? std::string("nan") : format_double(b); }

inline CsvTable episodes_table(const std::vector<EpisodeLog>& eps) {
  CsvTable t{"episodes", kCsvVersion, {"episode", "phase", "fidelity", "worker", "re_c", "reward", "beta", "clip_fraction"}, {}};
  t.rows.reserve(eps.size());
  for (const auto& e : eps)
    t.rows.push_back({std::to_string(e.episode), std::string(to_string(e.phase)), std::string(to_string(e.fidelity)),
                      std::to_string(e.worker), format_double(e.re_c), format_double(e.reward), format_beta(e.beta),
                      format_double(e.clip_fraction)});
  return t;
}

inline CsvTable updates_table(const std::vector<UpdateLog>& ups) {
  CsvTable t{"updates", kCsvVersion,
             {"update", "phase", "last_episode", "mean_ratio", "clip_fraction", "value_loss", "entropy", "approx_kl",
              "epochs", "early_stopped", "aborted", "ratio_clamps"},
             {}};
  for (const auto& u : ups) {
    const auto& s = u.stats;
    t.rows.push_back({std::to_string(u.update), std::string(to_string(u.phase)), std::to_string(u.last_episode),
                      format_double(s.mean_ratio), format_double(s.clip_fraction), format_double(s.value_loss),
                      format_double(s.entropy), format_double(s.approx_kl), std::to_string(s.epochs),
                      std::to_string(int(s.early_stopped)), std::to_string(int(s.aborted)),
                      std::to_string(s.ratio_clamps)});
  }
  return t;
}

inline CsvTable histogram_table(const std::vector<HistogramBin>& bins) {
  CsvTable t{"histogram", kCsvVersion, {"bin", "reward_lo", "reward_hi", "count"}, {}};
  for (std::size_t i = 0; i < bins.size(); ++i)
    t.rows.push_back({std::to_string(i), format_double(bins[i].lo), format_double(bins[i].hi), std::to_string(bins[i].count)});
  return t;
}

inline std::string selig_text(const AirfoilShape& shape) {
  std::ostringstream os;
  write_selig(os, shape);
  return os.str();
}

inline std::string cp_text(const AeroResult& aero) {
  std::ostringstream os;
  write_cp_csv(os, aero);
  return os.str();
}

inline Json summary_json(const RunConfig& cfg, const CampaignReport& rep) {
  Json s;
  s["schema"] = "mflight-summary";
  s["version"] = kSummaryVersion;
  s["mode"] = std::string(to_string(rep.mode));
  s["seed"] = cfg.seed;
  if (rep.source) {
    s["source"]["episodes"] = rep.source->episodes.size();
    s["source"]["completed"] = rep.source->completed;
    s["source"]["completion_episode"] =
        rep.source->completion_episode ? Json(*rep.source->completion_episode) : Json(nullptr);
    s["source"]["high_fidelity_calls"] = rep.source_high_fidelity_calls;
  }
  s["target"]["fidelity"] = std::string(to_string(rep.target.fidelity));
  s["target"]["episodes"] = rep.target.episodes.size();
  s["target"]["last_window"] = rep.target_last.count;
  s["target"]["last_mean"] = rep.target_last.mean;
  s["target"]["last_variance"] = rep.target_last.variance;
  s["target"]["final_trailing_mean"] = rep.target_final_trailing_mean;
  s["target"]["trailing_window"] = cfg.ctl.k;
  s["target"]["episodes_to_threshold"] = rep.episodes_to_threshold ? Json(*rep.episodes_to_threshold) : Json(nullptr);
  s["calls"]["low"] = rep.low_fidelity_calls;
  s["calls"]["high"] = rep.high_fidelity_calls;
  s["config"] = config_to_json(cfg);
  return s;
}

/// Writes every artifact of a finished campaign into `dir`.
inline void write_run(const std::filesystem::path& dir, const RunConfig& cfg, const CampaignReport& rep) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  atomic_write(dir / "episodes.csv", episodes_table(all_episodes(rep)).to_string());
  atomic_write(dir / "updates.csv", updates_table(all_updates(rep)).to_string());
  if (rep.source_final) {
    const auto text = serialize_checkpoint(*rep.source_final);
    atomic_write(dir / "source_final.ckpt", text);
    atomic_write(dir / "target_initial.ckpt", text);
  }
  atomic_write(dir / "target_final.ckpt", serialize_checkpoint(rep.target_final));
  auto env = make_environment(cfg.target.fidelity, cfg.environment(cfg.target.fidelity));
  const auto mean = mean_predictive_shape(rep.target_final.params, cfg.target.dist.mu, *env, cfg.state_reference, cfg.penalty);
  atomic_write(dir / "mean_shape.dat", selig_text(mean.shape));
  if (mean.shape.valid && !mean.aero.cp.empty()) atomic_write(dir / "mean_shape_cp.csv", cp_text(mean.aero));
  auto summary = summary_json(cfg, rep);
  summary["mean_shape"]["re_c"] = mean.re_c;
  summary["mean_shape"]["cd"] = mean.penalized ? Json(nullptr) : Json(mean.aero.cd);
  atomic_write(dir / "summary.json", summary.dump(2) + "\n");
}

struct RunSummary {
  std::filesystem::path dir;
  Json summary;
  std::vector<double> target_rewards;
  Fidelity target_fidelity = Fidelity::Low;
};

inline RunSummary read_run(const std::filesystem::path& dir) {
  RunSummary r;
  r.dir = dir;
  const auto text = read_file(dir / "summary.json");
  r.summary = Json::parse(text, nullptr, false);
  if (r.summary.is_discarded() || !r.summary.is_object() || r.summary.value("schema", "") != "mflight-summary")
    throw SchemaError(dir.string() + ": summary.json is not a run summary");
  if (r.summary.value("version", -1) != kSummaryVersion)
    throw SchemaError(dir.string() + ": summary version " + r.summary["version"].dump() + " is not supported");
  const auto table = parse_csv(read_file(dir / "episodes.csv"), "episodes");
  const auto ph = table.column("phase");
  const auto rw = table.column("reward");
  const auto fd = table.column("fidelity");
  for (const auto& row : table.rows) {
    if (row[ph] != "target") continue;
    r.target_rewards.push_back(std::stod(row[rw]));
    r.target_fidelity = fidelity_from_string(row[fd]);
  }
  return r;
}

struct ComparisonRow {
  std::string run;
  std::string mode;
  std::size_t target_episodes = 0;
  std::uint64_t high_fidelity_calls = 0;
  std::optional<std::size_t> episodes_to_threshold;
  double last_mean = 0.0;
  double last_variance = 0.0;
  std::optional<double> savings;  // fraction, relative to the reference run
};

struct Comparison {
  std::string reference;
  double threshold = 0.0;
  std::size_t window = 0;
  std::vector<ComparisonRow> rows;
};

/// The first scratch run (else the first run) is the reference; its final
/// trailing mean sets the threshold every run is measured against.
inline Comparison compare_runs(const std::vector<RunSummary>& runs) {
  if (runs.size() < 2) throw ConfigError("compare needs at least two run directories");
  std::size_t ref = 0;
  for (std::size_t i = 0; i < runs.size(); ++i)
    if (runs[i].summary.value("mode", "") == "scratch") {
      ref = i;
      break;
    }
  Comparison c;
  c.reference = runs[ref].dir.string();
  c.window = runs[ref].summary["target"].value("trailing_window", std::size_t{50});
  c.threshold = threshold_from_reference(final_trailing_mean(runs[ref].target_rewards, c.window));
  const auto ref_e2t = episodes_to_threshold(runs[ref].target_rewards, c.window, c.threshold);
  for (const auto& r : runs) {
    ComparisonRow row;
    row.run = r.dir.string();
    row.mode = r.summary.value("mode", "");
    row.target_episodes = r.target_rewards.size();
    row.high_fidelity_calls = r.summary["calls"].value("high", std::uint64_t{0});
    row.episodes_to_threshold = episodes_to_threshold(r.target_rewards, c.window, c.threshold);
    const auto st = reward_stats(std::span(r.target_rewards).last(std::min(kFinalWindow, r.target_rewards.size())));
    row.last_mean = st.mean;
    row.last_variance = st.variance;
    if (ref_e2t && row.episodes_to_threshold)
      row.savings = 1.0 - static_cast<double>(*row.episodes_to_threshold) / static_cast<double>(*ref_e2t);
    c.rows.push_back(row);
  }
  return c;
}

inline std::string comparison_text(const Comparison& c) {
  CsvTable t{"comparison", kCsvVersion,
             {"run", "mode", "target_episodes", "high_fidelity_calls", "episodes_to_threshold", "last500_mean",
              "last500_variance", "savings_pct"},
             {}};
  for (const auto& r : c.rows)
    t.rows.push_back({r.run, r.mode, std::to_string(r.target_episodes), std::to_string(r.high_fidelity_calls),
                      r.episodes_to_threshold ? std::to_string(*r.episodes_to_threshold) : "none",
                      format_double(r.last_mean), format_double(r.last_variance),
                      r.savings ? format_double(100.0 * *r.savings) : "nan"});
  return t.to_string();
}

}  // namespace mflight
