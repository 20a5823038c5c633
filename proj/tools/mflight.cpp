// Command-line front end: train, evaluate, compare, defaults.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mflight/mflight.hpp"

namespace fs = std::filesystem;
using namespace mflight;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAborted = 3;
constexpr int kExitVersion = 4;

int cmd_train(const fs::path& config, const fs::path& out, std::optional<std::uint64_t> seed,
              const std::vector<std::string>& overrides) {
  RunConfig cfg = load_config(config, overrides);
  if (seed) cfg.seed = *seed;
  const auto report = run_campaign(cfg);
  write_run(out, cfg, report);
  std::cout << "target episodes " << report.target.episodes.size() << ", last-" << report.target_last.count
            << " mean reward " << format_double(report.target_last.mean) << "\n";
  return kExitOk;
}

int cmd_evaluate(const fs::path& checkpoint, const fs::path& config, std::size_t episodes, const fs::path& out,
                 std::uint64_t seed, const std::string& phase) {
  const RunConfig cfg = load_config(config);
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (phase != "source" && phase != "target") throw ConfigError("--phase must be source or target");
  const PhaseConfig& ph = phase == "source" ? cfg.source : cfg.target;
  auto env = make_environment(ph.fidelity, cfg.environment(ph.fidelity));
  const auto s = evaluate_policy(ck.params, ph.dist, *env, episodes, seed, cfg.state_reference, cfg.penalty);
  fs::create_directories(out);
  atomic_write(out / "histogram.csv", histogram_table(s.bins).to_string());
  Json j;
  j["schema"] = "mflight-evaluation";
  j["version"] = kSummaryVersion;
  j["episodes"] = s.rewards.size();
  j["penalized"] = s.penalized;
  j["mean"] = s.stats.mean;
  j["variance"] = s.stats.variance;
  j["min"] = s.stats.min;
  j["max"] = s.stats.max;
  j["histogram_bins"] = kHistogramBins;
  if (s.mean_shape) {
    j["mean_shape"]["re_c"] = s.mean_shape->re_c;
    j["mean_shape"]["cd"] = s.mean_shape->penalized ? Json(nullptr) : Json(s.mean_shape->aero.cd);
    atomic_write(out / "mean_shape.dat", selig_text(s.mean_shape->shape));
    if (!s.mean_shape->aero.cp.empty()) atomic_write(out / "mean_shape_cp.csv", cp_text(s.mean_shape->aero));
  }
  atomic_write(out / "evaluation.json", j.dump(2) + "\n");
  std::cout << "evaluated " << s.rewards.size() << " episodes, mean reward " << format_double(s.stats.mean) << "\n";
  return kExitOk;
}

int cmd_compare(const std::vector<fs::path>& dirs, const fs::path& out) {
  std::vector<RunSummary> runs;
  for (const auto& d : dirs) runs.push_back(read_run(d));
  const auto c = compare_runs(runs);
  const auto text = comparison_text(c);
  atomic_write(out, text);
  std::cout << "reference " << c.reference << ", threshold " << format_double(c.threshold) << "\n" << text;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity reinforcement learning for airfoil shape optimization"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "run a training campaign");
  fs::path train_config, train_out;
  std::optional<std::uint64_t> train_seed;
  std::vector<std::string> overrides;
  train->add_option("--config", train_config, "configuration file")->required();
  train->add_option("--out", train_out, "output directory")->required();
  train->add_option("--seed", train_seed, "master seed (overrides the configuration)");
  train->add_option("--set", overrides, "override a configuration key, key=value (repeatable)");

  auto* evaluate = app.add_subcommand("evaluate", "greedy evaluation of a checkpoint");
  fs::path eval_ckpt, eval_config, eval_out;
  std::size_t eval_episodes = 0;
  std::uint64_t eval_seed = 0;
  std::string eval_phase = "source";
  evaluate->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  evaluate->add_option("--config", eval_config, "configuration file")->required();
  evaluate->add_option("--episodes", eval_episodes, "number of greedy episodes")->required();
  evaluate->add_option("--out", eval_out, "output directory")->required();
  evaluate->add_option("--seed", eval_seed, "seed of the state stream");
  evaluate->add_option("--phase", eval_phase, "state distribution and fidelity to evaluate on (source|target)");

  auto* compare = app.add_subcommand("compare", "compare finished runs");
  std::vector<fs::path> compare_dirs;
  fs::path compare_out;
  compare->add_option("dirs", compare_dirs, "run directories")->required()->expected(2, -1);
  compare->add_option("--out", compare_out, "output CSV")->required();

  auto* defaults = app.add_subcommand("defaults", "print every configuration key with its default");
  bool defaults_json = false;
  defaults->add_flag("--json", defaults_json, "print a complete default configuration document instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(train_config, train_out, train_seed, overrides);
    if (*evaluate) return cmd_evaluate(eval_ckpt, eval_config, eval_episodes, eval_out, eval_seed, eval_phase);
    if (*compare) return cmd_compare(compare_dirs, compare_out);
    if (*defaults) {
      std::cout << (defaults_json ? config_to_json(RunConfig{}).dump(2) + "\n" : defaults_reference());
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingAborted& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kExitAborted;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitVersion;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kExitVersion;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
