#pragma once

// JSON run configuration. One field table drives parsing (unknown keys are
// rejected), serialization, `key=value` overrides and the defaults reference.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mflight/error.hpp"
#include "mflight/io.hpp"
#include "mflight/orchestrator.hpp"

namespace mflight {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

inline constexpr std::array<std::string_view, kDesignSize> kDesignNames{
    "xu1", "yu1", "xu2", "yu2", "xu3", "yu3", "xl1", "yl1", "xl2", "yl2", "xl3", "yl3", "r"};

namespace detail {

struct ConfigField {
  std::string path;  // dotted
  std::string description;
  std::function<Json(const RunConfig&)> get;
  std::function<void(RunConfig&, const Json&)> set;
};

template <typename T>
T as(const Json& j, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError(path + ": expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0)
          throw ConfigError(path + ": expected a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError(path + ": expected a number");
    } else {
      if (!j.is_string()) throw ConfigError(path + ": expected a string");
    }
    return j.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

template <typename T, typename Member>
ConfigField scalar(std::string path, std::string desc, Member member) {
  return {path, std::move(desc), [member](const RunConfig& c) { return Json(std::invoke(member, c)); },
          [member, path](RunConfig& c, const Json& j) { std::invoke(member, c) = as<T>(j, path); }};
}

// Lambdas taking `RunConfig&` also bind to const objects through this shim.
template <typename F>
struct Member {
  F f;
  decltype(auto) operator()(RunConfig& c) const { return f(c); }
  decltype(auto) operator()(const RunConfig& c) const { return f(const_cast<RunConfig&>(c)); }
};
template <typename F>
Member(F) -> Member<F>;

inline void phase_fields(std::vector<ConfigField>& f, const std::string& name, PhaseConfig RunConfig::*phase) {
  f.push_back({name + ".fidelity", "environment fidelity of the " + name + " phase (low|high)",
               [phase](const RunConfig& c) { return Json(std::string(to_string((c.*phase).fidelity))); },
               [phase, name](RunConfig& c, const Json& j) {
                 (c.*phase).fidelity = fidelity_from_string(as<std::string>(j, name + ".fidelity"));
               }});
  f.push_back(scalar<double>(name + ".mu", "mean chord Reynolds number of the " + name + " state distribution",
                             Member{[phase](RunConfig& c) -> double& { return (c.*phase).dist.mu; }}));
  f.push_back(scalar<double>(name + ".sigma", "standard deviation of the " + name + " state distribution",
                             Member{[phase](RunConfig& c) -> double& { return (c.*phase).dist.sigma; }}));
  f.push_back(scalar<std::size_t>(name + ".max_episodes", "episode budget of the " + name + " phase",
                                  Member{[phase](RunConfig& c) -> std::size_t& { return (c.*phase).max_episodes; }}));
}

inline const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    auto ref = [](auto fn) { return Member{fn}; };
    f.push_back({"mode", "campaign mode (scratch|single_fidelity_ctl|multi_fidelity_ctl)",
                 [](const RunConfig& c) { return Json(std::string(to_string(c.mode))); },
                 [](RunConfig& c, const Json& j) { c.mode = mode_from_string(as<std::string>(j, "mode")); }});
    f.push_back(scalar<std::uint64_t>("seed", "master seed; overridden by --seed",
                                      ref([](RunConfig& c) -> std::uint64_t& { return c.seed; })));
    f.push_back(scalar<std::size_t>("workers", "parallel workers W; must divide episodes_per_round",
                                    ref([](RunConfig& c) -> std::size_t& { return c.workers; })));
    f.push_back(scalar<std::size_t>("episodes_per_round", "episodes T_L pooled per update over all workers",
                                    ref([](RunConfig& c) -> std::size_t& { return c.episodes_per_round; })));
    f.push_back(scalar<double>("penalty", "reward of an invalid or non-converged episode",
                               ref([](RunConfig& c) -> double& { return c.penalty; })));
    f.push_back(scalar<bool>("force_transfer", "transfer when the source budget is spent even if the controller has not fired",
                             ref([](RunConfig& c) -> bool& { return c.force_transfer; })));
    f.push_back({"threshold", "target trailing-mean reward level for episodes-to-threshold (null: not computed)",
                 [](const RunConfig& c) { return c.threshold ? Json(*c.threshold) : Json(nullptr); },
                 [](RunConfig& c, const Json& j) {
                   if (j.is_null()) c.threshold.reset();
                   else c.threshold = as<double>(j, "threshold");
                 }});
    f.push_back(scalar<std::size_t>("max_consecutive_aborts", "consecutive non-finite updates that abort training",
                                    ref([](RunConfig& c) -> std::size_t& { return c.max_consecutive_aborts; })));
    f.push_back(scalar<double>("state_reference.mu", "observation centre: state = (Re - mu) / sigma",
                               ref([](RunConfig& c) -> double& { return c.state_reference.mu; })));
    f.push_back(scalar<double>("state_reference.sigma", "observation scale",
                               ref([](RunConfig& c) -> double& { return c.state_reference.sigma; })));
    phase_fields(f, "source", &RunConfig::source);
    phase_fields(f, "target", &RunConfig::target);
    f.push_back({"agent.hidden", "hidden layer widths of both networks",
                 [](const RunConfig& c) { return Json(c.agent.hidden); },
                 [](RunConfig& c, const Json& j) {
                   if (!j.is_array()) throw ConfigError("agent.hidden: expected an array of integers");
                   std::vector<std::size_t> h;
                   for (const auto& e : j) h.push_back(as<std::size_t>(e, "agent.hidden"));
                   c.agent.hidden = std::move(h);
                 }});
    f.push_back(scalar<double>("agent.log_std_init", "initial log standard deviation of every action entry",
                               ref([](RunConfig& c) -> double& { return c.agent.log_std_init; })));
    f.push_back(scalar<double>("agent.hidden_gain", "orthogonal-init gain of hidden layers",
                               ref([](RunConfig& c) -> double& { return c.agent.hidden_gain; })));
    f.push_back(scalar<double>("agent.output_gain", "orthogonal-init gain of output layers",
                               ref([](RunConfig& c) -> double& { return c.agent.output_gain; })));
    f.push_back(scalar<double>("ppo.clip_epsilon", "surrogate clip range",
                               ref([](RunConfig& c) -> double& { return c.ppo.clip_epsilon; })));
    f.push_back(scalar<double>("ppo.learning_rate", "Adam step size",
                               ref([](RunConfig& c) -> double& { return c.ppo.learning_rate; })));
    f.push_back(scalar<std::size_t>("ppo.epochs_per_update", "full-batch epochs per update",
                                    ref([](RunConfig& c) -> std::size_t& { return c.ppo.epochs_per_update; })));
    f.push_back(scalar<double>("ppo.entropy_coeff", "entropy bonus weight",
                               ref([](RunConfig& c) -> double& { return c.ppo.entropy_coeff; })));
    f.push_back(scalar<double>("ppo.value_coeff", "value loss weight",
                               ref([](RunConfig& c) -> double& { return c.ppo.value_coeff; })));
    f.push_back(scalar<double>("ppo.max_grad_norm", "global gradient-norm clip",
                               ref([](RunConfig& c) -> double& { return c.ppo.max_grad_norm; })));
    f.push_back(scalar<double>("ppo.gamma", "discount factor (no effect on single-step episodes)",
                               ref([](RunConfig& c) -> double& { return c.ppo.gamma; })));
    f.push_back(scalar<double>("ppo.target_kl", "an update stops early once the KL estimate exceeds this",
                               ref([](RunConfig& c) -> double& { return c.ppo.target_kl; })));
    f.push_back(scalar<double>("ppo.adam_beta1", "Adam first-moment decay",
                               ref([](RunConfig& c) -> double& { return c.ppo.adam_beta1; })));
    f.push_back(scalar<double>("ppo.adam_beta2", "Adam second-moment decay",
                               ref([](RunConfig& c) -> double& { return c.ppo.adam_beta2; })));
    f.push_back(scalar<double>("ppo.adam_epsilon", "Adam denominator guard",
                               ref([](RunConfig& c) -> double& { return c.ppo.adam_epsilon; })));
    f.push_back(scalar<std::size_t>("ctl.k", "look-back window of the variance ratio",
                                    ref([](RunConfig& c) -> std::size_t& { return c.ctl.k; })));
    f.push_back(scalar<double>("ctl.gamma_cut", "variance-ratio cut-off that marks the source phase complete",
                               ref([](RunConfig& c) -> double& { return c.ctl.gamma_cut; })));
    f.push_back(scalar<std::size_t>("environment.low_fidelity_panels", "panels of the low-fidelity model",
                                    ref([](RunConfig& c) -> std::size_t& { return c.low_fidelity_panels; })));
    f.push_back(scalar<std::size_t>("environment.high_fidelity_panels", "panels of the high-fidelity model",
                                    ref([](RunConfig& c) -> std::size_t& { return c.high_fidelity_panels; })));
    f.push_back(scalar<double>("environment.alpha_deg", "angle of attack in degrees",
                               ref([](RunConfig& c) -> double& { return c.alpha_deg; })));
    for (std::size_t i = 0; i < kDesignSize; ++i) {
      const std::string path = "geometry." + std::string(kDesignNames[i]);
      f.push_back({path, "[lo, hi] range that design entry " + std::string(kDesignNames[i]) + " maps onto",
                   [i](const RunConfig& c) { return Json::array({c.bounds.ranges[i].lo, c.bounds.ranges[i].hi}); },
                   [i, path](RunConfig& c, const Json& j) {
                     if (!j.is_array() || j.size() != 2) throw ConfigError(path + ": expected [lo, hi]");
                     c.bounds.ranges[i] = {as<double>(j[0], path), as<double>(j[1], path)};
                   }});
    }
    return f;
  }();
  return fields;
}

inline std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    parts.emplace_back(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

inline const Json* lookup(const Json& doc, const std::string& path) {
  const Json* node = &doc;
  for (const auto& p : split_path(path)) {
    if (!node->is_object() || !node->contains(p)) return nullptr;
    node = &(*node)[p];
  }
  return node;
}

inline void collect_leaves(const Json& node, const std::string& prefix, std::vector<std::string>& out) {
  if (node.is_object() && !node.empty()) {
    for (auto it = node.begin(); it != node.end(); ++it)
      collect_leaves(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else {
    out.push_back(prefix);
  }
}

}  // namespace detail

inline Json config_to_json(const RunConfig& cfg) {
  Json doc;
  doc["schema_version"] = kConfigSchemaVersion;
  for (const auto& f : detail::config_fields()) {
    Json* node = &doc;
    const auto parts = detail::split_path(f.path);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = f.get(cfg);
  }
  return doc;
}

/// Fields absent from the document keep their defaults; unknown keys are errors.
inline RunConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  if (!doc.contains("schema_version")) throw ConfigError("configuration lacks schema_version");
  const auto& ver = doc["schema_version"];
  if (!ver.is_number_integer() || ver.get<int>() != kConfigSchemaVersion)
    throw ConfigError("unsupported schema_version " + ver.dump() + " (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  std::set<std::string> known{"schema_version"};
  for (const auto& f : detail::config_fields()) known.insert(f.path);
  std::vector<std::string> leaves;
  detail::collect_leaves(doc, "", leaves);
  for (const auto& l : leaves)
    if (!known.count(l)) throw ConfigError("unknown configuration key '" + l + "'");
  RunConfig cfg;
  for (const auto& f : detail::config_fields())
    if (const Json* v = detail::lookup(doc, f.path)) f.set(cfg, *v);
  return cfg;
}

/// Applies `a.b.c=value`. The value is parsed as JSON when possible, else taken as a string.
inline void apply_override(Json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  bool known = key == "schema_version";
  for (const auto& f : detail::config_fields()) known = known || f.path == key;
  if (!known) throw ConfigError("unknown configuration key '" + key + "' in override");
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json* node = &doc;
  const auto parts = detail::split_path(key);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i])) (*node)[parts[i]] = Json::object();
    node = &(*node)[parts[i]];
  }
  (*node)[parts.back()] = std::move(value);
}

inline Json parse_config_text(std::string_view text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

/// Reads, overrides and validates a configuration file.
inline RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read configuration file '" + path.string() + "'");
  }
  Json doc = parse_config_text(text, path.string());
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig cfg;
  try {
    cfg = config_from_json(doc);
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return cfg;
}

/// Every key with its default and meaning, one per line.
inline std::string defaults_reference() {
  const RunConfig d;
  std::ostringstream os;
  os << "schema_version = " << kConfigSchemaVersion << "    configuration format version (required)\n";
  for (const auto& f : detail::config_fields()) os << f.path << " = " << f.get(d).dump() << "    " << f.description << "\n";
  return os.str();
}

}  // namespace mflight
