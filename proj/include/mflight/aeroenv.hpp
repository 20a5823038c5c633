#pragma once

// Environment family: state Re_c ~ N(mu, sigma), action = design vector,
// reward = -Cd. One evaluation is one full episode.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mflight/boundary_layer.hpp"
#include "mflight/error.hpp"
#include "mflight/geometry.hpp"
#include "mflight/panel.hpp"
#include "mflight/rng.hpp"

namespace mflight {

struct StateDistribution {
  double mu = 5.5e6;
  double sigma = 5e5;

  static constexpr double kTruncation = 6.0;
  static constexpr double kFloor = 1e5;

  void validate() const {
    if (!(std::isfinite(mu) && mu > 0.0)) throw ConfigError("state distribution mu must be positive");
    if (!(std::isfinite(sigma) && sigma > 0.0)) throw ConfigError("state distribution sigma must be positive");
  }
};

/// Truncated Gaussian Reynolds number; one uniform pair per draw.
inline double sample_state(const StateDistribution& dist, Rng& rng) {
  const double z = std::clamp(rng.normal(), -StateDistribution::kTruncation, StateDistribution::kTruncation);
  return std::max(dist.mu + dist.sigma * z, StateDistribution::kFloor);
}

struct AeroResult {
  double cd = 0.0;
  double cl = 0.0;
  std::vector<double> x;   // panel midpoint abscissae
  std::vector<double> cp;  // per-panel pressure coefficient
  bool converged = false;
};

enum class Fidelity { Low, High };

inline std::string_view to_string(Fidelity f) { return f == Fidelity::Low ? "low" : "high"; }

inline Fidelity fidelity_from_string(std::string_view s) {
  if (s == "low") return Fidelity::Low;
  if (s == "high") return Fidelity::High;
  throw ConfigError("unknown fidelity '" + std::string(s) + "' (expected low|high)");
}

// Flat-plate turbulent skin friction with a thickness form factor.
inline double flat_plate_cd(double thickness_ratio, double re) {
  const double cf = 0.074 * std::pow(re, -0.2);
  const double tc = thickness_ratio;
  const double form = 1.0 + 2.7 * tc + 100.0 * tc * tc * tc * tc;
  return 2.0 * cf * form;
}

namespace detail {

inline AeroResult from_panel(const PanelSolution& ps) {
  AeroResult r;
  r.cl = ps.cl;
  r.cp = ps.cp;
  r.x.reserve(ps.collocation.size());
  for (const auto& p : ps.collocation) r.x.push_back(p.x);
  return r;
}

}  // namespace detail

inline AeroResult low_fidelity_cd(const AirfoilShape& shape, double re_c, double alpha = 0.0) {
  if (!shape.valid) throw DomainError("low-fidelity drag requested for an invalid shape");
  auto r = detail::from_panel(solve_panel(shape, {.alpha = alpha, .kutta = true}));
  r.cd = flat_plate_cd(shape.thickness_max, re_c);
  r.converged = std::isfinite(r.cd);
  return r;
}

inline AeroResult high_fidelity_cd(const AirfoilShape& shape, double re_c, double alpha = 0.0,
                                   const BoundaryLayerOptions& opt = {}) {
  if (!shape.valid) throw DomainError("high-fidelity drag requested for an invalid shape");
  const auto ps = solve_panel(shape, {.alpha = alpha, .kutta = true});
  auto r = detail::from_panel(ps);
  const auto bl = boundary_layer_drag(shape, ps, re_c, opt);
  r.cd = bl.cd;
  r.converged = bl.converged;
  return r;
}

struct EnvironmentConfig {
  GeometryBounds bounds = GeometryBounds::defaults();
  std::size_t n_points = 60;  // panels
  double alpha = 0.0;         // radians
};

/// Common interface of every fidelity. Instances are immutable after
/// construction apart from the evaluation counter.
class Environment {
 public:
  explicit Environment(EnvironmentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.bounds.validate();
    if (cfg_.n_points < 40 || cfg_.n_points % 2 != 0)
      throw ConfigError("environment panel count must be even and >= 40");
  }
  virtual ~Environment() = default;
  Environment(const Environment&) = delete;
  Environment& operator=(const Environment&) = delete;

  virtual Fidelity fidelity() const = 0;

  /// Deterministic for fixed inputs. Throws SolverError on a singular system.
  AeroResult evaluate(const AirfoilShape& shape, double re_c) const {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_evaluate(shape, re_c);
  }

  /// Counts an episode whose shape was rejected before reaching the solver.
  void record_rejected() const { calls_.fetch_add(1, std::memory_order_relaxed); }

  const EnvironmentConfig& config() const { return cfg_; }
  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual AeroResult do_evaluate(const AirfoilShape& shape, double re_c) const = 0;

 private:
  EnvironmentConfig cfg_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

class LowFidelityEnvironment final : public Environment {
 public:
  explicit LowFidelityEnvironment(EnvironmentConfig cfg = {}) : Environment(std::move(cfg)) {}
  Fidelity fidelity() const override { return Fidelity::Low; }

 protected:
  AeroResult do_evaluate(const AirfoilShape& shape, double re_c) const override {
    return low_fidelity_cd(shape, re_c, config().alpha);
  }
};

class HighFidelityEnvironment final : public Environment {
 public:
  explicit HighFidelityEnvironment(EnvironmentConfig cfg = high_fidelity_defaults())
      : Environment(std::move(cfg)) {}
  Fidelity fidelity() const override { return Fidelity::High; }

  static EnvironmentConfig high_fidelity_defaults() {
    EnvironmentConfig c;
    c.n_points = 200;
    return c;
  }

 protected:
  AeroResult do_evaluate(const AirfoilShape& shape, double re_c) const override {
    return high_fidelity_cd(shape, re_c, config().alpha);
  }
};

inline std::unique_ptr<Environment> make_environment(Fidelity f, EnvironmentConfig cfg) {
  if (f == Fidelity::Low) return std::make_unique<LowFidelityEnvironment>(std::move(cfg));
  return std::make_unique<HighFidelityEnvironment>(std::move(cfg));
}

inline constexpr double kDefaultPenalty = -0.1;

struct StepResult {
  double reward = 0.0;
  bool penalized = false;
  AirfoilShape shape;
  AeroResult aero;
};

/// One episode. Every failure mode (invalid geometry, singular system,
/// separated boundary layer) maps to the penalty reward.
inline StepResult step(const Environment& env, const DesignVector& design, double re_c,
                       double penalty = kDefaultPenalty) {
  StepResult out;
  out.shape = build_airfoil(decode(design, env.config().bounds), env.config().n_points);
  out.reward = penalty;
  out.penalized = true;
  if (!out.shape.valid) {
    env.record_rejected();
    return out;
  }
  try {
    out.aero = env.evaluate(out.shape, re_c);
  } catch (const SolverError&) {
    return out;
  }
  if (out.aero.converged && std::isfinite(out.aero.cd) && out.aero.cd >= 0.0) {
    out.reward = -out.aero.cd;
    out.penalized = false;
  }
  return out;
}

/// Pressure distribution as CSV with columns x, cp.
inline void write_cp_csv(std::ostream& os, const AeroResult& r) {
  os << "x,cp\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.cp.size(); ++i) os << r.x[i] << ',' << r.cp[i] << '\n';
}

}  // namespace mflight
