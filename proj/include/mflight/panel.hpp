#pragma once

// Hess-Smith panel method: constant-strength source on every panel plus one
// uniform vortex sheet, flow tangency at panel midpoints and a Kutta
// condition equating the tangential velocity magnitudes on the two
// trailing-edge panels.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "mflight/error.hpp"
#include "mflight/geometry.hpp"
#include "mflight/linalg.hpp"

namespace mflight {

struct PanelOptions {
  double alpha = 0.0;  // radians
  bool kutta = true;   // false: sources only, zero circulation (closed bodies without a sharp edge)
};

struct PanelSolution {
  std::vector<Point> collocation;
  std::vector<double> length;
  std::vector<double> theta;       // panel inclination
  std::vector<double> source;      // q_j
  double vortex = 0.0;             // gamma
  std::vector<double> tangential;  // signed surface velocity along the panel direction, V_inf = 1
  std::vector<double> cp;
  double cl = 0.0;
};

namespace detail {

struct PanelGeometry {
  std::vector<Point> mid;
  std::vector<double> len, theta, sin_t, cos_t;
};

inline PanelGeometry panel_geometry(const std::vector<Point>& nodes) {
  const std::size_t n = nodes.size() - 1;
  PanelGeometry g;
  g.mid.resize(n);
  g.len.resize(n);
  g.theta.resize(n);
  g.sin_t.resize(n);
  g.cos_t.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double dx = nodes[j + 1].x - nodes[j].x;
    const double dy = nodes[j + 1].y - nodes[j].y;
    g.mid[j] = {0.5 * (nodes[j].x + nodes[j + 1].x), 0.5 * (nodes[j].y + nodes[j + 1].y)};
    g.len[j] = std::hypot(dx, dy);
    g.theta[j] = std::atan2(dy, dx);
    g.sin_t[j] = std::sin(g.theta[j]);
    g.cos_t[j] = std::cos(g.theta[j]);
  }
  return g;
}

// Log-ratio and subtended angle of panel j seen from midpoint i.
struct Influence {
  double flog;
  double ftan;
};

inline Influence influence(const std::vector<Point>& nodes, const PanelGeometry& g, std::size_t i,
                           std::size_t j) {
  if (i == j) return {0.0, std::numbers::pi};
  const double dxj = g.mid[i].x - nodes[j].x;
  const double dxjp = g.mid[i].x - nodes[j + 1].x;
  const double dyj = g.mid[i].y - nodes[j].y;
  const double dyjp = g.mid[i].y - nodes[j + 1].y;
  return {0.5 * std::log((dxjp * dxjp + dyjp * dyjp) / (dxj * dxj + dyj * dyj)),
          std::atan2(dxj * dyjp - dyj * dxjp, dxj * dxjp + dyj * dyjp)};
}

}  // namespace detail

/// Solves the potential flow about a closed polyline ordered trailing edge ->
/// lower -> leading edge -> upper -> trailing edge (clockwise).
inline PanelSolution solve_panel(const AirfoilShape& shape, const PanelOptions& opt = {}) {
  const std::size_t n = shape.panel_count();
  if (n < 40) throw DomainError("panel method needs at least 40 panels, got " + std::to_string(n));
  if (opt.kutta && !shape.valid) throw DomainError("panel method called on an invalid shape");

  const auto& nodes = shape.points;
  const auto g = detail::panel_geometry(nodes);
  constexpr double inv2pi = 0.5 / std::numbers::pi;
  const double ca = std::cos(opt.alpha);
  const double sa = std::sin(opt.alpha);

  const std::size_t m = opt.kutta ? n + 1 : n;
  Matrix a(m);
  std::vector<double> rhs(m, 0.0);
  // a_src(i,j): normal velocity at i per unit source on j
  // b_src(i,j): tangential velocity at i per unit source on j (vortex normal influence is -b)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto inf = detail::influence(nodes, g, i, j);
      const double cij = g.cos_t[i] * g.cos_t[j] + g.sin_t[i] * g.sin_t[j];
      const double sij = g.sin_t[i] * g.cos_t[j] - g.cos_t[i] * g.sin_t[j];
      const double aa = inv2pi * (inf.ftan * cij + inf.flog * sij);
      const double bb = inv2pi * (inf.flog * cij - inf.ftan * sij);
      a(i, j) = aa;
      if (opt.kutta) {
        a(i, n) += bb;
        if (i == 0 || i == n - 1) {
          a(n, j) -= bb;
          a(n, n) += aa;
        }
      }
    }
    rhs[i] = g.sin_t[i] * ca - g.cos_t[i] * sa;  // sin(theta_i - alpha)
  }
  if (opt.kutta) {
    rhs[n] = -(g.cos_t[0] * ca + g.sin_t[0] * sa) - (g.cos_t[n - 1] * ca + g.sin_t[n - 1] * sa);
  }

  const auto sol = lu_solve(std::move(a), std::move(rhs));

  PanelSolution out;
  out.collocation = g.mid;
  out.length = g.len;
  out.theta = g.theta;
  out.source.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(n));
  out.vortex = opt.kutta ? sol[n] : 0.0;
  out.tangential.resize(n);
  out.cp.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double vt = g.cos_t[i] * ca + g.sin_t[i] * sa;  // cos(theta_i - alpha)
    for (std::size_t j = 0; j < n; ++j) {
      const auto inf = detail::influence(nodes, g, i, j);
      const double cij = g.cos_t[i] * g.cos_t[j] + g.sin_t[i] * g.sin_t[j];
      const double sij = g.sin_t[i] * g.cos_t[j] - g.cos_t[i] * g.sin_t[j];
      const double aa = inv2pi * (inf.ftan * cij + inf.flog * sij);
      const double bb = inv2pi * (inf.flog * cij - inf.ftan * sij);
      vt += -bb * out.source[j] + out.vortex * aa;
    }
    out.tangential[i] = vt;
    out.cp[i] = 1.0 - vt * vt;
  }

  // Kutta-Joukowski: L' = rho V Gamma with Gamma = gamma * perimeter.
  double perimeter = 0.0;
  double xmin = nodes.front().x, xmax = nodes.front().x;
  for (std::size_t j = 0; j < n; ++j) perimeter += g.len[j];
  for (const auto& p : nodes) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  out.cl = 2.0 * out.vortex * perimeter / (xmax - xmin);
  return out;
}

}  // namespace mflight
