#pragma once

// Integral boundary-layer drag estimate driven by panel-method edge velocities:
// Thwaites (laminar) -> Michel transition -> Head entrainment (turbulent) ->
// Squire-Young wake extrapolation at the trailing edge.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mflight/geometry.hpp"
#include "mflight/panel.hpp"

namespace mflight {

struct BoundaryLayerOptions {
  double separation_shape_factor = 2.4;  // turbulent separation when H reaches this
  double separation_chord_limit = 0.95;  // separation aft of this x/c is tolerated
  double march_end_chord = 0.99;         // Squire-Young is applied at the last station before this x/c;
                                         // the inviscid velocity collapses at a sharp trailing edge
  double transition_shape_factor = 1.4;  // H at the start of the turbulent march
  int substeps = 4;                      // RK4 substeps per panel interval
};

struct SurfaceLayer {
  double theta_te = 0.0;  // momentum thickness at the end of the march
  double h_te = 0.0;      // shape factor at the end of the march
  double ue_te = 0.0;     // edge velocity at the end of the march
  double x_transition = 1.0;
  double x_end = 1.0;     // x/c where the march stopped
  bool separated = false; // separated before the chord limit
  double cd = 0.0;
};

struct BoundaryLayerResult {
  double cd = 0.0;
  bool converged = false;
  SurfaceLayer upper;
  SurfaceLayer lower;
};

namespace bl {

// Thwaites correlations for the shape factor H(lambda).
inline double thwaites_h(double lambda) {
  if (lambda >= 0.0) {
    const double l = std::min(lambda, 0.1);
    return 2.61 - 3.75 * l + 5.24 * l * l;
  }
  const double l = std::max(lambda, -0.09);
  return 2.088 + 0.0731 / (l + 0.14);
}

// Head's entrainment shape factor H1(H) and its inverse.
inline double head_h1(double h) {
  if (h <= 1.6) return 3.3 + 0.8234 * std::pow(h - 1.1, -1.287);
  return 3.3 + 1.5501 * std::pow(h - 0.6778, -3.064);
}

inline double head_h_from_h1(double h1) {
  constexpr double kLarge = 10.0;
  if (!(h1 > 3.3 + 1e-9)) return kLarge;
  if (h1 >= 5.3) return 1.1 + std::pow((h1 - 3.3) / 0.8234, -1.0 / 1.287);
  return 0.6778 + std::pow((h1 - 3.3) / 1.5501, -1.0 / 3.064);
}

inline double entrainment(double h1) { return 0.0306 * std::pow(std::max(h1 - 3.0, 1e-6), -0.6169); }

/// Ludwieg-Tillmann skin friction.
inline double ludwieg_tillmann_cf(double h, double re_theta) {
  return 0.246 * std::pow(10.0, -0.678 * h) * std::pow(std::max(re_theta, 1.0), -0.268);
}

/// Michel's criterion: transition once Re_theta exceeds this value.
inline double michel_re_theta(double re_x) {
  return 1.174 * (1.0 + 22400.0 / re_x) * std::pow(re_x, 0.46);
}

/// Squire-Young profile drag of one surface.
inline double squire_young(double theta, double ue, double h) {
  return 2.0 * theta * std::pow(ue, 0.5 * (h + 5.0));
}

struct Station {
  double s;   // arc length from the stagnation point
  double x;   // x/c
  double ue;  // edge velocity, V_inf = 1
};

inline SurfaceLayer march(const std::vector<Station>& st, double re, const BoundaryLayerOptions& opt) {
  SurfaceLayer out;
  const std::size_t n = st.size();
  if (n < 3) {
    out.separated = true;
    return out;
  }
  auto due_ds = [&](std::size_t k) {
    if (k == 0) return (st[1].ue - st[0].ue) / (st[1].s - st[0].s);
    if (k + 1 == n) return (st[k].ue - st[k - 1].ue) / (st[k].s - st[k - 1].s);
    return (st[k + 1].ue - st[k - 1].ue) / (st[k + 1].s - st[k - 1].s);
  };

  // laminar: Thwaites quadrature of ue^5
  double integral = 0.0;
  double theta = 0.0;
  double h = 2.61;
  double prev_margin = 0.0;
  double prev_theta = 0.0;
  std::size_t k = 1;
  bool turbulent = false;
  Station start{};
  for (; k < n; ++k) {
    const double ds = st[k].s - st[k - 1].s;
    integral += 0.5 * ds * (std::pow(st[k - 1].ue, 5) + std::pow(st[k].ue, 5));
    theta = std::sqrt(0.45 * integral / (re * std::pow(st[k].ue, 6)));
    const double lambda = theta * theta * re * due_ds(k);
    h = thwaites_h(lambda);
    const double re_theta = st[k].ue * theta * re;
    const double re_x = st[k].ue * st[k].s * re;
    const double margin = re_theta - michel_re_theta(re_x);
    if (margin >= 0.0 || lambda < -0.09) {
      turbulent = true;
      // locate the crossing inside the interval so the onset moves continuously with Re
      double f = 1.0;
      if (margin >= 0.0 && k > 1 && prev_margin < 0.0) f = -prev_margin / (margin - prev_margin);
      start.s = st[k - 1].s + f * (st[k].s - st[k - 1].s);
      start.x = st[k - 1].x + f * (st[k].x - st[k - 1].x);
      start.ue = st[k - 1].ue + f * (st[k].ue - st[k - 1].ue);
      theta = prev_theta + f * (theta - prev_theta);
      out.x_transition = start.x;
      break;
    }
    prev_margin = margin;
    prev_theta = theta;
  }
  if (!turbulent) {
    out.theta_te = theta;
    out.h_te = h;
    out.ue_te = st[n - 1].ue;
    out.x_end = st[n - 1].x;
    out.cd = squire_young(out.theta_te, out.ue_te, out.h_te);
    return out;
  }

  // turbulent: Head's method in (theta, ue * theta * H1)
  std::vector<Station> tst{start};
  for (std::size_t j = k; j < n; ++j)
    if (st[j].s > start.s) tst.push_back(st[j]);
  h = opt.transition_shape_factor;
  double y2 = start.ue * theta * head_h1(h);
  const std::size_t nt = tst.size();
  for (k = 0; k + 1 < nt; ++k) {
    const double s0 = tst[k].s;
    const double ds_total = tst[k + 1].s - s0;
    const double slope = (tst[k + 1].ue - tst[k].ue) / ds_total;
    auto rhs = [&](double s, double th, double q, double& dth, double& dq) {
      const double ue = tst[k].ue + slope * (s - s0);
      const double h1 = q / (ue * th);
      const double hh = head_h_from_h1(h1);
      const double cf = ludwieg_tillmann_cf(hh, ue * th * re);
      dth = 0.5 * cf - (hh + 2.0) * th / ue * slope;
      dq = ue * entrainment(h1);
    };
    const double hstep = ds_total / opt.substeps;
    double s = s0;
    for (int sub = 0; sub < opt.substeps; ++sub) {
      double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
      rhs(s, theta, y2, k1a, k1b);
      rhs(s + 0.5 * hstep, theta + 0.5 * hstep * k1a, y2 + 0.5 * hstep * k1b, k2a, k2b);
      rhs(s + 0.5 * hstep, theta + 0.5 * hstep * k2a, y2 + 0.5 * hstep * k2b, k3a, k3b);
      rhs(s + hstep, theta + hstep * k3a, y2 + hstep * k3b, k4a, k4b);
      theta += hstep / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
      y2 += hstep / 6.0 * (k1b + 2.0 * k2b + 2.0 * k3b + k4b);
      s += hstep;
    }
    const double ue = tst[k + 1].ue;
    h = head_h_from_h1(y2 / (ue * theta));
    if (!std::isfinite(theta) || theta <= 0.0 || h >= opt.separation_shape_factor) {
      if (tst[k + 1].x < opt.separation_chord_limit || !std::isfinite(theta) || theta <= 0.0) {
        out.separated = true;
        out.x_end = tst[k + 1].x;
        return out;
      }
      // separation in the last few percent of chord: stop and extrapolate from here
      out.theta_te = theta;
      out.h_te = std::min(h, opt.separation_shape_factor);
      out.ue_te = ue;
      out.x_end = tst[k + 1].x;
      out.cd = squire_young(out.theta_te, out.ue_te, out.h_te);
      return out;
    }
  }
  out.theta_te = theta;
  out.h_te = h;
  out.ue_te = st[n - 1].ue;
  out.x_end = st[n - 1].x;
  out.cd = squire_young(out.theta_te, out.ue_te, out.h_te);
  return out;
}

}  // namespace bl

/// Viscous drag of both surfaces from an inviscid panel solution at chord Reynolds number `re`.
inline BoundaryLayerResult boundary_layer_drag(const AirfoilShape& shape, const PanelSolution& ps,
                                               double re, const BoundaryLayerOptions& opt = {}) {
  BoundaryLayerResult res;
  const std::size_t n = ps.tangential.size();
  const auto& vt = ps.tangential;

  // stagnation: sign change from the lower (negative) to the upper (positive) side,
  // nearest to the geometric leading edge
  std::size_t stag = n;
  std::size_t best = n;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (vt[i] <= 0.0 && vt[i + 1] > 0.0) {
      const std::size_t dist = i + 1 > shape.leading_edge_index ? i + 1 - shape.leading_edge_index
                                                                : shape.leading_edge_index - i - 1;
      if (dist < best) {
        best = dist;
        stag = i;
      }
    }
  }
  if (stag == n) return res;

  double xmin = shape.points.front().x, xmax = xmin;
  for (const auto& p : shape.points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  const double chord = xmax - xmin;
  auto xc = [&](double x) { return (x - xmin) / chord; };

  std::vector<double> sc(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) sc[i] = sc[i - 1] + 0.5 * (ps.length[i - 1] + ps.length[i]);
  const double frac = -vt[stag] / (vt[stag + 1] - vt[stag]);
  const double s_stag = sc[stag] + frac * (sc[stag + 1] - sc[stag]);
  const double x_stag = ps.collocation[stag].x + frac * (ps.collocation[stag + 1].x - ps.collocation[stag].x);

  // arc lengths and velocities are scaled to unit chord
  std::vector<bl::Station> upper{{0.0, xc(x_stag), 0.0}};
  for (std::size_t i = stag + 1; i < n; ++i) {
    if (!(vt[i] > 0.0)) return res;
    const double x = xc(ps.collocation[i].x);
    if (x > opt.march_end_chord && upper.size() > 2) break;
    upper.push_back({(sc[i] - s_stag) / chord, x, vt[i]});
  }
  std::vector<bl::Station> lower{{0.0, xc(x_stag), 0.0}};
  for (std::size_t i = stag + 1; i-- > 0;) {
    if (!(vt[i] < 0.0)) return res;
    const double x = xc(ps.collocation[i].x);
    if (x > opt.march_end_chord && lower.size() > 2) break;
    lower.push_back({(s_stag - sc[i]) / chord, x, -vt[i]});
  }

  res.upper = bl::march(upper, re, opt);
  res.lower = bl::march(lower, re, opt);
  res.cd = res.upper.cd + res.lower.cd;
  res.converged = !res.upper.separated && !res.lower.separated && std::isfinite(res.cd) && res.cd >= 0.0;
  return res;
}

}  // namespace mflight
