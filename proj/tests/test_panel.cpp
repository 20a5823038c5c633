#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"

using namespace mflight;
using mflight::testing::cylinder;
using mflight::testing::naca_symmetric;

namespace {

constexpr double kPi = std::numbers::pi;

struct Velocity {
  double u = 0.0, v = 0.0;
};

// Velocity induced at p by a unit-strength straight source sheet a -> b and by a
// unit clockwise vortex sheet, by composite Gauss-Legendre quadrature.
void sheet_velocity(const Point& p, const Point& a, const Point& b, Velocity& src, Velocity& vor) {
  static constexpr double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
  const int sub = 64;
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  for (int s = 0; s < sub; ++s) {
    for (int k = 0; k < 4; ++k) {
      const double t = (s + 0.5 * (gx[k] + 1.0)) / sub;
      const double w = gw[k] * 0.5 * len / sub;
      const double dx = p.x - (a.x + t * (b.x - a.x));
      const double dy = p.y - (a.y + t * (b.y - a.y));
      const double r2 = dx * dx + dy * dy;
      src.u += w * dx / (2 * kPi * r2);
      src.v += w * dy / (2 * kPi * r2);
      vor.u += w * dy / (2 * kPi * r2);
      vor.v += -w * dx / (2 * kPi * r2);
    }
  }
}

// Reconstructs the velocity at every collocation point from the solved
// singularity strengths and checks tangency and the reported tangential speed.
void check_against_quadrature(const AirfoilShape& s, const PanelSolution& ps, double alpha) {
  const auto& nodes = s.points;
  const std::size_t n = ps.source.size();
  double worst_normal = 0.0, worst_tangent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = std::cos(ps.theta[i]), sn = std::sin(ps.theta[i]);
    // outward normal of a clockwise contour, and the panel direction
    const double nx = -sn, ny = c;
    double u = std::cos(alpha), v = std::sin(alpha);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      Velocity src, vor;
      sheet_velocity(ps.collocation[i], nodes[j], nodes[j + 1], src, vor);
      u += ps.source[j] * src.u + ps.vortex * vor.u;
      v += ps.source[j] * src.v + ps.vortex * vor.v;
    }
    // own panel: half the source strength normal, half the vortex strength tangential
    u += 0.5 * ps.source[i] * nx + 0.5 * ps.vortex * c;
    v += 0.5 * ps.source[i] * ny + 0.5 * ps.vortex * sn;
    worst_normal = std::max(worst_normal, std::abs(u * nx + v * ny));
    worst_tangent = std::max(worst_tangent, std::abs(u * c + v * sn - ps.tangential[i]));
  }
  EXPECT_LT(worst_normal, 1e-7);
  EXPECT_LT(worst_tangent, 1e-7);
}

}  // namespace

TEST(LuSolve, SolvesRandomSystems) {
  Rng rng(1);
  for (std::size_t n : {1u, 2u, 5u, 30u}) {
    Matrix a(n);
    std::vector<double> x(n), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.normal() + (i == j ? 3.0 : 0.0);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b[i] += a(i, j) * x[j];
    const auto got = lu_solve(a, b);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], x[i], 1e-10);
  }
}

TEST(LuSolve, NeedsPivoting) {
  Matrix a(2);
  a(0, 0) = 0.0;
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  a(1, 1) = 0.0;
  const auto x = lu_solve(a, {2.0, 3.0});
  EXPECT_DOUBLE_EQ(x[0], 3.0);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(LuSolve, SingularMatrixThrows) {
  Matrix a(3);
  for (std::size_t j = 0; j < 3; ++j) {
    a(0, j) = 1.0 + static_cast<double>(j);
    a(1, j) = 2.0 * (1.0 + static_cast<double>(j));
    a(2, j) = 1.0;
  }
  EXPECT_THROW(lu_solve(a, {1.0, 2.0, 3.0}), SolverError);
}

TEST(Panel, CylinderMatchesAnalyticPressure) {
  const auto s = cylinder(200);
  const auto ps = solve_panel(s, {.alpha = 0.0, .kutta = false});
  double worst = 0.0, cp90 = 0.0, best90 = 1e9;
  for (std::size_t i = 0; i < ps.cp.size(); ++i) {
    const double th = std::atan2(ps.collocation[i].y, ps.collocation[i].x - 0.5);
    worst = std::max(worst, std::abs(ps.cp[i] - (1.0 - 4.0 * std::sin(th) * std::sin(th))));
    if (std::abs(std::abs(th) - kPi / 2) < best90) {
      best90 = std::abs(std::abs(th) - kPi / 2);
      cp90 = ps.cp[i];
    }
  }
  EXPECT_NEAR(cp90, -3.0, 1e-2);
  EXPECT_LT(worst, 1e-2);
  EXPECT_EQ(ps.vortex, 0.0);
}

TEST(Panel, SymmetricAirfoilHasNoLiftAtZeroIncidence) {
  for (double t : {0.06, 0.12, 0.18}) {
    const auto ps = solve_panel(naca_symmetric(t, 120), {.alpha = 0.0});
    EXPECT_LT(std::abs(ps.cl), 1e-6) << "t/c " << t;
  }
}

TEST(Panel, ThinAirfoilLiftSlope) {
  const auto ps = solve_panel(naca_symmetric(0.06, 160), {.alpha = 5.0 * kPi / 180.0});
  const double thin = 2.0 * kPi * 5.0 * kPi / 180.0;
  EXPECT_NEAR(thin, 0.548, 1e-3);
  EXPECT_LT(std::abs(ps.cl - thin) / thin, 0.15);
}

TEST(Panel, ThinAirfoilPropertyOverThicknessAndIncidence) {
  for (double t : {0.02, 0.04, 0.06, 0.079}) {
    const auto s = naca_symmetric(t, 100);
    for (double deg : {-5.0, -3.0, -1.0, 1.0, 2.5, 5.0}) {
      const double a = deg * kPi / 180.0;
      const auto ps = solve_panel(s, {.alpha = a});
      EXPECT_LT(std::abs(ps.cl - 2.0 * kPi * a) / std::abs(2.0 * kPi * a), 0.15) << t << " " << deg;
    }
  }
}

TEST(Panel, StrengthsSatisfyTangencyByQuadrature) {
  const auto s = naca_symmetric(0.12, 60);
  const double alpha = 4.0 * kPi / 180.0;
  check_against_quadrature(s, solve_panel(s, {.alpha = alpha}), alpha);
  const auto c = cylinder(60);
  check_against_quadrature(c, solve_panel(c, {.alpha = 0.0, .kutta = false}), 0.0);
}

TEST(Panel, KuttaEqualizesTrailingEdgeSpeeds) {
  const auto ps = solve_panel(naca_symmetric(0.12, 100), {.alpha = 3.0 * kPi / 180.0});
  EXPECT_NEAR(ps.tangential.front(), -ps.tangential.back(), 1e-10);
}

TEST(Panel, Preconditions) {
  EXPECT_THROW(solve_panel(naca_symmetric(0.12, 38)), DomainError);
  auto s = naca_symmetric(0.12, 60);
  s.valid = false;
  EXPECT_THROW(solve_panel(s), DomainError);
}

TEST(Panel, Deterministic) {
  const auto s = naca_symmetric(0.1, 80);
  const auto a = solve_panel(s, {.alpha = 0.05});
  const auto b = solve_panel(s, {.alpha = 0.05});
  EXPECT_EQ(a.cp, b.cp);
  EXPECT_EQ(a.cl, b.cl);
}
