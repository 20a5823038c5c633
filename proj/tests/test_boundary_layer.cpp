#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace mflight;
using mflight::testing::naca_symmetric;

namespace {

std::vector<bl::Station> flat_plate(std::size_t n, double length) {
  std::vector<bl::Station> st;
  for (std::size_t i = 0; i <= n; ++i) {
    const double s = length * static_cast<double>(i) / static_cast<double>(n);
    st.push_back({s, s, 1.0});
  }
  return st;
}

}  // namespace

TEST(BoundaryLayer, ThwaitesShapeFactorAtZeroPressureGradient) {
  EXPECT_DOUBLE_EQ(bl::thwaites_h(0.0), 2.61);
  // continuous across lambda = 0 to the correlation's precision
  EXPECT_NEAR(bl::thwaites_h(-1e-9), 2.61, 2e-3);
}

TEST(BoundaryLayer, HeadCorrelationInverts) {
  for (double h = 1.15; h <= 2.8; h += 0.05) EXPECT_NEAR(bl::head_h_from_h1(bl::head_h1(h)), h, 1e-9) << h;
}

TEST(BoundaryLayer, MichelCriterionValue) {
  const double re_x = 1e6;
  EXPECT_DOUBLE_EQ(bl::michel_re_theta(re_x), 1.174 * (1.0 + 22400.0 / re_x) * std::pow(re_x, 0.46));
}

TEST(BoundaryLayer, SquireYoungFormula) {
  EXPECT_DOUBLE_EQ(bl::squire_young(0.002, 1.0, 1.4), 0.004);
  EXPECT_NEAR(bl::squire_young(0.002, 0.9, 1.5), 0.004 * std::pow(0.9, 3.25), 1e-15);
}

TEST(BoundaryLayer, LaminarFlatPlateMatchesBlasius) {
  // Re_L = 1e5 stays below the transition criterion over the whole plate
  const double re = 1e5;
  const auto layer = bl::march(flat_plate(400, 1.0), re, {.separation_chord_limit = 2.0, .march_end_chord = 2.0});
  ASSERT_FALSE(layer.separated);
  EXPECT_EQ(layer.x_transition, 1.0);
  const double blasius = 0.664 / std::sqrt(re);
  EXPECT_NEAR(layer.theta_te, blasius, 0.02 * blasius);
  EXPECT_NEAR(layer.h_te, 2.61, 1e-12);
}

TEST(BoundaryLayer, TurbulentFlatPlateNearPowerLaw) {
  const double re = 1e7;
  const auto layer = bl::march(flat_plate(400, 1.0), re, {.separation_chord_limit = 2.0, .march_end_chord = 2.0});
  ASSERT_FALSE(layer.separated);
  EXPECT_LT(layer.x_transition, 0.2);
  // one-seventh power law, turbulent from the leading edge
  const double power_law = 0.036 * std::pow(re, -0.2);
  EXPECT_NEAR(layer.theta_te, power_law, 0.25 * power_law);
  EXPECT_GT(layer.h_te, 1.2);
  EXPECT_LT(layer.h_te, 1.6);
}

TEST(BoundaryLayer, DragDecreasesWithReynolds) {
  const auto s = naca_symmetric(0.12, 200);
  const auto ps = solve_panel(s);
  double prev = 1.0;
  for (double re = 5e6; re <= 1e7 + 1; re += 2.5e5) {
    const auto r = boundary_layer_drag(s, ps, re);
    ASSERT_TRUE(r.converged) << re;
    EXPECT_LT(r.cd, prev) << re;
    prev = r.cd;
  }
}

TEST(BoundaryLayer, SurfacesAgreeForSymmetricSection) {
  const auto s = naca_symmetric(0.1, 200);
  const auto r = boundary_layer_drag(s, solve_panel(s), 6e6);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.upper.cd, r.lower.cd, 1e-3 * r.cd);
  EXPECT_NEAR(r.cd, r.upper.cd + r.lower.cd, 1e-15);
}
