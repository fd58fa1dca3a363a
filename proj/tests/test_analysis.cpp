#include <gtest/gtest.h>

#include <cmath>

#include "ensmark/analysis.hpp"

using namespace ensmark;
using namespace ensmark::analysis;

TEST(Analysis, ClosedFormOptimum) {
  EXPECT_NEAR(optimal_n(0.5, 1.8), 4.745, 0.01);
  EXPECT_NEAR(optimal_n(0.5, 2.0 * std::exp(-0.5)), 1.0, 1e-12);
  EXPECT_NEAR(optimal_n(0.5, 1.98), 1.0 / (2.0 * std::log(1.0 / 0.99)), 1e-9);
  EXPECT_NEAR(optimal_n(0.5, 1.98), 49.75, 0.01);
  try {
    optimal_n(0.5, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_finite_optimum);
  }
}

TEST(Analysis, TradeoffValues) {
  EXPECT_NEAR(tradeoff_g(0.5, 1.8, 1), 0.81, 1e-12);
  EXPECT_NEAR(effective_shift(0.5, 1.8, 5), 0.59049, 1e-12);
  EXPECT_NEAR(tradeoff_g(0.5, 1.8, 5), 5 * std::pow(0.9, 10), 1e-12);
  EXPECT_NEAR(tradeoff_g(0.5, 1.8, 5), 1.743, 1e-3);
  EXPECT_NEAR(promoted_mass(0.5, 3), 0.125, 1e-15);
}

TEST(Analysis, IntegerArgmax) {
  const auto n = argmax_g(0.5, 1.8, 20);
  EXPECT_TRUE(n == 4 || n == 5);
  EXPECT_EQ(argmax_g(0.5, 1.8, 3), 3u);
}

TEST(Analysis, CurveIsUnimodal) {
  const auto curve = p_bound_curve(SizeAnalysisParams{0.5, 1.8, 250, 2}, 20);
  ASSERT_EQ(curve.size(), 20u);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i].g > curve[peak].g) peak = i;
  for (std::size_t i = 1; i <= peak; ++i) EXPECT_GT(curve[i].g, curve[i - 1].g);
  for (std::size_t i = peak + 1; i < curve.size(); ++i) EXPECT_LT(curve[i].g, curve[i - 1].g);
  for (const auto& pt : curve) EXPECT_NEAR(pt.log_bound, -2.0 * 250.0 * pt.g, 1e-9);
}

TEST(Analysis, BoundRatioInLogSpace) {
  const auto curve = p_bound_curve(SizeAnalysisParams{0.5, 1.8, 250, 2}, 5);
  const double log_ratio = curve[4].log_bound - curve[0].log_bound;
  EXPECT_NEAR(log_ratio, -500.0 * (tradeoff_g(0.5, 1.8, 5) - 0.81), 1e-9);
  EXPECT_NEAR(log_ratio, -466.6961002500002, 1e-6);
}

TEST(Analysis, ParamValidation) {
  EXPECT_THROW(p_bound_curve(SizeAnalysisParams{0.0, 1.8, 250, 2}, 5), Error);
  EXPECT_THROW(p_bound_curve(SizeAnalysisParams{0.5, 2.5, 250, 2}, 5), Error);
  EXPECT_THROW(p_bound_curve(SizeAnalysisParams{0.5, 1.8, 0, 2}, 5), Error);
}
