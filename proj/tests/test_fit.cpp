#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "bopp/fit.hpp"

using namespace bopp;

TEST(SlopeFit, ExactPowerLawGivesExactSlope) {
    const std::vector<double> h = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> e;
    for (double x : h) e.push_back(3.0 * x * x);
    const SlopeFit f = fit_slope(h, e);
    EXPECT_NEAR(f.slope, 2.0, 1e-10);
    EXPECT_NEAR(std::exp(f.intercept), 3.0, 1e-10);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
    EXPECT_TRUE(f.excluded_h.empty());
}

TEST(SlopeFit, PointsAtTheFloorAreExcludedAndReported) {
    const std::vector<double> h = {0.2, 0.1, 0.05, 0.025, 0.0125};
    std::vector<double> e = {8e-3, 1e-3, 1.25e-4, 1.5625e-5, 1e-16};
    const SlopeFit f = fit_slope(h, e);
    EXPECT_NEAR(f.slope, 3.0, 1e-10);
    ASSERT_EQ(f.excluded_h.size(), 1u);
    EXPECT_DOUBLE_EQ(f.excluded_h[0], 0.0125);
    EXPECT_EQ(f.log_h.size(), 4u);
    EXPECT_NE(f.describe().find("excluded below floor at h = 0.0125"), std::string::npos);
}

TEST(SlopeFit, FewerThanThreeUsablePointsThrows) {
    EXPECT_THROW(fit_slope({0.2, 0.1, 0.05}, {1e-3, 1e-20, 1e-20}), std::invalid_argument);
    EXPECT_THROW(fit_slope({0.2, 0.1}, {1e-3, 1e-4}), std::invalid_argument);
}

TEST(SlopeFit, RejectsMismatchedAndNonPositiveInput) {
    EXPECT_THROW(fit_slope({0.2, 0.1, 0.05}, {1.0, 1.0}), std::invalid_argument);
    EXPECT_THROW(fit_slope({0.2, 0.0, 0.05}, {1.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(SlopeFit, NoisyDataHasLowerRSquared) {
    const std::vector<double> h = {0.2, 0.1, 0.05, 0.025};
    const std::vector<double> e = {1e-2, 1e-2 / 4 * 3, 1e-2 / 16 / 3, 1e-2 / 64 * 2};
    const SlopeFit f = fit_slope(h, e);
    EXPECT_LT(f.r2, 0.98);
}

TEST(SuccessiveRatios, HalvingSweep) {
    const auto r = successive_ratios({16.0, 2.0, 0.25});
    ASSERT_EQ(r.size(), 2u);
    EXPECT_DOUBLE_EQ(r[0], 8.0);
    EXPECT_DOUBLE_EQ(r[1], 8.0);
}
