#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "anatgraph/stats.hpp"

using namespace anatgraph;

TEST(Stats, IncompleteBetaKnownValues) {
  // I_x(1, 1) = x, I_x(a, 1) = x^a, I_x(1, b) = 1 - (1 - x)^b
  for (double x : {0.0, 0.1, 0.5, 0.93, 1.0}) {
    EXPECT_NEAR(incomplete_beta(1, 1, x), x, 1e-14);
    EXPECT_NEAR(incomplete_beta(3.5, 1, x), std::pow(x, 3.5), 1e-13);
    EXPECT_NEAR(incomplete_beta(1, 2.5, x), 1 - std::pow(1 - x, 2.5), 1e-13);
  }
  // symmetry I_x(a, b) = 1 - I_{1-x}(b, a)
  EXPECT_NEAR(incomplete_beta(2.3, 7.1, 0.3), 1 - incomplete_beta(7.1, 2.3, 0.7), 1e-14);
  EXPECT_NEAR(incomplete_beta(0.5, 0.5, 0.25), 2 / std::numbers::pi * std::asin(0.5), 1e-13);
}

TEST(Stats, StudentTTwoSidedP) {
  EXPECT_DOUBLE_EQ(student_t_two_sided_p(0.0, 5), 1.0);
  // one dof is Cauchy: p = 1 - 2 atan(|t|) / pi
  for (double t : {0.3, 1.0, 12.0}) EXPECT_NEAR(student_t_two_sided_p(t, 1), 1 - 2 * std::atan(t) / std::numbers::pi, 1e-13);
  // two dof: p = 1 - |t| / sqrt(t^2 + 2)
  EXPECT_NEAR(student_t_two_sided_p(-1.7, 2), 1 - 1.7 / std::sqrt(1.7 * 1.7 + 2), 1e-13);
  EXPECT_NEAR(student_t_two_sided_p(2.228138851986, 10), 0.05, 1e-9);
}

TEST(Stats, PearsonOracle) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6}, y{2.1, 3.9, 6.2, 7.8, 10.1, 12.2};
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / 6, my += y[i] / 6;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double r = sxy / std::sqrt(sxx * syy);
  const PearsonResult res = pearson_test(x, y);
  ASSERT_TRUE(res.defined());
  EXPECT_NEAR(*res.r, r, 1e-14);
  EXPECT_NEAR(*res.p, student_t_two_sided_p(r * std::sqrt(4 / (1 - r * r)), 4), 1e-14);
  EXPECT_EQ(res.n, 6u);
}

TEST(Stats, PearsonUndefinedCases) {
  EXPECT_FALSE(pearson_r({1, 1, 1}, {1, 2, 3}).has_value());
  const PearsonResult c = pearson_test({1, 2, 3}, {4, 4, 4});
  EXPECT_FALSE(c.r.has_value());
  EXPECT_FALSE(c.p.has_value());
  EXPECT_THROW(pearson_test({1, 2}, {1, 2}), std::invalid_argument);
  EXPECT_THROW(pearson_r({1, 2, 3}, {1, 2}), std::invalid_argument);
}

TEST(Stats, PrefixEnds) {
  EXPECT_EQ(prefix_ends(25, 10), (std::vector<std::size_t>{10, 20, 25}));
  EXPECT_EQ(prefix_ends(20, 10), (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(prefix_ends(7, 2), (std::vector<std::size_t>{4, 6, 7}));
  EXPECT_TRUE(prefix_ends(2, 1).empty());
}

TEST(Stats, MeanAndPopulationStd) {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  EXPECT_DOUBLE_EQ(mean_of(v), 5.0);
  EXPECT_DOUBLE_EQ(population_std(v), 2.0);
  EXPECT_DOUBLE_EQ(population_std({3.0}), 0.0);
}
