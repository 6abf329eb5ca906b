#include <gtest/gtest.h>

#include "lka/sphere_approx.hpp"
#include "support.hpp"

namespace sa = lka::sphere_approx;
using sa::Method;

namespace {

// random polynomial of degree < deg as coefficients over HarmonicBasis2(n)
Eigen::VectorXd random_coeffs(lka::Rng& rng, int n, int deg) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n * n);
  for (int i = 0; i < deg * deg; ++i) c[i] = rng.normal();
  return c;
}

Eigen::VectorXd synth(const Eigen::VectorXd& c, int n, const Eigen::Matrix3Xd& X) {
  sa::ApproxModel m;
  m.n = n;
  m.coeffs = c;
  return sa::evaluate(m, X);
}

TEST(SphereApprox, MethodNames) {
  for (Method m : sa::kAllMethods) EXPECT_EQ(sa::parse_method(sa::method_name(m)), m);
  EXPECT_THROW(sa::parse_method("QS3"), lka::InvalidArgument);
  EXPECT_EQ(sa::method_filter(Method::MS1).kind(), lka::FilterKind::sharp);
  EXPECT_EQ(sa::method_filter(Method::QS5).kind(), lka::FilterKind::quintic);
}

TEST(SphereApprox, ZeroErrorHistogram) {
  auto h = sa::error_histogram(Eigen::VectorXd::Zero(100));
  for (int x = 2; x <= 10; ++x) EXPECT_EQ(h.at(x), 100.0);
  Eigen::VectorXd e(4);
  e << 1e-3, 1e-5, 2e-9, 0.5;
  auto g = sa::error_histogram(e);
  EXPECT_EQ(g.at(2), 75.0);
  EXPECT_EQ(g.at(4), 50.0);
  EXPECT_EQ(g.at(8), 25.0);
  EXPECT_EQ(g.at(9), 0.0);
}

TEST(SphereApprox, BenchmarkFunction) {
  EXPECT_NEAR(sa::benchmark_g(0, 0, 1), 0.015 - 0.0004 + std::exp(1.0), 1e-15);
  EXPECT_NEAR(sa::benchmark_g(1, 0, 0), std::exp(0.9), 1e-15);
  EXPECT_EQ(sa::remark_target(0.7, 0, 0.2), 0.0);
  EXPECT_NEAR(sa::remark_target(0.8, 0, 0.8), 2 * std::pow(0.1, 5.0 / 6.0), 1e-15);
}

TEST(SphereApprox, TooFewPointsFailures) {
  lka::Rng rng(1, "sa/few");
  Eigen::Matrix3Xd X = lka::sphere::uniform_sphere(rng, 100);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(100);
  auto r = sa::fit_all({Method::LS, Method::QS5, Method::MS5}, X, y, 12);
  EXPECT_TRUE(r[0].failed);
  EXPECT_TRUE(r[1].failed);
  EXPECT_FALSE(r[2].failed);
  EXPECT_THROW(sa::fit(Method::QS1, X, y, 12), lka::ConstructionFailure);
  EXPECT_TRUE(sa::error_table(r[1], y, X).failed);
}

class SphereApproxProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SphereApproxProperties, QS5ReproducesLowDegree) {
  lka::Rng rng(GetParam(), "sa/qs5");
  const int n = 16;
  Eigen::Matrix3Xd X = lka::sphere::uniform_sphere(rng, 1500), T = lka::sphere::uniform_sphere(rng, 500);
  const Eigen::VectorXd c = random_coeffs(rng, n, n / 2);
  // products of the target with degree < n harmonics need a rule of order 2n
  auto m = sa::fit(Method::QS5, X, synth(c, n, X), n, {2 * n});
  EXPECT_LT((sa::evaluate(m, T) - synth(c, n, T)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((m.coeffs - c).cwiseAbs().maxCoeff(), 1e-10);
  // percent-below histogram of a polynomial target is 100 at every threshold down to 1e-8
  auto h = sa::error_table(m, synth(c, n, T), T);
  for (int x = 2; x <= 8; ++x) EXPECT_EQ(h.at(x), 100.0);
}

TEST_P(SphereApproxProperties, LeastSquaresReproducesFullDegree) {
  lka::Rng rng(GetParam(), "sa/ls");
  const int n = 12;
  Eigen::Matrix3Xd X = lka::sphere::uniform_sphere(rng, 2000), T = lka::sphere::uniform_sphere(rng, 500);
  const Eigen::VectorXd c = random_coeffs(rng, n, n);
  auto m = sa::fit(Method::LS, X, synth(c, n, X), n);
  EXPECT_LT((sa::evaluate(m, T) - synth(c, n, T)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST_P(SphereApproxProperties, FilterVariantsShareLowCoefficients) {
  lka::Rng rng(GetParam(), "sa/share");
  const int n = 10;
  Eigen::Matrix3Xd X = lka::sphere::uniform_sphere(rng, 800);
  Eigen::VectorXd y(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) y[j] = std::exp(X(0, j)) + X(2, j) * X(2, j);
  auto r = sa::fit_all({Method::MS1, Method::MS5, Method::QS1, Method::QS5}, X, y, n);
  const int low = (n / 2) * (n / 2);
  EXPECT_LT((r[0].coeffs.head(low) - r[1].coeffs.head(low)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((r[2].coeffs.head(low) - r[3].coeffs.head(low)).cwiseAbs().maxCoeff(), 1e-15);
  // MS uses the empirical mean for the constant coefficient
  EXPECT_NEAR(r[0].coeffs[0], y.mean(), 1e-13);
  const lka::Filter h(lka::FilterKind::quintic);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < 2 * l + 1; ++k) EXPECT_EQ(r[3].coeffs[l * l + k], r[2].coeffs[l * l + k] * h(double(l) / n));
}

TEST_P(SphereApproxProperties, SmallBenchmarkOrderingAndMonotonicity) {
  sa::BenchConfig cfg{8192, 2000, 32, 40};
  auto r = sa::benchmark_table2(GetParam(), cfg);
  for (const auto& row : r.rows) {
    ASSERT_FALSE(row.failed);
    for (int x = 3; x <= 10; ++x) EXPECT_LE(row.at(x), row.at(x - 1));
    for (int x = 2; x <= 10; ++x) {
      EXPECT_GE(row.at(x), 0.0);
      EXPECT_LE(row.at(x), 100.0);
    }
  }
  for (int x = 6; x <= 8; ++x) EXPECT_GT(r.row(Method::QS5).at(x), r.row(Method::LS).at(x));
  auto again = sa::benchmark_table2(GetParam(), cfg);
  EXPECT_EQ(again.errors, r.errors);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SphereApproxProperties, ::testing::ValuesIn(lka::testing::kSeeds));

}  // namespace
