#include <cmath>

#include <gtest/gtest.h>

#include "uss/glm/confidence.hpp"
#include "uss/glm/link.hpp"

using namespace uss;

namespace {

long double logistic_ld(long double z) { return 1.0L / (1.0L + std::exp(-z)); }

ConfidenceConfig cfg_for(double sigma, double kappa, std::size_t d_prime, std::size_t arms, double delta) {
    ConfidenceConfig c;
    c.sigma = sigma;
    c.kappa = kappa;
    c.d_prime = d_prime;
    c.arms = arms;
    c.delta = delta;
    return c;
}

}  // namespace

TEST(Sigmoid, ZeroIsOneHalf) { EXPECT_EQ(sigmoid(0.0), 0.5); }

TEST(Sigmoid, SaturatesWithoutOverflow) {
    EXPECT_EQ(sigmoid(1000.0), 1.0);
    EXPECT_EQ(sigmoid(-1000.0), 0.0);
    EXPECT_TRUE(std::isfinite(sigmoid(-701.0)));
    EXPECT_TRUE(std::isfinite(sigmoid_derivative(800.0)));
    EXPECT_GE(sigmoid_derivative(800.0), 0.0);
}

TEST(Sigmoid, MatchesLongDoubleOracle) {
    for (double z : {-30.0, -5.5, -1.0, -1e-3, 1e-3, 1.0, 2.5, 17.0}) {
        EXPECT_NEAR(sigmoid(z), static_cast<double>(logistic_ld(z)), 1e-12) << z;
        const long double m = logistic_ld(z);
        EXPECT_NEAR(sigmoid_derivative(z), static_cast<double>(m * (1.0L - m)), 1e-12) << z;
    }
    EXPECT_NEAR(sigmoid(1.0), 0.7310585786300049, 1e-12);
}

TEST(Sigmoid, StrictlyIncreasingAndSymmetric) {
    double prev = sigmoid(-20.0);
    for (double z = -19.75; z <= 20.0; z += 0.25) {
        const double v = sigmoid(z);
        EXPECT_GT(v, prev);
        EXPECT_NEAR(v + sigmoid(-z), 1.0, 1e-15);
        prev = v;
    }
}

TEST(KappaLowerBound, IsSlopeAtTheNormBound) {
    const long double m = logistic_ld(6.0L);
    EXPECT_NEAR(kappa_lower_bound(5.0), static_cast<double>(m * (1.0L - m)), 1e-15);
    EXPECT_DOUBLE_EQ(kappa_lower_bound(0.0), sigmoid_derivative(1.0));
    EXPECT_THROW(kappa_lower_bound(-1.0), PreconditionError);
}

TEST(AlphaRadius, HandValue) {
    // 2 sigma / kappa = 1; (d'/2) log(1 + 2t/d') = log 101; log(K^2 / 2 delta) = log 90.
    const auto c = cfg_for(0.1, 0.2, 2, 3, 0.05);
    EXPECT_NEAR(alpha_radius(100.0, c), std::sqrt(std::log(101.0) + std::log(90.0)), 1e-10);
}

TEST(AlphaRadius, VanishesWhenBothLogsVanish) {
    const auto c = cfg_for(0.1, 0.2, 2, 1, 0.5);  // K^2 / 2 delta = 1
    EXPECT_EQ(alpha_radius(0.0, c), 0.0);
}

TEST(AlphaRadius, ClampsNegativeRadicand) {
    const auto c = cfg_for(0.1, 0.2, 2, 1, 0.9);  // log(1/1.8) < 0
    EXPECT_EQ(alpha_radius(0.0, c), 0.0);
}

TEST(AlphaRadius, Monotone) {
    const auto c = cfg_for(0.1, 0.25, 10, 5, 0.05);
    EXPECT_GE(alpha_radius(200.0, c), alpha_radius(100.0, c));
    double prev = 0.0;
    for (double t = 0; t < 1e5; t = t * 2 + 1) {
        EXPECT_GE(alpha_radius(t, c), prev);
        prev = alpha_radius(t, c);
    }
    EXPECT_THROW(alpha_radius(-1.0, c), PreconditionError);
}

TEST(BetaRadius, OnlyRegulariserTermAtZero) {
    auto c = cfg_for(0.1, 0.2, 2, 1, 0.5);
    c.lambda = 1.0;
    c.s_bound = 0.5;
    EXPECT_NEAR(beta_radius(0.0, c), 1.0, 1e-15);
}

TEST(BetaRadius, HandValue) {
    auto c = cfg_for(0.1, 0.2, 2, 3, 0.05);
    c.lambda = 1.0;
    c.s_bound = 1.0;
    EXPECT_NEAR(beta_radius(100.0, c), std::sqrt(std::log(51.0) + std::log(90.0)) + 2.0, 1e-10);
}

TEST(BetaRadius, AtLeastRegulariserTerm) {
    auto c = cfg_for(0.1, 0.25, 10, 4, 0.05);
    c.lambda = 2.0;
    c.s_bound = 3.0;
    for (double n : {0.0, 1.0, 10.0, 1e4}) EXPECT_GE(beta_radius(n, c), 2.0 * std::sqrt(2.0) * 3.0);
    c.lambda = 0.0;
    EXPECT_THROW(beta_radius(1.0, c), PreconditionError);
}

TEST(ConfidenceConfig, RejectsInvalidFields) {
    auto ok = cfg_for(0.1, 0.25, 10, 3, 0.05);
    EXPECT_NO_THROW(ok.validate());
    auto c = ok;
    c.kappa = 0.3;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ok;
    c.delta = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ok;
    c.sigma = 0.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ok;
    c.d_prime = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = ok;
    c.lambda = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
}
