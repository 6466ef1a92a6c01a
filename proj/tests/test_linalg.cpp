#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "uss/glm/linalg.hpp"

using namespace uss;

namespace {

// Smallest root of the characteristic polynomial of a symmetric 3x3 matrix,
// by the trigonometric solution of the depressed cubic.
double min_eig_3x3(const Matrix& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = a.trace() / 3.0;
    if (p1 == 0.0) return std::min({a(0, 0), a(1, 1), a(2, 2)});
    const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) + (a(2, 2) - q) * (a(2, 2) - q) +
                      2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    const Matrix b = (a - q * Matrix::Identity(3, 3)) / p;
    const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
}

Matrix random_spd(std::mt19937_64& rng, int d, double ridge) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix g(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) g(r, c) = n(rng);
    }
    return g * g.transpose() + ridge * Matrix::Identity(d, d);
}

}  // namespace

TEST(MinEig, TwoByTwoClosedForm) {
    Matrix a(2, 2);
    a << 2.0, 1.0, 1.0, 3.0;
    const double expected = (5.0 - std::sqrt(5.0)) / 2.0;
    EXPECT_NEAR(min_eig(a), expected, 1e-12);
}

TEST(MinEig, MatchesCharacteristicPolynomialOracle) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix a = random_spd(rng, 3, 0.01);
        EXPECT_NEAR(min_eig(a), min_eig_3x3(a), 1e-9 * std::max(1.0, a.norm()));
    }
}

TEST(MinEig, ClampsAndValidates) {
    Matrix z = Matrix::Zero(3, 3);
    EXPECT_EQ(min_eig(z), 0.0);
    Matrix asym(2, 2);
    asym << 1.0, 2.0, 0.0, 1.0;
    EXPECT_THROW(min_eig(asym), PreconditionError);
    EXPECT_THROW(min_eig(Matrix(2, 3)), PreconditionError);
}

TEST(SpdInverse, AgreesWithAdjugate) {
    Matrix a(2, 2);
    a << 4.0, 1.0, 1.0, 3.0;
    Matrix adj(2, 2);
    adj << 3.0, -1.0, -1.0, 4.0;
    const Matrix expected = adj / 11.0;
    EXPECT_LT((spd_inverse(a) - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(identity_deviation(spd_inverse(a), a), 1e-15);
}

TEST(ShermanMorrison, IdentityPlusUnitVector) {
    Matrix v_inv = Matrix::Identity(3, 3);
    Vector e1 = Vector::Zero(3);
    e1[0] = 1.0;
    ASSERT_TRUE(sherman_morrison_update(v_inv, e1));
    EXPECT_DOUBLE_EQ(v_inv(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(v_inv(1, 1), 1.0);
}

TEST(ShermanMorrison, ThirtyUpdatesMatchDirectInversion) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int d : {2, 6, 15}) {
        Matrix v = Matrix::Identity(d, d);
        Matrix v_inv = Matrix::Identity(d, d);
        for (int s = 0; s < 30; ++s) {
            Vector phi(d);
            for (int k = 0; k < d; ++k) phi[k] = u(rng) / std::sqrt(static_cast<double>(d));
            v += phi * phi.transpose();
            ASSERT_TRUE(sherman_morrison_update(v_inv, phi));
        }
        const Matrix direct = v.inverse();
        EXPECT_LT((v_inv - direct).cwiseAbs().maxCoeff(), 1e-9) << "d=" << d;
    }
}

TEST(ShermanMorrison, RefusesTinyDenominator) {
    // V = diag(1, -1) would make 1 + phi^T V^-1 phi = 0 for phi = e2.
    Matrix v_inv(2, 2);
    v_inv << 1.0, 0.0, 0.0, -1.0;
    const Matrix before = v_inv;
    Vector e2(2);
    e2 << 0.0, 1.0;
    EXPECT_FALSE(sherman_morrison_update(v_inv, e2));
    EXPECT_EQ(v_inv, before);
}
