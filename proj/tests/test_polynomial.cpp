#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "maxmin/polynomial.hpp"

using namespace maxmin;

TEST(Polynomial, HornerMatchesPowerSum)
{
    const Polynomial p({1.0, cplx(0, 2), -3.0, 0.5});
    const cplx z(0.3, -1.2);
    const cplx direct = 1.0 + cplx(0, 2) * z - 3.0 * z * z + 0.5 * z * z * z;
    EXPECT_NEAR(std::abs(p(z) - direct), 0.0, 1e-14);
    EXPECT_EQ(p.degree(), 3);
}

TEST(Polynomial, DerivativeAgainstCentralDifference)
{
    const Polynomial p({2.0, -1.0, 0.0, 4.0, cplx(1, 1)});
    const cplx z(0.7, 0.2);
    const double h = 1e-5;
    const cplx fd = (p(z + h) - p(z - h)) / (2 * h);
    EXPECT_NEAR(std::abs(p.derivative()(z) - fd), 0.0, 1e-8);
}

TEST(Polynomial, TaylorCoefficientsReassemble)
{
    const Polynomial p({1.0, 2.0, 3.0, 4.0});
    const cplx a(0.5, -0.5);
    const cplx z(1.1, 0.3);
    cplx sum = 0.0;
    for (int k = 0; k <= 3; ++k)
        sum += p.taylor_coeff(a, k) * std::pow(z - a, k);
    EXPECT_NEAR(std::abs(sum - p(z)), 0.0, 1e-12);
}

TEST(Polynomial, ArithmeticIdentities)
{
    const Polynomial a({1.0, 1.0});
    const Polynomial b({-1.0, 1.0});
    const Polynomial prod = a * b;
    EXPECT_EQ(prod.degree(), 2);
    EXPECT_NEAR(std::abs(prod.coeff(0) + 1.0), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(prod.coeff(2) - 1.0), 0.0, 1e-15);
    EXPECT_TRUE((a - a).is_zero());
    EXPECT_EQ(a.pow(5).degree(), 5);
    EXPECT_NEAR(std::abs(a.pow(5).coeff(2) - 10.0), 0.0, 1e-12);
}

TEST(Polynomial, RootsRecoverRandomRoots)
{
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<cplx> r;
        for (int k = 0; k < 6; ++k)
            r.push_back({g(rng), g(rng)});
        const auto found = roots(Polynomial::from_roots(r));
        ASSERT_EQ(found.size(), r.size());
        for (cplx x : r) {
            double best = 1e9;
            for (cplx y : found)
                best = std::min(best, std::abs(x - y));
            EXPECT_LT(best, 1e-9);
        }
    }
}
