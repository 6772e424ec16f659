#include <gtest/gtest.h>

#include <random>

#include "ratsos/poly.hpp"

using namespace ratsos;

namespace {

Polynomial var(std::size_t n, std::size_t i) { return Polynomial::variable(n, i); }

}  // namespace

TEST(Monomial, ProductAddsExponents) {
    Monomial a({1, 0, 2}), b({0, 3, 1});
    EXPECT_EQ(a * b, Monomial({1, 3, 3}));
    EXPECT_EQ((a * b).degree(), 7);
    EXPECT_TRUE(Monomial(3).is_constant());
}

TEST(Monomial, LengthMismatchThrows) {
    EXPECT_THROW(Monomial({1, 0}) * Monomial({1, 0, 0}), DimensionError);
}

TEST(Monomial, GradedOrderComparesDegreeFirst) {
    GradedLess less;
    EXPECT_TRUE(less(Monomial({0, 1}), Monomial({2, 0})));
    EXPECT_FALSE(less(Monomial({2, 0}), Monomial({0, 1})));
    EXPECT_FALSE(less(Monomial({1, 1}), Monomial({1, 1})));
}

TEST(Polynomial, BinomialSquareExpands) {
    const Polynomial x = var(2, 0), y = var(2, 1);
    const Polynomial s = (x + y).pow(2);
    EXPECT_EQ(s.term_count(), 3u);
    EXPECT_DOUBLE_EQ(s.coeff(Monomial({1, 1})), 2.0);
    EXPECT_DOUBLE_EQ(s.coeff(Monomial({2, 0})), 1.0);
    EXPECT_EQ(s.degree(), 2);
}

TEST(Polynomial, CancellationPrunesTerms) {
    const Polynomial x = var(2, 0);
    EXPECT_TRUE((x - x).is_zero());
    EXPECT_EQ((x * 0.0).term_count(), 0u);
}

TEST(Polynomial, EvaluateMatchesDirectFormula) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    const Polynomial x = var(3, 0), y = var(3, 1), z = var(3, 2);
    const Polynomial p = x.pow(3) * y - 2.5 * z * z + Polynomial::constant(3, 7.0);
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> pt{u(rng), u(rng), u(rng)};
        const double expect = pt[0] * pt[0] * pt[0] * pt[1] - 2.5 * pt[2] * pt[2] + 7.0;
        EXPECT_NEAR(p.evaluate(pt), expect, 1e-12);
    }
}

TEST(Polynomial, CompensatedSumKeepsSmallTerms) {
    // 1e16 + 1 - 1e16 loses the 1 in naive left-to-right summation.
    const Polynomial x = var(1, 0);
    const Polynomial p = 1e16 * x.pow(2) + x - 1e16 * x.pow(4);
    EXPECT_DOUBLE_EQ(p.evaluate(std::vector<double>{1.0}), 1.0);
}

TEST(Polynomial, VariablesAndSupport) {
    const Polynomial p = var(4, 1) * var(4, 3) + Polynomial::constant(4, 1.0);
    EXPECT_EQ(p.variables(), (std::set<std::size_t>{1, 3}));
    EXPECT_EQ(p.support().size(), 2u);
}

TEST(Polynomial, ToStringIsReadable) {
    const std::vector<std::string> names{"x", "y"};
    const Polynomial p = var(2, 0).pow(2) - 3.0 * var(2, 1) + Polynomial::constant(2, 1.0);
    EXPECT_EQ(p.to_string(names), "1 - 3*y + x^2");
}

TEST(Basis, SizeIsBinomial) {
    for (std::size_t n = 1; n <= 5; ++n)
        for (int k = 0; k <= 4; ++k) EXPECT_EQ(full_basis(n, k).size(), binomial(n + k, static_cast<std::size_t>(k)));
}

TEST(Basis, RestrictedToVariableSubset) {
    const MonomialBasis b = basis(5, {1, 3}, 2);
    EXPECT_EQ(b.size(), 6u);
    for (std::size_t i = 0; i < b.size(); ++i) {
        EXPECT_EQ(b[i][0], 0);
        EXPECT_EQ(b[i][2], 0);
        EXPECT_EQ(b[i][4], 0);
        EXPECT_LE(b[i].degree(), 2);
    }
}

TEST(Basis, GradedAndDuplicateFree) {
    const MonomialBasis b = full_basis(3, 3);
    GradedLess less;
    for (std::size_t i = 1; i < b.size(); ++i) EXPECT_TRUE(less(b[i - 1], b[i]));
}
