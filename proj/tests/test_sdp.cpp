#include <gtest/gtest.h>

#include <random>

#include "ratsos/sdp.hpp"

using namespace ratsos;

namespace {

SdpStandardForm make(std::vector<std::size_t> blocks, std::size_t nvars) {
    SdpStandardForm sf;
    sf.block_sizes = std::move(blocks);
    sf.nvars = nvars;
    sf.c.assign(nvars, 0.0);
    sf.F.assign(nvars, {});
    return sf;
}

}  // namespace

TEST(InteriorPoint, TwoByTwoBlock) {
    // min y  s.t.  [[y, 1], [1, y]] >= 0  gives y = 1.
    SdpStandardForm sf = make({2}, 1);
    sf.c = {1.0};
    sf.F0 = {{0, 0, 1, -1.0}};
    sf.F[0] = {{0, 0, 0, 1.0}, {0, 1, 1, 1.0}};
    const SolveReport r = solve_internal(sf);
    ASSERT_EQ(r.status, SolveStatus::optimal) << r.message;
    EXPECT_NEAR(r.primal, 1.0, 1e-7);
    EXPECT_NEAR(r.dual, 1.0, 1e-7);
    EXPECT_LT(r.gap, 1e-7);
}

TEST(InteriorPoint, LargestEigenvalue) {
    // min t  s.t.  t I - A >= 0  equals lambda_max(A).
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    const int n = 6;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) A(i, j) = A(j, i) = g(rng);
    SdpStandardForm sf = make({static_cast<std::size_t>(n)}, 1);
    sf.c = {1.0};
    for (std::uint32_t i = 0; i < n; ++i) {
        sf.F[0].push_back({0, i, i, 1.0});
        for (std::uint32_t j = i; j < n; ++j) sf.F0.push_back({0, i, j, A(i, j)});
    }
    const SolveReport r = solve_internal(sf);
    ASSERT_TRUE(is_success(r.status));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    EXPECT_NEAR(r.primal, es.eigenvalues().maxCoeff(), 1e-6);
    EXPECT_NEAR(r.dual, es.eigenvalues().maxCoeff(), 1e-6);
}

TEST(InteriorPoint, EqualitiesAndDiagonalBlocks) {
    // min y1 + y2  s.t.  y1 >= 1, y2 >= 2, y2 - y1 = 3  gives 1 + 4 = 5.
    SdpStandardForm sf = make({1, 1}, 2);
    sf.c = {1.0, 1.0};
    sf.F0 = {{0, 0, 0, 1.0}, {1, 0, 0, 2.0}};
    sf.F[0] = {{0, 0, 0, 1.0}};
    sf.F[1] = {{1, 0, 0, 1.0}};
    sf.E = {{{{0, -1.0}, {1, 1.0}}, 3.0}};
    const SolveReport r = solve_internal(sf);
    ASSERT_TRUE(is_success(r.status));
    EXPECT_NEAR(r.primal, 5.0, 1e-6);
    EXPECT_NEAR(r.y[0], 1.0, 1e-5);
    EXPECT_NEAR(r.y[1], 4.0, 1e-5);
}

TEST(InteriorPoint, ConstantObjectiveOffset) {
    SdpStandardForm sf = make({1}, 1);
    sf.c = {2.0};
    sf.c0 = -3.0;
    sf.F[0] = {{0, 0, 0, 1.0}};
    sf.F0 = {{0, 0, 0, 1.0}};
    const SolveReport r = solve_internal(sf);
    ASSERT_TRUE(is_success(r.status));
    EXPECT_NEAR(r.primal, -1.0, 1e-6);
    EXPECT_NEAR(r.dual, -1.0, 1e-6);
}

TEST(InteriorPoint, InfeasibleIsNotReportedOptimal) {
    // y >= 0 and -y >= 1 cannot both hold.
    SdpStandardForm sf = make({1, 1}, 1);
    sf.c = {1.0};
    sf.F[0] = {{0, 0, 0, 1.0}, {1, 0, 0, -1.0}};
    sf.F0 = {{1, 0, 0, 1.0}};
    const SolveReport r = solve_internal(sf);
    EXPECT_FALSE(is_success(r.status)) << to_string(r.status);
}

TEST(InteriorPoint, UnboundedIsNotReportedOptimal) {
    // min -y  s.t.  y >= 0.
    SdpStandardForm sf = make({1}, 1);
    sf.c = {-1.0};
    sf.F[0] = {{0, 0, 0, 1.0}};
    const SolveReport r = solve_internal(sf);
    EXPECT_FALSE(is_success(r.status)) << to_string(r.status);
}

TEST(InteriorPoint, SizeCapRefusesLargeInstances) {
    SdpStandardForm sf = make({50}, 1);
    sf.c = {1.0};
    for (std::uint32_t i = 0; i < 50; ++i) sf.F[0].push_back({0, i, i, 1.0});
    SolveSettings set;
    set.psd_cap = 10;
    EXPECT_THROW(solve_internal(sf, set), SolveError);
}

TEST(Equalities, DuplicatesRemovedAndConflictsRejected) {
    SdpStandardForm sf = make({1}, 3);
    sf.E = {{{{0, 1.0}, {1, 2.0}}, 1.0}, {{{1, -4.0}, {0, -2.0}}, -2.0}, {{{2, 1.0}}, 0.0}};
    EXPECT_EQ(dedup_equalities(sf), 1u);
    EXPECT_EQ(sf.E.size(), 2u);

    SdpStandardForm bad = make({1}, 2);
    bad.E = {{{{0, 1.0}}, 1.0}, {{{0, 2.0}}, 3.0}};
    EXPECT_THROW(dedup_equalities(bad), SolveError);
}

TEST(Equalities, DependentRowsDropped) {
    SdpStandardForm sf = make({1}, 3);
    sf.E = {{{{0, 1.0}, {1, 1.0}}, 1.0}, {{{1, 1.0}, {2, 1.0}}, 2.0}, {{{0, 1.0}, {1, 2.0}, {2, 1.0}}, 3.0}};
    EXPECT_EQ(drop_dependent_equalities(sf), 1u);
    EXPECT_EQ(sf.E.size(), 2u);

    SdpStandardForm bad = make({1}, 3);
    bad.E = {{{{0, 1.0}, {1, 1.0}}, 1.0}, {{{1, 1.0}, {2, 1.0}}, 2.0}, {{{0, 1.0}, {1, 2.0}, {2, 1.0}}, 4.0}};
    EXPECT_THROW(drop_dependent_equalities(bad), SolveError);
}

TEST(StandardForm, ValidateAndSlack) {
    SdpStandardForm sf = make({2}, 1);
    sf.F[0] = {{0, 0, 1, 2.0}};
    sf.F0 = {{0, 1, 1, -1.0}};
    const auto X = sf.slack(std::vector<double>{3.0});
    EXPECT_DOUBLE_EQ(X[0](0, 1), 6.0);
    EXPECT_DOUBLE_EQ(X[0](1, 0), 6.0);
    EXPECT_DOUBLE_EQ(X[0](1, 1), 1.0);
    sf.F[0].push_back({0, 1, 0, 1.0});
    EXPECT_THROW(sf.validate(), DimensionError);
}
