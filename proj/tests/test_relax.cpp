#include <gtest/gtest.h>

#include <numeric>

#include "ratsos/generators.hpp"
#include "ratsos/pipeline.hpp"
#include "ratsos/relax.hpp"

using namespace ratsos;

namespace {

RelaxationSpec spec_of(Method m, int k) {
    RelaxationSpec s;
    s.method = m;
    s.order = k;
    return s;
}

double solve_bound(const SrfoProblem& p, RelaxationSpec s) {
    const RunResult r = run_relaxation(p, s);
    EXPECT_TRUE(is_success(r.status)) << to_string(r.status);
    return r.bound;
}

std::size_t binom(std::size_t n, std::size_t k) {
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

std::size_t total_size(const RelaxationSdp& r) {
    const auto s = r.block_sizes();
    return std::accumulate(s.begin(), s.end(), std::size_t{0});
}

}  // namespace

TEST(Relaxation, TrivialProblemHasZeroBound) {
    const SrfoProblem p = gen_trivial();
    EXPECT_NEAR(solve_bound(p, spec_of(Method::dense, 1)), 0.0, 1e-6);
    EXPECT_NEAR(solve_bound(p, spec_of(Method::epigraph, method_d_min(p, Method::epigraph))), 0.0, 1e-6);
}

TEST(Relaxation, LinkingRowCount) {
    const SrfoProblem p = gen_three_ratio_ball();  // n = 3, N = 3, deg q_i = 2
    for (int k : {2, 3}) {
        const RelaxationSdp r = build_dense(p, k);
        EXPECT_EQ(r.count_rows(RowKind::linking), 2 * binom(3 + 2 * k - 2, 3)) << "k=" << k;
        EXPECT_EQ(r.count_rows(RowKind::normalization), 1u);
        EXPECT_EQ(r.measures.size(), 3u);
    }
}

TEST(Relaxation, OrderBelowMinimumThrows) {
    const SrfoProblem p = gen_three_ratio_ball();
    EXPECT_THROW(build_dense(p, 1), BuildError);
    EXPECT_THROW(build_relaxation(p, spec_of(Method::cs_signsym, 1)), BuildError);
}

TEST(Relaxation, DenseBoundIndependentOfRatioOrder) {
    const SrfoProblem p = gen_three_ratio_ball();
    const double base = solve_bound(p, spec_of(Method::dense, 2));
    RelaxationSpec s = spec_of(Method::dense, 2);
    s.ratio_order = {2, 0, 1};
    EXPECT_NEAR(solve_bound(p, s), base, 1e-6);
}

TEST(Relaxation, SignSymmetricNeverAboveDense) {
    const SrfoProblem p = gen_three_ratio_ball();
    for (int k : {2, 3}) {
        const double d = solve_bound(p, spec_of(Method::dense, k));
        const double s = solve_bound(p, spec_of(Method::signsym, k));
        EXPECT_LE(s, d + 1e-6) << "k=" << k;
    }
}

TEST(Relaxation, DiracMeasureIsFeasible) {
    const SrfoProblem p = gen_three_ratio_ball();
    const std::vector<double> x{0.3, -0.5, 0.2};
    ASSERT_TRUE(p.feasible(x));
    for (Method m : {Method::dense, Method::signsym, Method::epigraph}) {
        const RelaxationSdp r = build_relaxation(p, spec_of(m, 3));
        const auto y = dirac_vector(r, x);
        const PointCheck pc = check_point(r, y);
        EXPECT_LT(pc.max_equality_residual, 1e-9) << to_string(m);
        EXPECT_GT(pc.min_block_eigenvalue, -1e-9) << to_string(m);
        EXPECT_NEAR(pc.objective, p.objective(x), 1e-9) << to_string(m);
    }
}

TEST(Relaxation, SignSymmetricBlocksPartitionDenseBlocks) {
    const SrfoProblem p = gen_three_ratio_ball();
    for (int k : {2, 3}) {
        RelaxationSpec d = spec_of(Method::dense, k), s = spec_of(Method::signsym, k);
        d.facial_reduction = s.facial_reduction = false;
        const RelaxationSdp rd = build_relaxation(p, d), rs = build_relaxation(p, s);
        EXPECT_EQ(total_size(rd), total_size(rs));
        EXPECT_GT(rs.blocks.size(), rd.blocks.size());
        const auto sd = rd.block_sizes(), ss = rs.block_sizes();
        EXPECT_LT(*std::max_element(ss.begin(), ss.end()), *std::max_element(sd.begin(), sd.end()) + 1);
    }
}

TEST(Relaxation, FacialReductionShrinksSphereBlocks) {
    const SrfoProblem p = gen_reznick_chain(3, 1);
    RelaxationSpec off = spec_of(Method::dense, 3);
    off.facial_reduction = false;
    const RelaxationSdp a = build_relaxation(p, spec_of(Method::dense, 3)), b = build_relaxation(p, off);
    EXPECT_LT(total_size(a), total_size(b));
    const double v = solve_bound(p, spec_of(Method::dense, 3));
    EXPECT_LE(v, p.objective(std::vector<double>(3, 1.0)) + 1e-6);
}

TEST(Relaxation, FlatnessDetectsExactOrder) {
    const SrfoProblem p = gen_three_ratio_ball();
    const RunResult k2 = run_relaxation(p, spec_of(Method::dense, 2));
    const RunResult k3 = run_relaxation(p, spec_of(Method::dense, 3));
    EXPECT_FALSE(k2.certified);
    EXPECT_TRUE(k3.certified);
    EXPECT_NEAR(k3.bound, -0.34651, 1e-4);
    EXPECT_LE(k2.bound, k3.bound + 1e-6);
}

TEST(Relaxation, CorrelativeSparsityVariantsAgree) {
    const SrfoProblem p = gen_rosenbrock_ratio(4);
    const double a = solve_bound(p, spec_of(Method::cs, 2));
    const double b = solve_bound(p, spec_of(Method::cs_signsym, 2));
    EXPECT_NEAR(a, b, 1e-5);
    EXPECT_NEAR(b, 4.0, 1e-4);
}

TEST(Relaxation, CliqueBuildUsesOneMeasurePerClique) {
    const SrfoProblem p = gen_rosenbrock_ratio(5);
    const RelaxationSdp r = build_cs(p, 2);
    ASSERT_TRUE(r.cliques.has_value());
    EXPECT_EQ(r.measures.size(), 5u);
    for (const auto& M : r.measures) EXPECT_EQ(M.vars.size(), 2u);
}

TEST(Relaxation, StandardFormIsLossless) {
    const RelaxationSdp r = build_signsym(gen_three_ratio_ball(), 2);
    const SdpStandardForm sf = to_standard_form(r);
    EXPECT_EQ(sf.nvars, r.ndec);
    EXPECT_EQ(sf.block_sizes, r.block_sizes());
    EXPECT_EQ(sf.E.size(), r.equalities.size());
    EXPECT_NO_THROW(sf.validate());
}
