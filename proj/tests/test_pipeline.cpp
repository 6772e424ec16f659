#include <gtest/gtest.h>

#include <filesystem>

#include "ratsos/generators.hpp"
#include "ratsos/grid_oracle.hpp"
#include "ratsos/pipeline.hpp"

using namespace ratsos;

namespace {

std::string shipped(const std::string& name) { return std::string(RATSOS_SOURCE_DIR) + "/problems/" + name; }

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

RelaxationSpec spec_of(Method m, int k) {
    RelaxationSpec s;
    s.method = m;
    s.order = k;
    return s;
}

}  // namespace

TEST(Pipeline, MaximizationReportsUpperBound) {
    const SrfoProblem p = rayleigh_to_real({ComplexMatrix::Constant(1, 1, 2.0)}, {ComplexMatrix::Constant(1, 1, 1.0)});
    const RunResult r = run_relaxation(p, spec_of(Method::dense, 1));
    ASSERT_TRUE(is_success(r.status));
    EXPECT_TRUE(r.maximize);
    EXPECT_NEAR(r.bound, 2.0, 1e-6);
    EXPECT_GE(r.bound, 2.0 - 1e-6);
}

TEST(Pipeline, RayleighBoundDominatesSampledValues) {
    const SrfoProblem p = gen_rayleigh(2, 2, 5);
    const RunResult r = run_relaxation(p, spec_of(Method::signsym, 2));
    ASSERT_TRUE(is_success(r.status));
    GridOracleOptions opt;
    opt.random_samples = 2000;
    const GridOracleResult g = grid_oracle(p, opt);
    // The oracle works on the minimization form, so its value is the negated objective.
    EXPECT_GE(r.bound, -g.best_value - 1e-6);
}

TEST(Pipeline, ResultCarriesStructure) {
    const RunResult r = run_relaxation(gen_three_ratio_ball(), spec_of(Method::dense, 2));
    EXPECT_EQ(r.problem, "three_ratio_ball");
    EXPECT_EQ(r.d_min, 2);
    EXPECT_EQ(r.nblocks, 6u);
    EXPECT_EQ(format_histogram(r.block_size_histogram), "10x3, 4x3");
    EXPECT_GT(r.iterations, 0);
    EXPECT_GE(r.time_ms(), r.solve_ms);
}

TEST(Pipeline, ExportWritesFile) {
    const auto path = std::filesystem::temp_directory_path() / "ratsos_pipeline_export.dat-s";
    const ExportResult e = export_relaxation(gen_rosenbrock_ratio(5), spec_of(Method::cs_signsym, 2), path.string());
    EXPECT_TRUE(std::filesystem::exists(path));
    EXPECT_GT(std::filesystem::file_size(path), 0u);
    EXPECT_GT(e.nblocks, 0u);
    std::filesystem::remove(path);
}

TEST(Analyze, SignSymmetryRanksPerRatio) {
    const std::string a = analyze_problem(load_problem(shipped("ex4_5.srfo")));
    EXPECT_TRUE(contains(a, "ratio 1: rank 0"));
    EXPECT_TRUE(contains(a, "ratio 2: rank 2"));
    EXPECT_TRUE(contains(a, "ratio 3: rank 1"));
    EXPECT_TRUE(contains(a, "dense k=2: 10x3, 4x3"));
    EXPECT_TRUE(contains(a, "signsym k=2:"));
}

TEST(Analyze, FullRankGroup) {
    const std::string a = analyze_problem(load_problem(shipped("all_even.srfo")));
    EXPECT_TRUE(contains(a, "global: rank 3"));
}

TEST(Analyze, RipWitnessAndRepair) {
    const std::string a = analyze_problem(load_problem(shipped("rip_violation.srfo")));
    EXPECT_TRUE(contains(a, "RIP fails at clique 3: intersection {x1,x3} is not contained in any earlier clique"));
    EXPECT_TRUE(contains(a, "RIP holds after reordering ratios to 1 3 2"));
}

TEST(Analyze, RipViolationStillSolvesAfterReordering) {
    const RunResult r = run_relaxation(load_problem(shipped("rip_violation.srfo")), spec_of(Method::cs_signsym, 1));
    ASSERT_TRUE(is_success(r.status));
    EXPECT_TRUE(std::isfinite(r.bound));
}
