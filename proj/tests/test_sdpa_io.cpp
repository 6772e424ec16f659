#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ratsos/generators.hpp"
#include "ratsos/pipeline.hpp"
#include "ratsos/sdpa_io.hpp"

using namespace ratsos;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

SdpStandardForm relaxation_form(const SrfoProblem& p, Method m, int k) {
    RelaxationSpec s;
    s.method = m;
    s.order = k;
    return to_standard_form(build_relaxation(p, s));
}

}  // namespace

TEST(SdpaExport, MatchesGoldenFile) {
    const SdpStandardForm sf = relaxation_form(gen_trivial(), Method::dense, 1);
    EXPECT_EQ(export_sdpa_string(sf), read_file(std::string(RATSOS_SOURCE_DIR) + "/tests/golden/trivial_dense_k1.dat-s"));
}

TEST(SdpaExport, RoundTripIsStable) {
    for (Method m : {Method::dense, Method::signsym, Method::epigraph}) {
        const SdpStandardForm sf = relaxation_form(gen_three_ratio_ball(), m, 2);
        const std::string a = export_sdpa_string(sf);
        const SdpStandardForm back = import_sdpa_string(a);
        EXPECT_EQ(export_sdpa_string(back), a) << to_string(m);
        EXPECT_EQ(back.E.size(), sf.E.size());
    }
}

TEST(SdpaExport, ImportedProblemSolvesToSameValue) {
    const SdpStandardForm sf = relaxation_form(gen_three_ratio_ball(), Method::signsym, 2);
    const SolveReport a = solve_internal(sf);
    const SolveReport b = solve_internal(import_sdpa_string(export_sdpa_string(sf)));
    ASSERT_TRUE(is_success(a.status));
    ASSERT_TRUE(is_success(b.status));
    // The format has no constant term; the offset travels separately.
    EXPECT_NEAR(a.primal, b.primal + sf.c0, 1e-8);
    EXPECT_NEAR(a.dual, b.dual + sf.c0, 1e-8);
}

TEST(SdpaExport, HeaderAndEntryShape) {
    const SdpStandardForm sf = relaxation_form(gen_three_ratio_ball(), Method::dense, 2);
    std::istringstream in(export_sdpa_string(sf));
    std::size_t m = 0, nb = 0;
    in >> m >> nb;
    EXPECT_EQ(m, sf.nvars);
    std::vector<long long> sizes(nb);
    for (auto& s : sizes) in >> s;
    EXPECT_LT(sizes.back(), 0);
    for (std::size_t b = 0; b + 1 < nb; ++b) EXPECT_GT(sizes[b], 1);
    for (std::size_t l = 0; l < m; ++l) {
        double c;
        in >> c;
    }
    std::size_t mat, blk, i, j;
    double v;
    std::size_t count = 0;
    while (in >> mat >> blk >> i >> j >> v) {
        ++count;
        EXPECT_LE(mat, m);
        EXPECT_GE(blk, 1u);
        EXPECT_LE(blk, nb);
        EXPECT_LE(i, j);
        const long long sz = sizes[blk - 1];
        EXPECT_LE(j, static_cast<std::size_t>(std::llabs(sz)));
        if (sz < 0) {
            EXPECT_EQ(i, j);
        }
    }
    EXPECT_TRUE(in.eof());
    EXPECT_GT(count, 0u);
}

TEST(SdpaImport, MalformedInputThrows) {
    EXPECT_THROW(import_sdpa_string(""), ParseError);
    EXPECT_THROW(import_sdpa_string("2\n1\n2\n1 1\n0 1 1 1 x\n"), ParseError);
    EXPECT_THROW(import_sdpa_string("1\n1\n2\n1\n1 1 3 3 1\n"), ParseError);
    EXPECT_THROW(import_sdpa_string("1\n1\n-2\n1\n1 1 1 2 1\n"), ParseError);
}

TEST(SdpaImport, AcceptsCommentsAndPunctuation) {
    const std::string text = "\"comment\"\n1 =mDIM\n1\n{2}\n{1.0}\n0 1 1 2 -1\n1 1 1 1 1\n1 1 2 2 1\n";
    const SdpStandardForm sf = import_sdpa_string(text);
    const SolveReport r = solve_internal(sf);
    ASSERT_TRUE(is_success(r.status));
    EXPECT_NEAR(r.primal, 1.0, 1e-6);
}

TEST(SdpaSolution, ParsesResultFile) {
    const std::string text =
        "SDPA start\nphase.value  = pdOPT\nobjValPrimal = -3.4651e-01\nobjValDual   = -3.4652e-01\n"
        "xVec = \n{1.0, 2.5, -3}\n";
    const SolveReport r = import_sdpa_solution_string(text);
    EXPECT_EQ(r.status, SolveStatus::optimal);
    EXPECT_DOUBLE_EQ(r.primal, -0.34651);
    EXPECT_EQ(r.y, (std::vector<double>{1.0, 2.5, -3.0}));
    EXPECT_THROW(import_sdpa_solution_string("objValPrimal = 1\n"), ParseError);
    const SolveReport inf = import_sdpa_solution_string("phase.value = pINF_dFEAS\nobjValPrimal = 0\nobjValDual = 0\n");
    EXPECT_EQ(inf.status, SolveStatus::infeasible);
}

TEST(SdpaExport, PipelineWritesFileAndOffset) {
    const auto path = std::filesystem::temp_directory_path() / "ratsos_test_export.dat-s";
    RelaxationSpec s;
    s.method = Method::signsym;
    s.order = 2;
    const ExportResult e = export_relaxation(gen_three_ratio_ball(), s, path.string());
    EXPECT_TRUE(std::filesystem::exists(path));
    EXPECT_EQ(import_sdpa(path.string()).nvars, e.ndec);
    EXPECT_THROW(import_sdpa("/nonexistent/dir/x.dat-s"), IoError);
    std::filesystem::remove(path);
}
