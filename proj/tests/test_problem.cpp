#include <gtest/gtest.h>

#include <random>

#include "ratsos/generators.hpp"
#include "ratsos/problem.hpp"

using namespace ratsos;

namespace {

ParseError parse_error_of(const std::string& text) {
    try {
        parse_problem(text);
    } catch (const ParseError& e) {
        return e;
    }
    ADD_FAILURE() << "no parse error for:\n" << text;
    return ParseError("none", 0, 0);
}

}  // namespace

TEST(ParseProblem, MinimalFile) {
    const SrfoProblem p = parse_problem("vars x1\nratio: (x1)/(1)\nconstraint: 1 - x1^2 >= 0\n");
    EXPECT_EQ(p.nvars(), 1u);
    EXPECT_EQ(p.nratios(), 1u);
    EXPECT_EQ(p.nconstraints(), 1u);
    EXPECT_FALSE(p.constraints[0].is_equality());
    EXPECT_FALSE(p.maximize);
    EXPECT_FALSE(p.cliques.has_value());
}

TEST(ParseProblem, FullGrammar) {
    const SrfoProblem p = parse_problem(R"(# comment line
name demo
vars x y z
sense max
ratio: (x^2 + 2.5*y*z - 1) / (1 + x^2)   # trailing comment
ratio: (-(y - z)^2) / (2)
constraint: 3 - x^2 - y^2 - z^2 == 0
constraint: x >= 0
clique: 1 2 3
clique: 2 3
)");
    EXPECT_EQ(p.name, "demo");
    EXPECT_TRUE(p.maximize);
    EXPECT_TRUE(p.constraints[0].is_equality());
    ASSERT_TRUE(p.cliques.has_value());
    EXPECT_EQ((*p.cliques)[1], (IndexSet{1, 2}));
    const std::vector<double> pt{1.0, 2.0, 0.5};
    EXPECT_NEAR(p.ratios[0].num.evaluate(pt), 1.0 + 2.5 * 2.0 * 0.5 - 1.0, 1e-15);
    EXPECT_NEAR(p.ratios[1].num.evaluate(pt), -2.25, 1e-15);
    EXPECT_NEAR(p.constraints[1].g.evaluate(pt), 1.0, 1e-15);
}

TEST(ParseProblem, ErrorsCarryLineAndColumn) {
    const ParseError unknown = parse_error_of("vars x\nratio: (x*y)/(1)\n");
    EXPECT_EQ(unknown.line(), 2);
    EXPECT_EQ(unknown.column(), 11);
    EXPECT_NE(std::string(unknown.what()).find("unknown variable 'y'"), std::string::npos);

    const ParseError implicit = parse_error_of("vars x\nratio: (2x)/(1)\n");
    EXPECT_EQ(implicit.line(), 2);
    EXPECT_NE(std::string(implicit.what()).find("implicit multiplication"), std::string::npos);

    const ParseError overflow = parse_error_of("vars x\nratio: (x^70000)/(1)\n");
    EXPECT_NE(std::string(overflow.what()).find("degree overflow"), std::string::npos);

    const ParseError cliques = parse_error_of("vars x y\nratio: (x)/(1)\nclique: 1\nclique: 2\n");
    EXPECT_NE(std::string(cliques.what()).find("clique count mismatch"), std::string::npos);

    const ParseError paren = parse_error_of("vars x\nratio: (x^2 / (1)\n");
    EXPECT_EQ(paren.line(), 2);
}

TEST(ParseProblem, RejectsStructuralMistakes) {
    EXPECT_THROW(parse_problem("ratio: (1)/(1)\n"), ParseError);
    EXPECT_THROW(parse_problem("vars x\n"), ParseError);
    EXPECT_THROW(parse_problem("vars x x\nratio: (x)/(1)\n"), ParseError);
    EXPECT_THROW(parse_problem("vars x\nratio: (x)/(1)\nfoo: 1\n"), ParseError);
    EXPECT_THROW(parse_problem("vars x\nratio: (x)/(1)\nclique: 2\n"), ParseError);
    EXPECT_THROW(parse_problem("vars x\nratio: (x)/(1)\nsense up\n"), ParseError);
}

TEST(SerializeProblem, RoundTripIsExact) {
    for (const SrfoProblem& p : {gen_three_ratio_ball(), gen_reznick_chain(4, 1), gen_rand_srfo(3, 3, 2, 0.5, 11),
                                 gen_rosenbrock_ratio(4), gen_rayleigh(2, 2, 5), gen_shekel(3, 5, 2)}) {
        const std::string text = serialize_problem(p);
        const SrfoProblem q = parse_problem(text);
        EXPECT_TRUE(p == q) << p.name;
        EXPECT_EQ(serialize_problem(q), text) << p.name;
    }
}

TEST(SerializeProblem, SeventeenDigitCoefficients) {
    SrfoProblem p = parse_problem("vars x\nratio: (x)/(1)\n");
    p.ratios[0].num = Polynomial::variable(1, 0) * (1.0 / 3.0);
    const SrfoProblem q = parse_problem(serialize_problem(p));
    EXPECT_EQ(q.ratios[0].num.coeff(Monomial({1})), 1.0 / 3.0);
}

TEST(SrfoProblem, ObjectiveAndViolation) {
    const SrfoProblem p = gen_three_ratio_ball();
    const std::vector<double> inside{0.1, -0.2, 0.3}, outside{1.0, 1.0, 0.0};
    EXPECT_TRUE(p.feasible(inside));
    EXPECT_FALSE(p.feasible(outside));
    EXPECT_NEAR(p.max_violation(outside), 1.0, 1e-15);
    double expect = 0.0;
    for (const auto& r : p.ratios) expect += r.num.evaluate(inside) / r.den.evaluate(inside);
    EXPECT_DOUBLE_EQ(p.objective(inside), expect);
}

TEST(SrfoProblem, MinimizationFormNegatesNumerators) {
    SrfoProblem p = parse_problem("vars x\nsense max\nratio: (x)/(1 + x^2)\n");
    const SrfoProblem m = p.as_minimization();
    EXPECT_FALSE(m.maximize);
    const std::vector<double> pt{0.7};
    EXPECT_DOUBLE_EQ(m.objective(pt), -p.objective(pt));
}

TEST(SrfoProblem, ValidateCatchesDimensionMismatch) {
    SrfoProblem p = parse_problem("vars x y\nratio: (x)/(1)\n");
    p.ratios[0].num = Polynomial::variable(3, 0);
    EXPECT_THROW(p.validate(), DimensionError);
}

TEST(ProblemFiles, LoadMissingFileIsIoError) {
    EXPECT_THROW(load_problem("/nonexistent/none.srfo"), IoError);
}

TEST(ProblemFiles, ShippedProblemsParse) {
    for (const char* f : {"ex4_5", "trivial", "reznick_M6_d2", "reznick_sparse_N5_d2", "rosenbrock_N10",
                          "overlap_N8_s1", "motzkin_N10", "rip_violation", "all_even"}) {
        const std::string path = std::string(RATSOS_SOURCE_DIR) + "/problems/" + f + ".srfo";
        EXPECT_NO_THROW(load_problem(path).validate()) << path;
    }
}
