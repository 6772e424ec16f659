#include <gtest/gtest.h>

#include <random>

#include "ratsos/generators.hpp"
#include "ratsos/signsym.hpp"

using namespace ratsos;

namespace {

BitVec bits(std::size_t n, std::uint64_t mask) {
    BitVec v(n);
    for (std::size_t i = 0; i < n; ++i)
        if ((mask >> i) & 1u) v.set(i);
    return v;
}

std::vector<Monomial> random_support(std::mt19937_64& rng, std::size_t n, std::size_t count) {
    std::uniform_int_distribution<int> e(0, 3);
    std::vector<Monomial> A;
    for (std::size_t t = 0; t < count; ++t) {
        std::vector<Exponent> ex(n);
        for (auto& x : ex) x = static_cast<Exponent>(e(rng));
        A.emplace_back(ex);
    }
    return A;
}

}  // namespace

TEST(SignSymmetry, EmptySupportGivesFullGroup) {
    const auto g = sign_symmetries(4, {});
    EXPECT_EQ(g.rank(), 4u);
}

TEST(SignSymmetry, OddMonomialKillsItsFlip) {
    // x1 * x2^2: flipping x1 changes sign, flipping x2 does not.
    const auto g = sign_symmetries(2, {Monomial({1, 2})});
    EXPECT_EQ(g.rank(), 1u);
    EXPECT_TRUE(g.contains(bits(2, 0b10)));
    EXPECT_FALSE(g.contains(bits(2, 0b01)));
}

TEST(SignSymmetry, BruteForceAgreement) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 10);
        const auto A = random_support(rng, n, 1 + static_cast<std::size_t>(trial % 7));
        const auto g = sign_symmetries(n, A);
        std::size_t count = 0;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            const BitVec s = bits(n, mask);
            bool sym = true;
            for (const auto& a : A) sym &= !s.dot(BitVec::parity(a));
            count += sym;
            EXPECT_EQ(g.contains(s), sym) << "n=" << n << " mask=" << mask;
        }
        EXPECT_EQ(count, std::size_t{1} << g.rank());

        // Closure: a monomial is invariant under every symmetry.
        for (const auto& b : random_support(rng, n, 10)) {
            bool invariant = true;
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask)
                if (g.contains(bits(n, mask))) invariant &= !bits(n, mask).dot(BitVec::parity(b));
            EXPECT_EQ(g.in_closure(b), invariant);
        }
    }
}

TEST(SignSymmetry, ThreeRatioBallRanks) {
    const SrfoProblem p = gen_three_ratio_ball();
    const SupportSets s = support_sets(p);
    ASSERT_EQ(s.per_ratio.size(), 3u);
    EXPECT_EQ(sign_symmetries(3, s.per_ratio[0]).rank(), 0u);
    EXPECT_EQ(sign_symmetries(3, s.per_ratio[1]).rank(), 2u);
    EXPECT_EQ(sign_symmetries(3, s.per_ratio[2]).rank(), 1u);
    EXPECT_EQ(sign_symmetries(3, s.global).rank(), 0u);
}

TEST(SignSymmetry, FirstSetAbsorbsAllSupports) {
    const SrfoProblem p = gen_rand_srfo(3, 3, 2, 0.5, 4);
    const SupportSets s = support_sets(p);
    for (std::size_t i = 1; i < s.per_ratio.size(); ++i)
        for (const auto& a : s.per_ratio[i])
            EXPECT_NE(std::find(s.per_ratio[0].begin(), s.per_ratio[0].end(), a), s.per_ratio[0].end());
}

TEST(BlockPartition, ClassesPartitionTheBasis) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
        const auto g = sign_symmetries(n, random_support(rng, n, 3));
        const MonomialBasis b = full_basis(n, 3);
        const BlockPartition part = block_partition(g, b);
        std::vector<int> seen(b.size(), 0);
        for (const auto& c : part.classes)
            for (auto i : c) ++seen[i];
        for (int s : seen) EXPECT_EQ(s, 1);
        EXPECT_LE(part.classes.size(), std::size_t{1} << g.rank());
        // Within a class every product lies in the closure.
        for (const auto& c : part.classes)
            for (auto i : c)
                for (auto j : c) EXPECT_TRUE(g.in_closure(b[i] * b[j]));
    }
}

TEST(BlockPartition, AllEvenGivesOneBlockPerParity) {
    const auto g = sign_symmetries(2, {Monomial({2, 0}), Monomial({0, 4})});
    const BlockPartition part = block_partition(g, full_basis(2, 2));
    EXPECT_EQ(part.classes.size(), 4u);
    const auto h = size_histogram(part.sizes());
    std::size_t total = 0;
    for (auto [size, count] : h) total += size * count;
    EXPECT_EQ(total, 6u);
    EXPECT_EQ(h.begin()->first, 3u);
}
