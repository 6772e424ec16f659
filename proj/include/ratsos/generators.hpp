#pragma once

/**
 * @file generators.hpp
 * @brief Benchmark families, random instances and complex Rayleigh-quotient realification.
 *
 * All random draws go through Rng, a seeded 64-bit Mersenne twister whose
 * doubles are built from the top 53 bits, so instances are identical across
 * standard libraries for a given seed.
 */

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "ratsos/problem.hpp"

namespace ratsos {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 eng_;
};

namespace gen_detail {

inline Polynomial mono(std::size_t n, std::initializer_list<std::pair<std::size_t, int>> powers, double c = 1.0) {
    std::vector<Exponent> e(n, 0);
    for (auto [v, p] : powers) e.at(v) = Monomial::checked(e.at(v) + p);
    return Polynomial::from_monomial(Monomial(std::move(e)), c);
}

inline Polynomial sum_sq(std::size_t n, std::initializer_list<std::size_t> vars) {
    Polynomial s(n);
    for (auto v : vars) s += mono(n, {{v, 2}});
    return s;
}

inline SrfoProblem skeleton(std::string name, std::size_t n) {
    SrfoProblem p;
    p.name = std::move(name);
    p.var_names = SrfoProblem::default_names(n);
    return p;
}

}  // namespace gen_detail

/// Three ratios in (x, y, z) over the closed unit ball; no correlative structure.
inline SrfoProblem gen_three_ratio_ball() {
    SrfoProblem p;
    p.name = "three_ratio_ball";
    p.var_names = {"x", "y", "z"};
    const std::size_t n = 3;
    using gen_detail::mono;
    const auto one = Polynomial::constant(n, 1.0);
    const auto x2 = mono(n, {{0, 2}}), y2 = mono(n, {{1, 2}}), z2 = mono(n, {{2, 2}});
    p.ratios.push_back({x2 + y2 - mono(n, {{1, 1}, {2, 1}}), one + 2.0 * x2 + y2 + z2});
    p.ratios.push_back({y2 + mono(n, {{0, 2}, {2, 1}}), one + x2 + 2.0 * y2 + z2});
    p.ratios.push_back({z2 - mono(n, {{0, 1}}) + mono(n, {{1, 1}}), one + x2 + y2 + 2.0 * z2});
    p.constraints.push_back({one - x2 - y2 - z2, ConstraintKind::inequality});
    return p;
}

/// Single ratio x1^2 / 1 on the unit interval.
inline SrfoProblem gen_trivial() {
    auto p = gen_detail::skeleton("trivial", 1);
    p.ratios.push_back({gen_detail::mono(1, {{0, 2}}), Polynomial::constant(1, 1.0)});
    p.constraints.push_back({Polynomial::constant(1, 1.0) - gen_detail::mono(1, {{0, 2}}), ConstraintKind::inequality});
    return p;
}

/**
 * M-1 Reznick-type ratios in three variables with parameter a = j/M on the
 * sphere |x|^2 = 3. Each ratio is at least 1, with equality at (1, 1, 1), so
 * the optimum is M-1.
 */
inline SrfoProblem gen_reznick_chain(int M, int d) {
    if (M < 2 || d < 1) throw DimensionError("reznick chain needs M >= 2 and d >= 1");
    auto p = gen_detail::skeleton("reznick_M" + std::to_string(M) + "_d" + std::to_string(d), 3);
    const std::size_t n = 3;
    using gen_detail::mono;
    const Polynomial cube = mono(n, {{0, 6 * d}}) + mono(n, {{1, 6 * d}}) + mono(n, {{2, 6 * d}});
    const Polynomial s42 = mono(n, {{0, 4 * d}, {1, 2 * d}}) + mono(n, {{1, 4 * d}, {2, 2 * d}}) +
                           mono(n, {{2, 4 * d}, {0, 2 * d}});
    const Polynomial s24 = mono(n, {{0, 2 * d}, {1, 4 * d}}) + mono(n, {{1, 2 * d}, {2, 4 * d}}) +
                           mono(n, {{2, 2 * d}, {0, 4 * d}});
    const Polynomial s222 = mono(n, {{0, 2 * d}, {1, 2 * d}, {2, 2 * d}});
    for (int j = 1; j < M; ++j) {
        const double a = static_cast<double>(j) / M;
        const double a2 = a * a, a4 = a2 * a2, a6 = a4 * a2, a8 = a4 * a4;
        Polynomial num = a4 * cube + s42 + a8 * s24;
        Polynomial den = 2.0 * a6 * s42 + 2.0 * a2 * s24 + 3.0 * (1.0 - 2.0 * a2 + a4 - 2.0 * a6 + a8) * s222;
        p.ratios.push_back({std::move(num), std::move(den)});
    }
    p.constraints.push_back({gen_detail::sum_sq(n, {0, 1, 2}) - Polynomial::constant(n, 3.0), ConstraintKind::equality});
    return p;
}

/**
 * Shekel-type family: minimize -sum_i 1 / (sum_j (x_j^2 - a_ij)^2 + c_i)
 * subject to 60 - sum_j (x_j^2 - 5)^2 >= 0, with a_ij ~ U[0, 10] and
 * c_i ~ U[0.1, 1] drawn from the seed.
 */
inline SrfoProblem gen_shekel(int n, int N = 30, std::uint64_t seed = 1) {
    if (n < 1 || N < 1) throw DimensionError("shekel needs n >= 1 and N >= 1");
    auto p = gen_detail::skeleton("shekel_n" + std::to_string(n) + "_N" + std::to_string(N), n);
    const std::size_t nv = static_cast<std::size_t>(n);
    Rng rng(seed);
    using gen_detail::mono;
    for (int i = 0; i < N; ++i) {
        Polynomial den(nv);
        for (std::size_t j = 0; j < nv; ++j) {
            const double a = rng.uniform(0.0, 10.0);
            den += (mono(nv, {{j, 2}}) - Polynomial::constant(nv, a)).pow(2);
        }
        den += Polynomial::constant(nv, rng.uniform(0.1, 1.0));
        p.ratios.push_back({Polynomial::constant(nv, -1.0), std::move(den)});
    }
    Polynomial g = Polynomial::constant(nv, 60.0);
    for (std::size_t j = 0; j < nv; ++j) g -= (mono(nv, {{j, 2}}) - Polynomial::constant(nv, 5.0)).pow(2);
    p.constraints.push_back({std::move(g), ConstraintKind::inequality});
    return p;
}

/**
 * Random instance -sum_i 1 / (f_i^2 + 1) over the ball |x|^2 <= radius^2.
 * A pool of nonconstant monomials of degree <= d is kept with probability xi
 * (redrawn until it holds at least 3), and each f_i takes 3 distinct pool
 * members with U[0, 1] coefficients. The optimum is -N at x = 0.
 */
inline SrfoProblem gen_rand_srfo(int N, int n, int d, double xi, std::uint64_t seed, double radius = 1.0) {
    if (N < 1 || n < 1 || d < 1) throw DimensionError("rand srfo needs positive N, n, d");
    if (!(xi > 0.0 && xi <= 1.0)) throw DimensionError("xi must lie in (0, 1]");
    if (!(radius > 0.0)) throw DimensionError("radius must be positive");
    const std::size_t nv = static_cast<std::size_t>(n);
    const auto all = full_basis(nv, d);
    if (all.size() < 4) throw DimensionError("too few monomials for 3 terms per ratio");
    Rng rng(seed);
    std::vector<Monomial> pool;
    while (pool.size() < 3) {
        pool.clear();
        for (std::size_t t = 1; t < all.size(); ++t)
            if (rng.uniform() < xi) pool.push_back(all[t]);
    }
    auto p = gen_detail::skeleton("rand_N" + std::to_string(N) + "_n" + std::to_string(n) + "_d" + std::to_string(d) +
                                      "_s" + std::to_string(seed),
                                  nv);
    for (int i = 0; i < N; ++i) {
        std::vector<std::size_t> pick;
        while (pick.size() < 3) {
            const std::size_t t = rng.index(pool.size());
            if (std::find(pick.begin(), pick.end(), t) == pick.end()) pick.push_back(t);
        }
        Polynomial f(nv);
        for (auto t : pick) f.add_term(pool[t], rng.uniform());
        p.ratios.push_back({Polynomial::constant(nv, -1.0), f * f + Polynomial::constant(nv, 1.0)});
    }
    Polynomial g = Polynomial::constant(nv, radius * radius);
    for (std::size_t j = 0; j < nv; ++j) g.add_term(Monomial::unit(nv, j, 2), -1.0);
    p.constraints.push_back({std::move(g), ConstraintKind::inequality});
    return p;
}

/// Motzkin-type chain in 2N+2 variables on overlapping 4-spheres; optimum 4N.
inline SrfoProblem gen_motzkin_chain(int N) {
    if (N < 1) throw DimensionError("motzkin chain needs N >= 1");
    const std::size_t n = 2 * static_cast<std::size_t>(N) + 2;
    auto p = gen_detail::skeleton("motzkin_N" + std::to_string(N), n);
    using gen_detail::mono;
    std::vector<IndexSet> cl;
    for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
        const std::size_t a = 2 * i, b = a + 1, c = a + 2, e = a + 3;
        const Polynomial abc = mono(n, {{a, 2}, {b, 2}, {c, 2}});
        Polynomial num = gen_detail::sum_sq(n, {a, b, c}) * abc + mono(n, {{e, 8}});
        p.ratios.push_back({std::move(num), mono(n, {{a, 2}, {b, 2}, {c, 2}, {e, 2}})});
        p.constraints.push_back(
            {gen_detail::sum_sq(n, {a, b, c, e}) - Polynomial::constant(n, 4.0), ConstraintKind::equality});
        cl.push_back({a, b, c, e});
    }
    p.cliques = std::move(cl);
    return p;
}

/// Chain of Robinson-type ratios on overlapping 3-spheres; optimum N.
inline SrfoProblem gen_reznick_sparse_chain(int N, int d) {
    if (N < 1 || d < 1) throw DimensionError("sparse chain needs N >= 1 and d >= 1");
    const std::size_t n = 2 * static_cast<std::size_t>(N) + 1;
    auto p = gen_detail::skeleton("reznick_sparse_N" + std::to_string(N) + "_d" + std::to_string(d), n);
    using gen_detail::mono;
    std::vector<IndexSet> cl;
    for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
        const std::size_t a = 2 * i, b = a + 1, c = a + 2;
        Polynomial num = mono(n, {{a, 6 * d}}) + mono(n, {{b, 6 * d}}) + mono(n, {{c, 6 * d}}) +
                         mono(n, {{a, 2 * d}, {b, 2 * d}, {c, 2 * d}}, 3.0);
        Polynomial den = mono(n, {{a, 4 * d}, {b, 2 * d}}) + mono(n, {{a, 2 * d}, {b, 4 * d}}) +
                         mono(n, {{a, 4 * d}, {c, 2 * d}}) + mono(n, {{a, 2 * d}, {c, 4 * d}}) +
                         mono(n, {{b, 4 * d}, {c, 2 * d}}) + mono(n, {{b, 2 * d}, {c, 4 * d}});
        p.ratios.push_back({std::move(num), std::move(den)});
        p.constraints.push_back(
            {gen_detail::sum_sq(n, {a, b, c}) - Polynomial::constant(n, 3.0), ConstraintKind::equality});
        cl.push_back({a, b, c});
    }
    p.cliques = std::move(cl);
    return p;
}

/// Maximize sum_i 1 / (100 (x_{i+1}^2 - x_i^2)^2 + (x_i^2 - 1)^2 + 1) on the box |x_i| <= 4; optimum N.
inline SrfoProblem gen_rosenbrock_ratio(int N) {
    if (N < 1) throw DimensionError("rosenbrock ratio needs N >= 1");
    const std::size_t n = static_cast<std::size_t>(N) + 1;
    auto p = gen_detail::skeleton("rosenbrock_N" + std::to_string(N), n);
    p.maximize = true;
    using gen_detail::mono;
    const auto one = Polynomial::constant(n, 1.0);
    std::vector<IndexSet> cl;
    for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
        Polynomial den = 100.0 * (mono(n, {{i + 1, 2}}) - mono(n, {{i, 2}})).pow(2) + (mono(n, {{i, 2}}) - one).pow(2) + one;
        p.ratios.push_back({one, std::move(den)});
        cl.push_back({i, i + 1});
    }
    for (std::size_t i = 0; i < n; ++i)
        p.constraints.push_back({Polynomial::constant(n, 16.0) - mono(n, {{i, 2}}), ConstraintKind::inequality});
    p.cliques = std::move(cl);
    return p;
}

/// Overlapping bilinear ratios over windows of s+1 variables on the unit box.
inline SrfoProblem gen_overlap_chain(int N, int s) {
    if (N < 1 || s < 1) throw DimensionError("overlap chain needs N >= 1 and s >= 1");
    const std::size_t n = static_cast<std::size_t>(N + s);
    auto p = gen_detail::skeleton("overlap_N" + std::to_string(N) + "_s" + std::to_string(s), n);
    using gen_detail::mono;
    std::vector<IndexSet> cl;
    for (std::size_t i = 0; i < static_cast<std::size_t>(N); ++i) {
        Polynomial num(n), den = Polynomial::constant(n, 1.0);
        IndexSet I;
        for (std::size_t j = 1; j <= static_cast<std::size_t>(s); ++j) num += mono(n, {{i + j - 1, 1}, {i + j, 1}});
        for (std::size_t j = 1; j <= static_cast<std::size_t>(s) + 1; ++j) {
            den += mono(n, {{i + j - 1, 2}}, static_cast<double>(j));
            I.push_back(i + j - 1);
        }
        p.ratios.push_back({std::move(num), std::move(den)});
        cl.push_back(std::move(I));
    }
    for (std::size_t i = 0; i < n; ++i)
        p.constraints.push_back({Polynomial::constant(n, 1.0) - mono(n, {{i, 2}}), ConstraintKind::inequality});
    p.cliques = std::move(cl);
    return p;
}

using ComplexMatrix = Eigen::MatrixXcd;

/**
 * Real form of max sum_i z^H A_i z / z^H B_i z over |z| = 1 with z = x + i y:
 * each quadratic form becomes x'A1 x - 2 x'A2 y + y'A1 y where A = A1 + i A2.
 * The result is a maximization in (x1..xn, y1..yn).
 */
inline SrfoProblem rayleigh_to_real(const std::vector<ComplexMatrix>& A, const std::vector<ComplexMatrix>& B,
                                    double herm_tol = 1e-12) {
    if (A.empty() || A.size() != B.size()) throw DimensionError("need matching, nonempty A and B lists");
    const Eigen::Index n = A.front().rows();
    auto check_hermitian = [&](const ComplexMatrix& H, const char* what, std::size_t i) {
        if (H.rows() != n || H.cols() != n) throw DimensionError(std::string(what) + " matrices must all be n x n");
        const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
        if ((H - H.adjoint()).cwiseAbs().maxCoeff() > herm_tol * scale)
            throw DimensionError(std::string(what) + "_" + std::to_string(i + 1) + " is not Hermitian");
    };
    const std::size_t nv = 2 * static_cast<std::size_t>(n);
    SrfoProblem p;
    p.name = "rayleigh_n" + std::to_string(n) + "_N" + std::to_string(A.size());
    for (Eigen::Index i = 0; i < n; ++i) p.var_names.push_back("x" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < n; ++i) p.var_names.push_back("y" + std::to_string(i + 1));
    p.maximize = true;

    auto quad = [&](const ComplexMatrix& H) {
        Polynomial f(nv);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) {
                const double re = H(r, c).real(), im = H(r, c).imag();
                const auto xr = static_cast<std::size_t>(r), xc = static_cast<std::size_t>(c);
                const std::size_t yr = xr + static_cast<std::size_t>(n), yc = xc + static_cast<std::size_t>(n);
                f.add_term(Monomial::unit(nv, xr) * Monomial::unit(nv, xc), re);
                f.add_term(Monomial::unit(nv, yr) * Monomial::unit(nv, yc), re);
                f.add_term(Monomial::unit(nv, xr) * Monomial::unit(nv, yc), -2.0 * im);
            }
        return f;
    };
    for (std::size_t i = 0; i < A.size(); ++i) {
        check_hermitian(A[i], "A", i);
        check_hermitian(B[i], "B", i);
        Eigen::LLT<ComplexMatrix> llt(B[i]);
        if (llt.info() != Eigen::Success) throw DimensionError("B_" + std::to_string(i + 1) + " is not positive definite");
        p.ratios.push_back({quad(A[i]), quad(B[i])});
    }
    Polynomial g = Polynomial::constant(nv, -1.0);
    for (std::size_t j = 0; j < nv; ++j) g.add_term(Monomial::unit(nv, j, 2), 1.0);
    p.constraints.push_back({std::move(g), ConstraintKind::equality});
    return p;
}

struct HermitianPairs {
    std::vector<ComplexMatrix> A, B;
};

/// A = C + C^H and B = D^H D with C, D having U[0, 1] real and imaginary parts.
inline HermitianPairs random_hermitian_pairs(int n, int N, std::uint64_t seed) {
    if (n < 1 || N < 1) throw DimensionError("need positive n and N");
    Rng rng(seed);
    HermitianPairs out;
    auto draw = [&] {
        ComplexMatrix m(n, n);
        Eigen::MatrixXd r(n, n), c(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r(i, j) = rng.uniform();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = rng.uniform();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = {r(i, j), c(i, j)};
        return m;
    };
    for (int i = 0; i < N; ++i) {
        const ComplexMatrix C = draw();
        const ComplexMatrix D = draw();
        out.A.push_back(C + C.adjoint());
        out.B.push_back(D.adjoint() * D);
    }
    return out;
}

inline SrfoProblem gen_rayleigh(int n, int N, std::uint64_t seed) {
    auto h = random_hermitian_pairs(n, N, seed);
    auto p = rayleigh_to_real(h.A, h.B, 1e-10);
    p.name += "_s" + std::to_string(seed);
    return p;
}

}  // namespace ratsos
