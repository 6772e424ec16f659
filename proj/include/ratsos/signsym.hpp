#pragma once

/**
 * @file signsym.hpp
 * @brief Sign symmetries of monomial supports over GF(2).
 *
 * A sign symmetry of a support set A is a 0/1 vector r with r.alpha even
 * for every alpha in A. The symmetries form a GF(2) subspace; its closure
 * set contains every exponent vector that pairs evenly with all of them.
 * Two basis monomials may share a PSD block exactly when they have the same
 * parity signature against a basis of the subspace.
 */

#include <bit>
#include <cstdint>
#include <map>
#include <vector>

#include "ratsos/poly.hpp"
#include "ratsos/problem.hpp"

namespace ratsos {

/// Packed GF(2) vector.
class BitVec {
public:
    BitVec() = default;
    explicit BitVec(std::size_t n) : n_(n), w_((n + 63) / 64, 0) {}

    static BitVec parity(const Monomial& m) {
        BitVec v(m.size());
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m[i] & 1u) v.set(i);
        return v;
    }

    std::size_t size() const noexcept { return n_; }
    bool get(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
    void set(std::size_t i, bool on = true) {
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (on)
            w_[i >> 6] |= bit;
        else
            w_[i >> 6] &= ~bit;
    }
    void flip(std::size_t i) { w_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

    BitVec& operator^=(const BitVec& o) {
        for (std::size_t k = 0; k < w_.size(); ++k) w_[k] ^= o.w_[k];
        return *this;
    }
    friend BitVec operator^(BitVec a, const BitVec& b) { return a ^= b; }

    /// Parity of the inner product.
    bool dot(const BitVec& o) const {
        std::uint64_t acc = 0;
        for (std::size_t k = 0; k < w_.size(); ++k) acc ^= w_[k] & o.w_[k];
        return std::popcount(acc) & 1;
    }

    bool none() const {
        for (auto x : w_)
            if (x) return false;
        return true;
    }

    bool operator==(const BitVec&) const = default;
    auto operator<=>(const BitVec& o) const {
        if (auto c = n_ <=> o.n_; c != 0) return c;
        return w_ <=> o.w_;
    }

    std::string to_string() const {
        std::string s(n_, '0');
        for (std::size_t i = 0; i < n_; ++i)
            if (get(i)) s[i] = '1';
        return s;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::uint64_t> w_;
};

namespace detail {

/// In-place reduced row echelon form over GF(2); returns pivot columns.
inline std::vector<std::size_t> rref(std::vector<BitVec>& rows, std::size_t ncols) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < ncols && r < rows.size(); ++c) {
        std::size_t p = r;
        while (p < rows.size() && !rows[p].get(c)) ++p;
        if (p == rows.size()) continue;
        std::swap(rows[r], rows[p]);
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (i != r && rows[i].get(c)) rows[i] ^= rows[r];
        pivots.push_back(c);
        ++r;
    }
    rows.resize(r);
    return pivots;
}

}  // namespace detail

class SignSymmetryGroup {
public:
    SignSymmetryGroup() = default;
    SignSymmetryGroup(std::size_t n, std::vector<BitVec> basis) : n_(n), basis_(std::move(basis)) {
        detail::rref(basis_, n_);
    }

    std::size_t nvars() const noexcept { return n_; }
    std::size_t rank() const noexcept { return basis_.size(); }
    const std::vector<BitVec>& basis() const noexcept { return basis_; }

    bool in_closure(const Monomial& a) const {
        if (a.size() != n_) throw DimensionError("in_closure: monomial length mismatch");
        const BitVec p = BitVec::parity(a);
        for (const auto& r : basis_)
            if (r.dot(p)) return false;
        return true;
    }

    /// Parity pattern of a against the basis; equal signatures share a block.
    BitVec signature(const Monomial& a) const {
        const BitVec p = BitVec::parity(a);
        BitVec s(basis_.size());
        for (std::size_t k = 0; k < basis_.size(); ++k)
            if (basis_[k].dot(p)) s.set(k);
        return s;
    }

    /// Every group element; only sensible for small rank.
    std::vector<BitVec> elements() const {
        if (rank() > 24) throw DimensionError("group too large to enumerate");
        std::vector<BitVec> out{BitVec(n_)};
        for (const auto& b : basis_) {
            const std::size_t cur = out.size();
            for (std::size_t i = 0; i < cur; ++i) out.push_back(out[i] ^ b);
        }
        return out;
    }

    bool contains(const BitVec& v) const {
        std::vector<BitVec> rows = basis_;
        rows.push_back(v);
        return detail::rref(rows, n_).size() == basis_.size();
    }

private:
    std::size_t n_ = 0;
    std::vector<BitVec> basis_;
};

/// GF(2) nullspace of the parity matrix of A. Empty A gives the full group.
inline SignSymmetryGroup sign_symmetries(std::size_t n, const std::vector<Monomial>& A) {
    std::vector<BitVec> rows;
    rows.reserve(A.size());
    for (const auto& a : A) {
        if (a.size() != n) throw DimensionError("sign_symmetries: monomial length mismatch");
        BitVec p = BitVec::parity(a);
        if (!p.none()) rows.push_back(std::move(p));
    }
    const auto pivots = detail::rref(rows, n);
    std::vector<bool> is_pivot(n, false);
    for (std::size_t c : pivots) is_pivot[c] = true;
    std::vector<BitVec> null;
    for (std::size_t f = 0; f < n; ++f) {
        if (is_pivot[f]) continue;
        BitVec v(n);
        v.set(f);
        for (std::size_t r = 0; r < pivots.size(); ++r)
            if (rows[r].get(f)) v.set(pivots[r]);
        null.push_back(std::move(v));
    }
    return SignSymmetryGroup(n, std::move(null));
}

struct SupportSets {
    std::vector<std::vector<Monomial>> per_ratio;
    std::vector<Monomial> global;
};

namespace detail {

inline void add_support(std::set<Monomial, GradedLess>& s, const Polynomial& p) {
    for (const auto& [m, c] : p.terms()) s.insert(m);
}

}  // namespace detail

/**
 * Per-ratio generating sets: A_i collects ratio i and all constraints for
 * i >= 2, while A_1 additionally absorbs every other A_i. The global set is
 * the union of all supports.
 */
inline SupportSets support_sets(const SrfoProblem& prob) {
    const std::size_t N = prob.nratios();
    if (N == 0) throw DimensionError("support_sets: no ratios");
    std::set<Monomial, GradedLess> cons;
    for (const auto& c : prob.constraints) detail::add_support(cons, c.g);

    std::vector<std::set<Monomial, GradedLess>> sets(N);
    for (std::size_t i = 0; i < N; ++i) {
        detail::add_support(sets[i], prob.ratios[i].num);
        detail::add_support(sets[i], prob.ratios[i].den);
        sets[i].insert(cons.begin(), cons.end());
    }
    for (std::size_t i = 1; i < N; ++i) sets[0].insert(sets[i].begin(), sets[i].end());

    SupportSets out;
    for (const auto& s : sets) out.per_ratio.emplace_back(s.begin(), s.end());
    out.global = out.per_ratio[0];
    return out;
}

struct BlockPartition {
    MonomialBasis basis;
    /// Indices into basis.elements, one list per parity class, in first-appearance order.
    std::vector<std::vector<std::size_t>> classes;

    std::vector<std::size_t> sizes() const {
        std::vector<std::size_t> s;
        for (const auto& c : classes) s.push_back(c.size());
        return s;
    }
};

inline BlockPartition block_partition(const SignSymmetryGroup& group, const MonomialBasis& b) {
    BlockPartition out;
    out.basis = b;
    std::map<BitVec, std::size_t> index;
    for (std::size_t i = 0; i < b.size(); ++i) {
        auto [it, fresh] = index.try_emplace(group.signature(b[i]), out.classes.size());
        if (fresh) out.classes.emplace_back();
        out.classes[it->second].push_back(i);
    }
    return out;
}

/// Sizes of blocks sorted descending, paired with their multiplicities.
inline std::map<std::size_t, std::size_t, std::greater<>> size_histogram(const std::vector<std::size_t>& sizes) {
    std::map<std::size_t, std::size_t, std::greater<>> h;
    for (auto s : sizes) ++h[s];
    return h;
}

}  // namespace ratsos
