#pragma once

/**
 * @file poly.hpp
 * @brief Sparse multivariate polynomials over exponent vectors.
 *
 * A Monomial is a fixed-length vector of 16-bit exponents. Polynomials keep
 * their terms in a sorted map keyed by graded order: total degree first, and
 * within one degree the monomial with the larger power of the lowest-indexed
 * variable comes first. Bases of monomials use the same order, so indices into
 * moment matrices are deterministic.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ratsos/error.hpp"

namespace ratsos {

using Exponent = std::uint16_t;

class Monomial {
public:
    Monomial() = default;
    explicit Monomial(std::size_t nvars) : e_(nvars, 0) {}
    Monomial(std::initializer_list<int> exps) {
        e_.reserve(exps.size());
        for (int v : exps) e_.push_back(checked(v));
    }
    explicit Monomial(std::vector<Exponent> exps) : e_(std::move(exps)) {}

    static Monomial unit(std::size_t nvars, std::size_t var, int power = 1) {
        Monomial m(nvars);
        m.e_.at(var) = checked(power);
        return m;
    }

    std::size_t size() const noexcept { return e_.size(); }
    Exponent operator[](std::size_t i) const { return e_[i]; }
    std::span<const Exponent> exponents() const noexcept { return e_; }

    int degree() const noexcept {
        int d = 0;
        for (Exponent v : e_) d += v;
        return d;
    }

    bool is_constant() const noexcept {
        return std::all_of(e_.begin(), e_.end(), [](Exponent v) { return v == 0; });
    }

    /// Product of monomials, i.e. the sum of exponent vectors.
    Monomial operator*(const Monomial& o) const {
        if (o.e_.size() != e_.size()) throw DimensionError("monomial product: variable count mismatch");
        Monomial r(e_.size());
        for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] = checked(int(e_[i]) + int(o.e_[i]));
        return r;
    }

    /// Same monomial embedded in a larger variable space (new variables appended with exponent 0).
    Monomial extended(std::size_t nvars) const {
        Monomial r(nvars);
        std::copy(e_.begin(), e_.end(), r.e_.begin());
        return r;
    }

    bool operator==(const Monomial&) const = default;

    static Exponent checked(int v) {
        if (v < 0 || v > std::numeric_limits<Exponent>::max())
            throw DimensionError("exponent out of range [0, 65535]: " + std::to_string(v));
        return static_cast<Exponent>(v);
    }

    std::string to_string(std::span<const std::string> names = {}) const {
        std::string s;
        for (std::size_t i = 0; i < e_.size(); ++i) {
            if (e_[i] == 0) continue;
            if (!s.empty()) s += '*';
            s += i < names.size() ? names[i] : "x" + std::to_string(i + 1);
            if (e_[i] > 1) s += '^' + std::to_string(e_[i]);
        }
        return s.empty() ? "1" : s;
    }

private:
    std::vector<Exponent> e_;
};

/// Graded order used everywhere: lower degree first, then larger leading exponents first.
struct GradedLess {
    bool operator()(const Monomial& a, const Monomial& b) const {
        const int da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        const std::size_t n = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i)
            if (a[i] != b[i]) return a[i] > b[i];
        return a.size() < b.size();
    }
};

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const noexcept {
        std::size_t h = 1469598103934665603ULL;
        for (Exponent v : m.exponents()) {
            h ^= v;
            h *= 1099511628211ULL;
        }
        return h;
    }
};

class Polynomial {
public:
    using Terms = std::map<Monomial, double, GradedLess>;

    Polynomial() = default;
    explicit Polynomial(std::size_t nvars) : nvars_(nvars) {}

    static Polynomial constant(std::size_t nvars, double c) {
        Polynomial p(nvars);
        p.add_term(Monomial(nvars), c);
        return p;
    }
    static Polynomial variable(std::size_t nvars, std::size_t var) {
        Polynomial p(nvars);
        p.add_term(Monomial::unit(nvars, var), 1.0);
        return p;
    }
    static Polynomial from_monomial(const Monomial& m, double c = 1.0) {
        Polynomial p(m.size());
        p.add_term(m, c);
        return p;
    }

    std::size_t nvars() const noexcept { return nvars_; }
    const Terms& terms() const noexcept { return terms_; }
    std::size_t term_count() const noexcept { return terms_.size(); }
    bool is_zero() const noexcept { return terms_.empty(); }

    double coeff(const Monomial& m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? 0.0 : it->second;
    }

    int degree() const noexcept {
        int d = 0;
        for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
        return d;
    }

    std::vector<Monomial> support() const {
        std::vector<Monomial> s;
        s.reserve(terms_.size());
        for (const auto& [m, c] : terms_) s.push_back(m);
        return s;
    }

    /// Indices of variables that occur with a positive exponent.
    std::set<std::size_t> variables() const {
        std::set<std::size_t> vs;
        for (const auto& [m, c] : terms_)
            for (std::size_t i = 0; i < m.size(); ++i)
                if (m[i] > 0) vs.insert(i);
        return vs;
    }

    /// Accumulates c * m, pruning the term if it cancels to zero.
    void add_term(const Monomial& m, double c) {
        if (m.size() != nvars_) throw DimensionError("term has " + std::to_string(m.size()) +
                                                     " variables, polynomial has " + std::to_string(nvars_));
        if (c == 0.0) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0.0) terms_.erase(it);
        }
    }

    Polynomial& operator+=(const Polynomial& o) {
        require_same(o);
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        require_same(o);
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    Polynomial& operator*=(double s) {
        if (s == 0.0) {
            terms_.clear();
            return *this;
        }
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
    friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
    Polynomial operator-() const { return *this * -1.0; }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        a.require_same(b);
        Polynomial r(a.nvars_);
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) r.add_term(ma * mb, ca * cb);
        return r;
    }

    Polynomial pow(int e) const {
        if (e < 0) throw DimensionError("negative polynomial power");
        Polynomial r = constant(nvars_, 1.0);
        for (int i = 0; i < e; ++i) r = r * *this;
        return r;
    }

    /// Multiplies every term by the monomial m.
    Polynomial shifted(const Monomial& m) const {
        Polynomial r(nvars_);
        for (const auto& [t, c] : terms_) r.terms_.emplace(t * m, c);
        return r;
    }

    /// Same polynomial in a larger variable space; the extra variables are appended.
    Polynomial extended(std::size_t nvars) const {
        if (nvars < nvars_) throw DimensionError("cannot shrink polynomial variable space");
        Polynomial r(nvars);
        for (const auto& [m, c] : terms_) r.terms_.emplace(m.extended(nvars), c);
        return r;
    }

    /// Substitutes x_i -> scale_i * x_i.
    Polynomial rescaled(std::span<const double> scale) const {
        if (scale.size() != nvars_) throw DimensionError("rescale: length mismatch");
        Polynomial r(nvars_);
        for (const auto& [m, c] : terms_) {
            double f = c;
            for (std::size_t i = 0; i < nvars_; ++i) f *= std::pow(scale[i], m[i]);
            r.add_term(m, f);
        }
        return r;
    }

    bool operator==(const Polynomial& o) const { return nvars_ == o.nvars_ && terms_ == o.terms_; }

    /// Direct term-by-term evaluation with Neumaier-compensated summation.
    double evaluate(std::span<const double> x) const {
        if (x.size() != nvars_) throw DimensionError("evaluate: point has wrong length");
        double sum = 0.0, comp = 0.0;
        for (const auto& [m, c] : terms_) {
            double t = c;
            for (std::size_t i = 0; i < nvars_; ++i)
                if (m[i]) t *= int_pow(x[i], m[i]);
            const double s = sum + t;
            if (std::abs(sum) >= std::abs(t))
                comp += (sum - s) + t;
            else
                comp += (t - s) + sum;
            sum = s;
        }
        return sum + comp;
    }

    std::string to_string(std::span<const std::string> names = {}) const;

private:
    void require_same(const Polynomial& o) const {
        if (o.nvars_ != nvars_)
            throw DimensionError("polynomial variable count mismatch: " + std::to_string(nvars_) + " vs " +
                                 std::to_string(o.nvars_));
    }

    static double int_pow(double b, unsigned e) {
        double r = 1.0;
        while (e) {
            if (e & 1u) r *= b;
            b *= b;
            e >>= 1u;
        }
        return r;
    }

    std::size_t nvars_ = 0;
    Terms terms_;
};

inline std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string Polynomial::to_string(std::span<const std::string> names) const {
    if (terms_.empty()) return "0";
    std::string s;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        double a = c;
        if (first) {
            if (a < 0) {
                s += "-";
                a = -a;
            }
        } else {
            s += a < 0 ? " - " : " + ";
            a = std::abs(a);
        }
        first = false;
        if (m.is_constant()) {
            s += format_real(a);
        } else {
            if (a != 1.0) s += format_real(a) + "*";
            s += m.to_string(names);
        }
    }
    return s;
}

/// Ordered list of all monomials supported on a variable subset with degree at most `order`.
struct MonomialBasis {
    int order = 0;
    std::size_t nvars = 0;
    std::vector<std::size_t> vars;
    std::vector<Monomial> elements;

    std::size_t size() const noexcept { return elements.size(); }
    const Monomial& operator[](std::size_t i) const { return elements[i]; }
};

namespace detail {

inline void distribute(std::vector<Exponent>& cur, std::span<const std::size_t> vars, std::size_t pos, int left,
                       std::vector<Monomial>& out) {
    if (pos + 1 == vars.size()) {
        cur[vars[pos]] = static_cast<Exponent>(left);
        out.emplace_back(cur);
        cur[vars[pos]] = 0;
        return;
    }
    for (int e = left; e >= 0; --e) {
        cur[vars[pos]] = static_cast<Exponent>(e);
        distribute(cur, vars, pos + 1, left - e, out);
    }
    cur[vars[pos]] = 0;
}

}  // namespace detail

/// All monomials in `vars` (0-based, any order) of total degree <= k, in graded order.
inline MonomialBasis basis(std::size_t nvars, std::vector<std::size_t> vars, int k) {
    if (k < 0) throw DimensionError("basis order must be nonnegative");
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (std::size_t v : vars)
        if (v >= nvars) throw DimensionError("basis variable index out of range");
    MonomialBasis b;
    b.order = k;
    b.nvars = nvars;
    b.vars = vars;
    std::vector<Exponent> cur(nvars, 0);
    b.elements.emplace_back(cur);
    if (!vars.empty())
        for (int d = 1; d <= k; ++d) detail::distribute(cur, vars, 0, d, b.elements);
    return b;
}

/// Basis over all n variables.
inline MonomialBasis full_basis(std::size_t nvars, int k) {
    std::vector<std::size_t> all(nvars);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return basis(nvars, std::move(all), k);
}

inline std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/**
 * Entry (beta, gamma) of the localizing matrix M(f y), as a linear functional
 * of pseudo-moments: the list of (alpha + beta + gamma, f_alpha). With f = 1 it
 * is the moment-matrix entry y_{beta+gamma}.
 */
inline std::vector<std::pair<Monomial, double>> moment_index(const Monomial& beta, const Monomial& gamma,
                                                             const Polynomial& f) {
    if (beta.size() != f.nvars() || gamma.size() != f.nvars())
        throw DimensionError("moment_index: variable count mismatch");
    const Monomial bg = beta * gamma;
    std::vector<std::pair<Monomial, double>> out;
    out.reserve(f.term_count());
    for (const auto& [a, c] : f.terms()) out.emplace_back(a * bg, c);
    return out;
}

}  // namespace ratsos
