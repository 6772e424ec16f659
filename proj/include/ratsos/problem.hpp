#pragma once

/**
 * @file problem.hpp
 * @brief Sum-of-ratios problem container and its line-oriented text format.
 *
 * File grammar (UTF-8, '#' starts a comment):
 *
 *     name <string>
 *     vars x1 x2 ... xn
 *     sense min|max                          # optional, default min
 *     ratio: ( <poly> ) / ( <poly> )         # N times, order significant
 *     constraint: <poly> >= 0 | <poly> == 0  # m times
 *     clique: i1 i2 ...                      # optional, 1-based, N lines
 *
 * Polynomials use + - * ^ with decimal literals and parentheses; implicit
 * multiplication is rejected.
 */

#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ratsos/error.hpp"
#include "ratsos/poly.hpp"

namespace ratsos {

enum class ConstraintKind { inequality, equality };

struct Ratio {
    Polynomial num;
    Polynomial den;
};

struct Constraint {
    Polynomial g;
    ConstraintKind kind = ConstraintKind::inequality;

    bool is_equality() const noexcept { return kind == ConstraintKind::equality; }
};

using IndexSet = std::vector<std::size_t>;

struct SrfoProblem {
    std::string name = "unnamed";
    std::vector<std::string> var_names;
    std::vector<Ratio> ratios;
    std::vector<Constraint> constraints;
    /// One 0-based variable subset per ratio, when the problem declares its cliques.
    std::optional<std::vector<IndexSet>> cliques;
    bool maximize = false;

    std::size_t nvars() const noexcept { return var_names.size(); }
    std::size_t nratios() const noexcept { return ratios.size(); }
    std::size_t nconstraints() const noexcept { return constraints.size(); }

    static std::vector<std::string> default_names(std::size_t n) {
        std::vector<std::string> names(n);
        for (std::size_t i = 0; i < n; ++i) names[i] = "x" + std::to_string(i + 1);
        return names;
    }

    void validate() const {
        const std::size_t n = nvars();
        if (n == 0) throw DimensionError("problem has no variables");
        if (ratios.empty()) throw DimensionError("problem needs at least one ratio");
        for (const auto& r : ratios)
            if (r.num.nvars() != n || r.den.nvars() != n) throw DimensionError("ratio variable count mismatch");
        for (const auto& c : constraints)
            if (c.g.nvars() != n) throw DimensionError("constraint variable count mismatch");
        if (cliques) {
            if (cliques->size() != ratios.size())
                throw DimensionError("clique count " + std::to_string(cliques->size()) + " != ratio count " +
                                     std::to_string(ratios.size()));
            std::vector<bool> covered(n, false);
            for (const auto& I : *cliques)
                for (std::size_t v : I) {
                    if (v >= n) throw DimensionError("clique index out of range");
                    covered[v] = true;
                }
            for (std::size_t v = 0; v < n; ++v)
                if (!covered[v]) throw DimensionError("variable " + var_names[v] + " is in no clique");
        }
    }

    /// Sum of ratios at x in the problem's own sense (no sign flip).
    double objective(std::span<const double> x) const {
        double s = 0.0;
        for (const auto& r : ratios) s += r.num.evaluate(x) / r.den.evaluate(x);
        return s;
    }

    double max_violation(std::span<const double> x) const {
        double v = 0.0;
        for (const auto& c : constraints) {
            const double g = c.g.evaluate(x);
            v = std::max(v, c.is_equality() ? std::abs(g) : std::max(0.0, -g));
        }
        return v;
    }

    bool feasible(std::span<const double> x, double tol = 1e-8) const { return max_violation(x) <= tol; }

    /// Minimization form: numerators negated when the problem is a maximization.
    SrfoProblem as_minimization() const {
        SrfoProblem p = *this;
        if (maximize) {
            for (auto& r : p.ratios) r.num = -r.num;
            p.maximize = false;
        }
        return p;
    }

    bool operator==(const SrfoProblem& o) const {
        if (name != o.name || var_names != o.var_names || maximize != o.maximize || cliques != o.cliques) return false;
        if (ratios.size() != o.ratios.size() || constraints.size() != o.constraints.size()) return false;
        for (std::size_t i = 0; i < ratios.size(); ++i)
            if (!(ratios[i].num == o.ratios[i].num) || !(ratios[i].den == o.ratios[i].den)) return false;
        for (std::size_t j = 0; j < constraints.size(); ++j)
            if (!(constraints[j].g == o.constraints[j].g) || constraints[j].kind != o.constraints[j].kind)
                return false;
        return true;
    }
};

namespace detail {

class ExprParser {
public:
    ExprParser(std::string_view text, int line, int col0, const std::unordered_map<std::string, std::size_t>& vars)
        : s_(text), line_(line), col0_(col0), vars_(vars) {}

    Polynomial parse_expr() {
        Polynomial acc = parse_term();
        for (;;) {
            skip_ws();
            if (peek() == '+') {
                ++pos_;
                acc += parse_term();
            } else if (peek() == '-') {
                ++pos_;
                acc -= parse_term();
            } else {
                return acc;
            }
        }
    }

    std::size_t pos() const noexcept { return pos_; }
    void set_pos(std::size_t p) noexcept { pos_ = p; }
    char peek() const noexcept { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip_ws();
        return pos_ >= s_.size();
    }
    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line_, col0_ + static_cast<int>(pos_) + 1);
    }

private:
    std::size_t n() const { return vars_.size(); }

    Polynomial parse_term() {
        Polynomial acc = parse_unary();
        for (;;) {
            skip_ws();
            if (peek() == '*') {
                ++pos_;
                acc = acc * parse_unary();
            } else {
                // Two factors separated only by whitespace would be implicit multiplication.
                const char c = peek();
                if (std::isalnum(static_cast<unsigned char>(c)) || c == '(' || c == '.' || c == '_')
                    fail("implicit multiplication is not allowed; use '*'");
                return acc;
            }
        }
    }

    Polynomial parse_unary() {
        skip_ws();
        if (peek() == '-') {
            ++pos_;
            return -parse_unary();
        }
        if (peek() == '+') {
            ++pos_;
            return parse_unary();
        }
        return parse_power();
    }

    Polynomial parse_power() {
        Polynomial base = parse_primary();
        skip_ws();
        if (peek() == '^') {
            ++pos_;
            skip_ws();
            const std::size_t start = pos_;
            while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            if (start == pos_) fail("expected a nonnegative integer exponent");
            const std::string digits(s_.substr(start, pos_ - start));
            if (digits.size() > 6 || std::stol(digits) > 65535) {
                pos_ = start;
                fail("degree overflow: exponent " + digits + " exceeds 65535");
            }
            const int e = std::stoi(digits);
            if (base.term_count() == 1) {
                // Single term: raise exponents directly so large powers stay cheap.
                const auto& [m, c] = *base.terms().begin();
                std::vector<Exponent> ex(m.exponents().begin(), m.exponents().end());
                for (auto& v : ex) {
                    const long long t = static_cast<long long>(v) * e;
                    if (t > 65535) {
                        pos_ = start;
                        fail("degree overflow: exponent exceeds 65535");
                    }
                    v = static_cast<Exponent>(t);
                }
                Polynomial r(n());
                r.add_term(Monomial(std::move(ex)), std::pow(c, e));
                return r;
            }
            return base.pow(e);
        }
        return base;
    }

    Polynomial parse_primary() {
        skip_ws();
        const char c = peek();
        if (c == '(') {
            ++pos_;
            Polynomial p = parse_expr();
            expect(')');
            return p;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Polynomial::constant(n(), parse_number());
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
            const std::string id(s_.substr(start, pos_ - start));
            auto it = vars_.find(id);
            if (it == vars_.end()) {
                pos_ = start;
                fail("unknown variable '" + id + "'");
            }
            return Polynomial::variable(n(), it->second);
        }
        if (c == '\0') fail("unexpected end of expression");
        fail(std::string("unexpected character '") + c + "'");
    }

    double parse_number() {
        const std::size_t start = pos_;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        if (peek() == '.') {
            ++pos_;
            while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
        }
        if (peek() == 'e' || peek() == 'E') {
            std::size_t save = pos_;
            ++pos_;
            if (peek() == '+' || peek() == '-') ++pos_;
            if (!std::isdigit(static_cast<unsigned char>(peek()))) {
                pos_ = save;
            } else {
                while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
            }
        }
        const std::string lit(s_.substr(start, pos_ - start));
        if (lit == ".") {
            pos_ = start;
            fail("malformed number");
        }
        return std::strtod(lit.c_str(), nullptr);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_;
    int col0_;
    const std::unordered_map<std::string, std::size_t>& vars_;
};

inline bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace detail

inline SrfoProblem parse_problem(std::string_view text) {
    SrfoProblem prob;
    prob.name.clear();
    std::unordered_map<std::string, std::size_t> vars;
    std::vector<IndexSet> cliques;
    bool have_vars = false;
    bool have_name = false;
    int line_no = 0;

    std::size_t at = 0;
    while (at <= text.size()) {
        std::size_t nl = text.find('\n', at);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(at, nl - at);
        at = nl + 1;
        ++line_no;
        if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty()) {
            if (nl == text.size()) break;
            continue;
        }

        std::size_t p = 0;
        while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
        std::size_t kw_end = p;
        while (kw_end < line.size() && (std::isalpha(static_cast<unsigned char>(line[kw_end])))) ++kw_end;
        const std::string kw(line.substr(p, kw_end - p));
        std::size_t body = kw_end;
        const bool record = kw == "ratio" || kw == "constraint" || kw == "clique";
        if (record) {
            while (body < line.size() && std::isspace(static_cast<unsigned char>(line[body]))) ++body;
            if (body >= line.size() || line[body] != ':')
                throw ParseError("expected ':' after '" + kw + "'", line_no, static_cast<int>(body) + 1);
            ++body;
        }
        const std::string_view rest = line.substr(body);
        const int col0 = static_cast<int>(body);

        if (kw == "name") {
            if (have_name) throw ParseError("duplicate 'name' line", line_no, static_cast<int>(p) + 1);
            prob.name = std::string(detail::trim(rest));
            have_name = true;
        } else if (kw == "vars") {
            if (have_vars) throw ParseError("duplicate 'vars' line", line_no, static_cast<int>(p) + 1);
            std::istringstream ss{std::string(rest)};
            std::string id;
            while (ss >> id) {
                if (!detail::is_identifier(id))
                    throw ParseError("invalid variable name '" + id + "'", line_no, col0 + 1);
                if (vars.count(id)) throw ParseError("duplicate variable '" + id + "'", line_no, col0 + 1);
                vars.emplace(id, prob.var_names.size());
                prob.var_names.push_back(id);
            }
            if (prob.var_names.empty()) throw ParseError("'vars' needs at least one name", line_no, col0 + 1);
            have_vars = true;
        } else if (kw == "sense") {
            const auto s = detail::trim(rest);
            if (s == "min")
                prob.maximize = false;
            else if (s == "max")
                prob.maximize = true;
            else
                throw ParseError("sense must be 'min' or 'max'", line_no, col0 + 2);
        } else if (kw == "ratio") {
            if (!have_vars) throw ParseError("'vars' must precede ratios", line_no, static_cast<int>(p) + 1);
            detail::ExprParser ep(rest, line_no, col0, vars);
            ep.expect('(');
            Polynomial num = ep.parse_expr();
            ep.expect(')');
            ep.expect('/');
            ep.expect('(');
            Polynomial den = ep.parse_expr();
            ep.expect(')');
            if (!ep.at_end()) ep.fail("trailing input after ratio");
            if (den.is_zero()) ep.fail("denominator is identically zero");
            prob.ratios.push_back({std::move(num), std::move(den)});
        } else if (kw == "constraint") {
            if (!have_vars) throw ParseError("'vars' must precede constraints", line_no, static_cast<int>(p) + 1);
            detail::ExprParser ep(rest, line_no, col0, vars);
            Polynomial lhs = ep.parse_expr();
            ep.skip_ws();
            ConstraintKind kind;
            const std::size_t op = ep.pos();
            if (rest.substr(op, 2) == ">=") {
                kind = ConstraintKind::inequality;
            } else if (rest.substr(op, 2) == "==") {
                kind = ConstraintKind::equality;
            } else {
                ep.fail("expected '>=' or '=='");
            }
            ep.set_pos(op + 2);
            Polynomial rhs = ep.parse_expr();
            if (!ep.at_end()) ep.fail("trailing input after constraint");
            prob.constraints.push_back({lhs - rhs, kind});
        } else if (kw == "clique") {
            std::istringstream ss{std::string(rest)};
            std::string tok;
            IndexSet I;
            while (ss >> tok) {
                char* end = nullptr;
                const long v = std::strtol(tok.c_str(), &end, 10);
                if (*end != '\0' || v < 1)
                    throw ParseError("clique entries must be positive integers", line_no, col0 + 1);
                if (have_vars && static_cast<std::size_t>(v) > prob.var_names.size())
                    throw ParseError("clique index " + tok + " exceeds variable count", line_no, col0 + 1);
                I.push_back(static_cast<std::size_t>(v - 1));
            }
            if (I.empty()) throw ParseError("empty clique", line_no, col0 + 1);
            std::sort(I.begin(), I.end());
            I.erase(std::unique(I.begin(), I.end()), I.end());
            cliques.push_back(std::move(I));
        } else {
            throw ParseError("unknown record '" + kw + "'", line_no, static_cast<int>(p) + 1);
        }
        if (nl == text.size()) break;
    }

    if (!have_vars) throw ParseError("missing 'vars' line", line_no, 1);
    if (prob.ratios.empty()) throw ParseError("problem has no ratios", line_no, 1);
    if (prob.name.empty()) prob.name = "unnamed";
    if (!cliques.empty()) {
        if (cliques.size() != prob.ratios.size())
            throw ParseError("clique count mismatch: " + std::to_string(cliques.size()) + " cliques for " +
                                 std::to_string(prob.ratios.size()) + " ratios",
                             line_no, 1);
        prob.cliques = std::move(cliques);
    }
    prob.validate();
    return prob;
}

inline std::string serialize_problem(const SrfoProblem& prob) {
    std::ostringstream os;
    os << "name " << prob.name << '\n';
    os << "vars";
    for (const auto& v : prob.var_names) os << ' ' << v;
    os << '\n';
    if (prob.maximize) os << "sense max\n";
    for (const auto& r : prob.ratios)
        os << "ratio: (" << r.num.to_string(prob.var_names) << ") / (" << r.den.to_string(prob.var_names) << ")\n";
    for (const auto& c : prob.constraints)
        os << "constraint: " << c.g.to_string(prob.var_names) << (c.is_equality() ? " == 0" : " >= 0") << '\n';
    if (prob.cliques)
        for (const auto& I : *prob.cliques) {
            os << "clique:";
            for (std::size_t v : I) os << ' ' << v + 1;
            os << '\n';
        }
    return os.str();
}

inline SrfoProblem load_problem(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open problem file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_problem(ss.str());
}

inline void save_problem(const SrfoProblem& prob, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write problem file '" + path + "'");
    out << serialize_problem(prob);
    if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace ratsos
