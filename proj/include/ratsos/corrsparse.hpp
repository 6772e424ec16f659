#pragma once

/**
 * @file corrsparse.hpp
 * @brief Clique structure for correlatively sparse problems.
 *
 * Each ratio owns one variable clique. The cliques must cover every
 * variable, contain their ratio's variables, and satisfy the running
 * intersection property (RIP): each clique meets the union of its
 * predecessors inside a single predecessor.
 */

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "ratsos/problem.hpp"

namespace ratsos {

enum class ConstraintAssignment {
    all_containing,  ///< g_j goes to every clique that contains its variables
    lowest_index,    ///< g_j goes to the first such clique only
};

struct RipCheck {
    bool ok = true;
    std::size_t clique = 0;  ///< first failing clique (0-based) when !ok
    IndexSet intersection;   ///< its intersection with the union of predecessors

    std::string witness(std::span<const std::string> names = {}) const {
        if (ok) return "RIP holds";
        std::ostringstream os;
        os << "RIP fails at clique " << clique + 1 << ": intersection {";
        for (std::size_t k = 0; k < intersection.size(); ++k)
            os << (k ? "," : "")
               << (intersection[k] < names.size() ? names[intersection[k]] : std::to_string(intersection[k] + 1));
        os << "} is not contained in any earlier clique";
        return os.str();
    }
};

inline bool is_subset(const IndexSet& a, const IndexSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline IndexSet set_intersection(const IndexSet& a, const IndexSet& b) {
    IndexSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline IndexSet set_union(const IndexSet& a, const IndexSet& b) {
    IndexSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

/// Checks RIP for the cliques in the given order; cliques must be sorted.
inline RipCheck check_rip(const std::vector<IndexSet>& cliques) {
    IndexSet seen;
    for (std::size_t i = 0; i < cliques.size(); ++i) {
        if (i > 0) {
            IndexSet inter = set_intersection(cliques[i], seen);
            bool found = false;
            for (std::size_t k = 0; k < i && !found; ++k) found = is_subset(inter, cliques[k]);
            if (!found) return {false, i, std::move(inter)};
        }
        seen = set_union(seen, cliques[i]);
    }
    return {};
}

/// Maximum-cardinality-search ordering over cliques: start at clique 0, then
/// repeatedly take the clique sharing most variables with those already chosen.
inline std::vector<std::size_t> mcs_clique_order(const std::vector<IndexSet>& cliques) {
    const std::size_t N = cliques.size();
    std::vector<std::size_t> order;
    std::vector<bool> used(N, false);
    IndexSet seen;
    for (std::size_t step = 0; step < N; ++step) {
        std::size_t best = N;
        std::size_t best_score = 0;
        for (std::size_t i = 0; i < N; ++i) {
            if (used[i]) continue;
            const std::size_t score = set_intersection(cliques[i], seen).size();
            if (best == N || score > best_score) {
                best = i;
                best_score = score;
            }
        }
        used[best] = true;
        order.push_back(best);
        seen = set_union(seen, cliques[best]);
    }
    return order;
}

struct CliqueStructure {
    std::vector<IndexSet> cliques;
    std::vector<std::vector<std::size_t>> constraints;  ///< J_i
    std::vector<std::vector<std::size_t>> U;            ///< later cliques that overlap clique i
    std::vector<std::vector<std::size_t>> V;            ///< earlier cliques that overlap clique i
    /// order[i] is the original ratio index placed at position i.
    std::vector<std::size_t> order;
    bool reordered = false;
    RipCheck rip_given;

    std::size_t size() const noexcept { return cliques.size(); }

    IndexSet shared(std::size_t i, std::size_t j) const { return set_intersection(cliques[i], cliques[j]); }
};

namespace detail {

inline IndexSet to_index_set(const std::set<std::size_t>& s) { return IndexSet(s.begin(), s.end()); }

inline void fill_overlaps(CliqueStructure& cs) {
    const std::size_t N = cs.cliques.size();
    cs.U.assign(N, {});
    cs.V.assign(N, {});
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
            if (!set_intersection(cs.cliques[i], cs.cliques[j]).empty()) {
                cs.U[i].push_back(j);
                cs.V[j].push_back(i);
            }
}

}  // namespace detail

/**
 * Validates the clique system of prob (or derives I_i = vars(p_i) U vars(q_i)
 * when none is declared), assigns constraints and fixes an RIP order. When
 * the declared order fails RIP a maximum-cardinality-search order is tried
 * before giving up; the caller must then permute ratios by `order`.
 */
inline CliqueStructure build_cliques(const SrfoProblem& prob,
                                     ConstraintAssignment rule = ConstraintAssignment::all_containing) {
    const std::size_t n = prob.nvars(), N = prob.nratios();
    std::vector<IndexSet> cl;
    if (prob.cliques) {
        cl = *prob.cliques;
        for (auto& I : cl) {
            std::sort(I.begin(), I.end());
            I.erase(std::unique(I.begin(), I.end()), I.end());
        }
    } else {
        for (const auto& r : prob.ratios) {
            auto vs = r.num.variables();
            auto vd = r.den.variables();
            vs.insert(vd.begin(), vd.end());
            cl.push_back(detail::to_index_set(vs));
        }
    }
    if (cl.size() != N) throw CliqueError("clique count does not match ratio count");

    auto name = [&](std::size_t v) { return v < prob.var_names.size() ? prob.var_names[v] : std::to_string(v + 1); };

    std::vector<bool> covered(n, false);
    for (const auto& I : cl)
        for (auto v : I) {
            if (v >= n) throw CliqueError("clique index out of range");
            covered[v] = true;
        }
    for (std::size_t v = 0; v < n; ++v)
        if (!covered[v]) throw CliqueError("coverage failure: variable " + name(v) + " lies in no clique");

    for (std::size_t i = 0; i < N; ++i) {
        auto vs = prob.ratios[i].num.variables();
        auto vd = prob.ratios[i].den.variables();
        vs.insert(vd.begin(), vd.end());
        for (auto v : vs)
            if (!std::binary_search(cl[i].begin(), cl[i].end(), v))
                throw CliqueError("ratio " + std::to_string(i + 1) + " uses variable " + name(v) +
                                  " outside its clique");
    }

    CliqueStructure cs;
    cs.rip_given = check_rip(cl);
    cs.order.resize(N);
    std::iota(cs.order.begin(), cs.order.end(), std::size_t{0});
    if (!cs.rip_given.ok) {
        auto order = mcs_clique_order(cl);
        std::vector<IndexSet> re;
        for (auto i : order) re.push_back(cl[i]);
        if (!check_rip(re).ok) throw CliqueError(cs.rip_given.witness(prob.var_names));
        cl = std::move(re);
        cs.order = std::move(order);
        cs.reordered = true;
    }
    cs.cliques = std::move(cl);

    cs.constraints.assign(N, {});
    for (std::size_t j = 0; j < prob.nconstraints(); ++j) {
        const IndexSet vars = detail::to_index_set(prob.constraints[j].g.variables());
        bool placed = false;
        for (std::size_t i = 0; i < N; ++i) {
            if (!is_subset(vars, cs.cliques[i])) continue;
            cs.constraints[i].push_back(j);
            placed = true;
            if (rule == ConstraintAssignment::lowest_index) break;
        }
        if (!placed)
            throw CliqueError("coverage failure: constraint " + std::to_string(j + 1) +
                              " does not fit inside any clique");
    }
    detail::fill_overlaps(cs);
    return cs;
}

/// Problem with its ratios (and cliques) permuted to match cs.order.
inline SrfoProblem reorder_ratios(const SrfoProblem& prob, const std::vector<std::size_t>& order) {
    if (order.size() != prob.nratios()) throw DimensionError("ratio permutation has wrong length");
    std::vector<bool> seen(order.size(), false);
    for (auto i : order) {
        if (i >= order.size() || seen[i]) throw BuildError("ratio order is not a permutation");
        seen[i] = true;
    }
    SrfoProblem out = prob;
    for (std::size_t i = 0; i < order.size(); ++i) {
        out.ratios[i] = prob.ratios[order[i]];
        if (prob.cliques) (*out.cliques)[i] = (*prob.cliques)[order[i]];
    }
    return out;
}

/// Quadratic bound sum_{l in S} x_l^2 <= M implied by a single constraint.
struct BallBound {
    IndexSet vars;
    double radius_sq = 0.0;
    std::size_t constraint = 0;
};

/// Recognizes c*(M - sum_{l in S} x_l^2) >= 0 with c > 0, or the sphere c*(...) == 0.
inline std::optional<BallBound> as_ball(const Constraint& con, std::size_t index) {
    const Polynomial& g = con.g;
    const std::size_t n = g.nvars();
    double scale = 0.0, constant = 0.0;
    IndexSet vars;
    for (const auto& [m, c] : g.terms()) {
        if (m.is_constant()) {
            constant = c;
            continue;
        }
        if (m.degree() != 2) return std::nullopt;
        std::size_t var = n;
        for (std::size_t l = 0; l < n; ++l)
            if (m[l] == 2) var = l;
        if (var == n) return std::nullopt;
        if (scale == 0.0) scale = -c;
        if (c != -scale) return std::nullopt;
        vars.push_back(var);
    }
    if (vars.empty() || scale == 0.0) return std::nullopt;
    if (scale < 0.0 && !con.is_equality()) return std::nullopt;
    const double M = constant / scale;
    if (!(M > 0.0)) return std::nullopt;
    std::sort(vars.begin(), vars.end());
    return BallBound{std::move(vars), M, index};
}

struct BallReport {
    std::vector<double> radius_sq;    ///< M_i per clique
    std::vector<bool> appended;       ///< whether a redundant ball was added for clique i
};

/**
 * Makes every clique carry a ball constraint M_i - sum_{l in I_i} x_l^2 >= 0.
 * Without explicit radii, M_i comes from an existing ball or sphere covering
 * the clique (the tightest one), else from summing the tightest bounds that
 * cover each clique variable. New constraints are appended to prob and to J_i.
 */
inline BallReport ensure_ball_constraints(SrfoProblem& prob, CliqueStructure& cs,
                                          std::optional<std::vector<double>> radii = std::nullopt) {
    const std::size_t N = cs.size(), n = prob.nvars();
    if (radii && radii->size() != N) throw DimensionError("one radius per clique required");
    std::vector<BallBound> balls;
    for (std::size_t j = 0; j < prob.nconstraints(); ++j)
        if (auto b = as_ball(prob.constraints[j], j)) balls.push_back(std::move(*b));

    BallReport rep;
    rep.radius_sq.assign(N, 0.0);
    rep.appended.assign(N, false);
    for (std::size_t i = 0; i < N; ++i) {
        const IndexSet& I = cs.cliques[i];
        bool has_own = false;
        for (std::size_t j : cs.constraints[i]) {
            auto b = as_ball(prob.constraints[j], j);
            if (b && b->vars == I) {
                has_own = true;
                rep.radius_sq[i] = b->radius_sq;
                break;
            }
        }
        if (has_own) continue;

        double M = 0.0;
        if (radii) {
            M = (*radii)[i];
            if (!(M > 0.0)) throw DimensionError("ball radius must be positive");
        } else {
            double single = std::numeric_limits<double>::infinity();
            for (const auto& b : balls)
                if (is_subset(I, b.vars)) single = std::min(single, b.radius_sq);
            if (std::isfinite(single)) {
                M = single;
            } else {
                std::vector<bool> chosen(balls.size(), false);
                for (std::size_t v : I) {
                    std::size_t best = balls.size();
                    for (std::size_t b = 0; b < balls.size(); ++b)
                        if (std::binary_search(balls[b].vars.begin(), balls[b].vars.end(), v) &&
                            (best == balls.size() || balls[b].radius_sq < balls[best].radius_sq))
                            best = b;
                    if (best == balls.size())
                        throw CliqueError("unbounded clique " + std::to_string(i + 1) + ": no bound on variable " +
                                          prob.var_names[v]);
                    chosen[best] = true;
                }
                for (std::size_t b = 0; b < balls.size(); ++b)
                    if (chosen[b]) M += balls[b].radius_sq;
            }
        }
        Polynomial g = Polynomial::constant(n, M);
        for (std::size_t v : I) g.add_term(Monomial::unit(n, v, 2), -1.0);
        prob.constraints.push_back({std::move(g), ConstraintKind::inequality});
        cs.constraints[i].push_back(prob.nconstraints() - 1);
        rep.radius_sq[i] = M;
        rep.appended[i] = true;
    }
    return rep;
}

}  // namespace ratsos
