#pragma once

/**
 * @file relax.hpp
 * @brief Moment relaxations of sum-of-ratios problems as block SDPs.
 *
 * Every builder returns a RelaxationSdp in moment form: one pseudo-moment
 * vector per measure, PSD moment and localizing blocks, linear equalities
 * (normalizations, linking rows, localizing equalities for equality
 * constraints) and a linear objective. The SOS certificate is the dual of
 * the same SDP, so both bounds come out of one solve.
 *
 *  - dense:      one measure per ratio over all variables, linked to measure 1
 *  - signsym:    as dense, restricted to each ratio's sign-symmetry closure
 *  - cs:         one measure per ratio clique, linked on pairwise overlaps
 *  - cs-signsym: as cs, restricted to the closure of the global support
 *  - epigraph:   moment relaxation of min sum c_i s.t. p_i - c_i q_i = 0
 */

#include <unordered_map>

#include "ratsos/corrsparse.hpp"
#include "ratsos/sdp.hpp"
#include "ratsos/signsym.hpp"

namespace ratsos {

enum class Method { dense, signsym, cs, cs_signsym, epigraph };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::dense: return "dense";
        case Method::signsym: return "signsym";
        case Method::cs: return "cs";
        case Method::cs_signsym: return "cs-signsym";
        case Method::epigraph: return "epigraph";
    }
    return "unknown";
}

inline Method parse_method(const std::string& s) {
    for (Method m : {Method::dense, Method::signsym, Method::cs, Method::cs_signsym, Method::epigraph})
        if (s == to_string(m)) return m;
    throw BuildError("unknown method '" + s + "'");
}

inline bool uses_cliques(Method m) { return m == Method::cs || m == Method::cs_signsym; }

struct RelaxationSpec {
    Method method = Method::dense;
    int order = 1;
    /// 0-based permutation: position i takes original ratio ratio_order[i]. Empty keeps file order.
    std::vector<std::size_t> ratio_order;
    ConstraintAssignment assignment = ConstraintAssignment::all_containing;
    /// Append per-clique ball constraints when they can be derived.
    bool add_balls = true;
    /// Epigraph only: use the clique structure when the problem declares one.
    bool epigraph_cliques = true;
    /// Rescale variables and coefficients before building (bound-preserving).
    bool normalize = true;
    /// Drop the kernel that equality constraints force on every block (bound-preserving).
    bool facial_reduction = true;
};

constexpr std::size_t kConstant = std::numeric_limits<std::size_t>::max();

struct BlockTerm {
    std::uint32_t i = 0, j = 0;  ///< i <= j
    std::size_t var = kConstant;
    double coeff = 0.0;
};

struct PsdBlock {
    std::string label;
    std::size_t size = 0;
    std::size_t measure = 0;
    std::vector<BlockTerm> terms;
};

enum class RowKind { normalization, linking, localizing, consistency };

inline const char* to_string(RowKind k) {
    switch (k) {
        case RowKind::normalization: return "normalization";
        case RowKind::linking: return "linking";
        case RowKind::localizing: return "localizing";
        case RowKind::consistency: return "consistency";
    }
    return "unknown";
}

using LinearTerms = std::vector<std::pair<std::size_t, double>>;

struct LinearRow {
    LinearTerms terms;
    double rhs = 0.0;
    RowKind kind = RowKind::linking;
};

/// Pseudo-moment vector of one measure: monomials (ambient length) mapped to decision indices.
struct Measure {
    std::string label;
    IndexSet vars;
    int max_degree = 0;
    std::vector<Monomial> monomials;
    std::vector<std::size_t> var_index;
    std::unordered_map<Monomial, std::size_t, MonomialHash> index;
    std::optional<SignSymmetryGroup> group;

    std::optional<std::size_t> find(const Monomial& m) const {
        auto it = index.find(m);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

struct RelaxationSdp {
    Method method = Method::dense;
    int order = 0;
    int d_min = 0;
    std::size_t ndec = 0;
    std::vector<PsdBlock> blocks;
    std::vector<LinearRow> equalities;
    LinearTerms objective;
    double objective_constant = 0.0;
    std::vector<Measure> measures;
    /// Effective problem: minimization form, ratios permuted, balls appended, variables extended for epigraph.
    SrfoProblem problem;
    std::size_t original_nvars = 0;
    /// Original variable x_v equals variable_scale[v] times the relaxation's variable.
    std::vector<double> variable_scale;
    std::vector<std::size_t> ratio_order;
    std::optional<CliqueStructure> cliques;
    std::vector<std::string> notes;

    std::vector<std::size_t> block_sizes() const {
        std::vector<std::size_t> s;
        for (const auto& b : blocks) s.push_back(b.size);
        return s;
    }

    std::size_t count_rows(RowKind k) const {
        return static_cast<std::size_t>(
            std::count_if(equalities.begin(), equalities.end(), [&](const LinearRow& r) { return r.kind == k; }));
    }

    void validate() const {
        for (const auto& b : blocks)
            for (const auto& t : b.terms)
                if ((t.var != kConstant && t.var >= ndec) || t.i > t.j || t.j >= b.size)
                    throw BuildError("block " + b.label + " references an invalid entry");
        for (const auto& r : equalities)
            for (auto [v, a] : r.terms)
                if (v >= ndec) throw BuildError("equality references an invalid variable");
        for (auto [v, a] : objective)
            if (v >= ndec) throw BuildError("objective references an invalid variable");
    }
};

inline int half_degree(const Polynomial& p) { return (p.degree() + 1) / 2; }

/// Smallest admissible order: the largest half-degree of any numerator, denominator or constraint.
inline int compute_d_min(const SrfoProblem& prob) {
    int d = 1;
    for (const auto& r : prob.ratios) d = std::max({d, half_degree(r.num), half_degree(r.den)});
    for (const auto& c : prob.constraints) d = std::max(d, half_degree(c.g));
    return d;
}

namespace relax_detail {

class Assembler {
public:
    explicit Assembler(RelaxationSdp& out) : out_(out) {}

    std::size_t add_measure(std::string label, std::size_t n, IndexSet vars, int max_degree,
                            std::optional<SignSymmetryGroup> group) {
        Measure m;
        m.label = std::move(label);
        m.max_degree = max_degree;
        const auto b = basis(n, vars, max_degree);
        m.vars = b.vars;
        for (const auto& a : b.elements) {
            if (group && !group->in_closure(a)) continue;
            m.index.emplace(a, out_.ndec);
            m.monomials.push_back(a);
            m.var_index.push_back(out_.ndec++);
        }
        m.group = std::move(group);
        out_.measures.push_back(std::move(m));
        return out_.measures.size() - 1;
    }

    std::size_t var(std::size_t meas, const Monomial& a) const {
        auto v = out_.measures[meas].find(a);
        if (v) return *v;
        const auto& M = out_.measures[meas];
        if (M.group && !M.group->in_closure(a)) return kConstant;
        throw BuildError("moment " + a.to_string() + " is missing from measure " + M.label);
    }

    /// L_y(x^shift * f), dropping moments that vanish by symmetry.
    LinearTerms riesz(std::size_t meas, const Polynomial& f, const Monomial& shift) const {
        LinearTerms t;
        for (const auto& [a, c] : f.terms()) {
            const auto v = var(meas, a * shift);
            if (v != kConstant) t.emplace_back(v, c);
        }
        return t;
    }

    /// Equality constraints imposed on a measure; their multiples span a known kernel of its blocks.
    void set_equalities(std::size_t meas, std::vector<Polynomial> eqs) {
        if (eqs_.size() <= meas) eqs_.resize(meas + 1);
        eqs_[meas] = std::move(eqs);
    }

    /// PSD blocks of M_order(f y), one per parity class when the measure carries a group.
    void psd_blocks(std::size_t meas, const Polynomial& f, int order, const std::string& label) {
        const Measure& M = out_.measures[meas];
        const std::size_t n = f.nvars();
        const auto b = basis(n, M.vars, order);
        std::vector<std::vector<std::size_t>> classes;
        if (M.group) {
            classes = block_partition(*M.group, b).classes;
        } else {
            classes.emplace_back(b.size());
            std::iota(classes[0].begin(), classes[0].end(), std::size_t{0});
        }
        const auto kernels = kernel_generators(meas, b, classes, order);
        for (std::size_t cidx = 0; cidx < classes.size(); ++cidx) {
            const auto& C = classes[cidx];
            PsdBlock blk;
            blk.label = label + (classes.size() > 1 ? "#" + std::to_string(cidx + 1) : "");
            blk.size = C.size();
            blk.measure = meas;
            for (std::uint32_t a = 0; a < C.size(); ++a)
                for (std::uint32_t c = a; c < C.size(); ++c)
                    for (const auto& [mono, coef] : moment_index(b[C[a]], b[C[c]], f)) {
                        const auto v = var(meas, mono);
                        if (v == kConstant) throw BuildError("block " + blk.label + " touches a symmetry-zero moment");
                        blk.terms.push_back({a, c, v, coef});
                    }
            if (kernels[cidx].cols() > 0 && !reduce_block(blk, kernels[cidx])) continue;
            out_.blocks.push_back(std::move(blk));
        }
    }

    /// L_y(x^alpha h) = 0 for every alpha of degree <= 2*order (in the closure when symmetric).
    void localizing_equalities(std::size_t meas, const Polynomial& h, int order) {
        const Measure& M = out_.measures[meas];
        const auto b = basis(h.nvars(), M.vars, 2 * order);
        for (const auto& a : b.elements) {
            if (M.group && !M.group->in_closure(a)) continue;
            add_row(riesz(meas, h, a), 0.0, RowKind::localizing);
        }
    }

    void add_row(LinearTerms t, double rhs, RowKind kind) {
        if (t.empty()) {
            if (rhs != 0.0) throw BuildError("relaxation has an inconsistent equality");
            return;
        }
        out_.equalities.push_back({std::move(t), rhs, kind});
    }

    void add_objective(const LinearTerms& t) {
        for (const auto& x : t) out_.objective.push_back(x);
    }

private:
    /// Columns h x^beta (deg beta <= order - 2 d_h) per parity class, in class-local coordinates.
    std::vector<Eigen::MatrixXd> kernel_generators(std::size_t meas, const MonomialBasis& b,
                                                   const std::vector<std::vector<std::size_t>>& classes,
                                                   int order) const {
        std::vector<Eigen::MatrixXd> out(classes.size());
        if (!facial_ || meas >= eqs_.size() || eqs_[meas].empty()) return out;
        std::unordered_map<Monomial, std::pair<std::size_t, std::size_t>, MonomialHash> where;
        for (std::size_t c = 0; c < classes.size(); ++c)
            for (std::size_t t = 0; t < classes[c].size(); ++t) where.emplace(b[classes[c][t]], std::make_pair(c, t));
        std::vector<std::vector<Eigen::VectorXd>> cols(classes.size());
        const Measure& M = out_.measures[meas];
        for (const auto& h : eqs_[meas]) {
            const int t = order - 2 * half_degree(h);
            if (t < 0) continue;
            for (const auto& beta : basis(h.nvars(), M.vars, t).elements) {
                std::size_t cls = classes.size();
                Eigen::VectorXd v;
                for (const auto& [g, coef] : h.terms()) {
                    auto it = where.find(g * beta);
                    if (it == where.end()) throw BuildError("equality multiple leaves the block basis");
                    if (cls == classes.size()) {
                        cls = it->second.first;
                        v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes[cls].size()));
                    } else if (it->second.first != cls) {
                        throw BuildError("equality multiple spans several symmetry blocks");
                    }
                    v[static_cast<Eigen::Index>(it->second.second)] += coef;
                }
                if (cls < classes.size()) cols[cls].push_back(std::move(v));
            }
        }
        for (std::size_t c = 0; c < classes.size(); ++c) {
            out[c].resize(static_cast<Eigen::Index>(classes[c].size()), static_cast<Eigen::Index>(cols[c].size()));
            for (std::size_t j = 0; j < cols[c].size(); ++j) out[c].col(static_cast<Eigen::Index>(j)) = cols[c][j];
        }
        return out;
    }

    /**
     * Drops the pivot positions of the kernel generators. The generators plus
     * the remaining unit vectors form a basis in which the block is
     * diag(principal submatrix, 0), so positivity of the submatrix is
     * equivalent and the block keeps its sparsity. False when nothing is left.
     */
    static bool reduce_block(PsdBlock& blk, const Eigen::MatrixXd& K) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(K.transpose());
        qr.setThreshold(1e-10);
        const auto rank = qr.rank();
        if (rank == 0) return true;
        const auto s = K.rows();
        if (rank >= s) return false;
        std::vector<std::int64_t> remap(static_cast<std::size_t>(s), 0);
        for (Eigen::Index t = 0; t < rank; ++t) remap[static_cast<std::size_t>(qr.colsPermutation().indices()[t])] = -1;
        std::int64_t next = 0;
        for (auto& r : remap)
            if (r == 0) r = next++;
        std::vector<BlockTerm> terms;
        for (const auto& t : blk.terms) {
            const auto i = remap[t.i], j = remap[t.j];
            if (i < 0 || j < 0) continue;
            terms.push_back({static_cast<std::uint32_t>(std::min(i, j)), static_cast<std::uint32_t>(std::max(i, j)), t.var,
                             t.coeff});
        }
        blk.terms = std::move(terms);
        blk.size = static_cast<std::size_t>(next);
        return true;
    }

    RelaxationSdp& out_;
    std::vector<std::vector<Polynomial>> eqs_;

public:
    bool facial_ = true;
};

inline LinearTerms minus(LinearTerms a, const LinearTerms& b) {
    for (auto [v, c] : b) a.emplace_back(v, -c);
    return a;
}

/// Minimization form with ratios in the requested order.
inline SrfoProblem prepare(const SrfoProblem& prob, const RelaxationSpec& spec) {
    prob.validate();
    SrfoProblem p = prob.as_minimization();
    if (!spec.ratio_order.empty()) p = reorder_ratios(p, spec.ratio_order);
    return p;
}

inline double max_abs_coeff(const Polynomial& f) {
    double m = 0.0;
    for (const auto& [mono, c] : f.terms()) m = std::max(m, std::abs(c));
    return m;
}

}  // namespace relax_detail

/**
 * Substitutes x = s * u with s_v the radius of the tightest ball or sphere
 * covering x_v, then divides each ratio by the largest denominator
 * coefficient and each constraint by its largest coefficient. Ratio values
 * are unchanged, moments stay O(1).
 */
inline SrfoProblem normalize_problem(const SrfoProblem& p, std::vector<double>& scale) {
    const std::size_t n = p.nvars();
    scale.assign(n, 1.0);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < p.nconstraints(); ++j)
        if (auto b = as_ball(p.constraints[j], j))
            for (auto v : b->vars) best[v] = std::min(best[v], b->radius_sq);
    for (std::size_t v = 0; v < n; ++v)
        if (std::isfinite(best[v])) scale[v] = std::sqrt(best[v]);
    SrfoProblem out = p;
    for (auto& r : out.ratios) {
        r.num = r.num.rescaled(scale);
        r.den = r.den.rescaled(scale);
        const double m = relax_detail::max_abs_coeff(r.den);
        if (m > 0.0) {
            r.num *= 1.0 / m;
            r.den *= 1.0 / m;
        }
    }
    for (auto& c : out.constraints) {
        c.g = c.g.rescaled(scale);
        const double m = relax_detail::max_abs_coeff(c.g);
        if (m > 0.0) c.g *= 1.0 / m;
    }
    return out;
}

namespace relax_detail {

inline SrfoProblem prepare_scaled(const SrfoProblem& prob, const RelaxationSpec& spec, std::vector<double>& scale) {
    SrfoProblem p = prepare(prob, spec);
    if (!spec.normalize) {
        scale.assign(p.nvars(), 1.0);
        return p;
    }
    return normalize_problem(p, scale);
}

inline void check_order(int k, int d_min) {
    if (k < d_min)
        throw BuildError("relaxation order " + std::to_string(k) + " is below the minimum order " +
                         std::to_string(d_min));
}

inline void constraint_blocks(Assembler& as, std::size_t meas, const SrfoProblem& p, std::size_t j, int k,
                              const std::string& tag);

/// Moment block plus localizing data for the constraints js of one measure.
inline void measure_blocks(Assembler& as, std::size_t meas, const SrfoProblem& p, const std::vector<std::size_t>& js,
                           int k, const std::string& tag) {
    std::vector<Polynomial> eqs;
    for (auto j : js)
        if (p.constraints[j].is_equality()) eqs.push_back(p.constraints[j].g);
    as.set_equalities(meas, std::move(eqs));
    as.psd_blocks(meas, Polynomial::constant(p.nvars(), 1.0), k, "moment[" + tag + "]");
    for (auto j : js) constraint_blocks(as, meas, p, j, k, tag);
}

inline std::vector<std::size_t> all_constraints(const SrfoProblem& p) {
    std::vector<std::size_t> js(p.nconstraints());
    std::iota(js.begin(), js.end(), std::size_t{0});
    return js;
}

inline void constraint_blocks(Assembler& as, std::size_t meas, const SrfoProblem& p, std::size_t j, int k,
                              const std::string& tag) {
    const auto& con = p.constraints[j];
    const int dj = half_degree(con.g);
    if (con.is_equality())
        as.localizing_equalities(meas, con.g, k - dj);
    else
        as.psd_blocks(meas, con.g, k - dj, "loc[" + tag + ",g" + std::to_string(j + 1) + "]");
}

/// Shared body of the dense and sign-symmetric builders.
inline RelaxationSdp build_global(const SrfoProblem& prob, const RelaxationSpec& spec, bool symmetric) {
    RelaxationSdp out;
    out.method = spec.method;
    out.order = spec.order;
    out.problem = prepare_scaled(prob, spec, out.variable_scale);
    out.original_nvars = prob.nvars();
    out.ratio_order = spec.ratio_order;
    const SrfoProblem& p = out.problem;
    out.d_min = compute_d_min(p);
    check_order(spec.order, out.d_min);
    const int k = spec.order;
    const std::size_t n = p.nvars(), N = p.nratios();
    IndexSet all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});

    std::vector<std::optional<SignSymmetryGroup>> groups(N);
    if (symmetric) {
        const auto A = support_sets(p);
        for (std::size_t i = 0; i < N; ++i) groups[i] = sign_symmetries(n, A.per_ratio[i]);
    }
    Assembler as(out);
    as.facial_ = spec.facial_reduction;
    for (std::size_t i = 0; i < N; ++i) {
        const std::string tag = std::to_string(i + 1);
        const auto meas = as.add_measure("y" + tag, n, all, 2 * k, groups[i]);
        measure_blocks(as, meas, p, all_constraints(p), k, tag);
    }
    const Monomial zero(n);
    as.add_row(as.riesz(0, p.ratios[0].den, zero), 1.0, RowKind::normalization);
    for (std::size_t i = 1; i < N; ++i) {
        const int t = 2 * k - std::max(p.ratios[0].den.degree(), p.ratios[i].den.degree());
        if (t < 0) continue;
        for (const auto& a : basis(n, all, t).elements) {
            if (groups[i] && !groups[i]->in_closure(a)) continue;
            as.add_row(minus(as.riesz(i, p.ratios[i].den, a), as.riesz(0, p.ratios[0].den, a)), 0.0, RowKind::linking);
        }
    }
    for (std::size_t i = 0; i < N; ++i) as.add_objective(as.riesz(i, p.ratios[i].num, zero));
    out.validate();
    return out;
}

/// Effective problem and clique structure for the clique-based builders.
inline void prepare_cliques(RelaxationSdp& out, const SrfoProblem& prob, const RelaxationSpec& spec) {
    out.problem = prepare_scaled(prob, spec, out.variable_scale);
    out.original_nvars = prob.nvars();
    out.ratio_order = spec.ratio_order;
    CliqueStructure cs = build_cliques(out.problem, spec.assignment);
    if (cs.reordered) {
        out.notes.push_back("clique order repaired for the running intersection property");
        out.problem = reorder_ratios(out.problem, cs.order);
        std::vector<std::size_t> composed;
        for (auto i : cs.order) composed.push_back(spec.ratio_order.empty() ? i : spec.ratio_order[i]);
        out.ratio_order = std::move(composed);
        cs.order.resize(cs.size());
        std::iota(cs.order.begin(), cs.order.end(), std::size_t{0});
    }
    if (out.problem.cliques) out.problem.cliques = cs.cliques;
    if (spec.add_balls) {
        try {
            SrfoProblem trial = out.problem;
            CliqueStructure cs2 = cs;
            auto rep = ensure_ball_constraints(trial, cs2);
            out.problem = std::move(trial);
            cs = std::move(cs2);
            for (std::size_t i = 0; i < rep.appended.size(); ++i)
                if (rep.appended[i])
                    out.notes.push_back("added ball constraint with radius^2 " + format_real(rep.radius_sq[i]) +
                                        " to clique " + std::to_string(i + 1));
        } catch (const CliqueError& e) {
            out.notes.push_back(std::string("no redundant ball constraints: ") + e.what());
        }
    }
    out.cliques = std::move(cs);
}

inline RelaxationSdp build_clique(const SrfoProblem& prob, const RelaxationSpec& spec, bool symmetric) {
    RelaxationSdp out;
    out.method = spec.method;
    out.order = spec.order;
    prepare_cliques(out, prob, spec);
    const SrfoProblem& p = out.problem;
    const CliqueStructure& cs = *out.cliques;
    out.d_min = compute_d_min(p);
    check_order(spec.order, out.d_min);
    const int k = spec.order;
    const std::size_t n = p.nvars(), N = p.nratios();

    std::optional<SignSymmetryGroup> group;
    if (symmetric) group = sign_symmetries(n, support_sets(p).global);
    Assembler as(out);
    as.facial_ = spec.facial_reduction;
    for (std::size_t i = 0; i < N; ++i) {
        const std::string tag = std::to_string(i + 1);
        const auto meas = as.add_measure("y" + tag, n, cs.cliques[i], 2 * k, group);
        measure_blocks(as, meas, p, cs.constraints[i], k, tag);
    }
    const Monomial zero(n);
    for (std::size_t i = 0; i < N; ++i) as.add_row(as.riesz(i, p.ratios[i].den, zero), 1.0, RowKind::normalization);
    for (std::size_t i = 0; i < N; ++i)
        for (auto j : cs.U[i]) {
            const int t = 2 * k - std::max(p.ratios[i].den.degree(), p.ratios[j].den.degree());
            if (t < 1) continue;
            for (const auto& a : basis(n, cs.shared(i, j), t).elements) {
                if (a.is_constant()) continue;
                if (group && !group->in_closure(a)) continue;
                as.add_row(minus(as.riesz(i, p.ratios[i].den, a), as.riesz(j, p.ratios[j].den, a)), 0.0,
                           RowKind::linking);
            }
        }
    for (std::size_t i = 0; i < N; ++i) as.add_objective(as.riesz(i, p.ratios[i].num, zero));
    out.validate();
    return out;
}

}  // namespace relax_detail

inline RelaxationSdp build_dense(const SrfoProblem& prob, int k, std::vector<std::size_t> ratio_order = {}) {
    RelaxationSpec spec{Method::dense, k, std::move(ratio_order)};
    return relax_detail::build_global(prob, spec, false);
}

inline RelaxationSdp build_signsym(const SrfoProblem& prob, int k, std::vector<std::size_t> ratio_order = {}) {
    RelaxationSpec spec{Method::signsym, k, std::move(ratio_order)};
    return relax_detail::build_global(prob, spec, true);
}

inline RelaxationSdp build_cs(const SrfoProblem& prob, int k, const RelaxationSpec& base = {}) {
    RelaxationSpec spec = base;
    spec.method = Method::cs;
    spec.order = k;
    return relax_detail::build_clique(prob, spec, false);
}

inline RelaxationSdp build_cs_signsym(const SrfoProblem& prob, int k, const RelaxationSpec& base = {}) {
    RelaxationSpec spec = base;
    spec.method = Method::cs_signsym;
    spec.order = k;
    return relax_detail::build_clique(prob, spec, true);
}

/// Extended problem in (x, c_1..c_N): objective sum c_i, equalities p_i - c_i q_i = 0, original constraints.
inline SrfoProblem epigraph_problem(const SrfoProblem& p) {
    const std::size_t n = p.nvars(), N = p.nratios(), ne = n + N;
    SrfoProblem e;
    e.name = p.name + "_epigraph";
    e.var_names = p.var_names;
    std::set<std::string> used(p.var_names.begin(), p.var_names.end());
    for (std::size_t i = 0; i < N; ++i) {
        std::string nm = "c" + std::to_string(i + 1);
        while (used.count(nm)) nm = "_" + nm;
        used.insert(nm);
        e.var_names.push_back(nm);
    }
    for (std::size_t i = 0; i < N; ++i)
        e.ratios.push_back({Polynomial::variable(ne, n + i), Polynomial::constant(ne, 1.0)});
    for (const auto& c : p.constraints) e.constraints.push_back({c.g.extended(ne), c.kind});
    for (std::size_t i = 0; i < N; ++i) {
        const Polynomial ci = Polynomial::variable(ne, n + i);
        e.constraints.push_back(
            {p.ratios[i].num.extended(ne) - ci * p.ratios[i].den.extended(ne), ConstraintKind::equality});
    }
    if (p.cliques) {
        std::vector<IndexSet> cl;
        for (std::size_t i = 0; i < N; ++i) {
            IndexSet I = (*p.cliques)[i];
            I.push_back(n + i);
            cl.push_back(std::move(I));
        }
        e.cliques = std::move(cl);
    }
    return e;
}

/**
 * Moment relaxation of the epigraph reformulation with the sign symmetries
 * of its extended support. With cliques, measure i lives on I_i U {c_i}, all
 * measures have unit mass and overlapping measures agree on shared moments.
 */
inline RelaxationSdp build_epigraph(const SrfoProblem& prob, int k, const RelaxationSpec& base = {}) {
    RelaxationSpec spec = base;
    spec.method = Method::epigraph;
    spec.order = k;
    RelaxationSdp out;
    out.method = Method::epigraph;
    out.order = k;
    const bool use_cs = spec.epigraph_cliques && prob.cliques.has_value();
    if (use_cs) {
        relax_detail::prepare_cliques(out, prob, spec);
    } else {
        out.problem = relax_detail::prepare_scaled(prob, spec, out.variable_scale);
        out.original_nvars = prob.nvars();
        out.ratio_order = spec.ratio_order;
    }
    const SrfoProblem base_prob = out.problem;
    const std::size_t n = base_prob.nvars(), N = base_prob.nratios(), ne = n + N;
    out.problem = epigraph_problem(base_prob);
    const SrfoProblem& e = out.problem;
    out.d_min = compute_d_min(e);
    relax_detail::check_order(k, out.d_min);

    std::vector<Monomial> A;
    for (const auto& c : e.constraints)
        for (const auto& [m, v] : c.g.terms()) A.push_back(m);
    for (std::size_t i = 0; i < N; ++i) A.push_back(Monomial::unit(ne, n + i));
    const SignSymmetryGroup group = sign_symmetries(ne, A);

    relax_detail::Assembler as(out);
    as.facial_ = spec.facial_reduction;
    as.facial_ = spec.facial_reduction;
    const Monomial zero(ne);
    if (!use_cs) {
        IndexSet all(ne);
        std::iota(all.begin(), all.end(), std::size_t{0});
        const auto meas = as.add_measure("y", ne, all, 2 * k, group);
        relax_detail::measure_blocks(as, meas, e, relax_detail::all_constraints(e), k, "1");
        as.add_row({{as.var(meas, zero), 1.0}}, 1.0, RowKind::normalization);
        for (std::size_t i = 0; i < N; ++i) as.add_objective({{as.var(meas, Monomial::unit(ne, n + i)), 1.0}});
    } else {
        CliqueStructure& cs = *out.cliques;
        const std::size_t m0 = base_prob.nconstraints();
        for (std::size_t i = 0; i < N; ++i) {
            cs.cliques[i].push_back(n + i);
            cs.constraints[i].push_back(m0 + i);
        }
        for (std::size_t i = 0; i < N; ++i) {
            const std::string tag = std::to_string(i + 1);
            const auto meas = as.add_measure("y" + tag, ne, cs.cliques[i], 2 * k, group);
            relax_detail::measure_blocks(as, meas, e, cs.constraints[i], k, tag);
            as.add_row({{as.var(meas, zero), 1.0}}, 1.0, RowKind::normalization);
            as.add_objective({{as.var(meas, Monomial::unit(ne, n + i)), 1.0}});
        }
        for (std::size_t i = 0; i < N; ++i)
            for (auto j : cs.U[i])
                for (const auto& a : basis(ne, cs.shared(i, j), 2 * k).elements) {
                    if (a.is_constant() || !group.in_closure(a)) continue;
                    as.add_row({{as.var(i, a), 1.0}, {as.var(j, a), -1.0}}, 0.0, RowKind::consistency);
                }
    }
    out.validate();
    return out;
}

inline RelaxationSdp build_relaxation(const SrfoProblem& prob, const RelaxationSpec& spec) {
    switch (spec.method) {
        case Method::dense: return relax_detail::build_global(prob, spec, false);
        case Method::signsym: return relax_detail::build_global(prob, spec, true);
        case Method::cs: return relax_detail::build_clique(prob, spec, false);
        case Method::cs_signsym: return relax_detail::build_clique(prob, spec, true);
        case Method::epigraph: return build_epigraph(prob, spec.order, spec);
    }
    throw BuildError("unknown method");
}

/// Minimum order for a method, computed on the problem that method actually relaxes.
inline int method_d_min(const SrfoProblem& prob, Method m) {
    const SrfoProblem p = prob.as_minimization();
    if (m == Method::epigraph) return compute_d_min(epigraph_problem(p));
    return compute_d_min(p);
}

/// Lossless conversion to SDPA-oriented standard form.
inline SdpStandardForm to_standard_form(const RelaxationSdp& r) {
    r.validate();
    SdpStandardForm sf;
    sf.nvars = r.ndec;
    sf.c.assign(r.ndec, 0.0);
    sf.c0 = r.objective_constant;
    for (auto [v, a] : r.objective) sf.c[v] += a;
    sf.F.assign(r.ndec, {});
    for (std::size_t b = 0; b < r.blocks.size(); ++b) {
        const auto& blk = r.blocks[b];
        sf.block_sizes.push_back(blk.size);
        sf.block_labels.push_back(blk.label);
        std::map<std::tuple<std::size_t, std::uint32_t, std::uint32_t>, double> acc;
        for (const auto& t : blk.terms) acc[{t.var, t.i, t.j}] += t.coeff;
        for (const auto& [key, v] : acc) {
            if (v == 0.0) continue;
            const auto [var, i, j] = key;
            const SdpEntry e{static_cast<std::uint32_t>(b), i, j, var == kConstant ? -v : v};
            (var == kConstant ? sf.F0 : sf.F[var]).push_back(e);
        }
    }
    for (const auto& row : r.equalities) sf.E.push_back({row.terms, row.rhs});
    return sf;
}

/// Pseudo-moment values of one measure, keyed by monomial (missing monomials are symmetry zeros).
inline std::unordered_map<Monomial, double, MonomialHash> moment_values(const RelaxationSdp& r, std::size_t measure,
                                                                        std::span<const double> y) {
    std::unordered_map<Monomial, double, MonomialHash> out;
    const auto& M = r.measures.at(measure);
    for (std::size_t t = 0; t < M.monomials.size(); ++t) out.emplace(M.monomials[t], y[M.var_index[t]]);
    return out;
}

/**
 * Decision vector of the Dirac measure at x, scaled so every normalization
 * holds: measure i of a ratio-linked relaxation gets mass 1/q_i(x), epigraph
 * measures sit at (x, p(x)/q(x)) with unit mass.
 */
inline std::vector<double> dirac_vector(const RelaxationSdp& r, std::span<const double> x) {
    const SrfoProblem& p = r.problem;
    std::vector<double> pt(x.begin(), x.end());
    for (std::size_t v = 0; v < pt.size() && v < r.variable_scale.size(); ++v) pt[v] /= r.variable_scale[v];
    if (r.method == Method::epigraph) {
        const std::size_t n = r.original_nvars, N = p.nratios();
        if (x.size() != n) throw DimensionError("dirac_vector: point has wrong length");
        // c_i = p_i / q_i, read off the trailing equalities p_i - c_i q_i.
        pt.resize(n + N, 0.0);
        const std::size_t m0 = p.nconstraints() - N;
        for (std::size_t i = 0; i < N; ++i) {
            const Polynomial& h = p.constraints[m0 + i].g;  // p_i - c_i q_i
            std::vector<double> z = pt;
            z[n + i] = 0.0;
            const double num = h.evaluate(z);
            z[n + i] = 1.0;
            const double den = num - h.evaluate(z);
            pt[n + i] = num / den;
        }
    } else if (x.size() != p.nvars()) {
        throw DimensionError("dirac_vector: point has wrong length");
    }
    std::vector<double> y(r.ndec, 0.0);
    for (std::size_t i = 0; i < r.measures.size(); ++i) {
        const auto& M = r.measures[i];
        const double mass = r.method == Method::epigraph ? 1.0 : 1.0 / p.ratios[i].den.evaluate(pt);
        for (std::size_t t = 0; t < M.monomials.size(); ++t)
            y[M.var_index[t]] = mass * Polynomial::from_monomial(M.monomials[t]).evaluate(pt);
    }
    return y;
}

struct PointCheck {
    double max_equality_residual = 0.0;
    double min_block_eigenvalue = std::numeric_limits<double>::infinity();
    double objective = 0.0;
};

inline PointCheck check_point(const RelaxationSdp& r, std::span<const double> y) {
    PointCheck pc;
    for (const auto& row : r.equalities) {
        double s = -row.rhs;
        for (auto [v, a] : row.terms) s += a * y[v];
        pc.max_equality_residual = std::max(pc.max_equality_residual, std::abs(s));
    }
    for (const auto& b : r.blocks) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(b.size, b.size);
        for (const auto& t : b.terms) {
            const double v = t.coeff * (t.var == kConstant ? 1.0 : y[t.var]);
            M(t.i, t.j) += v;
            if (t.i != t.j) M(t.j, t.i) += v;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        pc.min_block_eigenvalue = std::min(pc.min_block_eigenvalue, es.eigenvalues().minCoeff());
    }
    pc.objective = r.objective_constant;
    for (auto [v, a] : r.objective) pc.objective += a * y[v];
    return pc;
}

struct BoundPair {
    SolveStatus status = SolveStatus::numerical_issue;
    double primal = 0.0;
    double dual = 0.0;
    /// Reported lower bound: the smaller of the two objective values.
    double bound = std::numeric_limits<double>::quiet_NaN();
};

inline BoundPair extract_bound(const SolveReport& rep) {
    BoundPair b{rep.status, rep.primal, rep.dual};
    if (is_success(rep.status)) b.bound = std::min(rep.primal, rep.dual);
    return b;
}

inline std::size_t numerical_rank(const Eigen::MatrixXd& M, double rank_tol) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] <= 0.0) return 0;
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rank_tol * s[0]) ++r;
    return r;
}

/// Dense moment matrix M_t(y) of one measure over its variables, symmetry zeros filled in.
inline Eigen::MatrixXd moment_matrix(const RelaxationSdp& r, std::size_t measure, std::span<const double> y, int t) {
    const auto& M = r.measures.at(measure);
    const std::size_t n = r.problem.nvars();
    const auto b = basis(n, M.vars, t);
    Eigen::MatrixXd out(b.size(), b.size());
    for (std::size_t i = 0; i < b.size(); ++i)
        for (std::size_t j = i; j < b.size(); ++j) {
            const auto v = M.find(b[i] * b[j]);
            out(i, j) = out(j, i) = v ? y[*v] : 0.0;
        }
    return out;
}

/**
 * Atoms of a flat moment matrix M_t(y) of one measure, as points over the
 * measure's variables (coordinates of the relaxed problem). Returns nullopt
 * when the multiplication matrices cannot be formed.
 */
inline std::optional<std::vector<std::vector<double>>> extract_atoms(const RelaxationSdp& r, std::size_t measure,
                                                                     std::span<const double> y, int t,
                                                                     double rank_tol = 1e-6) {
    using Eigen::Index;
    const auto& meas = r.measures.at(measure);
    const std::size_t n = r.problem.nvars();
    const auto b = basis(n, meas.vars, t);
    const Eigen::MatrixXd Mt = moment_matrix(r, measure, y, t);
    const std::size_t rank = numerical_rank(Mt, rank_tol);
    if (rank == 0) return std::nullopt;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Mt);
    const Index s = Mt.rows(), rk = static_cast<Index>(rank);
    Eigen::MatrixXd V(s, rk);
    for (Index c = 0; c < rk; ++c) {
        const Index src = s - 1 - c;
        V.col(c) = es.eigenvectors().col(src) * std::sqrt(std::max(0.0, es.eigenvalues()[src]));
    }
    // Greedy graded choice of basis rows, then W = V V_B^{-1} so W restricted to the basis is the identity.
    std::vector<Index> rows;
    Eigen::MatrixXd Qb(rk, 0);
    const double vmax = V.rowwise().norm().maxCoeff();
    for (Index i = 0; i < s && static_cast<Index>(rows.size()) < rk; ++i) {
        Eigen::VectorXd v = V.row(i).transpose();
        for (Index c = 0; c < Qb.cols(); ++c) v -= Qb.col(c).dot(v) * Qb.col(c);
        if (v.norm() > 1e-6 * vmax) {
            rows.push_back(i);
            Qb.conservativeResize(rk, Qb.cols() + 1);
            Qb.col(Qb.cols() - 1) = v.normalized();
        }
    }
    if (static_cast<Index>(rows.size()) != rk) return std::nullopt;
    Eigen::MatrixXd VB(rk, rk);
    for (Index a = 0; a < rk; ++a) VB.row(a) = V.row(rows[static_cast<std::size_t>(a)]);
    const Eigen::MatrixXd W = VB.transpose().partialPivLu().solve(V.transpose()).transpose();
    std::unordered_map<Monomial, Index, MonomialHash> pos;
    for (std::size_t i = 0; i < b.size(); ++i) pos.emplace(b[i], static_cast<Index>(i));
    std::vector<Eigen::MatrixXd> Nj;
    for (auto v : meas.vars) {
        std::vector<Exponent> e(n, 0);
        e[v] = 1;
        const Monomial xv(std::move(e));
        Eigen::MatrixXd N(rk, rk);
        for (Index a = 0; a < rk; ++a) {
            auto it = pos.find(b[static_cast<std::size_t>(rows[static_cast<std::size_t>(a)])] * xv);
            if (it == pos.end()) return std::nullopt;
            N.row(a) = W.row(it->second);
        }
        Nj.push_back(std::move(N));
    }
    // A fixed generic combination separates the atoms; its Schur vectors diagonalize every N_j.
    Eigen::MatrixXd comb = Eigen::MatrixXd::Zero(rk, rk);
    for (std::size_t j = 0; j < Nj.size(); ++j) comb += (0.37 + 0.61 * std::fmod(0.7548776662 * static_cast<double>(j + 1), 1.0)) * Nj[j];
    Eigen::RealSchur<Eigen::MatrixXd> schur(comb);
    const Eigen::MatrixXd& Q = schur.matrixU();
    std::vector<std::vector<double>> atoms(static_cast<std::size_t>(rk), std::vector<double>(meas.vars.size()));
    for (Index a = 0; a < rk; ++a)
        for (std::size_t j = 0; j < Nj.size(); ++j)
            atoms[static_cast<std::size_t>(a)][j] = Q.col(a).dot(Nj[j] * Q.col(a));
    return atoms;
}

/// Candidate minimizers assembled from the atoms of every measure, in relaxed-problem coordinates.
inline std::vector<std::vector<double>> candidate_points(const RelaxationSdp& r, std::span<const double> y, int t,
                                                         double rank_tol = 1e-6) {
    const std::size_t n = r.problem.nvars();
    std::vector<std::vector<std::vector<double>>> per;
    for (std::size_t m = 0; m < r.measures.size(); ++m) {
        auto a = extract_atoms(r, m, y, t, rank_tol);
        if (!a) return {};
        per.push_back(std::move(*a));
    }
    std::vector<std::vector<double>> out;
    bool global = true;
    for (const auto& m : r.measures) global = global && m.vars.size() == n;
    if (global) {
        for (std::size_t m = 0; m < per.size(); ++m)
            for (const auto& a : per[m]) {
                std::vector<double> x(n);
                for (std::size_t j = 0; j < n; ++j) x[r.measures[m].vars[j]] = a[j];
                out.push_back(std::move(x));
            }
        return out;
    }
    // Clique measures: glue atoms that agree on shared variables (bounded enumeration).
    constexpr std::size_t kMaxCandidates = 256;
    struct Partial {
        std::vector<double> x;
        std::vector<int> seen;
    };
    std::vector<Partial> cur{{std::vector<double>(n, 0.0), std::vector<int>(n, 0)}};
    for (std::size_t m = 0; m < per.size(); ++m) {
        std::vector<Partial> next;
        for (const auto& pa : cur)
            for (const auto& a : per[m]) {
                Partial q = pa;
                bool ok = true;
                for (std::size_t j = 0; j < a.size() && ok; ++j) {
                    const auto v = r.measures[m].vars[j];
                    if (q.seen[v]) {
                        ok = std::abs(q.x[v] - a[j]) <= 1e-3 * (1.0 + std::abs(a[j]));
                    } else {
                        q.x[v] = a[j];
                        q.seen[v] = 1;
                    }
                }
                if (ok && next.size() < kMaxCandidates) next.push_back(std::move(q));
            }
        cur = std::move(next);
        if (cur.empty()) return {};
    }
    for (auto& pa : cur) out.push_back(std::move(pa.x));
    return out;
}

/**
 * Flat truncation certificate: rank M_k(y_i) == rank M_{k-d}(y_i) for every
 * measure (d = max(1, max_j d_j)), and some extracted atom is feasible and
 * attains the relaxation value, so the bound is the global optimum.
 */
inline bool flatness_certificate(const RelaxationSdp& r, std::span<const double> y, double rank_tol = 1e-6) {
    int d = 1;
    for (const auto& c : r.problem.constraints) d = std::max(d, half_degree(c.g));
    const int k = r.order;
    if (k - d < 0) return false;
    for (std::size_t m = 0; m < r.measures.size(); ++m) {
        const auto hi = numerical_rank(moment_matrix(r, m, y, k), rank_tol);
        const auto lo = numerical_rank(moment_matrix(r, m, y, k - d), rank_tol);
        if (hi != lo) return false;
    }
    double value = r.objective_constant;
    for (auto [v, a] : r.objective) value += a * y[v];
    const double tol = 1e-4 * (1.0 + std::abs(value));
    for (const auto& x : candidate_points(r, y, k, rank_tol)) {
        if (r.problem.max_violation(x) > 1e-4) continue;
        bool pos = true;
        for (const auto& rt : r.problem.ratios) pos = pos && rt.den.evaluate(x) > 0.0;
        if (pos && r.problem.objective(x) <= value + tol) return true;
    }
    return false;
}

inline bool flatness_certificate(const RelaxationSdp& r, const SolveReport& rep, double rank_tol = 1e-6) {
    if (!is_success(rep.status)) return false;
    return flatness_certificate(r, std::span<const double>(rep.y), rank_tol);
}

}  // namespace ratsos
