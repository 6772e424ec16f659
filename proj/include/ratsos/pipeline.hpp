#pragma once

/**
 * @file pipeline.hpp
 * @brief Build, solve and report in one call, plus the structural analysis report.
 *
 * Values in RunResult are in the problem's own sense: for maximization
 * problems the relaxation bounds the negated objective from below, and the
 * reported bound, primal and dual are negated back (an upper bound).
 */

#include <chrono>
#include <sstream>

#include "ratsos/relax.hpp"
#include "ratsos/sdpa_io.hpp"

namespace ratsos {

using SizeHistogram = std::map<std::size_t, std::size_t, std::greater<>>;

struct RunSettings {
    SolveSettings solver;
    double rank_tol = 1e-6;
};

struct RunResult {
    std::string problem;
    Method method = Method::dense;
    int order = 0;
    int d_min = 0;
    bool maximize = false;
    SolveStatus status = SolveStatus::numerical_issue;
    double bound = std::numeric_limits<double>::quiet_NaN();
    double primal = 0.0;
    double dual = 0.0;
    double gap = 0.0;
    int iterations = 0;
    bool certified = false;
    SizeHistogram block_size_histogram;
    std::size_t nblocks = 0;
    std::size_t ndec = 0;
    std::size_t nequalities = 0;
    double build_ms = 0.0;
    double solve_ms = 0.0;
    std::vector<std::string> notes;

    double time_ms() const { return build_ms + solve_ms; }
};

namespace pipeline_detail {

inline double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline void fill_structure(RunResult& out, const SrfoProblem& prob, const RelaxationSpec& spec,
                           const RelaxationSdp& r) {
    out.problem = prob.name;
    out.method = spec.method;
    out.order = spec.order;
    out.d_min = r.d_min;
    out.maximize = prob.maximize;
    out.block_size_histogram = size_histogram(r.block_sizes());
    out.nblocks = r.blocks.size();
    out.ndec = r.ndec;
    out.nequalities = r.equalities.size();
    out.notes = r.notes;
}

}  // namespace pipeline_detail

/// Builds the relaxation, solves it with the internal solver and checks flatness.
inline RunResult run_relaxation(const SrfoProblem& prob, const RelaxationSpec& spec, const RunSettings& set = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const RelaxationSdp r = build_relaxation(prob, spec);
    const SdpStandardForm sf = to_standard_form(r);
    RunResult out;
    out.build_ms = pipeline_detail::ms_since(t0);
    pipeline_detail::fill_structure(out, prob, spec, r);

    const auto t1 = std::chrono::steady_clock::now();
    const SolveReport rep = solve_internal(sf, set.solver);
    out.solve_ms = pipeline_detail::ms_since(t1);

    const double sense = prob.maximize ? -1.0 : 1.0;
    const BoundPair b = extract_bound(rep);
    out.status = rep.status;
    out.primal = sense * rep.primal;
    out.dual = sense * rep.dual;
    out.bound = sense * b.bound;
    out.gap = rep.gap;
    out.iterations = rep.iterations;
    out.certified = flatness_certificate(r, rep, set.rank_tol);
    return out;
}

struct ExportResult {
    std::string path;
    SizeHistogram block_size_histogram;
    std::size_t nblocks = 0;
    std::size_t ndec = 0;
    std::size_t nequalities = 0;
    /// Constant added to the SDPA objective to recover the relaxation value (the format has no constant term).
    double objective_offset = 0.0;
    double build_ms = 0.0;
};

/// Builds the relaxation and writes it in SDPA sparse format.
inline ExportResult export_relaxation(const SrfoProblem& prob, const RelaxationSpec& spec, const std::string& path) {
    const auto t0 = std::chrono::steady_clock::now();
    const RelaxationSdp r = build_relaxation(prob, spec);
    const SdpStandardForm sf = to_standard_form(r);
    export_sdpa(sf, path);
    ExportResult out;
    out.objective_offset = sf.c0;
    out.path = path;
    out.block_size_histogram = size_histogram(r.block_sizes());
    out.nblocks = r.blocks.size();
    out.ndec = r.ndec;
    out.nequalities = r.equalities.size();
    out.build_ms = pipeline_detail::ms_since(t0);
    return out;
}

inline std::string format_histogram(const SizeHistogram& h) {
    std::ostringstream os;
    bool first = true;
    for (auto [size, count] : h) {
        os << (first ? "" : ", ") << size << "x" << count;
        first = false;
    }
    return os.str();
}

struct AnalyzeOptions {
    /// Orders d_min .. d_min + extra_orders are tabulated.
    int extra_orders = 2;
    /// Relaxations whose largest moment basis exceeds this many monomials are not built.
    std::size_t max_basis = 1000;
};

/// Text report: symmetry groups, clique structure with RIP verdict, and block histograms per order.
inline std::string analyze_problem(const SrfoProblem& prob_in, const AnalyzeOptions& opt = {}) {
    prob_in.validate();
    const SrfoProblem prob = prob_in.as_minimization();
    const std::size_t n = prob.nvars();
    std::ostringstream os;
    os << "problem " << prob.name << "\n";
    os << "variables " << n << ", ratios " << prob.nratios() << ", constraints " << prob.nconstraints() << "\n";
    os << "sense " << (prob_in.maximize ? "max" : "min") << "\n";

    auto names = [&](const IndexSet& s) {
        std::ostringstream o;
        o << "{";
        for (std::size_t k = 0; k < s.size(); ++k) o << (k ? "," : "") << prob.var_names[s[k]];
        o << "}";
        return o.str();
    };
    auto group_line = [&](const SignSymmetryGroup& g) {
        std::ostringstream o;
        o << "rank " << g.rank();
        if (g.rank() == n && n > 3) {
            o << ", every single-coordinate flip";
        } else if (g.rank() > 0) {
            o << ", basis";
            for (const auto& b : g.basis()) o << " " << b.to_string();
        }
        return o.str();
    };

    os << "\nsign symmetries\n";
    const SupportSets sup = support_sets(prob);
    for (std::size_t i = 0; i < sup.per_ratio.size(); ++i)
        os << "  ratio " << i + 1 << ": " << group_line(sign_symmetries(n, sup.per_ratio[i])) << "\n";
    os << "  global: " << group_line(sign_symmetries(n, sup.global)) << "\n";

    os << "\ncliques (" << (prob.cliques ? "declared" : "derived from ratio variables") << ")\n";
    bool cliques_ok = true;
    try {
        const CliqueStructure cs = build_cliques(prob);
        // cs is stored in its (possibly reordered) position order; report in the declared order.
        std::vector<std::size_t> pos(cs.order.size());
        for (std::size_t p = 0; p < cs.order.size(); ++p) pos[cs.order[p]] = p;
        for (std::size_t i = 0; i < pos.size(); ++i) os << "  I" << i + 1 << " = " << names(cs.cliques[pos[i]]) << "\n";
        os << "  RIP (given order): " << cs.rip_given.witness(prob.var_names) << "\n";
        if (cs.reordered) {
            os << "  RIP holds after reordering ratios to";
            for (auto i : cs.order) os << " " << i + 1;
            os << "\n";
        }
        for (std::size_t i = 0; i < pos.size(); ++i) {
            os << "  constraints of clique " << i + 1 << ":";
            if (cs.constraints[pos[i]].empty()) os << " none";
            for (auto j : cs.constraints[pos[i]]) os << " g" << j + 1;
            os << "\n";
        }
    } catch (const CliqueError& e) {
        cliques_ok = false;
        os << "  invalid: " << e.what() << "\n";
    }

    os << "\nblock sizes (size x count)\n";
    for (Method m : {Method::dense, Method::signsym, Method::cs, Method::cs_signsym, Method::epigraph}) {
        if (uses_cliques(m) && !cliques_ok) {
            os << "  " << to_string(m) << ": unavailable (invalid cliques)\n";
            continue;
        }
        int dmin = 0;
        try {
            dmin = method_d_min(prob, m);
        } catch (const Error& e) {
            os << "  " << to_string(m) << ": unavailable (" << e.what() << ")\n";
            continue;
        }
        const std::size_t nv = m == Method::epigraph ? n + prob.nratios() : n;
        for (int k = dmin; k <= dmin + opt.extra_orders; ++k) {
            os << "  " << to_string(m) << " k=" << k << ": ";
            const bool sparse = uses_cliques(m) || (m == Method::epigraph && prob.cliques);
            if (!sparse && binomial(nv + static_cast<std::size_t>(k), static_cast<std::size_t>(k)) > opt.max_basis) {
                os << "skipped (moment basis above " << opt.max_basis << ")\n";
                continue;
            }
            try {
                RelaxationSpec spec;
                spec.method = m;
                spec.order = k;
                const RelaxationSdp r = build_relaxation(prob, spec);
                std::size_t largest = 0;
                for (auto s : r.block_sizes()) largest = std::max(largest, s);
                if (largest > opt.max_basis) {
                    os << "skipped (block above " << opt.max_basis << ")\n";
                    continue;
                }
                os << format_histogram(size_histogram(r.block_sizes())) << "  (" << r.blocks.size() << " blocks, "
                   << r.ndec << " moments, " << r.equalities.size() << " equalities)\n";
            } catch (const Error& e) {
                os << "error: " << e.what() << "\n";
            }
        }
    }
    return os.str();
}

}  // namespace ratsos
