#pragma once

/**
 * @file sdp.hpp
 * @brief Block SDP standard form and a primal-dual interior-point solver.
 *
 * Orientation follows SDPA. The moment side is
 *
 *     min  c'y + c0   s.t.  X = sum_l y_l F_l - F0 >= 0,  E y = f,
 *
 * with free y, and the SOS side is
 *
 *     max  <F0, Y> + f'w + c0   s.t.  F*(Y) + E'w = c,  Y >= 0.
 *
 * The solver is an infeasible path-following method with Nesterov-Todd
 * scaling and Mehrotra's predictor-corrector. The normal equations are
 * block diagonal over groups of variables that share PSD blocks; equality
 * rows that touch a single group are eliminated group by group and the
 * remaining coupling rows through one dense Schur complement.
 */

#include <chrono>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <cstdlib>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "ratsos/error.hpp"

namespace ratsos {

struct SdpEntry {
    std::uint32_t block = 0;
    std::uint32_t i = 0;  ///< row, i <= j
    std::uint32_t j = 0;
    double v = 0.0;
};

struct SparseRow {
    std::vector<std::pair<std::size_t, double>> terms;
    double rhs = 0.0;
};

struct SdpStandardForm {
    std::vector<std::size_t> block_sizes;
    std::vector<std::string> block_labels;
    std::size_t nvars = 0;
    std::vector<double> c;
    double c0 = 0.0;
    std::vector<SdpEntry> F0;
    std::vector<std::vector<SdpEntry>> F;  ///< one sparse upper-triangular list per variable
    std::vector<SparseRow> E;

    std::size_t total_psd_dim() const {
        return std::accumulate(block_sizes.begin(), block_sizes.end(), std::size_t{0});
    }

    void validate() const {
        if (c.size() != nvars || F.size() != nvars) throw DimensionError("standard form: variable count mismatch");
        if (!block_labels.empty() && block_labels.size() != block_sizes.size())
            throw DimensionError("standard form: label count mismatch");
        auto check = [&](const SdpEntry& e) {
            if (e.block >= block_sizes.size()) throw DimensionError("standard form: block index out of range");
            if (e.i > e.j || e.j >= block_sizes[e.block])
                throw DimensionError("standard form: entry outside the upper triangle of its block");
        };
        for (const auto& e : F0) check(e);
        for (const auto& Fl : F)
            for (const auto& e : Fl) check(e);
        for (const auto& r : E)
            for (const auto& [v, a] : r.terms)
                if (v >= nvars) throw DimensionError("standard form: equality references unknown variable");
    }

    double objective(std::span<const double> y) const {
        double s = c0;
        for (std::size_t l = 0; l < nvars; ++l) s += c[l] * y[l];
        return s;
    }

    /// X(y) = sum_l y_l F_l - F0, block by block.
    std::vector<Eigen::MatrixXd> slack(std::span<const double> y) const {
        std::vector<Eigen::MatrixXd> X;
        for (auto s : block_sizes) X.push_back(Eigen::MatrixXd::Zero(s, s));
        auto put = [&](const SdpEntry& e, double scale) {
            X[e.block](e.i, e.j) += scale * e.v;
            if (e.i != e.j) X[e.block](e.j, e.i) += scale * e.v;
        };
        for (const auto& e : F0) put(e, -1.0);
        for (std::size_t l = 0; l < nvars; ++l)
            if (y[l] != 0.0)
                for (const auto& e : F[l]) put(e, y[l]);
        return X;
    }
};

enum class SolveStatus { optimal, near_optimal, infeasible, unbounded, numerical_issue, max_iter };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::near_optimal: return "near_optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::numerical_issue: return "numerical_issue";
        case SolveStatus::max_iter: return "max_iter";
    }
    return "unknown";
}

inline bool is_success(SolveStatus s) { return s == SolveStatus::optimal || s == SolveStatus::near_optimal; }

struct SolveReport {
    SolveStatus status = SolveStatus::numerical_issue;
    double primal = 0.0;  ///< moment-side objective
    double dual = 0.0;    ///< SOS-side objective
    double gap = 0.0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    int iterations = 0;
    std::vector<std::size_t> block_sizes;
    std::size_t rows_removed = 0;
    double time_ms = 0.0;
    std::vector<double> y;
    std::vector<double> w;
    std::vector<Eigen::MatrixXd> X;
    std::vector<Eigen::MatrixXd> Y;
    std::string message;

    std::size_t max_block() const {
        return block_sizes.empty() ? 0 : *std::max_element(block_sizes.begin(), block_sizes.end());
    }
};

inline double relative_gap(double p, double d) { return std::abs(p - d) / (1.0 + std::abs(p) + std::abs(d)); }

inline std::size_t default_psd_cap() {
    if (const char* env = std::getenv("RATSOS_PSD_CAP")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 3000;
}

struct SolveSettings {
    double tol = 1e-8;
    int max_iter = 200;
    std::size_t psd_cap = default_psd_cap();
    double regularization = 1e-10;
    bool kkt_fallback = true;  ///< full KKT LU when the structured solve is inaccurate
    bool dedup_rows = true;
    bool keep_matrices = true;
    bool verbose = false;
};

/// Drops duplicate equality rows (equal up to a positive or negative scale).
/// Returns the number of rows removed; throws when two copies disagree on the right-hand side.
inline std::size_t dedup_equalities(SdpStandardForm& sf, double tol = 1e-12) {
    struct Key {
        std::vector<std::pair<std::size_t, double>> t;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            std::size_t h = 1469598103934665603ULL;
            for (auto& [v, a] : k.t) {
                h ^= std::hash<std::size_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
                h ^= std::hash<double>{}(a) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
            }
            return h;
        }
    };
    std::unordered_map<Key, double, KeyHash> seen;
    std::vector<SparseRow> kept;
    std::size_t removed = 0;
    for (auto row : sf.E) {
        std::map<std::size_t, double> acc;
        for (auto [v, a] : row.terms) acc[v] += a;
        row.terms.clear();
        for (auto [v, a] : acc)
            if (a != 0.0) row.terms.emplace_back(v, a);
        if (row.terms.empty()) {
            if (std::abs(row.rhs) > tol) throw SolveError("equality row 0 = " + std::to_string(row.rhs) + " is infeasible");
            ++removed;
            continue;
        }
        const double lead = row.terms.front().second;
        Key k;
        for (auto [v, a] : row.terms) k.t.emplace_back(v, a / lead);
        const double rhs = row.rhs / lead;
        auto [it, fresh] = seen.try_emplace(std::move(k), rhs);
        if (!fresh) {
            if (std::abs(it->second - rhs) > tol * (1.0 + std::abs(rhs)))
                throw SolveError("duplicate equality rows with different right-hand sides");
            ++removed;
            continue;
        }
        kept.push_back(std::move(row));
    }
    sf.E = std::move(kept);
    return removed;
}

/// Drops equality rows that are numerically dependent on the others (column-pivoted QR of E').
/// Returns the number of rows removed.
inline std::size_t drop_dependent_equalities(SdpStandardForm& sf, double tol = 1e-10) {
    if (sf.E.size() < 2) return 0;
    std::vector<std::size_t> col(sf.nvars, SIZE_MAX);
    std::size_t nc = 0;
    for (const auto& row : sf.E)
        for (auto [v, a] : row.terms)
            if (col[v] == SIZE_MAX) col[v] = nc++;
    const auto m = static_cast<Eigen::Index>(sf.E.size());
    Eigen::MatrixXd Et = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nc), m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& row = sf.E[static_cast<std::size_t>(r)];
        double nrm = 0.0;
        for (auto [v, a] : row.terms) nrm += a * a;
        nrm = std::sqrt(nrm);
        for (auto [v, a] : row.terms) Et(static_cast<Eigen::Index>(col[v]), r) += a / nrm;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Et);
    qr.setThreshold(tol);
    const auto rank = qr.rank();
    if (rank == m) return 0;
    std::vector<std::size_t> keep;
    for (Eigen::Index t = 0; t < rank; ++t) keep.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()[t]));
    std::sort(keep.begin(), keep.end());
    {
        // Dropped rows must agree with the kept ones on the right-hand side.
        Eigen::MatrixXd K(Et.rows(), static_cast<Eigen::Index>(keep.size()));
        Eigen::VectorXd fk(static_cast<Eigen::Index>(keep.size()));
        auto scaled_rhs = [&](std::size_t r) {
            double nrm = 0.0;
            for (auto [v, a] : sf.E[r].terms) nrm += a * a;
            return sf.E[r].rhs / std::sqrt(nrm);
        };
        for (std::size_t t = 0; t < keep.size(); ++t) {
            K.col(static_cast<Eigen::Index>(t)) = Et.col(static_cast<Eigen::Index>(keep[t]));
            fk(static_cast<Eigen::Index>(t)) = scaled_rhs(keep[t]);
        }
        std::vector<std::size_t> dropped;
        for (std::size_t r = 0; r < sf.E.size(); ++r)
            if (!std::binary_search(keep.begin(), keep.end(), r)) dropped.push_back(r);
        Eigen::MatrixXd D(Et.rows(), static_cast<Eigen::Index>(dropped.size()));
        for (std::size_t t = 0; t < dropped.size(); ++t)
            D.col(static_cast<Eigen::Index>(t)) = Et.col(static_cast<Eigen::Index>(dropped[t]));
        const Eigen::MatrixXd coef = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(K).solve(D);
        const Eigen::VectorXd got = coef.transpose() * fk;
        const double scale = 1.0 + fk.cwiseAbs().maxCoeff();
        for (std::size_t t = 0; t < dropped.size(); ++t)
            if (std::abs(scaled_rhs(dropped[t]) - got(static_cast<Eigen::Index>(t))) > 1e-8 * scale)
                throw SolveError("inconsistent equality rows: the moment problem is infeasible");
    }
    std::vector<SparseRow> kept;
    for (auto r : keep) kept.push_back(std::move(sf.E[r]));
    const std::size_t removed = sf.E.size() - kept.size();
    sf.E = std::move(kept);
    return removed;
}

namespace ipm_detail {

struct Entry {
    std::uint32_t a, b;
    double w;
};

struct BlockVar {
    std::size_t var;
    std::size_t pos;  ///< position inside the variable's group
    std::vector<Entry> entries;
};

struct Block {
    std::size_t size = 0;
    std::size_t group = 0;
    std::vector<BlockVar> vars;
    std::vector<Entry> F0;
};

struct Scaling {
    Eigen::MatrixXd R, Rinv, Q;
    Eigen::VectorXd lambda;
};

inline void add_sym(Eigen::MatrixXd& M, const Entry& e, double s) {
    M(e.a, e.b) += s * e.w;
    if (e.a != e.b) M(e.b, e.a) += s * e.w;
}

inline double inner(const std::vector<Entry>& F, const Eigen::MatrixXd& Z) {
    double s = 0.0;
    for (const auto& e : F) s += e.a == e.b ? e.w * Z(e.a, e.a) : e.w * (Z(e.a, e.b) + Z(e.b, e.a));
    return s;
}

/// tr(U1 Q U2 Q) for symmetric units U = sym(e_a e_b').
inline double unit_product(const Entry& u, const Entry& v, const Eigen::MatrixXd& Q) {
    const auto a = u.a, b = u.b, c = v.a, d = v.b;
    double t;
    if (a != b && c != d)
        t = 2.0 * (Q(a, c) * Q(b, d) + Q(a, d) * Q(b, c));
    else if (a == b && c != d)
        t = 2.0 * Q(a, c) * Q(a, d);
    else if (a != b)
        t = 2.0 * Q(a, c) * Q(b, c);
    else
        t = Q(a, c) * Q(a, c);
    return u.w * v.w * t;
}

/// Largest step alpha <= 1/eps with S + alpha dS >= 0, where S is scaled to diag(lambda).
inline double max_step(const Eigen::VectorXd& lambda, const Eigen::MatrixXd& dS_scaled) {
    const Eigen::VectorXd is = lambda.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd T = is.asDiagonal() * dS_scaled * is.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (T + T.transpose()), Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues().minCoeff();
    return mn >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / mn;
}

}  // namespace ipm_detail

class InteriorPointSolver {
public:
    InteriorPointSolver(SdpStandardForm sf, SolveSettings settings) : sf_(std::move(sf)), set_(settings) {
        sf_.validate();
        if (sf_.total_psd_dim() > set_.psd_cap)
            throw SolveError("total PSD dimension " + std::to_string(sf_.total_psd_dim()) + " exceeds the cap " +
                             std::to_string(set_.psd_cap) +
                             "; export with --solver sdpa-export or raise RATSOS_PSD_CAP");
        if (set_.dedup_rows) removed_ = dedup_equalities(sf_) + drop_dependent_equalities(sf_);
        setup();
    }

    SolveReport solve();

private:
    using Mat = Eigen::MatrixXd;
    using Vec = Eigen::VectorXd;

    struct Group {
        std::vector<std::size_t> vars;
        std::vector<std::size_t> blocks;
        std::vector<std::size_t> local_rows;
        std::vector<std::size_t> coupling_rows;  ///< indices into coupling_
        Mat El, Ec;                              ///< local and coupling rows restricted to the group
        Mat M;                                   ///< unregularized, augmented Schur block
        double gamma = 0.0;                      ///< weight of the El'El augmentation
        Eigen::LLT<Mat> Mfac;
        Mat Zl, Zc;                               ///< L^{-1} El', L^{-1} Ec'
        Eigen::LDLT<Mat> Sfac;                    ///< local Schur block factor
        Mat SinvSlc;                              ///< S_LL^{-1} S_LC (columns: group coupling rows)
    };

    void setup();
    bool scale_blocks(const std::vector<Mat>& X, const std::vector<Mat>& Y);
    bool factor();
    bool ldlt_regularized(Eigen::LDLT<Mat>& fac, Mat& S) const;
    void solve_newton(const Vec& g, const Vec& re, Vec& dy, Vec& dv);
    void solve_factored(const Vec& g, const Vec& re, Vec& dy, Vec& dv);

    std::vector<Mat> apply_F(const Vec& y) const {
        std::vector<Mat> out;
        for (const auto& b : blocks_) {
            Mat M = Mat::Zero(b.size, b.size);
            for (const auto& bv : b.vars)
                if (y[bv.var] != 0.0)
                    for (const auto& e : bv.entries) ipm_detail::add_sym(M, e, y[bv.var]);
            out.push_back(std::move(M));
        }
        return out;
    }

    Vec adjoint(const std::vector<Mat>& Z) const {
        Vec out = Vec::Zero(n_);
        for (std::size_t k = 0; k < blocks_.size(); ++k)
            for (const auto& bv : blocks_[k].vars) out[bv.var] += ipm_detail::inner(bv.entries, Z[k]);
        return out;
    }

    Vec apply_E(const Vec& y) const {
        Vec out(sf_.E.size());
        for (std::size_t r = 0; r < sf_.E.size(); ++r) {
            double s = 0.0;
            for (auto [v, a] : sf_.E[r].terms) s += a * y[v];
            out[r] = s;
        }
        return out;
    }

    Vec apply_Et(const Vec& w) const {
        Vec out = Vec::Zero(n_);
        for (std::size_t r = 0; r < sf_.E.size(); ++r)
            for (auto [v, a] : sf_.E[r].terms) out[v] += a * w[r];
        return out;
    }

    SdpStandardForm sf_;
    SolveSettings set_;
    std::size_t removed_ = 0;
    std::size_t n_ = 0;
    std::vector<ipm_detail::Block> blocks_;
    std::vector<Group> groups_;
    std::vector<std::size_t> var_group_, var_pos_;
    std::vector<std::size_t> coupling_;  ///< row indices touching several groups
    Eigen::LDLT<Mat> Cfac_;
    Mat kkt_;                            ///< assembled KKT matrix, built only when the factored solve is inaccurate
    Eigen::PartialPivLU<Mat> kkt_lu_;
    bool kkt_ready_ = false;
    std::vector<ipm_detail::Scaling> scal_;
    Vec f_;
};

inline void InteriorPointSolver::setup() {
    n_ = sf_.nvars;
    const std::size_t B = sf_.block_sizes.size();
    blocks_.assign(B, {});
    for (std::size_t k = 0; k < B; ++k) blocks_[k].size = sf_.block_sizes[k];
    for (const auto& e : sf_.F0) blocks_[e.block].F0.push_back({e.i, e.j, e.v});
    for (std::size_t l = 0; l < n_; ++l) {
        std::map<std::size_t, std::vector<ipm_detail::Entry>> per;
        for (const auto& e : sf_.F[l])
            if (e.v != 0.0) per[e.block].push_back({e.i, e.j, e.v});
        for (auto& [b, es] : per) blocks_[b].vars.push_back({l, 0, std::move(es)});
    }

    // Union-find over variables sharing a block.
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& b : blocks_)
        for (std::size_t t = 1; t < b.vars.size(); ++t) {
            const auto r1 = find(b.vars[0].var), r2 = find(b.vars[t].var);
            if (r1 != r2) parent[std::max(r1, r2)] = std::min(r1, r2);
        }
    std::map<std::size_t, std::size_t> root_group;
    var_group_.assign(n_, 0);
    var_pos_.assign(n_, 0);
    for (std::size_t l = 0; l < n_; ++l) {
        auto [it, fresh] = root_group.try_emplace(find(l), groups_.size());
        if (fresh) groups_.emplace_back();
        var_group_[l] = it->second;
        var_pos_[l] = groups_[it->second].vars.size();
        groups_[it->second].vars.push_back(l);
    }
    for (std::size_t k = 0; k < B; ++k) {
        auto& b = blocks_[k];
        if (b.vars.empty()) continue;
        b.group = var_group_[b.vars.front().var];
        groups_[b.group].blocks.push_back(k);
        for (auto& bv : b.vars) bv.pos = var_pos_[bv.var];
    }

    f_.resize(sf_.E.size());
    for (std::size_t r = 0; r < sf_.E.size(); ++r) {
        f_[r] = sf_.E[r].rhs;
        std::set<std::size_t> gs;
        for (auto [v, a] : sf_.E[r].terms) gs.insert(var_group_[v]);
        if (gs.size() == 1) {
            groups_[*gs.begin()].local_rows.push_back(r);
        } else {
            const std::size_t ci = coupling_.size();
            coupling_.push_back(r);
            for (auto g : gs) groups_[g].coupling_rows.push_back(ci);
        }
    }
    for (auto& g : groups_) {
        const auto ng = static_cast<Eigen::Index>(g.vars.size());
        g.El = Mat::Zero(static_cast<Eigen::Index>(g.local_rows.size()), ng);
        for (std::size_t t = 0; t < g.local_rows.size(); ++t)
            for (auto [v, a] : sf_.E[g.local_rows[t]].terms) g.El(t, var_pos_[v]) += a;
        g.Ec = Mat::Zero(static_cast<Eigen::Index>(g.coupling_rows.size()), ng);
        const std::size_t self = static_cast<std::size_t>(&g - groups_.data());
        for (std::size_t t = 0; t < g.coupling_rows.size(); ++t)
            for (auto [v, a] : sf_.E[coupling_[g.coupling_rows[t]]].terms)
                if (var_group_[v] == self) g.Ec(t, var_pos_[v]) += a;
    }
}

inline SolveReport InteriorPointSolver::solve() {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    SolveReport rep;
    rep.block_sizes = sf_.block_sizes;
    rep.rows_removed = removed_;

    const std::size_t B = blocks_.size();
    const std::size_t m = sf_.E.size();
    std::size_t ntot = 0;
    for (const auto& b : blocks_) ntot += b.size;
    if (ntot == 0) throw SolveError("SDP has no PSD blocks");

    const Vec c = Eigen::Map<const Vec>(sf_.c.data(), static_cast<Eigen::Index>(n_));
    std::vector<Mat> F0(B);
    for (std::size_t k = 0; k < B; ++k) {
        F0[k] = Mat::Zero(blocks_[k].size, blocks_[k].size);
        for (const auto& e : blocks_[k].F0) ipm_detail::add_sym(F0[k], e, 1.0);
    }
    double normF0 = 0.0;
    for (const auto& M : F0) normF0 += M.squaredNorm();
    normF0 = std::sqrt(normF0);
    const double normc = c.norm(), normf = f_.norm();

    // Start point X = eta I, Y = xi I.
    std::vector<Mat> X(B), Y(B);
    for (std::size_t k = 0; k < B; ++k) {
        const double s = static_cast<double>(blocks_[k].size);
        double xi = std::max(10.0, std::sqrt(s)), eta = std::max({10.0, std::sqrt(s), std::sqrt(F0[k].squaredNorm())});
        for (const auto& bv : blocks_[k].vars) {
            double fn = 0.0;
            for (const auto& e : bv.entries) fn += (e.a == e.b ? 1.0 : 2.0) * e.w * e.w;
            fn = std::sqrt(fn);
            xi = std::max(xi, s * (1.0 + std::abs(c[bv.var])) / (1.0 + fn));
            eta = std::max(eta, fn);
        }
        X[k] = eta * Mat::Identity(blocks_[k].size, blocks_[k].size);
        Y[k] = xi * Mat::Identity(blocks_[k].size, blocks_[k].size);
    }
    Vec y = Vec::Zero(static_cast<Eigen::Index>(n_));
    Vec w = Vec::Zero(static_cast<Eigen::Index>(m));

    struct Best {
        double score = std::numeric_limits<double>::infinity();
        double pobj = 0, dobj = 0, gap = 0, pinf = 0, dinf = 0;
        int iter = 0;
        Vec y, w;
        std::vector<Mat> X, Y;
    } best;

    auto finish = [&](SolveStatus st, const std::string& msg) {
        rep.status = st;
        rep.message = msg;
        rep.primal = best.pobj;
        rep.dual = best.dobj;
        rep.gap = best.gap;
        rep.primal_infeasibility = best.pinf;
        rep.dual_infeasibility = best.dinf;
        rep.y.assign(best.y.data(), best.y.data() + best.y.size());
        rep.w.assign(best.w.data(), best.w.data() + best.w.size());
        if (set_.keep_matrices) {
            rep.X = best.X;
            rep.Y = best.Y;
        }
        rep.time_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
        return rep;
    };
    auto near_ok = [&] { return std::max({best.gap, best.pinf, best.dinf}) <= std::max(1e-5, 1000.0 * set_.tol); };

    int stall = 0;
    double prev_score = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= set_.max_iter; ++it) {
        rep.iterations = it;
        // Residuals and objectives.
        std::vector<Mat> P = apply_F(y);
        double pn = 0.0;
        for (std::size_t k = 0; k < B; ++k) {
            P[k] -= F0[k] + X[k];
            pn += P[k].squaredNorm();
        }
        pn = std::sqrt(pn);
        const Vec Ey = apply_E(y);
        const Vec re = f_ - Ey;
        const Vec rd = c - adjoint(Y) - apply_Et(w);
        double dobj = sf_.c0 + f_.dot(w), xy = 0.0;
        for (std::size_t k = 0; k < B; ++k) {
            dobj += F0[k].cwiseProduct(Y[k]).sum();
            xy += X[k].cwiseProduct(Y[k]).sum();
        }
        const double pobj = sf_.c0 + c.dot(y);
        const double mu = xy / static_cast<double>(ntot);
        const double gap = relative_gap(pobj, dobj);
        const double pinf = std::max(pn / (1.0 + normF0), re.norm() / (1.0 + normf));
        const double dinf = rd.norm() / (1.0 + normc);
        const double score = std::max({gap, pinf, dinf});
        if (set_.verbose)
            std::fprintf(stderr, "it %3d  p % .10e  d % .10e  gap %.2e  pinf %.2e  dinf %.2e  mu %.2e\n", it, pobj, dobj,
                         gap, pinf, dinf, mu);
        if (score < best.score) {
            best = {score, pobj, dobj, gap, pinf, dinf, it, y, w, X, Y};
        }
        if (score <= set_.tol) return finish(SolveStatus::optimal, "converged");
        if (y.cwiseAbs().maxCoeff() > 1e12 && pinf < 1e-3) return finish(SolveStatus::unbounded, "moment side diverges");
        double ymax = 0.0;
        for (const auto& M : Y) ymax = std::max(ymax, M.diagonal().maxCoeff());
        if (ymax > 1e12 && dinf < 1e-3) return finish(SolveStatus::infeasible, "SOS side diverges");
        if (it == set_.max_iter) break;
        if (score > 0.5 * prev_score) {
            if (++stall >= (near_ok() ? 5 : 20)) break;
        } else {
            stall = 0;
        }
        prev_score = std::min(prev_score, score);

        if (!scale_blocks(X, Y)) break;
        if (!factor()) break;

        // Terms shared by predictor and corrector: g = F*(K - Q P Q) - rd.
        std::vector<Mat> QPQ(B);
        for (std::size_t k = 0; k < B; ++k) QPQ[k] = scal_[k].Q * P[k] * scal_[k].Q;
        const Vec base = -adjoint(QPQ) - rd;

        auto direction = [&](const std::vector<Mat>& H, Vec& dy, Vec& dw, std::vector<Mat>& dX, std::vector<Mat>& dY) {
            std::vector<Mat> K(B);
            for (std::size_t k = 0; k < B; ++k) K[k] = scal_[k].Rinv.transpose() * H[k] * scal_[k].Rinv;
            const Vec g = adjoint(K) + base;
            Vec dv;
            solve_newton(g, re, dy, dv);
            dw = -dv;
            dX = apply_F(dy);
            for (std::size_t k = 0; k < B; ++k) {
                dX[k] += P[k];
                dX[k] = 0.5 * (dX[k] + dX[k].transpose()).eval();
                dY[k] = K[k] - scal_[k].Q * dX[k] * scal_[k].Q;
                dY[k] = 0.5 * (dY[k] + dY[k].transpose()).eval();
            }
        };
        auto steps = [&](const std::vector<Mat>& dX, const std::vector<Mat>& dY, std::vector<Mat>& dXs,
                         std::vector<Mat>& dYs, double& ap, double& ad) {
            ap = ad = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < B; ++k) {
                dXs[k] = scal_[k].Rinv * dX[k] * scal_[k].Rinv.transpose();
                dYs[k] = scal_[k].R.transpose() * dY[k] * scal_[k].R;
                ap = std::min(ap, ipm_detail::max_step(scal_[k].lambda, dXs[k]));
                ad = std::min(ad, ipm_detail::max_step(scal_[k].lambda, dYs[k]));
            }
        };

        // Predictor.
        std::vector<Mat> H(B), dX(B), dY(B), dXs(B), dYs(B);
        for (std::size_t k = 0; k < B; ++k) H[k] = -Mat(scal_[k].lambda.asDiagonal());
        Vec dy, dw;
        direction(H, dy, dw, dX, dY);
        if (!dy.allFinite()) break;
        double ap, ad;
        steps(dX, dY, dXs, dYs, ap, ad);
        ap = std::min(1.0, ap);
        ad = std::min(1.0, ad);
        double xy_aff = 0.0;
        for (std::size_t k = 0; k < B; ++k) xy_aff += (X[k] + ap * dX[k]).cwiseProduct(Y[k] + ad * dY[k]).sum();
        const double mu_aff = xy_aff / static_cast<double>(ntot);
        double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

        // Corrector.
        for (std::size_t k = 0; k < B; ++k) {
            const Vec& lam = scal_[k].lambda;
            Mat rhs = -(dXs[k] * dYs[k]);
            rhs = 0.5 * (rhs + rhs.transpose()).eval();
            for (Eigen::Index i = 0; i < lam.size(); ++i) rhs(i, i) += sigma * mu - lam[i] * lam[i];
            for (Eigen::Index i = 0; i < lam.size(); ++i)
                for (Eigen::Index j = 0; j < lam.size(); ++j) rhs(i, j) *= 2.0 / (lam[i] + lam[j]);
            H[k] = std::move(rhs);
        }
        direction(H, dy, dw, dX, dY);
        if (!dy.allFinite()) break;
        steps(dX, dY, dXs, dYs, ap, ad);
        const double gamma = 0.9 + 0.09 * std::min({1.0, ap, ad});
        ap = std::min(1.0, gamma * ap);
        ad = std::min(1.0, gamma * ad);
        if (ap < 1e-12 && ad < 1e-12) break;
        y += ap * dy;
        for (std::size_t k = 0; k < B; ++k) {
            X[k] += ap * dX[k];
            Y[k] += ad * dY[k];
        }
        w += ad * dw;
    }
    if (near_ok()) return finish(SolveStatus::near_optimal, "stopped near optimum");
    if (rep.iterations >= set_.max_iter) return finish(SolveStatus::max_iter, "iteration limit reached");
    return finish(SolveStatus::numerical_issue, "solver stalled");
}

inline bool InteriorPointSolver::scale_blocks(const std::vector<Mat>& X, const std::vector<Mat>& Y) {
    scal_.resize(blocks_.size());
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
        Eigen::LLT<Mat> lx(X[k]), ly(Y[k]);
        if (lx.info() != Eigen::Success || ly.info() != Eigen::Success) return false;
        const Mat LX = lx.matrixL(), LY = ly.matrixL();
        Eigen::JacobiSVD<Mat> svd(LY.transpose() * LX, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vec lam = svd.singularValues();
        if (!(lam.minCoeff() > 0.0) || !lam.allFinite()) return false;
        const Mat& V = svd.matrixV();
        auto& s = scal_[k];
        s.lambda = lam;
        s.R = LX * V * lam.cwiseSqrt().cwiseInverse().asDiagonal();
        const Mat T = LX.transpose().triangularView<Eigen::Upper>().solve(V);
        s.Rinv = (T * lam.cwiseSqrt().asDiagonal()).transpose();
        s.Q = s.Rinv.transpose() * s.Rinv;
        s.Q = 0.5 * (s.Q + s.Q.transpose()).eval();
    }
    return true;
}

/// LDLT of a PSD Schur block; a relative diagonal shift is added only when a pivot is non-positive.
inline bool InteriorPointSolver::ldlt_regularized(Eigen::LDLT<Mat>& fac, Mat& S) const {
    const double dmax = std::max(1.0, S.diagonal().cwiseAbs().maxCoeff());
    double delta = 0.0;
    for (int attempt = 0; attempt < 7; ++attempt) {
        if (delta > 0.0) S.diagonal().array() += delta;
        fac.compute(S);
        if (fac.info() == Eigen::Success && (fac.vectorD().array() > 1e-14 * dmax).all()) return true;
        if (delta > 0.0) S.diagonal().array() -= delta;
        delta = delta == 0.0 ? set_.regularization * dmax : delta * 100.0;
    }
    return fac.info() == Eigen::Success;
}

inline bool InteriorPointSolver::factor() {
    kkt_ready_ = false;
    const std::size_t nc = coupling_.size();
    Mat C = Mat::Zero(static_cast<Eigen::Index>(nc), static_cast<Eigen::Index>(nc));
    for (auto& g : groups_) {
        const auto ng = static_cast<Eigen::Index>(g.vars.size());
        Mat M = Mat::Zero(ng, ng);
        for (auto bk : g.blocks) {
            const auto& b = blocks_[bk];
            const Mat& Q = scal_[bk].Q;
            const auto sz = static_cast<double>(b.size);
            std::vector<double> suffix(b.vars.size() + 1, 0.0);
            for (std::size_t t = b.vars.size(); t-- > 0;)
                suffix[t] = suffix[t + 1] + static_cast<double>(b.vars[t].entries.size());
            for (std::size_t t1 = 0; t1 < b.vars.size(); ++t1) {
                const auto& v1 = b.vars[t1];
                const double n1 = static_cast<double>(v1.entries.size());
                const double via_units = n1 * suffix[t1];
                const double via_product = std::min(n1 * sz * sz, 2.0 * sz * sz * sz) + suffix[t1];
                if (via_units <= via_product) {
                    for (std::size_t t2 = t1; t2 < b.vars.size(); ++t2) {
                        const auto& v2 = b.vars[t2];
                        double s = 0.0;
                        for (const auto& e1 : v1.entries)
                            for (const auto& e2 : v2.entries) s += ipm_detail::unit_product(e1, e2, Q);
                        M(v1.pos, v2.pos) += s;
                        if (v1.pos != v2.pos) M(v2.pos, v1.pos) += s;
                    }
                    continue;
                }
                // G = Q F1 Q, then <G, F2> for every later variable.
                Mat G;
                if (n1 * sz * sz <= 2.0 * sz * sz * sz) {
                    G = Mat::Zero(b.size, b.size);
                    for (const auto& e : v1.entries) {
                        if (e.a == e.b) {
                            G.noalias() += e.w * Q.col(e.a) * Q.col(e.a).transpose();
                        } else {
                            G.noalias() += e.w * Q.col(e.a) * Q.col(e.b).transpose();
                            G.noalias() += e.w * Q.col(e.b) * Q.col(e.a).transpose();
                        }
                    }
                } else {
                    Mat F = Mat::Zero(b.size, b.size);
                    for (const auto& e : v1.entries) ipm_detail::add_sym(F, e, 1.0);
                    G = Q * F * Q;
                }
                for (std::size_t t2 = t1; t2 < b.vars.size(); ++t2) {
                    const auto& v2 = b.vars[t2];
                    const double s = ipm_detail::inner(v2.entries, G);
                    M(v1.pos, v2.pos) += s;
                    if (v1.pos != v2.pos) M(v2.pos, v1.pos) += s;
                }
            }
        }
        // Augment with gamma El'El: exact because El dy is fixed, and makes M definite on the local null space.
        g.gamma = 0.0;
        if (g.El.rows() > 0) {
            const Mat EtE = g.El.transpose() * g.El;
            const double em = EtE.diagonal().maxCoeff();
            if (em > 0.0) {
                g.gamma = std::max(1.0, ng ? M.diagonal().cwiseAbs().maxCoeff() : 1.0) / em;
                M += g.gamma * EtE;
            }
        }
        double delta = set_.regularization * std::max(1.0, ng ? M.diagonal().cwiseAbs().maxCoeff() : 1.0);
        g.Mfac.compute(M);
        bool ok = g.Mfac.info() == Eigen::Success;
        for (int attempt = 0; attempt < 6 && !ok; ++attempt, delta *= 100.0) {
            g.Mfac.compute(M + delta * Mat::Identity(ng, ng));
            ok = g.Mfac.info() == Eigen::Success;
        }
        g.M = std::move(M);
        if (!ok) return false;
        g.Zl = g.Mfac.matrixL().solve(g.El.transpose());
        g.Zc = g.Mfac.matrixL().solve(g.Ec.transpose());
        Mat Sll = g.Zl.transpose() * g.Zl;
        const Mat Slc = g.Zl.transpose() * g.Zc;
        if (Sll.rows() > 0) {
            if (!ldlt_regularized(g.Sfac, Sll)) return false;
            g.SinvSlc = g.Sfac.solve(Slc);
        } else {
            g.SinvSlc = Mat::Zero(0, Slc.cols());
        }
        const Mat Cg = g.Zc.transpose() * g.Zc - Slc.transpose() * g.SinvSlc;
        for (std::size_t a = 0; a < g.coupling_rows.size(); ++a)
            for (std::size_t b = 0; b < g.coupling_rows.size(); ++b)
                C(g.coupling_rows[a], g.coupling_rows[b]) += Cg(a, b);
    }
    if (nc > 0) {
        if (!ldlt_regularized(Cfac_, C)) return false;
    }
    return true;
}

/// Factored solve with iterative refinement against the unaugmented system M dy + E' dv = g, E dy = re.
inline void InteriorPointSolver::solve_newton(const Vec& g0, const Vec& re, Vec& dy, Vec& dv) {
    // The factored solve works on M + gamma El'El; residuals of the original system map to it exactly.
    auto augment = [&](const Vec& r1, const Vec& r2) {
        Vec out = r1;
        for (const auto& G : groups_) {
            if (G.gamma == 0.0) continue;
            Vec rl(static_cast<Eigen::Index>(G.local_rows.size()));
            for (std::size_t t = 0; t < G.local_rows.size(); ++t) rl[t] = r2[G.local_rows[t]];
            const Vec add = G.gamma * (G.El.transpose() * rl);
            for (std::size_t t = 0; t < G.vars.size(); ++t) out[G.vars[t]] += add[t];
        }
        return out;
    };
    auto residual = [&](const Vec& y, const Vec& v, Vec& r1, Vec& r2) {
        r1 = g0 - apply_Et(v);
        for (const auto& G : groups_) {
            Vec d(static_cast<Eigen::Index>(G.vars.size()));
            for (std::size_t t = 0; t < G.vars.size(); ++t) d[t] = y[G.vars[t]];
            Vec Md = G.M * d;
            if (G.gamma != 0.0) Md -= G.gamma * (G.El.transpose() * (G.El * d));
            for (std::size_t t = 0; t < G.vars.size(); ++t) r1[G.vars[t]] -= Md[t];
        }
        r2 = re - apply_E(y);
        return std::max(r1.lpNorm<Eigen::Infinity>() / (1.0 + g0.lpNorm<Eigen::Infinity>()),
                        r2.size() ? r2.lpNorm<Eigen::Infinity>() / (1.0 + re.lpNorm<Eigen::Infinity>()) : 0.0);
    };
    solve_factored(augment(g0, re), re, dy, dv);
    double prev = std::numeric_limits<double>::infinity(), last = 0.0;
    Vec r1, r2;
    for (int pass = 0; pass < 6; ++pass) {
        const double res = residual(dy, dv, r1, r2);
        last = res;
        if (!(res > 1e-15) || !(res < 0.5 * prev) || pass == 5) break;
        prev = res;
        Vec cy, cv;
        solve_factored(augment(r1, r2), r2, cy, cv);
        if (!cy.allFinite() || !cv.allFinite()) break;
        dy += cy;
        dv += cv;
    }
    if (!(last > 1e-10) || !set_.kkt_fallback) return;
    // The range-space solve lost accuracy: fall back to a pivoted LU of the full KKT matrix.
    const auto n = static_cast<Eigen::Index>(n_), m = static_cast<Eigen::Index>(sf_.E.size());
    if (!kkt_ready_) {
        kkt_ = Mat::Zero(n + m, n + m);
        for (const auto& G : groups_) {
            Mat Mraw = G.M;
            if (G.gamma != 0.0) Mraw -= G.gamma * (G.El.transpose() * G.El);
            for (std::size_t a = 0; a < G.vars.size(); ++a)
                for (std::size_t b = 0; b < G.vars.size(); ++b) kkt_(G.vars[a], G.vars[b]) = Mraw(a, b);
        }
        for (std::size_t r = 0; r < sf_.E.size(); ++r)
            for (auto [v, a] : sf_.E[r].terms) {
                kkt_(n + static_cast<Eigen::Index>(r), v) += a;
                kkt_(v, n + static_cast<Eigen::Index>(r)) += a;
            }
        kkt_lu_.compute(kkt_);
        kkt_ready_ = true;
    }
    Vec rhs(n + m);
    rhs << g0, re;
    Vec z(n + m);
    z << dy, dv;
    for (int pass = 0; pass < 3 && z.allFinite(); ++pass) z += kkt_lu_.solve(Vec(rhs - kkt_ * z));
    if (!z.allFinite()) return;
    const Vec zy = z.head(n), zv = z.tail(m);
    if (!(residual(zy, zv, r1, r2) < last)) return;
    dy = zy;
    dv = zv;
}

inline void InteriorPointSolver::solve_factored(const Vec& g, const Vec& re, Vec& dy, Vec& dv) {
    const std::size_t nc = coupling_.size();
    dy = Vec::Zero(static_cast<Eigen::Index>(n_));
    dv = Vec::Zero(static_cast<Eigen::Index>(sf_.E.size()));
    std::vector<Vec> u(groups_.size()), a(groups_.size());
    Vec tC = Vec::Zero(static_cast<Eigen::Index>(nc));
    for (std::size_t r = 0; r < nc; ++r) tC[r] = -re[coupling_[r]];
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        auto& G = groups_[gi];
        Vec gg(static_cast<Eigen::Index>(G.vars.size()));
        for (std::size_t t = 0; t < G.vars.size(); ++t) gg[t] = g[G.vars[t]];
        u[gi] = G.Mfac.solve(gg);
        Vec tL = G.El * u[gi];
        for (std::size_t t = 0; t < G.local_rows.size(); ++t) tL[t] -= re[G.local_rows[t]];
        const Vec tc = G.Ec * u[gi];
        for (std::size_t t = 0; t < G.coupling_rows.size(); ++t) tC[G.coupling_rows[t]] += tc[t];
        a[gi] = tL.size() ? Vec(G.Sfac.solve(tL)) : Vec(tL);
        if (tL.size()) {
            const Vec corr = G.SinvSlc.transpose() * tL;
            for (std::size_t t = 0; t < G.coupling_rows.size(); ++t) tC[G.coupling_rows[t]] -= corr[t];
        }
    }
    Vec vC = nc ? Vec(Cfac_.solve(tC)) : Vec(tC);
    for (std::size_t r = 0; r < nc; ++r) dv[coupling_[r]] = vC[r];
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
        auto& G = groups_[gi];
        Vec vc(static_cast<Eigen::Index>(G.coupling_rows.size()));
        for (std::size_t t = 0; t < G.coupling_rows.size(); ++t) vc[t] = vC[G.coupling_rows[t]];
        Vec vl = a[gi];
        if (vl.size()) vl -= G.SinvSlc * vc;
        for (std::size_t t = 0; t < G.local_rows.size(); ++t) dv[G.local_rows[t]] = vl[t];
        Vec rhs(static_cast<Eigen::Index>(G.vars.size()));
        for (std::size_t t = 0; t < G.vars.size(); ++t) rhs[t] = g[G.vars[t]];
        rhs -= G.El.transpose() * vl + G.Ec.transpose() * vc;
        const Vec d = G.Mfac.solve(rhs);
        for (std::size_t t = 0; t < G.vars.size(); ++t) dy[G.vars[t]] = d[t];
    }
}

inline SolveReport solve_internal(const SdpStandardForm& sf, const SolveSettings& settings = {}) {
    InteriorPointSolver solver(sf, settings);
    return solver.solve();
}

}  // namespace ratsos
