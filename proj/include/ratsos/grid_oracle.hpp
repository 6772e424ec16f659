#pragma once

/**
 * @file grid_oracle.hpp
 * @brief Sampling upper bound for sum-of-ratios problems.
 *
 * Every value returned comes from an explicit feasible point, so it bounds
 * the true minimum from above and brackets relaxation lower bounds. Small
 * problems are gridded exhaustively; larger ones use seeded random starts
 * plus points on the main diagonal. The best samples are then polished by
 * projected coordinate descent. Ball and sphere constraints are enforced by
 * (cyclic) radial projection; other constraints only filter samples.
 */

#include <cmath>
#include <limits>

#include "ratsos/corrsparse.hpp"
#include "ratsos/generators.hpp"

namespace ratsos {

struct GridOracleResult {
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> best_point;
    std::size_t samples = 0;
};

struct GridOracleOptions {
    int resolution = 21;
    int refine_iters = 200;
    std::uint64_t seed = 0;
    std::size_t max_grid_vars = 4;
    std::size_t random_samples = 20000;
    std::size_t polish_count = 8;
    double default_half_width = 4.0;
    double feas_tol = 1e-8;
};

namespace detail {

class OracleEvaluator {
public:
    explicit OracleEvaluator(const SrfoProblem& prob, double feas_tol)
        : prob_(prob.as_minimization()), feas_tol_(feas_tol) {
        for (std::size_t j = 0; j < prob_.nconstraints(); ++j)
            if (auto b = as_ball(prob_.constraints[j], j)) {
                (prob_.constraints[j].is_equality() ? spheres_ : balls_).push_back(std::move(*b));
            }
    }

    const SrfoProblem& problem() const { return prob_; }

    double half_width(std::size_t v, double fallback) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto* set : {&spheres_, &balls_})
            for (const auto& b : *set)
                if (std::binary_search(b.vars.begin(), b.vars.end(), v)) best = std::min(best, b.radius_sq);
        return std::isfinite(best) ? std::sqrt(best) : fallback;
    }

    /// Cyclic radial projection onto all recognized spheres and balls.
    void project(std::vector<double>& x) const {
        for (int round = 0; round < 200; ++round) {
            bool moved = false;
            for (const auto& s : spheres_) moved |= radial(x, s, true);
            for (const auto& b : balls_) moved |= radial(x, b, false);
            if (!moved) break;
        }
    }

    /// Objective in minimization form, or +inf when x is infeasible or a denominator vanishes.
    double value(const std::vector<double>& x) const {
        if (prob_.max_violation(x) > feas_tol_) return std::numeric_limits<double>::infinity();
        double s = 0.0;
        for (const auto& r : prob_.ratios) {
            const double q = r.den.evaluate(x);
            if (!(q > 1e-14)) return std::numeric_limits<double>::infinity();
            s += r.num.evaluate(x) / q;
        }
        return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
    }

private:
    static bool radial(std::vector<double>& x, const BallBound& b, bool exact) {
        double ss = 0.0;
        for (auto v : b.vars) ss += x[v] * x[v];
        const double target = b.radius_sq;
        if (!exact && ss <= target) return false;
        if (std::abs(ss - target) <= 1e-14 * std::max(1.0, target)) return false;
        if (ss == 0.0) {
            const double t = std::sqrt(target / static_cast<double>(b.vars.size()));
            for (auto v : b.vars) x[v] = t;
            return true;
        }
        const double f = std::sqrt(target / ss);
        for (auto v : b.vars) x[v] *= f;
        return true;
    }

    SrfoProblem prob_;
    double feas_tol_;
    std::vector<BallBound> spheres_, balls_;
};

inline bool lex_less(const std::vector<double>& a, const std::vector<double>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace detail

/**
 * Upper bound on the minimum of the problem's minimization form (numerators
 * negated for maximization problems).
 */
inline GridOracleResult grid_oracle(const SrfoProblem& prob, const GridOracleOptions& opt) {
    if (opt.resolution < 2) throw DimensionError("grid resolution must be at least 2");
    detail::OracleEvaluator ev(prob, opt.feas_tol);
    const std::size_t n = prob.nvars();
    std::vector<double> hw(n);
    for (std::size_t v = 0; v < n; ++v) hw[v] = ev.half_width(v, opt.default_half_width);

    struct Cand {
        double val;
        std::vector<double> x;
    };
    std::vector<Cand> top;
    GridOracleResult res;
    auto consider = [&](std::vector<double> x) {
        ev.project(x);
        ++res.samples;
        const double f = ev.value(x);
        if (!std::isfinite(f)) return;
        Cand c{f, std::move(x)};
        auto better = [](const Cand& a, const Cand& b) {
            return a.val < b.val || (a.val == b.val && detail::lex_less(a.x, b.x));
        };
        auto pos = std::lower_bound(top.begin(), top.end(), c, better);
        if (static_cast<std::size_t>(pos - top.begin()) < opt.polish_count) {
            top.insert(pos, std::move(c));
            if (top.size() > opt.polish_count) top.pop_back();
        }
    };
    auto axis = [&](std::size_t v, int t) {
        return -hw[v] + 2.0 * hw[v] * static_cast<double>(t) / static_cast<double>(opt.resolution - 1);
    };

    if (n <= opt.max_grid_vars) {
        std::vector<int> idx(n, 0);
        for (;;) {
            std::vector<double> x(n);
            for (std::size_t v = 0; v < n; ++v) x[v] = axis(v, idx[v]);
            consider(std::move(x));
            std::size_t v = 0;
            while (v < n && ++idx[v] == opt.resolution) idx[v++] = 0;
            if (v == n) break;
        }
    } else {
        Rng rng(opt.seed);
        for (std::size_t s = 0; s < opt.random_samples; ++s) {
            std::vector<double> x(n);
            for (std::size_t v = 0; v < n; ++v) x[v] = rng.uniform(-hw[v], hw[v]);
            consider(std::move(x));
        }
    }
    for (int t = 0; t < opt.resolution; ++t) {
        std::vector<double> x(n);
        for (std::size_t v = 0; v < n; ++v) x[v] = axis(v, t);
        consider(std::move(x));
    }
    if (top.empty()) throw InfeasibleSampleError("grid oracle found no feasible sample for " + prob.name);

    for (auto& c : top) {
        double h = 0.1 * *std::max_element(hw.begin(), hw.end());
        for (int it = 0; it < opt.refine_iters && h > 1e-12; ++it) {
            bool improved = false;
            for (std::size_t v = 0; v < n; ++v)
                for (double dir : {1.0, -1.0}) {
                    std::vector<double> y = c.x;
                    y[v] += dir * h;
                    ev.project(y);
                    ++res.samples;
                    const double f = ev.value(y);
                    if (f < c.val) {
                        c.val = f;
                        c.x = std::move(y);
                        improved = true;
                        break;
                    }
                }
            if (!improved) h *= 0.5;
        }
        if (c.val < res.best_value || (c.val == res.best_value && detail::lex_less(c.x, res.best_point))) {
            res.best_value = c.val;
            res.best_point = c.x;
        }
    }
    return res;
}

inline GridOracleResult grid_oracle(const SrfoProblem& prob, int resolution, int refine_iters) {
    GridOracleOptions opt;
    opt.resolution = resolution;
    opt.refine_iters = refine_iters;
    return grid_oracle(prob, opt);
}

}  // namespace ratsos
