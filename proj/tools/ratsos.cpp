// ratsos command-line front end: solve, analyze, gen, bench, read-solution.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ratsos/ratsos.hpp"

using json = nlohmann::ordered_json;
using namespace ratsos;

namespace {

enum ExitCode : int {
    exit_ok = 0,
    exit_not_solved = 1,
    exit_usage = 2,
    exit_parse = 3,
    exit_io = 4,
    exit_dimension = 5,
    exit_clique = 6,
    exit_build = 7,
    exit_solve = 8,
    exit_sample = 9,
    exit_internal = 10,
};

struct UsageError : Error {
    using Error::Error;
};

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const UsageError*>(&e)) return exit_usage;
    if (dynamic_cast<const ParseError*>(&e)) return exit_parse;
    if (dynamic_cast<const IoError*>(&e)) return exit_io;
    if (dynamic_cast<const DimensionError*>(&e)) return exit_dimension;
    if (dynamic_cast<const CliqueError*>(&e)) return exit_clique;
    if (dynamic_cast<const BuildError*>(&e)) return exit_build;
    if (dynamic_cast<const SolveError*>(&e)) return exit_solve;
    if (dynamic_cast<const InfeasibleSampleError*>(&e)) return exit_sample;
    return exit_internal;
}

const char* error_class(int code) {
    switch (code) {
        case exit_usage: return "usage";
        case exit_parse: return "parse";
        case exit_io: return "io";
        case exit_dimension: return "dimension";
        case exit_clique: return "clique";
        case exit_build: return "build";
        case exit_solve: return "solve";
        case exit_sample: return "sample";
        default: return "internal";
    }
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json histogram_json(const SizeHistogram& h) {
    json a = json::array();
    for (auto [size, count] : h) a.push_back({{"size", size}, {"count", count}});
    return a;
}

std::vector<std::size_t> one_based(const std::vector<std::size_t>& order) {
    std::vector<std::size_t> out;
    for (auto i : order) out.push_back(i + 1);
    return out;
}

/// "K" or "K1..K2".
std::pair<int, int> parse_order_range(const std::string& s) {
    auto to_int = [&](const std::string& t) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(t, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos == 0 || pos != t.size()) throw UsageError("invalid order range '" + s + "'");
        return v;
    };
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
        const int k = to_int(s);
        return {k, k};
    }
    const int a = to_int(s.substr(0, dots)), b = to_int(s.substr(dots + 2));
    if (a > b) throw UsageError("empty order range '" + s + "'");
    return {a, b};
}

std::vector<std::size_t> parse_ratio_order(const std::vector<std::size_t>& given, std::size_t nratios) {
    if (given.empty()) return {};
    if (given.size() != nratios)
        throw UsageError("--ratio-order needs " + std::to_string(nratios) + " entries, got " +
                         std::to_string(given.size()));
    std::vector<std::size_t> out;
    std::vector<bool> seen(nratios, false);
    for (auto i : given) {
        if (i < 1 || i > nratios || seen[i - 1]) throw UsageError("--ratio-order must be a permutation of 1.." +
                                                                  std::to_string(nratios));
        seen[i - 1] = true;
        out.push_back(i - 1);
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text;
    if (!f) throw IoError("write failed for " + path);
}

std::string sdpa_path_for(const std::string& out, const SrfoProblem& prob, Method m, int k, bool sweep) {
    if (out.empty()) return prob.name + "_" + to_string(m) + "_k" + std::to_string(k) + ".dat-s";
    if (!sweep) return out;
    const auto dot = out.rfind('.');
    const auto slash = out.find_last_of('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    const std::string suffix = "_k" + std::to_string(k);
    return has_ext ? out.substr(0, dot) + suffix + out.substr(dot) : out + suffix;
}

json result_json(const RunResult& r, const std::vector<std::size_t>& ratio_order) {
    json j;
    j["schema"] = 1;
    j["problem"] = r.problem;
    j["method"] = to_string(r.method);
    j["k"] = r.order;
    j["sense"] = r.maximize ? "max" : "min";
    if (!ratio_order.empty()) j["ratio_order"] = one_based(ratio_order);
    j["bound"] = number(r.bound);
    j["primal"] = number(r.primal);
    j["dual"] = number(r.dual);
    j["gap"] = number(r.gap);
    j["status"] = to_string(r.status);
    j["iterations"] = r.iterations;
    j["block_size_histogram"] = histogram_json(r.block_size_histogram);
    j["certified"] = r.certified;
    j["time_ms"] = r.time_ms();
    j["build_ms"] = r.build_ms;
    j["solve_ms"] = r.solve_ms;
    return j;
}

json export_json(const SrfoProblem& prob, const RelaxationSpec& spec, const ExportResult& e) {
    json j;
    j["schema"] = 1;
    j["problem"] = prob.name;
    j["method"] = to_string(spec.method);
    j["k"] = spec.order;
    j["sense"] = prob.maximize ? "max" : "min";
    if (!spec.ratio_order.empty()) j["ratio_order"] = one_based(spec.ratio_order);
    j["bound"] = nullptr;
    j["primal"] = nullptr;
    j["dual"] = nullptr;
    j["gap"] = nullptr;
    j["status"] = "exported";
    j["sdpa_file"] = e.path;
    j["objective_offset"] = e.objective_offset;
    j["block_size_histogram"] = histogram_json(e.block_size_histogram);
    j["certified"] = false;
    j["time_ms"] = e.build_ms;
    return j;
}

json error_json(const std::string& problem, Method m, int k, int code, const std::string& what) {
    json j;
    j["schema"] = 1;
    j["problem"] = problem;
    j["method"] = to_string(m);
    j["k"] = k;
    j["status"] = "error";
    j["error_class"] = error_class(code);
    j["error"] = what;
    return j;
}

/// Runs f(0..n-1) on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F f) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
        });
    for (auto& th : pool) th.join();
}

std::size_t default_jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------- solve

struct SolveOptions {
    std::string file;
    std::string method = "dense";
    int order = 0;
    std::string orders;
    std::vector<std::size_t> ratio_order;
    std::string solver = "internal";
    double tol = 1e-8;
    int max_iter = 200;
    double rank_tol = 1e-6;
    bool maximize = false;
    std::string out;
    std::size_t jobs = default_jobs();
};

int cmd_solve(const SolveOptions& o) {
    Method method;
    try {
        method = parse_method(o.method);
    } catch (const BuildError& e) {
        throw UsageError(e.what());
    }
    if (o.solver != "internal" && o.solver != "sdpa-export") throw UsageError("unknown solver '" + o.solver + "'");
    SrfoProblem prob = load_problem(o.file);
    if (o.maximize) prob.maximize = true;
    const bool exporting = o.solver == "sdpa-export";

    int k1 = 0, k2 = 0;
    if (!o.orders.empty()) {
        std::tie(k1, k2) = parse_order_range(o.orders);
    } else if (o.order > 0) {
        k1 = k2 = o.order;
    } else {
        k1 = k2 = method_d_min(prob, method);
    }
    const bool sweep = k2 > k1;

    RelaxationSpec base;
    base.method = method;
    base.ratio_order = parse_ratio_order(o.ratio_order, prob.nratios());
    RunSettings set;
    set.solver.tol = o.tol;
    set.solver.max_iter = o.max_iter;
    set.rank_tol = o.rank_tol;

    const std::size_t count = static_cast<std::size_t>(k2 - k1 + 1);
    std::vector<json> out(count);
    std::vector<int> codes(count, exit_ok);
    parallel_for(count, o.jobs, [&](std::size_t i) {
        RelaxationSpec spec = base;
        spec.order = k1 + static_cast<int>(i);
        try {
            if (exporting) {
                const auto e = export_relaxation(prob, spec, sdpa_path_for(o.out, prob, method, spec.order, sweep));
                out[i] = export_json(prob, spec, e);
            } else {
                const RunResult r = run_relaxation(prob, spec, set);
                out[i] = result_json(r, spec.ratio_order);
                if (!is_success(r.status)) codes[i] = exit_not_solved;
            }
        } catch (const std::exception& e) {
            codes[i] = exit_code_for(e);
            out[i] = error_json(prob.name, method, spec.order, codes[i], e.what());
        }
    });

    json doc = sweep ? json(out) : out.front();
    const std::string text = doc.dump(2) + "\n";
    write_text(exporting ? std::string() : o.out, text);

    int code = exit_ok;
    for (int c : codes)
        if (c != exit_ok && c != exit_not_solved) return c;
    for (int c : codes) code = std::max(code, c);
    return code;
}

// ---------------------------------------------------------------- gen

struct GenOptions {
    std::string family;
    int M = 6, N = 0, n = 0, d = 0, s = 1;
    double xi = 0.2;
    double radius = 1.0;
    std::uint64_t seed = 1;
    std::string out;
};

SrfoProblem generate(const GenOptions& g) {
    auto need = [&](int v, int fallback) { return v > 0 ? v : fallback; };
    const std::string& f = g.family;
    if (f == "ex4_5") return gen_three_ratio_ball();
    if (f == "trivial") return gen_trivial();
    if (f == "reznick") return gen_reznick_chain(g.M, need(g.d, 2));
    if (f == "reznick-sparse") return gen_reznick_sparse_chain(need(g.N, 5), need(g.d, 2));
    if (f == "motzkin") return gen_motzkin_chain(need(g.N, 10));
    if (f == "rosenbrock") return gen_rosenbrock_ratio(need(g.N, 10));
    if (f == "overlap") return gen_overlap_chain(need(g.N, 8), g.s);
    if (f == "rand") return gen_rand_srfo(need(g.N, 6), need(g.n, 4), need(g.d, 3), g.xi, g.seed, g.radius);
    if (f == "shekel") return gen_shekel(need(g.n, 5), need(g.N, 30), g.seed);
    if (f == "rayleigh") return gen_rayleigh(need(g.n, 2), need(g.N, 2), g.seed);
    throw UsageError("unknown family '" + f +
                     "' (ex4_5, trivial, reznick, reznick-sparse, motzkin, rosenbrock, overlap, rand, shekel, rayleigh)");
}

int cmd_gen(const GenOptions& g) {
    write_text(g.out, serialize_problem(generate(g)));
    return exit_ok;
}

// ---------------------------------------------------------------- bench

struct BenchCase {
    SrfoProblem prob;
    Method method;
    int k;
    std::vector<std::size_t> ratio_order;
    double expected = std::numeric_limits<double>::quiet_NaN();
};

SrfoProblem rayleigh_scalar() {
    std::vector<ComplexMatrix> A{ComplexMatrix::Constant(1, 1, 2.0)}, B{ComplexMatrix::Constant(1, 1, 1.0)};
    SrfoProblem p = rayleigh_to_real(A, B);
    p.name = "rayleigh_scalar";
    return p;
}

std::vector<BenchCase> bench_cases(const std::string& id, std::uint64_t seed) {
    std::vector<BenchCase> c;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (id == "table1") {
        const auto p = gen_three_ratio_ball();
        c.push_back({p, Method::dense, 2, {}, -0.3563});
        c.push_back({p, Method::dense, 3, {}, -0.3465});
        const std::vector<std::vector<std::size_t>> orders{{0, 1, 2}, {1, 0, 2}, {2, 0, 1}};
        const double expect[3][3] = {{-0.4275, -0.3469, -0.3465}, {-0.4513, -0.3546, -0.3465}, {-0.4738, -0.3550, -0.3465}};
        for (std::size_t o = 0; o < 3; ++o)
            for (int k = 2; k <= 4; ++k) c.push_back({p, Method::signsym, k, orders[o], expect[o][k - 2]});
    } else if (id == "table2") {
        const auto p = gen_reznick_chain(6, 2);
        c.push_back({p, Method::signsym, 6, {}, 5.0});
        c.push_back({p, Method::dense, 6, {}, 5.0});
    } else if (id == "table3") {
        for (std::uint64_t s = seed; s < seed + 3; ++s) {
            const auto p = gen_rand_srfo(6, 4, 3, 0.2, s);
            c.push_back({p, Method::dense, 3, {}, -6.0});
            c.push_back({p, Method::signsym, 3, {}, -6.0});
        }
    } else if (id == "table4") {
        const auto p = gen_motzkin_chain(10);
        c.push_back({p, Method::cs_signsym, 5, {}, 40.0});
    } else if (id == "table5") {
        const auto p = gen_reznick_sparse_chain(5, 2);
        c.push_back({p, Method::cs, 6, {}, 5.0});
        c.push_back({p, Method::cs_signsym, 6, {}, 5.0});
    } else if (id == "table7") {
        const auto p = gen_rosenbrock_ratio(10);
        c.push_back({p, Method::cs_signsym, 2, {}, 10.0});
        c.push_back({p, Method::epigraph, 4, {}, 10.0});
    } else if (id == "table8") {
        const auto p = gen_overlap_chain(8, 1);
        for (Method m : {Method::cs, Method::cs_signsym, Method::epigraph}) c.push_back({p, m, 3, {}, nan});
    } else if (id == "shekel") {
        const auto p = gen_shekel(2, 10, seed);
        for (int k = 2; k <= 4; ++k) c.push_back({p, Method::signsym, k, {}, nan});
    } else if (id == "rayleigh") {
        c.push_back({rayleigh_scalar(), Method::dense, 2, {}, 2.0});
        const auto p = gen_rayleigh(2, 2, seed);
        c.push_back({p, Method::dense, 2, {}, nan});
        c.push_back({p, Method::signsym, 2, {}, nan});
    } else {
        throw UsageError("unknown table '" + id + "' (table1, table2, table3, table4, table5, table7, table8, shekel, rayleigh)");
    }
    return c;
}

struct BenchOptions {
    std::string table;
    std::string format = "markdown";
    std::uint64_t seed = 1;
    double tol = 1e-8;
    std::string out;
};

std::string fmt(double v, int prec) {
    if (!std::isfinite(v)) return "-";
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

int cmd_bench(const BenchOptions& b) {
    if (b.format != "markdown" && b.format != "csv") throw UsageError("unknown format '" + b.format + "'");
    const auto cases = bench_cases(b.table, b.seed);
    RunSettings set;
    set.solver.tol = b.tol;
    const std::vector<std::string> head{"problem", "method", "k", "ratio_order", "bound", "expected", "status", "certified", "time_ms"};
    std::vector<std::vector<std::string>> rows;
    bool all_ok = true;
    for (const auto& c : cases) {
        RelaxationSpec spec;
        spec.method = c.method;
        spec.order = c.k;
        spec.ratio_order = c.ratio_order;
        std::string ro;
        for (auto i : c.ratio_order) ro += (ro.empty() ? "" : " ") + std::to_string(i + 1);
        if (ro.empty()) ro = "-";
        try {
            const RunResult r = run_relaxation(c.prob, spec, set);
            all_ok &= is_success(r.status);
            rows.push_back({c.prob.name, to_string(c.method), std::to_string(c.k), ro, fmt(r.bound, 4), fmt(c.expected, 4),
                            to_string(r.status), r.certified ? "yes" : "no", fmt(r.time_ms(), 0)});
        } catch (const std::exception& e) {
            all_ok = false;
            rows.push_back({c.prob.name, to_string(c.method), std::to_string(c.k), ro, "-", fmt(c.expected, 4),
                            std::string("error: ") + e.what(), "no", "-"});
        }
    }
    std::ostringstream os;
    if (b.format == "csv") {
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
        };
        line(head);
        for (const auto& r : rows) line(r);
    } else {
        auto line = [&](const std::vector<std::string>& r) {
            os << "|";
            for (const auto& x : r) os << " " << x << " |";
            os << "\n";
        };
        line(head);
        os << "|";
        for (std::size_t i = 0; i < head.size(); ++i) os << "---|";
        os << "\n";
        for (const auto& r : rows) line(r);
    }
    write_text(b.out, os.str());
    return all_ok ? exit_ok : exit_not_solved;
}

// ---------------------------------------------------------------- read-solution

struct ReadSolutionOptions {
    std::string file;
    double offset = 0.0;
    bool maximize = false;
};

int cmd_read_solution(const ReadSolutionOptions& o) {
    SolveReport rep = import_sdpa_solution(o.file);
    rep.primal += o.offset;
    rep.dual += o.offset;
    const double sense = o.maximize ? -1.0 : 1.0;
    const BoundPair b = extract_bound(rep);
    json j;
    j["schema"] = 1;
    j["sense"] = o.maximize ? "max" : "min";
    j["bound"] = number(sense * b.bound);
    j["primal"] = number(sense * rep.primal);
    j["dual"] = number(sense * rep.dual);
    j["gap"] = number(rep.gap);
    j["status"] = to_string(rep.status);
    std::cout << j.dump(2) << "\n";
    return is_success(rep.status) ? exit_ok : exit_not_solved;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ratsos: moment/SOS lower bounds for sum-of-rational-functions optimization"};
    app.require_subcommand(1);

    SolveOptions so;
    auto* solve = app.add_subcommand("solve", "Solve a relaxation and print a JSON result");
    solve->add_option("file", so.file, "Problem file")->required();
    solve->add_option("--method", so.method, "dense|signsym|cs|cs-signsym|epigraph")->capture_default_str();
    auto* order_opt = solve->add_option("--order", so.order, "Relaxation order (default: minimal order)");
    solve->add_option("--orders", so.orders, "Order range K1..K2, solved concurrently")->excludes(order_opt);
    solve->add_option("--ratio-order", so.ratio_order, "Permutation of ratios, 1-based, comma separated")->delimiter(',');
    solve->add_option("--solver", so.solver, "internal|sdpa-export")->capture_default_str();
    solve->add_option("--tol", so.tol, "Solver tolerance")->capture_default_str();
    solve->add_option("--max-iter", so.max_iter, "Solver iteration limit")->capture_default_str();
    solve->add_option("--rank-tol", so.rank_tol, "Relative rank tolerance of the flatness test")->capture_default_str();
    solve->add_flag("--maximize", so.maximize, "Maximize the sum instead of minimizing");
    solve->add_option("--out", so.out, "JSON output path, or SDPA path with --solver sdpa-export");
    solve->add_option("--jobs", so.jobs, "Concurrent orders in a sweep")->capture_default_str();

    std::string analyze_file;
    bool analyze_max = false;
    auto* analyze = app.add_subcommand("analyze", "Report symmetry, clique and block structure");
    analyze->add_option("file", analyze_file, "Problem file")->required();
    analyze->add_flag("--maximize", analyze_max, "Treat the problem as a maximization");

    GenOptions go;
    auto* gen = app.add_subcommand("gen", "Write a generated problem file");
    gen->add_option("family", go.family,
                    "ex4_5|trivial|reznick|reznick-sparse|motzkin|rosenbrock|overlap|rand|shekel|rayleigh")
        ->required();
    gen->add_option("--M", go.M, "Ratio count of the reznick family")->capture_default_str();
    gen->add_option("--N", go.N, "Number of ratios");
    gen->add_option("--n", go.n, "Number of variables");
    gen->add_option("--d", go.d, "Degree parameter");
    gen->add_option("--s", go.s, "Overlap width")->capture_default_str();
    gen->add_option("--xi", go.xi, "Monomial selection probability (rand)")->capture_default_str();
    gen->add_option("--radius", go.radius, "Ball radius squared (rand)")->capture_default_str();
    gen->add_option("--seed", go.seed, "Random seed")->capture_default_str();
    gen->add_option("--out", go.out, "Output path (default stdout)");

    BenchOptions bo;
    auto* bench = app.add_subcommand("bench", "Run a scaled-down benchmark table");
    bench->add_option("table", bo.table, "table1|table2|table3|table4|table5|table7|table8|shekel|rayleigh")->required();
    bench->add_option("--format", bo.format, "markdown|csv")->capture_default_str();
    bench->add_option("--seed", bo.seed, "Seed for random families")->capture_default_str();
    bench->add_option("--tol", bo.tol, "Solver tolerance")->capture_default_str();
    bench->add_option("--out", bo.out, "Output path (default stdout)");

    ReadSolutionOptions ro;
    auto* read = app.add_subcommand("read-solution", "Read an SDPA result file for an exported relaxation");
    read->add_option("file", ro.file, "SDPA result file")->required();
    read->add_option("--offset", ro.offset, "objective_offset reported at export")->capture_default_str();
    read->add_flag("--maximize", ro.maximize, "The exported problem was a maximization");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*solve) return cmd_solve(so);
        if (*analyze) {
            SrfoProblem p = load_problem(analyze_file);
            if (analyze_max) p.maximize = true;
            std::cout << analyze_problem(p);
            return exit_ok;
        }
        if (*gen) return cmd_gen(go);
        if (*bench) return cmd_bench(bo);
        if (*read) return cmd_read_solution(ro);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        std::cerr << "ratsos: " << error_class(code) << " error: " << e.what() << "\n";
        return code;
    }
    return exit_internal;
}
