#pragma once

/**
 * @file sdpa_io.hpp
 * @brief SDPA sparse (.dat-s) export and import, and SDPA solution import.
 *
 * The moment form  min c'y  s.t.  sum_l y_l F_l - F0 >= 0,  E y = f  maps to
 * SDPA's primal directly. Equalities become pairs of opposite rows and 1x1
 * PSD blocks are folded in, all inside one trailing diagonal block (negative
 * size). Import recombines opposite diagonal pairs into equalities.
 */

#include <fstream>
#include <sstream>

#include "ratsos/sdp.hpp"

namespace ratsos {

namespace sdpa_detail {

struct Quint {
    std::size_t mat, blk, i, j;
    double v;
};

inline void check_stream(std::istream& in, const std::string& what) {
    if (!in) throw ParseError("malformed SDPA data: " + what, 0, 0);
}

}  // namespace sdpa_detail

inline std::string export_sdpa_string(const SdpStandardForm& sf) {
    sf.validate();
    using sdpa_detail::Quint;
    std::vector<std::size_t> block_map(sf.block_sizes.size(), 0);  // 1-based SDPA block or 0 when folded
    std::vector<std::size_t> diag_pos(sf.block_sizes.size(), 0);
    std::vector<long long> sizes;
    std::size_t ndiag = 0;
    for (std::size_t b = 0; b < sf.block_sizes.size(); ++b)
        if (sf.block_sizes[b] == 1)
            diag_pos[b] = ++ndiag;
        else
            sizes.push_back(static_cast<long long>(sf.block_sizes[b])), block_map[b] = sizes.size();
    const std::size_t first_eq = ndiag;
    ndiag += 2 * sf.E.size();
    const std::size_t diag_blk = sizes.size() + 1;
    if (ndiag > 0) sizes.push_back(-static_cast<long long>(ndiag));

    std::vector<Quint> q;
    auto emit = [&](std::size_t mat, const SdpEntry& e) {
        if (e.v == 0.0) return;
        if (block_map[e.block])
            q.push_back({mat, block_map[e.block], e.i + 1, e.j + 1, e.v});
        else
            q.push_back({mat, diag_blk, diag_pos[e.block], diag_pos[e.block], e.v});
    };
    for (const auto& e : sf.F0) emit(0, e);
    for (std::size_t l = 0; l < sf.nvars; ++l)
        for (const auto& e : sf.F[l]) emit(l + 1, e);
    for (std::size_t r = 0; r < sf.E.size(); ++r) {
        const std::size_t p = first_eq + 2 * r + 1, m = p + 1;
        if (sf.E[r].rhs != 0.0) {
            q.push_back({0, diag_blk, p, p, sf.E[r].rhs});
            q.push_back({0, diag_blk, m, m, -sf.E[r].rhs});
        }
        std::map<std::size_t, double> acc;
        for (auto [v, a] : sf.E[r].terms) acc[v] += a;
        for (auto [v, a] : acc) {
            if (a == 0.0) continue;
            q.push_back({v + 1, diag_blk, p, p, a});
            q.push_back({v + 1, diag_blk, m, m, -a});
        }
    }
    std::sort(q.begin(), q.end(), [](const Quint& a, const Quint& b) {
        return std::tie(a.mat, a.blk, a.i, a.j) < std::tie(b.mat, b.blk, b.i, b.j);
    });
    // Merge duplicates so every position appears once.
    std::vector<Quint> merged;
    for (const auto& x : q) {
        if (!merged.empty() && merged.back().mat == x.mat && merged.back().blk == x.blk && merged.back().i == x.i &&
            merged.back().j == x.j)
            merged.back().v += x.v;
        else
            merged.push_back(x);
    }

    std::string out;
    out += std::to_string(sf.nvars) + "\n";
    out += std::to_string(sizes.size()) + "\n";
    for (std::size_t b = 0; b < sizes.size(); ++b) out += (b ? " " : "") + std::to_string(sizes[b]);
    out += "\n";
    for (std::size_t l = 0; l < sf.nvars; ++l) out += (l ? " " : "") + format_real(sf.c[l]);
    out += "\n";
    for (const auto& x : merged) {
        if (x.v == 0.0) continue;
        out += std::to_string(x.mat) + " " + std::to_string(x.blk) + " " + std::to_string(x.i) + " " +
               std::to_string(x.j) + " " + format_real(x.v) + "\n";
    }
    return out;
}

inline void export_sdpa(const SdpStandardForm& sf, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << export_sdpa_string(sf);
    if (!f) throw IoError("write failed for " + path);
}

/// Parse SDPA sparse data; opposite diagonal rows become equalities, the rest 1x1 blocks.
inline SdpStandardForm import_sdpa_string(const std::string& text) {
    using sdpa_detail::check_stream;
    std::string cleaned;
    {
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            if (!line.empty() && (line[0] == '"' || line[0] == '*')) continue;
            for (char& ch : line)
                if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')' || ch == '\r') ch = ' ';
            cleaned += line + "\n";
        }
    }
    // mDIM, nBLOCK and the block structure each sit on their own line; text after the numbers is a comment.
    std::istringstream in(cleaned);
    auto header_line = [&](const std::string& what) {
        std::string line;
        while (std::getline(in, line))
            if (line.find_first_not_of(" \t") != std::string::npos) return line;
        throw ParseError("malformed SDPA data: " + what, 0, 0);
    };
    long long m = 0, nb = 0;
    {
        std::istringstream h(header_line("mDIM"));
        h >> m;
        check_stream(h, "mDIM");
    }
    {
        std::istringstream h(header_line("nBLOCK"));
        h >> nb;
        check_stream(h, "nBLOCK");
    }
    if (m < 0 || nb < 0) throw ParseError("malformed SDPA data: negative dimension", 0, 0);
    std::vector<long long> sizes(static_cast<std::size_t>(nb));
    {
        std::istringstream h(header_line("block sizes"));
        for (auto& s : sizes) {
            h >> s;
            check_stream(h, "block sizes");
            if (s == 0) throw ParseError("malformed SDPA data: zero block size", 0, 0);
        }
    }
    SdpStandardForm sf;
    sf.nvars = static_cast<std::size_t>(m);
    sf.c.resize(sf.nvars);
    for (auto& v : sf.c) {
        in >> v;
        check_stream(in, "objective vector");
    }
    sf.F.assign(sf.nvars, {});

    // Diagonal entries: per block, per position, coefficient of F0 (slot 0) and each variable.
    std::vector<std::map<std::size_t, std::map<std::size_t, double>>> diag(sizes.size());
    std::vector<std::size_t> dense_index(sizes.size(), 0);
    for (std::size_t b = 0; b < sizes.size(); ++b)
        if (sizes[b] > 0) {
            dense_index[b] = sf.block_sizes.size();
            sf.block_sizes.push_back(static_cast<std::size_t>(sizes[b]));
            sf.block_labels.push_back("sdpa" + std::to_string(b + 1));
        }
    long long mat, blk, i, j;
    double v;
    while (in >> mat) {
        in >> blk >> i >> j >> v;
        check_stream(in, "quintuple");
        if (mat < 0 || mat > m || blk < 1 || blk > nb) throw ParseError("malformed SDPA data: index out of range", 0, 0);
        const long long sz = std::llabs(sizes[static_cast<std::size_t>(blk - 1)]);
        if (i < 1 || j < 1 || i > sz || j > sz) throw ParseError("malformed SDPA data: entry out of range", 0, 0);
        if (i > j) std::swap(i, j);
        const auto b = static_cast<std::size_t>(blk - 1);
        if (sizes[b] < 0) {
            if (i != j) throw ParseError("malformed SDPA data: off-diagonal entry in diagonal block", 0, 0);
            diag[b][static_cast<std::size_t>(i)][static_cast<std::size_t>(mat)] += v;
        } else {
            const SdpEntry e{static_cast<std::uint32_t>(dense_index[b]), static_cast<std::uint32_t>(i - 1),
                             static_cast<std::uint32_t>(j - 1), v};
            (mat == 0 ? sf.F0 : sf.F[static_cast<std::size_t>(mat - 1)]).push_back(e);
        }
    }
    if (!in.eof()) throw ParseError("malformed SDPA data: trailing garbage", 0, 0);

    using Row = std::map<std::size_t, double>;
    auto negated = [](const Row& r) {
        Row n;
        for (auto [k, x] : r) n[k] = -x;
        return n;
    };
    for (std::size_t b = 0; b < sizes.size(); ++b) {
        if (sizes[b] > 0) continue;
        std::vector<Row> rows;
        for (long long p = 1; p <= -sizes[b]; ++p) {
            Row r;
            auto it = diag[b].find(static_cast<std::size_t>(p));
            if (it != diag[b].end())
                for (auto [k, x] : it->second)
                    if (x != 0.0) r[k] = x;
            rows.push_back(std::move(r));
        }
        std::map<Row, std::vector<std::size_t>> open;
        std::vector<bool> used(rows.size(), false);
        for (std::size_t p = 0; p < rows.size(); ++p) {
            auto it = open.find(negated(rows[p]));
            if (it != open.end() && !it->second.empty() && !rows[p].empty()) {
                const std::size_t partner = it->second.back();
                it->second.pop_back();
                used[partner] = used[p] = true;
                SparseRow er;
                for (auto [k, x] : rows[partner]) {
                    if (k == 0)
                        er.rhs = x;
                    else
                        er.terms.emplace_back(k - 1, x);
                }
                sf.E.push_back(std::move(er));
            } else {
                open[rows[p]].push_back(p);
            }
        }
        for (std::size_t p = 0; p < rows.size(); ++p) {
            if (used[p]) continue;
            const auto blockno = static_cast<std::uint32_t>(sf.block_sizes.size());
            sf.block_sizes.push_back(1);
            sf.block_labels.push_back("sdpa" + std::to_string(b + 1) + "[" + std::to_string(p + 1) + "]");
            for (auto [k, x] : rows[p]) (k == 0 ? sf.F0 : sf.F[k - 1]).push_back({blockno, 0, 0, x});
        }
    }
    sf.validate();
    return sf;
}

inline SdpStandardForm import_sdpa(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return import_sdpa_string(ss.str());
}

/// Status and objective values from an SDPA result file (objValPrimal, objValDual, phase.value, optional xVec).
inline SolveReport import_sdpa_solution_string(const std::string& text) {
    SolveReport rep;
    bool have_p = false, have_d = false, have_phase = false;
    std::istringstream in(text);
    std::string line;
    auto value_after = [](const std::string& l) {
        const auto eq = l.find('=');
        std::string v = eq == std::string::npos ? std::string() : l.substr(eq + 1);
        const auto a = v.find_first_not_of(" \t");
        const auto b = v.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : v.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        if (line.rfind("objValPrimal", 0) == 0) {
            rep.primal = std::strtod(value_after(line).c_str(), nullptr);
            have_p = true;
        } else if (line.rfind("objValDual", 0) == 0) {
            rep.dual = std::strtod(value_after(line).c_str(), nullptr);
            have_d = true;
        } else if (line.rfind("phase.value", 0) == 0) {
            const std::string ph = value_after(line);
            have_phase = true;
            if (ph == "pdOPT")
                rep.status = SolveStatus::optimal;
            else if (ph == "pdFEAS" || ph == "pFEAS" || ph == "dFEAS")
                rep.status = SolveStatus::near_optimal;
            else if (ph == "pINF_dFEAS" || ph == "pdINF")
                rep.status = SolveStatus::infeasible;
            else if (ph == "pFEAS_dINF" || ph == "pUNBD" || ph == "dINF")
                rep.status = SolveStatus::unbounded;
            else
                rep.status = SolveStatus::numerical_issue;
        } else if (line.rfind("xVec", 0) == 0) {
            std::string body;
            std::string next;
            while (body.find('}') == std::string::npos && std::getline(in, next)) body += next;
            for (char& ch : body)
                if (ch == '{' || ch == '}' || ch == ',') ch = ' ';
            std::istringstream vs(body);
            double x;
            while (vs >> x) rep.y.push_back(x);
        }
    }
    if (!have_p || !have_d || !have_phase)
        throw ParseError("malformed SDPA solution: objValPrimal, objValDual and phase.value are required", 0, 0);
    rep.gap = relative_gap(rep.primal, rep.dual);
    rep.message = "imported";
    return rep;
}

inline SolveReport import_sdpa_solution(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return import_sdpa_solution_string(ss.str());
}

}  // namespace ratsos
