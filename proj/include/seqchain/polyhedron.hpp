#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "alphabet.hpp"
#include "matrix.hpp"

namespace seqchain {

// Vertex-represented polyhedra of probability distributions. Membership
// and box-constrained feasibility reduce to a small phase-1 simplex
// over the vertex-weight simplex; any feasible point is accepted.

struct Polyhedron {
    std::vector<std::vector<double>> vertices;

    void validate(std::size_t dim, double tol = 1e-12) const {
        if (vertices.empty()) throw ParseError("polyhedron needs at least one vertex");
        for (const auto& v : vertices) {
            if (v.size() != dim) throw ParseError("vertex dimension mismatch");
            double sum = 0;
            for (double x : v) {
                if (x < -1e-12) throw ParseError("negative vertex coordinate");
                sum += x;
            }
            if (std::fabs(sum - 1.0) > tol)
                throw ParseError("vertex does not sum to 1: " + fmt17(sum));
        }
    }

    std::vector<double> combine(const std::vector<double>& weights) const {
        std::vector<double> out(vertices[0].size(), 0.0);
        for (std::size_t j = 0; j < vertices.size(); ++j)
            for (std::size_t t = 0; t < out.size(); ++t)
                out[t] += weights[j] * vertices[j][t];
        return out;
    }

    std::vector<double> centroid() const {
        std::vector<double> w(vertices.size(), 1.0 / static_cast<double>(vertices.size()));
        return combine(w);
    }
};

/// One polyhedron of admissible transition rows per state.
struct ProductPolyhedron {
    Alphabet alphabet;
    std::vector<Polyhedron> per_state;

    int size() const { return alphabet.size(); }

    void validate() const {
        if (per_state.size() != static_cast<std::size_t>(alphabet.size()))
            throw ParseError("need one polyhedron per state");
        for (const auto& p : per_state) p.validate(alphabet.symbols.size());
    }

    int max_vertices() const {
        std::size_t m = 0;
        for (const auto& p : per_state) m = std::max(m, p.vertices.size());
        return static_cast<int>(m);
    }
    long long total_vertices() const {
        long long m = 0;
        for (const auto& p : per_state) m += static_cast<long long>(p.vertices.size());
        return m;
    }
};

namespace detail {

/// Phase-1 simplex feasibility: find x >= 0 with A x = b (b >= 0
/// required), by minimizing the sum of one artificial variable per row.
/// Bland's rule, so it terminates. Returns the first n_vars entries of
/// a feasible point, or nullopt.
inline std::optional<std::vector<double>> simplex_feasible(const Matrix& A,
                                                           const std::vector<double>& b,
                                                           std::size_t n_vars) {
    const std::size_t m = A.rows;
    const std::size_t n = A.cols;
    const std::size_t total = n + m;  // structural + artificial
    Matrix T(m + 1, total + 1, 0.0);
    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) T(i, j) = A(i, j);
        T(i, n + i) = 1.0;
        T(i, total) = b[i];
        basis[i] = n + i;
    }
    // objective row: minimize sum of artificials => reduced costs start
    // as the negated column sums of the constraint rows
    for (std::size_t j = 0; j <= total; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < m; ++i) s += T(i, j);
        T(m, j) = -s;
    }
    for (std::size_t i = 0; i < m; ++i) T(m, n + i) = 0.0;

    const double tol = 1e-11;
    for (;;) {
        std::size_t enter = total;
        for (std::size_t j = 0; j < total; ++j) {
            if (T(m, j) < -tol) { enter = j; break; }  // Bland: lowest index
        }
        if (enter == total) break;
        std::size_t leave = m;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (T(i, enter) > tol) {
                double ratio = T(i, total) / T(i, enter);
                if (leave == m || ratio < best_ratio - 1e-15 ||
                    (std::fabs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
        }
        if (leave == m) return std::nullopt;  // unbounded; cannot happen here
        double piv = T(leave, enter);
        for (std::size_t j = 0; j <= total; ++j) T(leave, j) /= piv;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == leave) continue;
            double f = T(i, enter);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= total; ++j) T(i, j) -= f * T(leave, j);
        }
        basis[leave] = enter;
    }
    double objective = -T(m, total);
    if (objective > 1e-9) return std::nullopt;
    std::vector<double> x(n_vars, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (basis[i] < n_vars) x[basis[i]] = std::max(0.0, T(i, total));
    return x;
}

} // namespace detail

/// Convex weights over the vertices of P that reproduce the rows in the
/// per-coordinate interval [lo, hi]. Infinite bounds are skipped.
/// Returns nullopt when the box does not meet the polyhedron.
inline std::optional<std::vector<double>> feasible_vertex_weights(
    const Polyhedron& P, const std::vector<double>& lo, const std::vector<double>& hi) {
    const std::size_t m = P.vertices.size();
    const std::size_t dim = P.vertices[0].size();
    std::vector<std::vector<double>> rows;
    std::vector<double> rhs;
    std::vector<int> slack_sign;  // +1 adds slack, -1 subtracts surplus, 0 none

    {
        std::vector<double> r(m, 1.0);
        rows.push_back(r);
        rhs.push_back(1.0);
        slack_sign.push_back(0);
    }
    for (std::size_t t = 0; t < dim; ++t) {
        if (hi[t] < kInf) {
            std::vector<double> r(m);
            for (std::size_t j = 0; j < m; ++j) r[j] = P.vertices[j][t];
            rows.push_back(r);
            rhs.push_back(hi[t]);
            slack_sign.push_back(+1);
        }
        if (lo[t] > 0.0) {
            std::vector<double> r(m);
            for (std::size_t j = 0; j < m; ++j) r[j] = P.vertices[j][t];
            rows.push_back(r);
            rhs.push_back(lo[t]);
            slack_sign.push_back(-1);
        }
    }
    for (double v : rhs)
        if (v < 0.0) return std::nullopt;  // coordinates are nonnegative

    std::size_t n_slack = 0;
    for (int s : slack_sign) n_slack += (s != 0);
    Matrix A(rows.size(), m + n_slack, 0.0);
    std::size_t slack_col = m;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) A(i, j) = rows[i][j];
        if (slack_sign[i] != 0) A(i, slack_col++) = static_cast<double>(slack_sign[i]);
    }
    return detail::simplex_feasible(A, rhs, m);
}

/// Convex weights reproducing d within tol per coordinate, or nullopt
/// when d lies outside the hull.
inline std::optional<std::vector<double>> polyhedron_membership(
    const std::vector<double>& d, const Polyhedron& P, double tol = 1e-9) {
    if (d.size() != P.vertices[0].size())
        throw ParameterOutOfRange("dimension mismatch in membership query");
    std::vector<double> lo(d.size()), hi(d.size());
    for (std::size_t t = 0; t < d.size(); ++t) {
        lo[t] = d[t] - tol;
        hi[t] = d[t] + tol;
    }
    return feasible_vertex_weights(P, lo, hi);
}

// ── File format ───────────────────────────────────────────────────
// polyhedra v1
// alphabet: a b
// state a
// 0.5 0.5
// 0.9 0.1
// state b
// ...

inline ProductPolyhedron parse_polyhedra(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("polyhedra v1", 0) != 0)
        throw ParseError("polyhedra file: missing 'polyhedra v1' header");
    if (!std::getline(in, line) || line.rfind("alphabet:", 0) != 0)
        throw ParseError("polyhedra file: missing alphabet line");
    ProductPolyhedron out;
    {
        std::istringstream ls(line.substr(std::string("alphabet:").size()));
        std::vector<std::string> symbols;
        std::string tok;
        while (ls >> tok) symbols.push_back(tok);
        out.alphabet = Alphabet(symbols);
    }
    out.per_state.resize(out.alphabet.symbols.size());
    int current = -1;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("state ", 0) == 0) {
            std::string tok = line.substr(6);
            while (!tok.empty() && tok.back() == ' ') tok.pop_back();
            current = out.alphabet.index_of(tok);
            if (current < 0) throw ParseError("unknown state '" + tok + "'");
            continue;
        }
        if (current < 0) throw ParseError("vertex row before any 'state' line");
        std::istringstream ls(line);
        std::vector<double> v;
        std::string tok;
        while (ls >> tok) v.push_back(parse_real(tok));
        out.per_state[current].vertices.push_back(std::move(v));
    }
    out.validate();
    return out;
}

inline ProductPolyhedron read_polyhedra_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return parse_polyhedra(in);
}

inline void write_polyhedra(std::ostream& out, const ProductPolyhedron& V) {
    out << "polyhedra v1\nalphabet:";
    for (const auto& s : V.alphabet.symbols) out << ' ' << s;
    out << '\n';
    for (int s = 0; s < V.size(); ++s) {
        out << "state " << V.alphabet.symbol(s) << '\n';
        for (const auto& v : V.per_state[s].vertices) {
            for (std::size_t t = 0; t < v.size(); ++t) {
                if (t) out << ' ';
                out << fmt17(v[t]);
            }
            out << '\n';
        }
    }
}

} // namespace seqchain
