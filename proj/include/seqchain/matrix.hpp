#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "stateset.hpp"

namespace seqchain {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Formats a double with 17 significant digits so that reading the text
/// back reproduces the value exactly.
inline std::string fmt17(double x) {
    if (x == kInf) return "inf";
    if (x == -kInf) return "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline double parse_real(const std::string& tok) {
    if (tok == "inf") return kInf;
    if (tok == "-inf") return -kInf;
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (const std::exception&) {
        throw ParseError("not a real number: '" + tok + "'");
    }
    if (pos != tok.size()) throw ParseError("not a real number: '" + tok + "'");
    return v;
}

// ── Dense matrix ──────────────────────────────────────────────────

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    const double* row(std::size_t i) const { return a.data() + i * cols; }
    double* row(std::size_t i) { return a.data() + i * cols; }

    bool operator==(const Matrix& o) const {
        return rows == o.rows && cols == o.cols && a == o.a;
    }
};

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// A and b are consumed. Throws Error on a (numerically) singular system.
inline std::vector<double> solve_dense(Matrix A, std::vector<double> b) {
    const std::size_t n = A.rows;
    if (A.cols != n || b.size() != n) throw Error("solve_dense: shape mismatch");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::fabs(A(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            double v = std::fabs(A(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best < 1e-300) throw Error("solve_dense: singular system");
        if (piv != k) {
            for (std::size_t j = k; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double f = A(i, k) / A(k, k);
            if (f == 0.0) continue;
            for (std::size_t j = k; j < n; ++j) A(i, j) -= f * A(k, j);
            b[i] -= f * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

/// Multi right-hand-side variant; columns of B are solved independently.
inline Matrix solve_dense_multi(const Matrix& A, const Matrix& B) {
    Matrix X(B.rows, B.cols);
    for (std::size_t c = 0; c < B.cols; ++c) {
        std::vector<double> b(B.rows);
        for (std::size_t i = 0; i < B.rows; ++i) b[i] = B(i, c);
        auto x = solve_dense(A, std::move(b));
        for (std::size_t i = 0; i < B.rows; ++i) X(i, c) = x[i];
    }
    return X;
}

// ── Transition kernels ────────────────────────────────────────────

/// Row-stochastic kernel over a finite state space. Rows must sum to 1
/// within 1e-10.
struct TransitionMatrix {
    Matrix m;

    TransitionMatrix() = default;
    explicit TransitionMatrix(std::size_t n) : m(n, n) {}
    explicit TransitionMatrix(Matrix mat) : m(std::move(mat)) {
        if (m.rows != m.cols) throw Error("kernel must be square");
    }

    std::size_t size() const { return m.rows; }
    double& operator()(std::size_t s, std::size_t t) { return m(s, t); }
    double operator()(std::size_t s, std::size_t t) const { return m(s, t); }
    const double* row(std::size_t s) const { return m.row(s); }
    double* row(std::size_t s) { return m.row(s); }

    double row_mass(std::size_t s, StateSet C) const {
        double acc = 0;
        for (std::size_t t = 0; t < size(); ++t)
            if (set_contains(C, static_cast<int>(t))) acc += m(s, t);
        return acc;
    }

    void validate(double tol = 1e-10) const {
        for (std::size_t s = 0; s < size(); ++s) {
            double sum = 0;
            for (std::size_t t = 0; t < size(); ++t) {
                if (m(s, t) < -1e-12)
                    throw Error("negative kernel entry at row " + std::to_string(s));
                sum += m(s, t);
            }
            if (std::fabs(sum - 1.0) > tol)
                throw Error("kernel row " + std::to_string(s) +
                            " sums to " + fmt17(sum));
        }
    }

    bool operator==(const TransitionMatrix& o) const { return m == o.m; }
};

inline double row_sup_distance(const TransitionMatrix& p, const TransitionMatrix& q,
                               std::size_t s) {
    double d = 0;
    for (std::size_t t = 0; t < p.size(); ++t)
        d = std::max(d, std::fabs(p(s, t) - q(s, t)));
    return d;
}

// ── Text I/O ──────────────────────────────────────────────────────
// One row per line, whitespace-separated reals. Lines starting with '#'
// are skipped.

inline Matrix parse_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) row.push_back(parse_real(tok));
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty matrix");
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols)
            throw ParseError("ragged matrix: row " + std::to_string(i));
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

inline Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return parse_matrix(in);
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) out << ' ';
            out << fmt17(m(i, j));
        }
        out << '\n';
    }
}

inline TransitionMatrix read_kernel_file(const std::string& path, double tol = 1e-10) {
    TransitionMatrix p(read_matrix_file(path));
    p.validate(tol);
    return p;
}

} // namespace seqchain
