#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "approximator.hpp"
#include "chain_analysis.hpp"
#include "polyhedron.hpp"
#include "rng.hpp"

namespace seqchain {

// ── Typicality (constrained closeness of a kernel to the data) ────

struct TypicalityParams {
    long long N = 0;
    double delta = 0.0;
    double epsilon = 0.0;
};

/// Witness kernel v with v(s,.) in V(s) for every s, convex weights
/// reproducing each row, and the transition pairs whose relative
/// closeness to the observed kernel is actually binding.
struct TypicalityCertificate {
    TransitionMatrix v;
    std::vector<std::vector<double>> weights;
    std::vector<std::pair<int, int>> active_pairs;
    TypicalityParams params;
};

struct TypicalityResult {
    bool typical = false;
    std::optional<TypicalityCertificate> certificate;
    int blocking_state = -1;
};

/// Decides whether some v in V matches the observed kernel within
/// relative error epsilon on every frequent transition. A pair (s, t)
/// is frequent when N_s p^x(s,t) or N_s v(s,t) reaches N^delta. The
/// per-state subproblems are independent: each coordinate either sits
/// in the closed epsilon-band around p^x(s,t) or, when the observed
/// side is already below the threshold, stays under the frequency cap.
/// Branch assignments are enumerated in ascending bitmask order with
/// the all-band assignment first, and the first feasible branch wins.
inline TypicalityResult is_typical(const ObservedSequence& x, const ProductPolyhedron& V,
                                   double delta, double epsilon) {
    if (!(epsilon > 0 && epsilon < 1)) throw ParameterOutOfRange("epsilon must lie in (0,1)");
    if (!(delta > 0)) throw ParameterOutOfRange("delta must be positive");
    if (!(x.alphabet == V.alphabet))
        throw ParameterOutOfRange("sequence and polyhedra alphabets differ");
    V.validate();

    const auto counts = count_transitions(x);
    const int n = counts.n_states;
    const long long N = counts.total;
    const double freq_threshold = std::pow(static_cast<double>(N), delta);
    const auto px = observed_transition_matrix(counts).p;
    // The band is strict in the definition; shrinking it by 1e-12 keeps
    // the feasible region closed while the reported tolerance stays
    // epsilon.
    const double band = epsilon - 1e-12;

    TypicalityResult res;
    TypicalityCertificate cert;
    cert.params = {N, delta, epsilon};
    cert.v = TransitionMatrix(static_cast<std::size_t>(n));
    cert.weights.resize(n);

    for (int s = 0; s < n; ++s) {
        const double ns = static_cast<double>(counts.row_totals[s]);
        std::vector<int> free_coords;
        std::vector<bool> forced(n, false);
        for (int t = 0; t < n; ++t) {
            if (static_cast<double>(counts.at(s, t)) >= freq_threshold)
                forced[t] = true;
            else
                free_coords.push_back(t);
        }
        const std::uint32_t n_masks = 1u << free_coords.size();
        std::optional<std::vector<double>> weights;
        for (std::uint32_t mask = 0; mask < n_masks && !weights; ++mask) {
            std::vector<double> lo(n, 0.0), hi(n, kInf);
            for (int t = 0; t < n; ++t) {
                bool use_band = forced[t];
                if (!use_band) {
                    std::size_t pos = static_cast<std::size_t>(
                        std::find(free_coords.begin(), free_coords.end(), t) -
                        free_coords.begin());
                    use_band = ((mask >> pos) & 1u) == 0;
                }
                if (use_band) {
                    lo[t] = px(s, t) * (1.0 - band);
                    hi[t] = px(s, t) * (1.0 + band);
                } else if (ns > 0) {
                    hi[t] = (freq_threshold / ns) * (1.0 - 1e-12);
                }
            }
            weights = feasible_vertex_weights(V.per_state[s], lo, hi);
        }
        if (!weights) {
            res.typical = false;
            res.blocking_state = s;
            return res;
        }
        cert.weights[s] = *weights;
        auto row = V.per_state[s].combine(*weights);
        for (int t = 0; t < n; ++t) cert.v(s, t) = row[t];
    }

    // Record the pairs whose closeness condition is binding for the
    // chosen v, and re-check them against the unshrunk tolerance.
    for (int s = 0; s < n; ++s) {
        const double ns = static_cast<double>(counts.row_totals[s]);
        for (int t = 0; t < n; ++t) {
            bool active = static_cast<double>(counts.at(s, t)) >= freq_threshold ||
                          ns * cert.v(s, t) >= freq_threshold;
            if (!active) continue;
            cert.active_pairs.emplace_back(s, t);
            double rel = (px(s, t) > 0) ? std::fabs(1.0 - cert.v(s, t) / px(s, t)) : kInf;
            if (!(rel < epsilon))
                throw Error("typicality solver produced an invalid certificate");
        }
    }
    res.typical = true;
    res.certificate = std::move(cert);
    return res;
}

/// Re-checks a certificate against a sequence: weight reconstruction
/// within tol and the closeness condition on every frequent pair.
inline bool certificate_valid(const ObservedSequence& x, const ProductPolyhedron& V,
                              const TypicalityCertificate& cert, double tol = 1e-9) {
    const auto counts = count_transitions(x);
    const int n = counts.n_states;
    const auto px = observed_transition_matrix(counts).p;
    const double freq_threshold =
        std::pow(static_cast<double>(counts.total), cert.params.delta);
    for (int s = 0; s < n; ++s) {
        auto row = V.per_state[s].combine(cert.weights[s]);
        for (int t = 0; t < n; ++t)
            if (std::fabs(row[t] - cert.v(s, t)) > tol) return false;
        const double ns = static_cast<double>(counts.row_totals[s]);
        for (int t = 0; t < n; ++t) {
            bool active = static_cast<double>(counts.at(s, t)) >= freq_threshold ||
                          ns * cert.v(s, t) >= freq_threshold;
            if (!active) continue;
            double rel = (px(s, t) > 0) ? std::fabs(1.0 - cert.v(s, t) / px(s, t)) : kInf;
            if (!(rel < cert.params.epsilon)) return false;
        }
    }
    return true;
}

// ── Irreducible representative of the product polyhedron ──────────

/// Tries the vertex centroid first, then a bounded number of seeded
/// random convex combinations. Returns nullopt when every attempt is
/// reducible; the caller may supply a kernel explicitly instead.
inline std::optional<TransitionMatrix> find_irreducible_b(const ProductPolyhedron& V,
                                                          int attempts = 64) {
    V.validate();
    const int n = V.size();
    auto assemble = [&](const std::vector<std::vector<double>>& rows) {
        TransitionMatrix b(static_cast<std::size_t>(n));
        for (int s = 0; s < n; ++s)
            for (int t = 0; t < n; ++t) b(s, t) = rows[s][t];
        return b;
    };
    std::vector<std::vector<double>> rows(n);
    for (int s = 0; s < n; ++s) rows[s] = V.per_state[s].centroid();
    TransitionMatrix cand = assemble(rows);
    if (is_irreducible(cand)) return cand;

    Rng rng(0x5ec5eedULL);
    for (int k = 0; k < attempts; ++k) {
        for (int s = 0; s < n; ++s) {
            const auto& P = V.per_state[s];
            std::vector<double> w(P.vertices.size());
            double total = 0;
            for (auto& wi : w) {
                wi = -std::log(1.0 - rng.uniform());
                total += wi;
            }
            for (auto& wi : w) wi /= total;
            rows[s] = P.combine(w);
        }
        cand = assemble(rows);
        if (is_irreducible(cand)) return cand;
    }
    return std::nullopt;
}

/// Worst expected hitting time between states; zero on the diagonal.
inline double compute_B(const TransitionMatrix& b) {
    if (!is_irreducible(b)) throw ReducibleChain("B needs an irreducible kernel");
    double B = 0.0;
    for (std::size_t t = 0; t < b.size(); ++t) {
        auto h = hitting_times(b, StateSet{1} << t);
        for (std::size_t s = 0; s < b.size(); ++s) B = std::max(B, h[s]);
    }
    return B;
}

// ── Constants ledger for the constrained construction ─────────────

/// Tail conditions for the typicality frequency bound, at given
/// (delta, epsilon) and exponent xi in (0, delta/4).
struct TypicalityTail {
    double delta = 0, epsilon = 0, xi = 0;
    double xi_prime = 0, eps_prime = 0, c_eps = 0;
    bool t1 = false, t2 = false, t3 = false;
    bool all() const { return t1 && t2 && t3; }
};

inline TypicalityTail check_constants_typicality(int n_states, long long N, double delta,
                                                 double epsilon, double xi,
                                                 const std::vector<int>& vstar_sizes) {
    if (!(delta > 0 && delta < 1) || !(epsilon > 0 && epsilon < 1))
        throw ParameterOutOfRange("delta and epsilon must lie in (0,1)");
    if (!(xi > 0 && xi < delta / 4))
        throw ParameterOutOfRange("xi must lie in (0, delta/4)");
    if (vstar_sizes.empty()) throw ParameterOutOfRange("vertex counts required");
    TypicalityTail out;
    out.delta = delta;
    out.epsilon = epsilon;
    out.xi = xi;
    out.xi_prime = (xi + delta / 4.0) / 2.0;
    double max_v = 0, sum_v = 0;
    for (int c : vstar_sizes) {
        max_v = std::max(max_v, static_cast<double>(c));
        sum_v += static_cast<double>(c);
    }
    out.eps_prime = epsilon / ((1.0 + epsilon) * max_v + epsilon);
    out.c_eps = std::min(out.eps_prime * out.eps_prime,
                         -out.eps_prime + (1.0 + out.eps_prime) * std::log1p(out.eps_prime));
    const double dN = static_cast<double>(N);
    const double S = n_states;
    double denom = 1.0 - std::exp(-out.c_eps * std::pow(dN, delta / 4.0 - 1.0));
    double lhs1 = (denom > 0) ? 2.0 * std::exp(-out.c_eps * std::pow(dN, delta / 4.0)) / denom
                              : kInf;
    out.t1 = lhs1 <= std::pow(dN, -out.xi_prime);
    out.t2 = std::pow(dN, out.xi_prime - xi) >= 3.0 * S * S * sum_v;
    out.t3 = std::pow(dN, delta / 2.0) >= (1.0 - out.eps_prime) / out.eps_prime;
    return out;
}

/// The full parameter chain of the constrained construction, derived
/// from (psi, eta) with every open interval resolved to half its upper
/// bound, plus the fifteen size conditions evaluated at N.
struct GeneralConstants {
    int n_states = 0;
    long long N = 0;
    long long n_star = 0;
    double psi = 0, eta = 0, B = 0;
    double L = 0;
    double A = 0.5;
    double epsilon = 0, beta = 0, alpha = 0, alpha_prime = 0;
    double psi_prime = 0, xi = 0, delta_prime = 0, delta = 0;
    double a = 0;  // N^xi
    bool c1 = false, c2 = false, c3 = false, c4 = false, c5 = false, c6 = false,
         c7 = false, c8 = false;
    bool a1 = false, a2 = false, a3 = false, a4 = false, a5 = false, a6 = false,
         a7 = false;
    bool tail_evaluated = false;
    TypicalityTail tail;

    bool all_core() const {
        return c1 && c2 && c3 && c4 && c5 && c6 && c7 && c8 && a1 && a2 && a3 && a4 &&
               a5 && a6 && a7;
    }
};

inline double state_count_polynomial(int n_states) {
    // L = sum over n of C(|S|, n) * n^|S|
    double L = 0;
    for (int n = 1; n <= n_states; ++n) {
        double binom = 1;
        for (int i = 0; i < n; ++i)
            binom = binom * static_cast<double>(n_states - i) / static_cast<double>(i + 1);
        L += binom * std::pow(static_cast<double>(n), n_states);
    }
    return L;
}

inline GeneralConstants check_constants_general(int n_states, long long N, double psi,
                                                double eta, double B,
                                                const std::vector<int>& vstar_sizes = {},
                                                std::optional<long long> n_star = std::nullopt) {
    if (n_states < 1) throw ParameterOutOfRange("need at least one state");
    if (!(psi > 0 && psi < 1) || !(eta > 0 && eta < 1))
        throw ParameterOutOfRange("psi and eta must lie in (0,1)");
    if (!(B >= 1)) throw ParameterOutOfRange("B must be at least 1");
    if (N < 1) throw ParameterOutOfRange("N must be positive");

    GeneralConstants g;
    g.n_states = n_states;
    g.N = N;
    g.n_star = n_star.value_or(N);
    g.psi = psi;
    g.eta = eta;
    g.B = B;
    const double S = n_states;
    g.L = state_count_polynomial(n_states);
    g.epsilon = eta / (56.0 * g.L) / 2.0;
    const double beta_bound = 0.5 * std::pow(g.A / g.L, S) * g.epsilon *
                              (1.0 - g.epsilon) / (B * g.L * g.L * std::pow(S, 4));
    g.beta = beta_bound / 2.0;
    g.alpha = 1.0 / (2.0 * g.beta * S * g.L * g.L);
    g.alpha_prime = (g.alpha / 2.0 - S) / (2.0 * S);
    g.psi_prime = psi / 2.0;
    g.xi = g.psi_prime / (S + 1.0) / 2.0;
    g.delta_prime = g.xi / 2.0 / 2.0;
    g.delta = std::min(g.delta_prime, (1.0 - psi) / 2.0) / 2.0;

    const double dN = static_cast<double>(N);
    const double dNs = static_cast<double>(g.n_star);
    const double eps = g.epsilon;
    g.a = std::pow(dN, g.xi);

    g.c1 = std::pow(dN, g.delta_prime) >= std::pow(dN, g.delta) + 1.0;
    g.c2 = std::pow(dN, g.delta) >= 3.0 / (eps * (1.0 - eps));
    g.c3 = 2.0 + 8.0 * g.L * S * std::pow(dN + S, g.psi_prime) *
                     (1.0 + S * S / std::pow(dN, g.delta)) <=
           std::pow(dN, psi) / S;
    g.c4 = std::pow(dN, g.xi - g.delta) >= 1.0 / eta;
    g.c5 = std::pow(dN, 1.0 - g.delta - g.psi_prime) >= 8.0 * B * g.L * S;
    g.c6 = std::pow(dN, 1.0 - 2.0 * g.delta - psi) >= 42.0 * (B + 1.0) * S / (eps * eps);
    g.c7 = eps * std::pow(dN, 1.0 + g.xi - g.delta) >= 2.0 * (dN + S);
    g.c8 = std::pow(dN, g.delta) >= S * S * (1.0 + 55.0 * eps * g.L) / eps;

    g.a1 = g.beta * (g.a - 1.0) >= std::pow(dN + S, g.delta_prime);
    g.a2 = g.a - 1.0 >= 1.0 / (2.0 * g.beta * S);
    g.a3 = g.L * std::pow(g.a + 1.0, S) <= std::pow(dNs, g.psi_prime);
    g.a4 = (17.0 * 8.0 / (eps * eps * std::pow(dN, 1.0 - g.delta))) *
               (dN / (g.a - 1.0) + B + 1.0) <=
           std::pow(dN, -g.delta) / (g.L * S * S);
    g.a5 = B * (1.0 + 3.0 * eps) * std::pow(g.a + 1.0, S) / std::pow(dN, 1.0 - g.delta) <=
               1.0 / (2.0 * std::pow(dN, g.delta)) &&
           1.0 / (2.0 * std::pow(dN, g.delta)) <= eps;
    g.a6 = std::pow(dN, psi) / S >=
           1.0 + 2.0 * (1.0 + 3.0 * eps) * std::pow(dN, g.delta) * std::pow(g.a + 1.0, S);
    g.a7 = g.a >= 18.0 * S;

    if (!vstar_sizes.empty()) {
        g.tail_evaluated = true;
        g.tail = check_constants_typicality(n_states, N, g.delta, g.epsilon,
                                            g.delta / 8.0, vstar_sizes);
    }
    return g;
}

// ── Auxiliary kernel of the constrained construction ──────────────

/// v on the atom, the observed kernel elsewhere.
inline TransitionMatrix q_k_kernel(const TransitionMatrix& pxstar, StateSet atom,
                                   const TransitionMatrix& v) {
    if (pxstar.size() != v.size()) throw ParameterOutOfRange("kernel sizes differ");
    TransitionMatrix q(pxstar.size());
    for (std::size_t s = 0; s < q.size(); ++s) {
        const TransitionMatrix& src = set_contains(atom, static_cast<int>(s)) ? v : pxstar;
        for (std::size_t t = 0; t < q.size(); ++t) q(s, t) = src(s, t);
    }
    return q;
}

/// Frequent-transition closeness of the witness to the observed kernel
/// on well-visited states; informational at desk scale.
struct WitnessClosenessEntry {
    int state = 0;
    long long visits = 0;
    double sup_dist = 0;
    bool checked = false;  // visits reached N^xi
    bool pass = false;
};

inline std::vector<WitnessClosenessEntry> witness_closeness_report(
    const ObservedSequence& x, const TransitionMatrix& v, double xi, double eta) {
    const auto counts = count_transitions(x);
    const auto px = observed_transition_matrix(counts).p;
    const double threshold = std::pow(static_cast<double>(counts.total), xi);
    std::vector<WitnessClosenessEntry> out;
    for (int s = 0; s < counts.n_states; ++s) {
        WitnessClosenessEntry e;
        e.state = s;
        e.visits = counts.row_totals[s];
        e.sup_dist = row_sup_distance(v, px, static_cast<std::size_t>(s));
        e.checked = static_cast<double>(e.visits) >= threshold;
        e.pass = !e.checked || e.sup_dist <= eta;
        out.push_back(e);
    }
    return out;
}

// ── Hidden-chain construction ─────────────────────────────────────

/// Blueprint of the constrained approximating process: a piecewise
/// chain over pairs (state, target), where the target coordinate is a
/// state of the current atom or the cleared marker. The transition
/// rule is realized lazily by the simulator; materialize_pi builds it
/// explicitly for exact checks.
struct HiddenChainSpec {
    Alphabet alphabet;
    ObservedSequence xstar;
    TransitionMatrix pxstar;
    TransitionMatrix v;
    TransitionMatrix b;
    Partition partition;
    std::vector<StateSet> atoms;           // frequent atoms, most visited last
    std::vector<long long> piece_lengths;  // sums to the original N
    std::vector<Matrix> entry;             // per atom: row s' = entry distribution
    int initial_state = 0;                 // paired with the cleared target
    long long total_length = 0;
    long long n_star = 0;
    double visit_threshold = 0;
    GeneralConstants constants;
    std::vector<StateSet> dropped_atoms;
};

inline HiddenChainSpec build_hidden(const ObservedSequence& x, const ProductPolyhedron& V,
                                    const TransitionMatrix& b,
                                    const GeneralConstants& params,
                                    const TypicalityCertificate& cert) {
    if (!(x.alphabet == V.alphabet))
        throw ParameterOutOfRange("sequence and polyhedra alphabets differ");
    if (b.size() != static_cast<std::size_t>(V.size()))
        throw ParameterOutOfRange("kernel size does not match the polyhedra");
    if (!is_irreducible(b)) throw ReducibleChain("b must be irreducible");
    for (int s = 0; s < V.size(); ++s) {
        std::vector<double> row(b.row(s), b.row(s) + b.size());
        if (!polyhedron_membership(row, V.per_state[s]))
            throw ParameterOutOfRange("b row " + std::to_string(s) +
                                      " lies outside its polyhedron");
    }
    if (!certificate_valid(x, V, cert))
        throw CertificateMismatch("certificate does not match the sequence");

    HiddenChainSpec spec;
    spec.alphabet = x.alphabet;
    spec.constants = params;
    spec.v = cert.v;
    spec.b = b;
    spec.xstar = periodicize_exhaustify(x);
    const auto counts = count_transitions(spec.xstar);
    spec.pxstar = observed_transition_matrix(counts).p;
    const long long N = x.transitions();
    spec.total_length = N;
    spec.n_star = spec.xstar.transitions();
    const double dN = static_cast<double>(N);

    // The witness certificate must survive the periodic extension with
    // tolerance 3 epsilon at exponent delta'; checked directly.
    {
        const double thr = std::pow(static_cast<double>(spec.n_star), params.delta_prime);
        for (int s = 0; s < counts.n_states; ++s) {
            const double ns = static_cast<double>(counts.row_totals[s]);
            for (int t = 0; t < counts.n_states; ++t) {
                if (ns * std::max(spec.pxstar(s, t), spec.v(s, t)) < thr) continue;
                double rel = (spec.pxstar(s, t) > 0)
                                 ? std::fabs(1.0 - spec.v(s, t) / spec.pxstar(s, t))
                                 : kInf;
                if (!(rel <= 3.0 * params.epsilon))
                    throw CertificateMismatch(
                        "extension check failed at pair (" + std::to_string(s) + "," +
                        std::to_string(t) + "): relative error " + fmt17(rel));
            }
        }
    }

    spec.partition = structure_partition(spec.xstar, std::pow(dN, params.xi));
    spec.visit_threshold = std::pow(dN, 1.0 - params.delta);
    spec.atoms =
        detail::order_frequent_atoms(spec.partition.atoms, counts, spec.visit_threshold);
    if (spec.atoms.empty())
        throw DegenerateInput("no atom reaches the visit threshold N^(1-delta)");
    for (StateSet atom : spec.partition.atoms)
        if (std::find(spec.atoms.begin(), spec.atoms.end(), atom) == spec.atoms.end())
            spec.dropped_atoms.push_back(atom);

    long long assigned = 0;
    for (std::size_t k = 0; k < spec.atoms.size(); ++k) {
        long long len;
        if (k + 1 < spec.atoms.size()) {
            len = counts.visits(spec.atoms[k]);
            assigned += len;
        } else {
            len = N - assigned;
        }
        if (len <= 0) throw DegenerateInput("nonpositive piece length");
        spec.piece_lengths.push_back(len);
    }

    const int n = counts.n_states;
    for (StateSet atom : spec.atoms) {
        Matrix e(n, n, 0.0);
        const auto members = set_members(atom);
        for (int sp = 0; sp < n; ++sp) {
            if (set_contains(atom, sp)) {
                e(sp, sp) = 1.0;
                continue;
            }
            auto d = hit_equality_distribution(spec.pxstar, sp, atom);
            for (std::size_t j = 0; j < members.size(); ++j) e(sp, members[j]) = d[j];
        }
        spec.entry.push_back(std::move(e));
    }

    int init = -1;
    for (int s : set_members(spec.atoms.front()))
        if (init < 0 || counts.row_totals[s] > counts.row_totals[init]) init = s;
    spec.initial_state = init;
    return spec;
}

// ── Explicit product-space kernel ─────────────────────────────────

/// Pair states are indexed s * (|S|+1) + target, with target |S|
/// standing for the cleared marker.
struct MaterializedPi {
    int n_states = 0;
    std::size_t omega = 0;
    Matrix pi;
    std::vector<bool> defined;

    std::size_t index(int s, int target) const {
        return static_cast<std::size_t>(s) * (n_states + 1) +
               static_cast<std::size_t>(target < 0 ? n_states : target);
    }
    std::pair<int, int> unpack(std::size_t w) const {
        int s = static_cast<int>(w / (n_states + 1));
        int t = static_cast<int>(w % (n_states + 1));
        return {s, t == n_states ? -1 : t};
    }
};

inline MaterializedPi materialize_pi(const HiddenChainSpec& spec, std::size_t k) {
    const int n = static_cast<int>(spec.pxstar.size());
    const StateSet atom = spec.atoms.at(k);
    const Matrix& entry = spec.entry.at(k);
    MaterializedPi out;
    out.n_states = n;
    out.omega = static_cast<std::size_t>(n) * (n + 1);
    out.pi = Matrix(out.omega, out.omega, 0.0);
    out.defined.assign(out.omega, false);

    for (int s = 0; s < n; ++s) {
        // target cleared
        {
            std::size_t row = out.index(s, -1);
            if (set_contains(atom, s)) {
                out.defined[row] = true;
                for (int sp = 0; sp < n; ++sp) {
                    double w = spec.v(s, sp);
                    if (w == 0.0) continue;
                    if (set_contains(atom, sp)) {
                        out.pi(row, out.index(sp, -1)) += w;
                    } else {
                        for (int t : set_members(atom))
                            out.pi(row, out.index(sp, t)) += w * entry(sp, t);
                    }
                }
            } else {
                out.defined[row] = true;
                for (int sp = 0; sp < n; ++sp) {
                    double wb = spec.b(s, sp);
                    if (wb == 0.0) continue;
                    for (int t : set_members(atom)) {
                        double w = wb * entry(s, t);
                        if (w == 0.0) continue;
                        out.pi(row, out.index(sp, sp == t ? -1 : t)) += w;
                    }
                }
            }
        }
        for (int t = 0; t < n; ++t) {
            std::size_t row = out.index(s, t);
            if (set_contains(atom, t)) {
                if (s == t) continue;  // never entered
                out.defined[row] = true;
                for (int sp = 0; sp < n; ++sp) {
                    double w = spec.b(s, sp);
                    if (w == 0.0) continue;
                    out.pi(row, out.index(sp, sp == t ? -1 : t)) += w;
                }
            } else if (!set_contains(atom, s)) {
                out.defined[row] = true;
                for (int sp = 0; sp < n; ++sp) {
                    double wb = spec.b(s, sp);
                    if (wb == 0.0) continue;
                    for (int tp : set_members(atom)) {
                        double w = wb * entry(s, tp);
                        if (w == 0.0) continue;
                        out.pi(row, out.index(sp, sp == tp ? -1 : tp)) += w;
                    }
                }
            }
        }
    }
    for (std::size_t row = 0; row < out.omega; ++row)
        if (!out.defined[row]) out.pi(row, row) = 1.0;  // unreachable filler
    return out;
}

} // namespace seqchain
