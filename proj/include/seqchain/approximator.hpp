#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chain_analysis.hpp"
#include "partition.hpp"
#include "sequence_stats.hpp"

namespace seqchain {

// ── Size conditions for the basic guarantee ───────────────────────

/// The six inequalities in N under which the basic approximation
/// guarantee is claimed, plus the minimal N satisfying the two primary
/// ones. Values of N beyond the search cap are reported as
/// astronomical.
struct BasicConstants {
    int n_states = 0;
    long long N = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    double zeta = 0.0;
    double a = 0.0;  // split threshold N^(4 delta)
    bool range_ok = true;  // parameters inside their admissible intervals
    bool n1 = false, n2 = false, n3 = false, n4 = false, n5 = false, n6 = false;
    long long minimal_N0 = 0;
    bool astronomical = false;

    bool all() const { return range_ok && n1 && n2 && n3 && n4 && n5 && n6; }
};

namespace detail {

inline bool basic_n1(double N, int S, double eps, double delta) {
    return std::pow(N, 1.0 - (4.0 * S + 1.0) * delta) > std::pow(2.0, S) / eps;
}
inline bool basic_n2(double N, int S, double eps, double delta, double zeta) {
    return std::pow(N, 2.0 * delta - zeta) > 4.0 * 17.0 * std::pow(S, 4) / (eps * eps);
}

/// Fills the condition booleans without range validation; desk-scale
/// builds stamp their report with the outcome instead of refusing.
inline BasicConstants eval_basic_constants(int n_states, long long N, double epsilon,
                                           double delta, double zeta) {
    BasicConstants out;
    out.n_states = n_states;
    out.N = N;
    out.epsilon = epsilon;
    out.delta = delta;
    out.zeta = zeta;
    out.range_ok = epsilon > 0 && epsilon < 0.5 && delta > 0 &&
                   delta < 1.0 / (2.0 * (4.0 * n_states + 1.0)) && zeta > 0 &&
                   zeta < 2.0 * delta;
    const double S = n_states;
    const double dN = static_cast<double>(N);
    out.a = std::pow(dN, 4.0 * delta);
    out.n1 = basic_n1(dN, n_states, epsilon, delta);
    out.n2 = basic_n2(dN, n_states, epsilon, delta, zeta);
    out.n3 = std::pow(out.a + 1.0, S) * std::pow(dN, delta - 1.0) <=
             epsilon / (std::pow(2.0, S) + 1.0);
    out.n4 = std::pow(dN, delta) > std::max(S * S / epsilon, 2.0 * S + 2.0);
    out.n5 = std::pow(dN, 2.0 * delta) >= 8.0 / epsilon;
    out.n6 = std::pow(dN, 4.0 * delta) >= std::max(1.0 / epsilon, 10.0 * S);

    // Minimal N satisfying the two primary inequalities, by galloping +
    // bisection on the monotone predicate.
    const long long cap = (1LL << 62);
    auto ok = [&](long long cand) {
        double c = static_cast<double>(cand);
        return basic_n1(c, n_states, epsilon, delta) &&
               basic_n2(c, n_states, epsilon, delta, zeta);
    };
    long long hi = 2;
    while (hi < cap && !ok(hi)) hi *= 2;
    if (!ok(hi)) {
        out.minimal_N0 = cap;
        out.astronomical = true;
    } else {
        long long lo = hi / 2;
        while (lo + 1 < hi) {
            long long mid = lo + (hi - lo) / 2;
            if (ok(mid)) hi = mid; else lo = mid;
        }
        out.minimal_N0 = hi;
        out.astronomical = out.minimal_N0 > 1000000000000000LL;
    }
    return out;
}

} // namespace detail

inline BasicConstants check_constants_basic(int n_states, long long N, double epsilon,
                                            double delta, double zeta) {
    if (n_states < 1) throw ParameterOutOfRange("need at least one state");
    if (!(epsilon > 0 && epsilon < 0.5))
        throw ParameterOutOfRange("epsilon must lie in (0, 1/2)");
    if (!(delta > 0 && delta < 1.0 / (2.0 * (4.0 * n_states + 1.0))))
        throw ParameterOutOfRange("delta must lie in (0, 1/(2(4|S|+1)))");
    if (!(zeta > 0 && zeta < 2.0 * delta))
        throw ParameterOutOfRange("zeta must lie in (0, 2 delta)");
    if (N < 1) throw ParameterOutOfRange("N must be positive");
    return detail::eval_basic_constants(n_states, N, epsilon, delta, zeta);
}

// ── Piecewise homogeneous chain ───────────────────────────────────

struct Piece {
    StateSet atom = 0;
    long long length = 0;
    TransitionMatrix kernel;  // full-size; rows outside the atom move into it
};

struct PiecewiseChain {
    Alphabet alphabet;
    std::vector<Piece> pieces;
    std::vector<double> initial;
    long long total_length = 0;

    void validate() const {
        long long sum = 0;
        for (const auto& pc : pieces) {
            if (pc.length <= 0) throw Error("piece length must be positive");
            pc.kernel.validate(1e-9);
            for (std::size_t s = 0; s < pc.kernel.size(); ++s) {
                double inside = pc.kernel.row_mass(s, pc.atom);
                if (std::fabs(inside - 1.0) > 1e-9)
                    throw Error("piece kernel row escapes its atom");
            }
            sum += pc.length;
        }
        if (sum != total_length) throw Error("piece lengths do not sum to the total");
        double mass = 0;
        for (double w : initial) mass += w;
        if (std::fabs(mass - 1.0) > 1e-9) throw Error("initial distribution mass");
    }
};

// ── Basic construction ────────────────────────────────────────────

struct BasicBuild {
    PiecewiseChain chain;
    ObservedSequence xstar;
    TransitionMatrix pxstar;
    Partition partition;
    std::vector<StateSet> dropped_atoms;  // below the visit threshold
    BasicConstants constants;
    double visit_threshold = 0.0;  // N^(1-delta)
    double structural_deviation = 0.0;
    double structural_bound = 0.0;  // worst run_count(S_k)/min visits bound
};

namespace detail {

/// Orders the frequently visited atoms: most visited last, the rest by
/// descending visit count; ties by the smallest member index.
inline std::vector<StateSet> order_frequent_atoms(const std::vector<StateSet>& atoms,
                                                  const TransitionCounts& counts,
                                                  double threshold) {
    std::vector<StateSet> frequent;
    for (StateSet atom : atoms)
        if (static_cast<double>(counts.visits(atom)) >= threshold)
            frequent.push_back(atom);
    std::stable_sort(frequent.begin(), frequent.end(), [&](StateSet a, StateSet b) {
        long long va = counts.visits(a), vb = counts.visits(b);
        if (va != vb) return va > vb;
        return set_members(a).front() < set_members(b).front();
    });
    if (frequent.size() > 1)
        std::rotate(frequent.begin(), frequent.begin() + 1, frequent.end());
    return frequent;
}

inline TransitionMatrix embed_piece_kernel(const WatchedChain& watched, StateSet atom,
                                           int n_states) {
    TransitionMatrix k(static_cast<std::size_t>(n_states));
    const auto members = set_members(atom);
    for (int s = 0; s < n_states; ++s) {
        if (set_contains(atom, s)) {
            auto it = std::find(members.begin(), members.end(), s);
            std::size_t i = static_cast<std::size_t>(it - members.begin());
            for (std::size_t j = 0; j < members.size(); ++j)
                k(s, members[j]) = watched.kernel(i, j);
        } else {
            // Any row supported on the atom works here; uniform keeps it
            // parameter free.
            for (int t : members) k(s, t) = 1.0 / static_cast<double>(members.size());
        }
    }
    return k;
}

} // namespace detail

/// Builds the piecewise approximating chain for a sequence: extend to a
/// periodic exhaustive sequence, partition with threshold N^(4 delta),
/// keep the atoms visited at least N^(1-delta) times, and give each
/// kept atom one piece whose kernel is the observed kernel watched on
/// that atom. The last piece absorbs the stages of the dropped atoms.
inline BasicBuild build_basic(const ObservedSequence& x, double epsilon, double delta,
                              std::optional<double> zeta = std::nullopt) {
    if (!(delta > 0)) throw ParameterOutOfRange("delta must be positive");
    BasicBuild out;
    out.xstar = periodicize_exhaustify(x);
    const auto counts = count_transitions(out.xstar);
    const long long N = counts.total;
    const double dN = static_cast<double>(N);
    const int n = counts.n_states;

    out.constants = detail::eval_basic_constants(n, N, epsilon, delta,
                                                 zeta.value_or(delta));
    out.partition = structure_partition(out.xstar, std::pow(dN, 4.0 * delta));
    out.pxstar = observed_transition_matrix(counts).p;
    out.visit_threshold = std::pow(dN, 1.0 - delta);

    auto order = detail::order_frequent_atoms(out.partition.atoms, counts,
                                              out.visit_threshold);
    if (order.empty())
        throw DegenerateInput(
            "no atom reaches the visit threshold; needs N >= |S|^(1/delta)");
    for (StateSet atom : out.partition.atoms)
        if (std::find(order.begin(), order.end(), atom) == order.end())
            out.dropped_atoms.push_back(atom);

    out.chain.alphabet = out.xstar.alphabet;
    out.chain.total_length = N;
    long long assigned = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        Piece piece;
        piece.atom = order[k];
        if (k + 1 < order.size()) {
            piece.length = counts.visits(order[k]);
            assigned += piece.length;
        } else {
            piece.length = N - assigned;
        }
        if (piece.length <= 0) throw DegenerateInput("nonpositive piece length");
        piece.kernel = detail::embed_piece_kernel(watched_chain(out.pxstar, piece.atom),
                                                  piece.atom, n);
        out.chain.pieces.push_back(std::move(piece));
    }

    // initial state: the most occupied state of the first atom
    out.chain.initial.assign(n, 0.0);
    int init = -1;
    for (int s : set_members(order.front()))
        if (init < 0 || counts.row_totals[s] > counts.row_totals[init]) init = s;
    out.chain.initial[init] = 1.0;

    // structural deviation from the observed kernel, and its run bound
    for (const auto& piece : out.chain.pieces) {
        long long min_visits = 0;
        for (int s : set_members(piece.atom)) {
            out.structural_deviation = std::max(
                out.structural_deviation,
                row_sup_distance(piece.kernel, out.pxstar, static_cast<std::size_t>(s)));
            if (min_visits == 0 || counts.row_totals[s] < min_visits)
                min_visits = counts.row_totals[s];
        }
        out.structural_bound =
            std::max(out.structural_bound,
                     static_cast<double>(run_count(counts, piece.atom)) /
                         static_cast<double>(min_visits));
    }
    out.chain.validate();
    return out;
}

// ── Watched-kernel mixing report ──────────────────────────────────

struct WatchedMixingEntry {
    StateSet atom = 0;
    bool applicable = false;  // singletons are skipped
    double gamma = 0.0;
    double bound = 0.0;  // N^(1-3 delta)
    bool pass = false;
};

/// For each multi-state atom, compares the gamma constant of the
/// observed kernel watched on the atom against N^(1-3 delta). At desk
/// scale the bound often fails; the entries are informational.
inline std::vector<WatchedMixingEntry> verify_watched_mixing(const ObservedSequence& xstar,
                                                             const Partition& part,
                                                             double delta) {
    const auto counts = count_transitions(xstar);
    const double bound = std::pow(static_cast<double>(counts.total), 1.0 - 3.0 * delta);
    const auto px = observed_transition_matrix(counts).p;
    std::vector<WatchedMixingEntry> out;
    for (StateSet atom : part.atoms) {
        WatchedMixingEntry e;
        e.atom = atom;
        e.bound = bound;
        if (set_size(atom) >= 2) {
            e.applicable = true;
            e.gamma = gamma_mixing_constant(watched_chain(px, atom).kernel);
            e.pass = e.gamma <= bound;
        }
        out.push_back(e);
    }
    return out;
}

// ── Piecewise chain serialization ─────────────────────────────────
// Structured text, 17 significant digits, loadable back field for
// field.

inline void write_piecewise(std::ostream& out, const PiecewiseChain& chain) {
    out << "piecewise-chain v1\n";
    out << "alphabet:";
    for (const auto& s : chain.alphabet.symbols) out << ' ' << s;
    out << "\npieces: " << chain.pieces.size();
    out << "\ntotal_length: " << chain.total_length;
    out << "\ninitial:";
    for (double w : chain.initial) out << ' ' << fmt17(w);
    out << '\n';
    for (std::size_t k = 0; k < chain.pieces.size(); ++k) {
        const auto& pc = chain.pieces[k];
        out << "piece " << k << '\n';
        out << "atom: " << chain.alphabet.subset_to_string(pc.atom) << '\n';
        out << "length: " << pc.length << '\n';
        out << "kernel:\n";
        write_matrix(out, pc.kernel.m);
    }
}

inline void save_piecewise(const std::string& path, const PiecewiseChain& chain) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    write_piecewise(out, chain);
}

inline PiecewiseChain load_piecewise(std::istream& in) {
    auto expect = [&](const std::string& prefix) {
        std::string line;
        if (!std::getline(in, line) || line.rfind(prefix, 0) != 0)
            throw ParseError("piecewise chain file: expected '" + prefix + "'");
        return line.substr(prefix.size());
    };
    expect("piecewise-chain v1");
    PiecewiseChain chain;
    {
        std::istringstream ls(expect("alphabet:"));
        std::vector<std::string> symbols;
        std::string tok;
        while (ls >> tok) symbols.push_back(tok);
        chain.alphabet = Alphabet(symbols);
    }
    std::size_t n_pieces = std::stoull(expect("pieces: "));
    chain.total_length = std::stoll(expect("total_length: "));
    {
        std::istringstream ls(expect("initial:"));
        std::string tok;
        while (ls >> tok) chain.initial.push_back(parse_real(tok));
    }
    const std::size_t n = chain.alphabet.symbols.size();
    if (chain.initial.size() != n) throw ParseError("initial distribution size");
    for (std::size_t k = 0; k < n_pieces; ++k) {
        expect("piece ");
        Piece pc;
        pc.atom = chain.alphabet.parse_subset(expect("atom: "));
        pc.length = std::stoll(expect("length: "));
        expect("kernel:");
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            std::string line;
            if (!std::getline(in, line)) throw ParseError("kernel row missing");
            std::istringstream ls(line);
            std::string tok;
            for (std::size_t j = 0; j < n; ++j) {
                if (!(ls >> tok)) throw ParseError("kernel row too short");
                m(i, j) = parse_real(tok);
            }
        }
        pc.kernel = TransitionMatrix(std::move(m));
        chain.pieces.push_back(std::move(pc));
    }
    chain.validate();
    return chain;
}

inline PiecewiseChain load_piecewise_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return load_piecewise(in);
}

} // namespace seqchain
