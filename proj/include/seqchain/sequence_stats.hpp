#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "alphabet.hpp"
#include "matrix.hpp"
#include "stateset.hpp"

namespace seqchain {

// ── Transition counts ─────────────────────────────────────────────

/// Pairwise transition counts of a sequence. counts(s,t) is the number
/// of positions n < N with (x_n, x_{n+1}) = (s, t); total is N.
struct TransitionCounts {
    int n_states = 0;
    std::vector<long long> counts;      // row-major n_states x n_states
    std::vector<long long> row_totals;  // stages spent in s (last entry excluded)
    long long total = 0;
    int first_state = -1;
    int last_state = -1;

    long long at(int s, int t) const { return counts[s * n_states + t]; }
    long long& at(int s, int t) { return counts[s * n_states + t]; }

    /// Transitions from A into B, both arbitrary subsets.
    long long between(StateSet A, StateSet B) const {
        long long acc = 0;
        for (int s = 0; s < n_states; ++s) {
            if (!set_contains(A, s)) continue;
            for (int t = 0; t < n_states; ++t)
                if (set_contains(B, t)) acc += at(s, t);
        }
        return acc;
    }

    long long visits(StateSet A) const {
        long long acc = 0;
        for (int s = 0; s < n_states; ++s)
            if (set_contains(A, s)) acc += row_totals[s];
        return acc;
    }
};

inline TransitionCounts count_transitions(const ObservedSequence& x) {
    TransitionCounts c;
    c.n_states = x.alphabet.size();
    c.counts.assign(static_cast<std::size_t>(c.n_states) * c.n_states, 0);
    c.row_totals.assign(c.n_states, 0);
    for (std::size_t n = 0; n + 1 < x.entries.size(); ++n) {
        c.at(x.entries[n], x.entries[n + 1])++;
        c.row_totals[x.entries[n]]++;
    }
    c.total = x.transitions();
    c.first_state = x.first();
    c.last_state = x.last();
    return c;
}

// ── Occupancy ─────────────────────────────────────────────────────

using OccupancyMeasure = std::vector<double>;

inline OccupancyMeasure occupancy_measure(const TransitionCounts& c) {
    OccupancyMeasure w(c.n_states, 0.0);
    for (int s = 0; s < c.n_states; ++s)
        w[s] = static_cast<double>(c.row_totals[s]) / static_cast<double>(c.total);
    return w;
}

// ── Observed kernel ───────────────────────────────────────────────

/// Empirical one-step transition kernel. A row whose state is never
/// left (row total zero) is filled uniformly and flagged unvisited;
/// any stochastic row would do there.
struct ObservedKernel {
    TransitionMatrix p;
    std::vector<bool> unvisited;
};

inline ObservedKernel observed_transition_matrix(const TransitionCounts& c) {
    const int n = c.n_states;
    ObservedKernel out;
    out.p = TransitionMatrix(static_cast<std::size_t>(n));
    out.unvisited.assign(n, false);
    for (int s = 0; s < n; ++s) {
        if (c.row_totals[s] > 0) {
            for (int t = 0; t < n; ++t)
                out.p(s, t) = static_cast<double>(c.at(s, t)) /
                              static_cast<double>(c.row_totals[s]);
        } else {
            out.unvisited[s] = true;
            for (int t = 0; t < n; ++t) out.p(s, t) = 1.0 / n;
        }
    }
    return out;
}

inline TransitionMatrix observed_transition_matrix(const ObservedSequence& x) {
    return observed_transition_matrix(count_transitions(x)).p;
}

// ── Run counts ────────────────────────────────────────────────────
// A C-run is a maximal consecutive block of the sequence inside C.

inline long long run_count(const TransitionCounts& c, StateSet C) {
    if (C == 0) return 0;
    StateSet comp = set_complement(C, c.n_states);
    long long r = c.between(comp, C);
    if (set_contains(C, c.first_state)) r += 1;
    return r;
}

inline long long run_count(const ObservedSequence& x, StateSet C) {
    return run_count(count_transitions(x), C);
}

/// Same count from the other end of each run: exits from C plus an
/// indicator for a run still open at the final entry.
inline long long run_count_via_exits(const TransitionCounts& c, StateSet C) {
    if (C == 0) return 0;
    StateSet comp = set_complement(C, c.n_states);
    long long r = c.between(C, comp);
    if (set_contains(C, c.last_state)) r += 1;
    return r;
}

// ── Exhaustive / periodic extension ───────────────────────────────

inline bool is_exhaustive(const ObservedSequence& x) {
    auto c = count_transitions(x);
    for (int s = 0; s < c.n_states; ++s)
        if (c.row_totals[s] == 0) return false;
    return true;
}

inline bool is_periodic(const ObservedSequence& x) {
    return x.first() == x.last();
}

/// Extends a sequence so that every state is visited and the last entry
/// equals the first. Already exhaustive and periodic inputs are
/// returned unchanged. Otherwise the states missing from the whole
/// sequence are appended in alphabet order, followed by the first
/// entry.
inline ObservedSequence periodicize_exhaustify(const ObservedSequence& x) {
    if (is_exhaustive(x) && is_periodic(x)) return x;
    std::vector<bool> seen(x.alphabet.size(), false);
    for (int v : x.entries) seen[v] = true;
    std::vector<int> out = x.entries;
    for (int s = 0; s < x.alphabet.size(); ++s)
        if (!seen[s]) out.push_back(s);
    out.push_back(x.first());
    return ObservedSequence(x.alphabet, std::move(out));
}

} // namespace seqchain
