#pragma once

// Shared generators and independent oracles for the test suites. The
// oracles recompute quantities along a different route than the library
// (direct scans, power iteration, Monte Carlo) and stay independent of
// the implementation they check.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <seqchain/alphabet.hpp>
#include <seqchain/matrix.hpp>
#include <seqchain/rng.hpp>
#include <seqchain/sequence_stats.hpp>

namespace testutil {

using namespace seqchain;

inline Alphabet letters(int n) {
    std::vector<std::string> syms;
    for (int i = 0; i < n; ++i) syms.push_back(std::string(1, static_cast<char>('a' + i)));
    return Alphabet(syms);
}

inline ObservedSequence random_sequence(std::mt19937_64& gen, int n_states, int length) {
    std::uniform_int_distribution<int> pick(0, n_states - 1);
    std::vector<int> entries(length);
    for (auto& e : entries) e = pick(gen);
    return ObservedSequence(letters(n_states), std::move(entries));
}

/// Dense random kernel with every entry at least `floor_mass / n`, so it
/// is irreducible and well conditioned.
inline TransitionMatrix random_dense_kernel(std::mt19937_64& gen, int n,
                                            double floor_mass = 0.1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    TransitionMatrix p(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        double total = 0;
        std::vector<double> row(n);
        for (int t = 0; t < n; ++t) {
            row[t] = -std::log(1.0 - u(gen));
            total += row[t];
        }
        for (int t = 0; t < n; ++t)
            p(s, t) = (1.0 - floor_mass) * row[t] / total + floor_mass / n;
    }
    return p;
}

inline StateSet random_subset(std::mt19937_64& gen, int n, int min_size, int max_size) {
    std::uniform_int_distribution<int> usize(min_size, max_size);
    int size = usize(gen);
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), gen);
    StateSet set = 0;
    for (int i = 0; i < size; ++i) set |= StateSet{1} << idx[i];
    return set;
}

/// Oracle: run count by scanning the sequence for maximal blocks.
inline long long naive_run_count(const ObservedSequence& x, StateSet C) {
    long long runs = 0;
    bool inside = false;
    for (int v : x.entries) {
        bool now = set_contains(C, v);
        if (now && !inside) runs++;
        inside = now;
    }
    return runs;
}

/// Oracle: transition counts by a direct pairwise scan.
inline std::vector<long long> naive_pair_counts(const ObservedSequence& x) {
    const int n = x.alphabet.size();
    std::vector<long long> c(static_cast<std::size_t>(n) * n, 0);
    for (std::size_t i = 0; i + 1 < x.entries.size(); ++i)
        c[static_cast<std::size_t>(x.entries[i]) * n + x.entries[i + 1]]++;
    return c;
}

/// Oracle: invariant measure by power iteration to a fixed point.
inline std::vector<double> power_iteration_invariant(const TransitionMatrix& p,
                                                     int iters = 200000,
                                                     double tol = 1e-13) {
    const int n = static_cast<int>(p.size());
    std::vector<double> mu(n, 1.0 / n), next(n);
    for (int it = 0; it < iters; ++it) {
        for (int t = 0; t < n; ++t) {
            double acc = 0;
            for (int s = 0; s < n; ++s) acc += mu[s] * p(s, t);
            next[t] = acc;
        }
        double diff = 0, total = 0;
        for (int t = 0; t < n; ++t) total += next[t];
        for (int t = 0; t < n; ++t) {
            next[t] /= total;
            diff = std::max(diff, std::fabs(next[t] - mu[t]));
        }
        mu.swap(next);
        if (diff < tol) break;
    }
    return mu;
}

/// Monte Carlo run of a homogeneous kernel until the target set is hit;
/// returns steps taken (capped).
inline long long mc_steps_to_hit(Rng& rng, const TransitionMatrix& p, int start,
                                 StateSet target, long long cap = 1000000) {
    int s = start;
    long long steps = 0;
    while (!set_contains(target, s) && steps < cap) {
        s = rng.categorical(p.row(static_cast<std::size_t>(s)),
                            static_cast<int>(p.size()));
        steps++;
    }
    return steps;
}

/// All set partitions of {0..n-1}, as lists of bitmasks.
inline std::vector<std::vector<StateSet>> all_set_partitions(int n) {
    std::vector<std::vector<StateSet>> out;
    std::vector<int> assign(n, 0);
    auto rec = [&](auto&& self, int i, int used) -> void {
        if (i == n) {
            std::vector<StateSet> atoms(used, 0);
            for (int j = 0; j < n; ++j) atoms[assign[j]] |= StateSet{1} << j;
            out.push_back(atoms);
            return;
        }
        for (int b = 0; b <= used; ++b) {
            assign[i] = b;
            self(self, i + 1, std::max(used, b + 1));
        }
    };
    rec(rec, 0, 0);
    return out;
}

} // namespace testutil
