#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "sequence_stats.hpp"
#include "stateset.hpp"

namespace seqchain {

// Run-structure partition of the state space: runs of any atom are few,
// runs of any proper subset of an atom are many.
//
// (P1) run_count(C) <= (a+1)^K for every atom C, K = number of atoms.
// (P2) run_count(D) > a * run_count(C) for every atom C and nonempty
//      proper D inside C.
//
// (P1) is enforced with the atom-count exponent, which is what the
// refinement argument actually maintains.

struct Partition {
    std::vector<StateSet> atoms;
    double a = 0.0;
};

/// Greedy refinement: start from the whole space and keep splitting an
/// atom that violates (P2). The violating pair is chosen
/// deterministically (lowest atom index, then minimal run count of the
/// subset, then ascending bitmask), and the two halves replace the atom
/// in place, subset first. Terminates after at most |S|-1 splits.
inline Partition structure_partition(const ObservedSequence& x, double a) {
    if (!(a > 0)) throw ParameterOutOfRange("split threshold must be positive");
    const auto counts = count_transitions(x);
    const int n = counts.n_states;
    Partition part;
    part.a = a;
    part.atoms = {full_set(n)};

    auto runs = [&](StateSet C) { return run_count(counts, C); };

    for (;;) {
        bool split = false;
        for (std::size_t i = 0; i < part.atoms.size() && !split; ++i) {
            StateSet C = part.atoms[i];
            if (set_size(C) < 2) continue;
            long long rc = runs(C);
            std::optional<StateSet> best;
            long long best_runs = 0;
            for_each_proper_subset(C, [&](StateSet D) {
                long long rd = runs(D);
                if (static_cast<double>(rd) <= a * static_cast<double>(rc)) {
                    if (!best || rd < best_runs) {
                        best = D;
                        best_runs = rd;
                    }
                }
            });
            if (best) {
                StateSet D = *best;
                part.atoms[i] = D;
                part.atoms.insert(part.atoms.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                                  C & ~D);
                split = true;
            }
        }
        if (!split) break;
    }
    return part;
}

struct PartitionWitness {
    StateSet atom = 0;
    StateSet subset = 0;   // 0 for (P1) failures
    long long atom_runs = 0;
    long long subset_runs = 0;
};

struct PartitionReport {
    bool p1_ok = true;
    bool p2_ok = true;
    std::vector<PartitionWitness> p1_witnesses;
    std::vector<PartitionWitness> p2_witnesses;
    std::vector<long long> atom_runs;
};

/// Checks (P1) and (P2) by full subset enumeration inside each atom.
inline PartitionReport verify_partition(const ObservedSequence& x, const Partition& part) {
    const auto counts = count_transitions(x);
    const int n = counts.n_states;
    StateSet covered = 0;
    for (StateSet atom : part.atoms) {
        if (atom == 0) throw ParameterOutOfRange("empty atom");
        if (covered & atom) throw ParameterOutOfRange("atoms overlap");
        covered |= atom;
    }
    if (covered != full_set(n)) throw ParameterOutOfRange("atoms do not cover the alphabet");

    PartitionReport rep;
    const double k = static_cast<double>(part.atoms.size());
    const double p1_bound = std::pow(part.a + 1.0, k);
    for (StateSet C : part.atoms) {
        long long rc = run_count(counts, C);
        rep.atom_runs.push_back(rc);
        if (static_cast<double>(rc) > p1_bound) {
            rep.p1_ok = false;
            rep.p1_witnesses.push_back({C, 0, rc, 0});
        }
        for_each_proper_subset(C, [&](StateSet D) {
            long long rd = run_count(counts, D);
            if (!(static_cast<double>(rd) > part.a * static_cast<double>(rc))) {
                rep.p2_ok = false;
                rep.p2_witnesses.push_back({C, D, rc, rd});
            }
        });
    }
    return rep;
}

} // namespace seqchain
