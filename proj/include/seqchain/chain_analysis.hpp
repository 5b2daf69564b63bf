#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "matrix.hpp"
#include "sequence_stats.hpp"
#include "stateset.hpp"

namespace seqchain {

// Exact finite-chain analysis: reachability, hitting times, invariant
// measures, watched chains, and the hitting-time based mixing
// quantities. Everything is a direct dense solve; state spaces are
// small by assumption. Hitting times use +inf as a first-class value.

// ── Reachability ──────────────────────────────────────────────────

/// True iff the support digraph of p is strongly connected.
inline bool is_irreducible(const TransitionMatrix& p) {
    const int n = static_cast<int>(p.size());
    if (n == 0) return false;
    auto reach_from = [&](int start, bool transpose) {
        std::vector<bool> vis(n, false);
        std::vector<int> stack{start};
        vis[start] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int w = 0; w < n; ++w) {
                double edge = transpose ? p(w, u) : p(u, w);
                if (edge > 0.0 && !vis[w]) {
                    vis[w] = true;
                    stack.push_back(w);
                }
            }
        }
        return vis;
    };
    auto fwd = reach_from(0, false);
    auto bwd = reach_from(0, true);
    for (int s = 0; s < n; ++s)
        if (!fwd[s] || !bwd[s]) return false;
    return true;
}

/// Strongly connected components in topological order (Kosaraju).
inline std::vector<StateSet> strongly_connected_components(const TransitionMatrix& p) {
    const int n = static_cast<int>(p.size());
    std::vector<int> order;
    std::vector<bool> vis(n, false);
    // iterative post-order on the forward graph
    for (int s0 = 0; s0 < n; ++s0) {
        if (vis[s0]) continue;
        std::vector<std::pair<int, int>> stack{{s0, 0}};
        vis[s0] = true;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            bool advanced = false;
            for (int w = next; w < n; ++w) {
                if (p(u, w) > 0.0 && !vis[w]) {
                    next = w + 1;
                    vis[w] = true;
                    stack.emplace_back(w, 0);
                    advanced = true;
                    break;
                }
                next = w + 1;
            }
            if (!advanced) {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }
    std::vector<StateSet> comps;
    std::vector<bool> assigned(n, false);
    for (int i = n - 1; i >= 0; --i) {
        int root = order[i];
        if (assigned[root]) continue;
        StateSet comp = 0;
        std::vector<int> stack{root};
        assigned[root] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            comp |= StateSet{1} << u;
            for (int w = 0; w < n; ++w)
                if (p(w, u) > 0.0 && !assigned[w]) {
                    assigned[w] = true;
                    stack.push_back(w);
                }
        }
        comps.push_back(comp);
    }
    return comps;
}

/// Closed recurrent classes: SCCs with no edge leaving them.
inline std::vector<StateSet> recurrent_classes(const TransitionMatrix& p) {
    const int n = static_cast<int>(p.size());
    std::vector<StateSet> out;
    for (StateSet comp : strongly_connected_components(p)) {
        bool closed = true;
        for (int s = 0; s < n && closed; ++s) {
            if (!set_contains(comp, s)) continue;
            for (int t = 0; t < n; ++t)
                if (p(s, t) > 0.0 && !set_contains(comp, t)) { closed = false; break; }
        }
        if (closed) out.push_back(comp);
    }
    return out;
}

namespace detail {

/// States from which the target set is reachable (targets included).
inline std::vector<bool> can_reach(const TransitionMatrix& p, StateSet targets) {
    const int n = static_cast<int>(p.size());
    std::vector<bool> reach(n, false);
    for (int s = 0; s < n; ++s) reach[s] = set_contains(targets, s);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (reach[s] || set_contains(targets, s)) continue;
            for (int t = 0; t < n; ++t)
                if (p(s, t) > 0.0 && reach[t]) { reach[s] = true; changed = true; break; }
        }
    }
    return reach;
}

/// States outside `targets` that hit `targets` almost surely: no path
/// through the complement ever enters a state that cannot reach the
/// target set.
inline std::vector<bool> almost_sure_states(const TransitionMatrix& p, StateSet targets) {
    const int n = static_cast<int>(p.size());
    auto reach = can_reach(p, targets);
    std::vector<bool> good(n, false);
    for (int s = 0; s < n; ++s)
        good[s] = !set_contains(targets, s) && reach[s];
    bool changed = true;
    while (changed) {
        changed = false;
        for (int s = 0; s < n; ++s) {
            if (!good[s]) continue;
            for (int t = 0; t < n; ++t) {
                if (p(s, t) > 0.0 && !set_contains(targets, t) && !good[t]) {
                    good[s] = false;
                    changed = true;
                    break;
                }
            }
        }
    }
    return good;
}

} // namespace detail

// ── Hitting times ─────────────────────────────────────────────────

/// E_s[min{n >= 0 : z_n in A}] for every start state s. Entries are 0
/// on A and +inf where A is not reached almost surely.
inline std::vector<double> hitting_times(const TransitionMatrix& p, StateSet A) {
    const int n = static_cast<int>(p.size());
    if (A == 0) return std::vector<double>(n, kInf);
    auto good = detail::almost_sure_states(p, A);
    std::vector<int> idx(n, -1);
    std::vector<int> states;
    for (int s = 0; s < n; ++s)
        if (good[s]) { idx[s] = static_cast<int>(states.size()); states.push_back(s); }
    std::vector<double> h(n, kInf);
    for (int s = 0; s < n; ++s)
        if (set_contains(A, s)) h[s] = 0.0;
    if (!states.empty()) {
        const std::size_t m = states.size();
        Matrix M(m, m, 0.0);
        std::vector<double> b(m, 1.0);
        for (std::size_t i = 0; i < m; ++i) {
            M(i, i) = 1.0;
            for (int t = 0; t < n; ++t) {
                if (idx[t] >= 0) M(i, idx[t]) -= p(states[i], t);
            }
        }
        auto sol = solve_dense(std::move(M), std::move(b));
        for (std::size_t i = 0; i < m; ++i) h[states[i]] = sol[i];
    }
    return h;
}

inline double expected_hitting_time(const TransitionMatrix& p, int s, StateSet A) {
    if (A == 0) throw ParameterOutOfRange("hitting time of the empty set");
    return hitting_times(p, A)[s];
}

inline double expected_return_time(const TransitionMatrix& p, int s) {
    if (!is_irreducible(p)) throw ReducibleChain("return time needs an irreducible kernel");
    auto h = hitting_times(p, StateSet{1} << s);
    double e = 1.0;
    for (std::size_t t = 0; t < p.size(); ++t) e += p(s, t) * h[t];
    return e;
}

/// max over s, t of E_s[T_t^+]. The kernel is gamma-mixing exactly for
/// gamma at or above this value.
inline double gamma_mixing_constant(const TransitionMatrix& p) {
    if (!is_irreducible(p)) throw ReducibleChain("gamma constant needs an irreducible kernel");
    const int n = static_cast<int>(p.size());
    double gamma = 0.0;
    for (int t = 0; t < n; ++t) {
        auto h = hitting_times(p, StateSet{1} << t);
        double ret = 1.0;
        for (int u = 0; u < n; ++u) ret += p(t, u) * h[u];
        gamma = std::max(gamma, ret);
        for (int s = 0; s < n; ++s)
            if (s != t) gamma = std::max(gamma, h[s]);
    }
    return gamma;
}

// ── Absorption ────────────────────────────────────────────────────

/// probs(u, j) = P_u(the first visit to `targets` happens at its j-th
/// member), members in increasing state order. Rows may sum to less
/// than 1 when part of the mass never reaches the set.
struct AbsorptionResult {
    std::vector<int> targets;
    Matrix probs;
};

inline AbsorptionResult absorption_probabilities(const TransitionMatrix& p, StateSet T) {
    const int n = static_cast<int>(p.size());
    if (T == 0) throw ParameterOutOfRange("absorption into the empty set");
    AbsorptionResult res;
    res.targets = set_members(T);
    const std::size_t k = res.targets.size();
    res.probs = Matrix(n, k, 0.0);
    std::vector<int> tidx(n, -1);
    for (std::size_t j = 0; j < k; ++j) tidx[res.targets[j]] = static_cast<int>(j);
    for (int s = 0; s < n; ++s)
        if (tidx[s] >= 0) res.probs(s, tidx[s]) = 1.0;

    auto reach = detail::can_reach(p, T);
    std::vector<int> idx(n, -1);
    std::vector<int> states;
    for (int s = 0; s < n; ++s)
        if (!set_contains(T, s) && reach[s]) {
            idx[s] = static_cast<int>(states.size());
            states.push_back(s);
        }
    if (!states.empty()) {
        const std::size_t m = states.size();
        Matrix M(m, m, 0.0);
        Matrix B(m, k, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            M(i, i) = 1.0;
            for (int t = 0; t < n; ++t) {
                if (idx[t] >= 0) M(i, idx[t]) -= p(states[i], t);
                else if (tidx[t] >= 0) B(i, tidx[t]) += p(states[i], t);
            }
        }
        Matrix X = solve_dense_multi(M, B);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) res.probs(states[i], j) = X(i, j);
    }
    return res;
}

/// P_s(T_{S\C} < T_t) for s, t in C: the chain leaves C strictly before
/// visiting t.
inline double hit_before_prob(const TransitionMatrix& p, int s, int t, StateSet C) {
    const int n = static_cast<int>(p.size());
    if (!set_contains(C, s) || !set_contains(C, t))
        throw ParameterOutOfRange("hit_before_prob needs s, t inside C");
    if (s == t) return 0.0;
    StateSet comp = set_complement(C, n);
    if (comp == 0) return 0.0;
    auto abs = absorption_probabilities(p, comp | (StateSet{1} << t));
    double out = 0.0;
    for (std::size_t j = 0; j < abs.targets.size(); ++j)
        if (abs.targets[j] != t) out += abs.probs(s, j);
    return out;
}

/// Entry distribution t -> P_u(T_C = T_t) over the members of C in
/// increasing state order. Throws UnreachableSet if mass escapes.
inline std::vector<double> hit_equality_distribution(const TransitionMatrix& p, int u,
                                                     StateSet C) {
    auto abs = absorption_probabilities(p, C);
    std::vector<double> d(abs.targets.size());
    double total = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        d[j] = std::max(0.0, abs.probs(u, j));
        total += d[j];
    }
    if (total < 1.0 - 1e-9)
        throw UnreachableSet("entry distribution is deficient: mass " + fmt17(total));
    for (double& v : d) v /= total;  // strip elimination round-off
    return d;
}

// ── Invariant measures ────────────────────────────────────────────

inline std::vector<double> invariant_measure(const TransitionMatrix& p) {
    if (!is_irreducible(p)) throw ReducibleChain("invariant measure needs an irreducible kernel");
    const std::size_t n = p.size();
    Matrix M(n, n, 0.0);
    std::vector<double> b(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) M(j, i) = p(i, j);
        M(j, j) -= 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) M(n - 1, i) = 1.0;
    b[n - 1] = 1.0;
    auto mu = solve_dense(std::move(M), std::move(b));
    double resid = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::size_t s = 0; s < n; ++s) acc += mu[s] * p(s, t);
        resid = std::max(resid, std::fabs(acc - mu[t]));
    }
    if (resid > 1e-10) throw Error("invariant measure residual " + fmt17(resid));
    return mu;
}

/// Invariant measure supported on one closed recurrent class, zero
/// elsewhere. The class must be closed and strongly connected.
inline std::vector<double> invariant_measure_on_class(const TransitionMatrix& p,
                                                      StateSet cls) {
    const int n = static_cast<int>(p.size());
    auto members = set_members(cls);
    if (members.empty()) throw ParameterOutOfRange("empty class");
    for (int s : members)
        for (int t = 0; t < n; ++t)
            if (!set_contains(cls, t) && p(s, t) > 1e-14)
                throw ReducibleChain("class is not closed");
    TransitionMatrix sub(members.size());
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = 0; j < members.size(); ++j)
            sub(i, j) = p(members[i], members[j]);
    auto mu_sub = invariant_measure(sub);
    std::vector<double> mu(n, 0.0);
    for (std::size_t i = 0; i < members.size(); ++i) mu[members[i]] = mu_sub[i];
    return mu;
}

// ── Watched chain ─────────────────────────────────────────────────

/// Kernel of the chain observed only while in C, over the members of C
/// in increasing state order.
struct WatchedChain {
    std::vector<int> states;
    TransitionMatrix kernel;
};

inline WatchedChain watched_chain(const TransitionMatrix& p, StateSet C) {
    if (C == 0) throw ParameterOutOfRange("watched set must be nonempty");
    if (!is_irreducible(p)) throw ReducibleChain("watched chain needs an irreducible kernel");
    const int n = static_cast<int>(p.size());
    WatchedChain out;
    out.states = set_members(C);
    const std::size_t m = out.states.size();
    out.kernel = TransitionMatrix(m);
    StateSet comp = set_complement(C, n);
    if (comp == 0) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                out.kernel(i, j) = p(out.states[i], out.states[j]);
        return out;
    }
    auto abs = absorption_probabilities(p, C);
    for (std::size_t i = 0; i < m; ++i) {
        int s = out.states[i];
        for (std::size_t j = 0; j < m; ++j) {
            double acc = p(s, out.states[j]);
            for (int u = 0; u < n; ++u)
                if (set_contains(comp, u)) acc += p(s, u) * abs.probs(u, j);
            out.kernel(i, j) = acc;
        }
    }
    return out;
}

// ── Mixing quantities ─────────────────────────────────────────────

/// lambda: worst expected exit time from C. rho: worst over proper
/// subsets D of C of the best expected exit time from D. visit_len:
/// average length of a visit to C under the invariant measure.
/// conductance: minimal invariant-weighted escape flow over proper
/// subsets of C. rho and conductance need |C| >= 2 and default to 0
/// and +inf respectively.
struct MixingStats {
    double lambda = kInf;
    double rho = 0.0;
    double visit_len = kInf;
    double conductance = kInf;
};

inline double conductance_variant(const TransitionMatrix& p,
                                  const std::vector<double>& mu, StateSet C) {
    const int n = static_cast<int>(p.size());
    if (set_size(C) < 2) return kInf;
    double best = kInf;
    for_each_proper_subset(C, [&](StateSet D) {
        double flow = 0.0;
        StateSet dcomp = set_complement(D, n);
        for (int s : set_members(D)) flow += mu[s] * p.row_mass(s, dcomp);
        best = std::min(best, flow);
    });
    return best;
}

inline MixingStats mixing_stats(const TransitionMatrix& p, StateSet C) {
    const int n = static_cast<int>(p.size());
    if (C == 0) throw ParameterOutOfRange("mixing stats of the empty set");
    if (!is_irreducible(p)) throw ReducibleChain("mixing stats need an irreducible kernel");
    MixingStats out;
    auto mu = invariant_measure(p);
    StateSet comp = set_complement(C, n);

    if (comp != 0) {
        auto exit = hitting_times(p, comp);
        out.lambda = 0.0;
        for (int s : set_members(C)) out.lambda = std::max(out.lambda, exit[s]);
    }
    double num = 0.0, den = 0.0;
    for (int s : set_members(C)) {
        num += mu[s];
        den += mu[s] * p.row_mass(s, comp);
    }
    out.visit_len = (den > 0.0) ? num / den : kInf;

    if (set_size(C) >= 2) {
        out.rho = 0.0;
        for_each_proper_subset(C, [&](StateSet D) {
            auto exit = hitting_times(p, set_complement(D, n));
            double best = kInf;
            for (int s : set_members(D)) best = std::min(best, exit[s]);
            out.rho = std::max(out.rho, best);
        });
        out.conductance = conductance_variant(p, mu, C);
    }
    return out;
}

// ── Relative closeness of two kernels on a set ────────────────────

struct ClosenessPair {
    int s = 0;
    int t = 0;
    double p1 = 0.0;
    double p2 = 0.0;
    double rel_err = 0.0;
};

struct ClosenessReport {
    bool close = false;
    bool outside_equal = true;
    double zeta = kInf;
    double threshold = 0.0;
    std::vector<ClosenessPair> checked;
    std::vector<ClosenessPair> violations;
    std::vector<int> outside_mismatch;
};

/// Checks that p2 agrees with p1 exactly outside C and that every
/// frequently used transition inside C matches in relative terms. A
/// pair (s, t) is checked when mu1(s) * max(p1, p2) reaches beta times
/// the conductance variant of p1 on C.
inline ClosenessReport closeness_check(const TransitionMatrix& p1,
                                       const TransitionMatrix& p2, StateSet C,
                                       double beta, double eps) {
    if (p1.size() != p2.size()) throw ParameterOutOfRange("kernel sizes differ");
    if (beta <= 0 || eps <= 0) throw ParameterOutOfRange("beta and eps must be positive");
    if (set_size(C) < 2) throw ParameterOutOfRange("closeness needs |C| >= 2");
    if (!is_irreducible(p1)) throw ReducibleChain("closeness reference must be irreducible");
    const int n = static_cast<int>(p1.size());
    ClosenessReport rep;
    auto mu1 = invariant_measure(p1);
    rep.zeta = conductance_variant(p1, mu1, C);
    rep.threshold = beta * rep.zeta;

    for (int s = 0; s < n; ++s) {
        if (set_contains(C, s)) continue;
        for (int t = 0; t < n; ++t) {
            if (p1(s, t) != p2(s, t)) {
                rep.outside_equal = false;
                rep.outside_mismatch.push_back(s);
                break;
            }
        }
    }
    for (int s : set_members(C)) {
        for (int t : set_members(C)) {
            double hi = std::max(p1(s, t), p2(s, t));
            if (mu1[s] * hi < rep.threshold) continue;
            ClosenessPair pair;
            pair.s = s;
            pair.t = t;
            pair.p1 = p1(s, t);
            pair.p2 = p2(s, t);
            pair.rel_err = (p1(s, t) > 0.0) ? std::fabs(1.0 - p2(s, t) / p1(s, t)) : kInf;
            rep.checked.push_back(pair);
            if (!(pair.rel_err <= eps)) rep.violations.push_back(pair);
        }
    }
    rep.close = rep.outside_equal && rep.violations.empty();
    return rep;
}

} // namespace seqchain
