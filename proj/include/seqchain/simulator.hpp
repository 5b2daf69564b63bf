#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "approximator.hpp"
#include "constrained.hpp"
#include "rng.hpp"

namespace seqchain {

// Seeded simulation of the approximating processes plus the Monte
// Carlo verification reports. Trials are independent; trial i uses
// trial_seed(master, i), so reports do not depend on scheduling.

// ── Confidence intervals ──────────────────────────────────────────

struct WilsonCI {
    double lo = 0, hi = 1;
};

/// 95% Wilson score interval.
inline WilsonCI wilson_interval(long long successes, long long trials) {
    if (trials <= 0) return {0, 1};
    const double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (ph + z2 / (2 * n)) / denom;
    const double half = z * std::sqrt(ph * (1 - ph) / n + z2 / (4 * n * n)) / denom;
    WilsonCI ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (successes == 0) ci.lo = 0.0;
    if (successes == trials) ci.hi = 1.0;
    return ci;
}

// ── Piecewise chain walker ────────────────────────────────────────

class PiecewiseWalker {
public:
    explicit PiecewiseWalker(const PiecewiseChain& chain) : chain_(&chain) {
        long long acc = 0;
        for (const auto& pc : chain.pieces) {
            acc += pc.length;
            bounds_.push_back(acc);
        }
    }

    int reset(Rng& rng) {
        state_ = rng.categorical(chain_->initial.data(),
                                 static_cast<int>(chain_->initial.size()));
        piece_ = 0;
        return state_;
    }

    /// Draws the state of stage m (1-based). Stages must be visited in
    /// increasing order after reset. Stage N falls back to the last
    /// piece, whose kernel also serves as the final transition row.
    int step(Rng& rng, long long stage) {
        while (piece_ + 1 < bounds_.size() && stage >= bounds_[piece_]) ++piece_;
        const auto& k = chain_->pieces[piece_].kernel;
        state_ = rng.categorical(k.row(static_cast<std::size_t>(state_)),
                                 static_cast<int>(k.size()));
        return state_;
    }

    int state() const { return state_; }

private:
    const PiecewiseChain* chain_;
    std::vector<long long> bounds_;
    int state_ = 0;
    std::size_t piece_ = 0;
};

inline std::vector<int> simulate_piecewise(const PiecewiseChain& chain,
                                           std::uint64_t seed) {
    Rng rng(seed);
    PiecewiseWalker w(chain);
    std::vector<int> path;
    path.reserve(static_cast<std::size_t>(chain.total_length) + 1);
    path.push_back(w.reset(rng));
    for (long long m = 1; m <= chain.total_length; ++m) path.push_back(w.step(rng, m));
    return path;
}

// ── Hidden chain walker ───────────────────────────────────────────

class HiddenWalker {
public:
    static constexpr int kClear = -1;

    explicit HiddenWalker(const HiddenChainSpec& spec) : spec_(&spec) {
        long long acc = 0;
        for (long long len : spec.piece_lengths) {
            acc += len;
            bounds_.push_back(acc);
        }
        n_ = static_cast<int>(spec.pxstar.size());
    }

    void reset() {
        s_ = spec_->initial_state;
        t_ = kClear;
        piece_ = 0;
    }

    struct Step {
        int s = 0;
        int t = kClear;
        bool used_v = false;  // the realized marginal row was v(prev,.)
        int prev = 0;
    };

    /// One transition of the pair chain. The rule set of the piece
    /// containing `stage` applies; a target left over from an earlier
    /// piece is cleared when the state already sits in the new atom.
    Step step(Rng& rng, long long stage) {
        while (piece_ + 1 < bounds_.size() && stage >= bounds_[piece_]) ++piece_;
        const StateSet atom = spec_->atoms[piece_];
        const Matrix& entry = spec_->entry[piece_];
        Step out;
        out.prev = s_;
        if (t_ != kClear && !set_contains(atom, t_) && set_contains(atom, s_))
            t_ = kClear;  // stale target carried across a boundary
        if (t_ == kClear && set_contains(atom, s_)) {
            // move by v; exiting draws a target from the entry law
            int sp = rng.categorical(spec_->v.row(static_cast<std::size_t>(s_)), n_);
            out.used_v = true;
            if (set_contains(atom, sp)) {
                s_ = sp;
                t_ = kClear;
            } else {
                int tgt = rng.categorical(entry.row(static_cast<std::size_t>(sp)), n_);
                s_ = sp;
                t_ = tgt;
            }
        } else if (t_ != kClear && set_contains(atom, t_)) {
            // chase the target by b
            int sp = rng.categorical(spec_->b.row(static_cast<std::size_t>(s_)), n_);
            int tgt = t_;
            s_ = sp;
            t_ = (sp == tgt) ? kClear : tgt;
        } else {
            // outside the atom with no usable target: draw both
            int sp = rng.categorical(spec_->b.row(static_cast<std::size_t>(s_)), n_);
            int tgt = rng.categorical(entry.row(static_cast<std::size_t>(out.prev)), n_);
            s_ = sp;
            t_ = (sp == tgt) ? kClear : tgt;
        }
        out.s = s_;
        out.t = t_;
        return out;
    }

    int state() const { return s_; }
    int target() const { return t_; }
    std::size_t piece() const { return piece_; }

private:
    const HiddenChainSpec* spec_;
    std::vector<long long> bounds_;
    int n_ = 0;
    int s_ = 0;
    int t_ = kClear;
    std::size_t piece_ = 0;
};

struct HiddenRealization {
    std::vector<int> states;                  // the projection, length N+1
    std::vector<std::pair<int, int>> omega;   // pair path, target -1 = cleared
};

inline HiddenRealization simulate_hidden(const HiddenChainSpec& spec, std::uint64_t seed) {
    Rng rng(seed);
    HiddenWalker w(spec);
    w.reset();
    HiddenRealization out;
    out.states.reserve(static_cast<std::size_t>(spec.total_length) + 1);
    out.omega.reserve(static_cast<std::size_t>(spec.total_length) + 1);
    out.states.push_back(w.state());
    out.omega.emplace_back(w.state(), w.target());
    for (long long m = 1; m <= spec.total_length; ++m) {
        auto st = w.step(rng, m);
        out.states.push_back(st.s);
        out.omega.emplace_back(st.s, st.t);
    }
    return out;
}

// ── Structural deviation check ────────────────────────────────────

struct StructuralReport {
    double max_deviation = 0;
    double epsilon = 0;
    bool pass = false;
    std::vector<double> per_piece;
};

/// Worst sup-distance between a piece kernel row and the observed
/// kernel row over the piece's own atom. The final stage of each piece
/// is exempt by construction, so this covers every in-piece stage.
inline StructuralReport verify_b2(const PiecewiseChain& chain,
                                  const ObservedSequence& xstar, double epsilon) {
    const auto px = observed_transition_matrix(xstar);
    StructuralReport rep;
    rep.epsilon = epsilon;
    for (const auto& pc : chain.pieces) {
        double worst = 0;
        for (int s : set_members(pc.atom))
            worst = std::max(worst,
                             row_sup_distance(pc.kernel, px, static_cast<std::size_t>(s)));
        rep.per_piece.push_back(worst);
        rep.max_deviation = std::max(rep.max_deviation, worst);
    }
    rep.pass = rep.max_deviation <= epsilon;
    return rep;
}

// ── Occupancy deviation reports ───────────────────────────────────

struct StateDeviation {
    int state = 0;
    bool qualifying = false;
    double nu_x = 0;
    long long deviations = 0;
    double frequency = 0;
    WilsonCI ci;
    bool pass = true;
};

struct DeviationReport {
    std::vector<StateDeviation> states;
    double bound = 0;       // the theoretical tail bound
    double threshold = 0;   // bound, widened to 0.05 when relaxed
    bool relaxed = false;
    bool all_pass = true;
    long long trials = 0;
    std::uint64_t seed = 0;
    std::string generator = kGeneratorName;
};

namespace detail {

template <typename SimulateTrial>
DeviationReport occupancy_deviation_report(const std::vector<double>& nu_ref,
                                           long long length, double rel_tol,
                                           double qualify_threshold, double bound,
                                           bool relaxed, long long trials,
                                           std::uint64_t seed, SimulateTrial&& trial) {
    const int n = static_cast<int>(nu_ref.size());
    DeviationReport rep;
    rep.bound = bound;
    rep.relaxed = relaxed;
    rep.threshold = relaxed ? std::max(bound, 0.05) : bound;
    rep.trials = trials;
    rep.seed = seed;
    std::vector<long long> devs(n, 0);
    std::vector<long long> occ(n);
    for (long long i = 0; i < trials; ++i) {
        std::fill(occ.begin(), occ.end(), 0);
        trial(trial_seed(seed, static_cast<std::uint64_t>(i)), occ);
        for (int s = 0; s < n; ++s) {
            if (nu_ref[s] <= 0) continue;
            double nu_z = static_cast<double>(occ[s]) / static_cast<double>(length);
            if (std::fabs(nu_z / nu_ref[s] - 1.0) >= rel_tol) devs[s]++;
        }
    }
    for (int s = 0; s < n; ++s) {
        StateDeviation d;
        d.state = s;
        d.nu_x = nu_ref[s];
        d.qualifying = nu_ref[s] >= qualify_threshold;
        d.deviations = devs[s];
        d.frequency = static_cast<double>(devs[s]) / static_cast<double>(trials);
        d.ci = wilson_interval(devs[s], trials);
        d.pass = !d.qualifying || d.frequency <= rep.threshold;
        rep.all_pass = rep.all_pass && d.pass;
        rep.states.push_back(d);
    }
    return rep;
}

} // namespace detail

/// Monte Carlo frequency of a relative occupancy deviation of at least
/// epsilon, per state with reference occupancy above N^(-delta),
/// against the bound N^(-zeta). The bound is widened to 0.05 and
/// flagged relaxed when the size conditions fail at this N.
inline DeviationReport verify_b1(const PiecewiseChain& chain, const ObservedSequence& xstar,
                                 double epsilon, double delta, double zeta,
                                 long long trials, std::uint64_t seed) {
    if (trials < 1) throw ParameterOutOfRange("trials must be positive");
    const auto counts = count_transitions(xstar);
    const auto nu = occupancy_measure(counts);
    const long long N = chain.total_length;
    const double dN = static_cast<double>(N);
    bool relaxed = !detail::eval_basic_constants(counts.n_states, N, epsilon, delta, zeta).all();
    return detail::occupancy_deviation_report(
        nu, N, epsilon, std::pow(dN, -delta), std::pow(dN, -zeta), relaxed, trials, seed,
        [&](std::uint64_t s, std::vector<long long>& occ) {
            Rng rng(s);
            PiecewiseWalker w(chain);
            occ[w.reset(rng)]++;
            for (long long m = 1; m < N; ++m) occ[w.step(rng, m)]++;
            w.step(rng, N);  // final stage, not counted by the occupancy
        });
}

struct G2Report {
    double mean_n0 = 0;
    double max_n0 = 0;
    double bound = 0;  // N^psi * B
    double B = 0;
    bool pass = false;
    bool relaxed = false;
    long long trials = 0;
    std::uint64_t seed = 0;
};

struct GeneralVerification {
    DeviationReport g1;
    G2Report g2;
};

/// (G1): occupancy deviation of the projection at relative tolerance
/// eta against 1/N^delta. (G2): expected number of stages whose
/// realized conditional row differs from the observed kernel by more
/// than eta in sup norm, against N^psi * B.
inline GeneralVerification verify_g1_g2(const HiddenChainSpec& spec, double eta,
                                        double delta, double psi, long long trials,
                                        std::uint64_t seed) {
    if (trials < 1) throw ParameterOutOfRange("trials must be positive");
    const auto counts = count_transitions(spec.xstar);
    const auto nu = occupancy_measure(counts);
    const long long N = spec.total_length;
    const double dN = static_cast<double>(N);
    const int n = counts.n_states;
    const bool relaxed = !spec.constants.all_core();

    // deviation rows precomputed: does row r of v (resp. b) deviate
    // from the observed kernel row by more than eta
    std::vector<char> v_dev(n), b_dev(n);
    for (int s = 0; s < n; ++s) {
        v_dev[s] = row_sup_distance(spec.v, spec.pxstar, static_cast<std::size_t>(s)) > eta;
        b_dev[s] = row_sup_distance(spec.b, spec.pxstar, static_cast<std::size_t>(s)) > eta;
    }

    GeneralVerification out;
    out.g2.B = compute_B(spec.b);
    out.g2.bound = std::pow(dN, psi) * out.g2.B;
    out.g2.trials = trials;
    out.g2.seed = seed;
    out.g2.relaxed = relaxed;
    double n0_total = 0;

    out.g1 = detail::occupancy_deviation_report(
        nu, N, eta, std::pow(dN, -delta), std::pow(dN, -delta), relaxed, trials, seed,
        [&](std::uint64_t sd, std::vector<long long>& occ) {
            Rng rng(sd);
            HiddenWalker w(spec);
            w.reset();
            long long n0 = 0;
            occ[w.state()]++;
            for (long long m = 1; m <= N; ++m) {
                auto st = w.step(rng, m);
                if (st.used_v ? v_dev[st.prev] : b_dev[st.prev]) n0++;
                if (m < N) occ[st.s]++;
            }
            n0_total += static_cast<double>(n0);
            out.g2.max_n0 = std::max(out.g2.max_n0, static_cast<double>(n0));
        });
    out.g2.mean_n0 = n0_total / static_cast<double>(trials);
    out.g2.pass = out.g2.mean_n0 <= out.g2.bound;
    return out;
}

// ── Occupancy convergence experiment ──────────────────────────────

struct OccupancyTailReport {
    double gamma = 0;
    double bound = 0;  // 17 gamma / (n eps^2)
    bool vacuous = false;
    std::vector<double> frequency;  // per state
    std::vector<WilsonCI> ci;
    std::vector<double> mu;
    double max_shift_gap = 0;   // worst |nu_bar - nu| over all realizations
    double shift_bound = 0;     // 1/n
    bool pass = true;
    long long trials = 0;
    std::uint64_t seed = 0;
};

/// Tail probability of a relative occupancy deviation for a homogeneous
/// gamma-mixing kernel, estimated over seeded trials of length n and
/// compared with 17 gamma / (n eps^2). Also tracks the gap between the
/// stage-1..n and stage-0..n-1 occupancy measures, which stays under
/// 1/n pathwise.
inline OccupancyTailReport occupancy_tail_experiment(const TransitionMatrix& p, long long n,
                                                     double epsilon, int start,
                                                     long long trials, std::uint64_t seed) {
    if (!(epsilon > 0 && epsilon < 0.5))
        throw ParameterOutOfRange("epsilon must lie in (0, 1/2)");
    OccupancyTailReport rep;
    rep.gamma = gamma_mixing_constant(p);
    if (!(epsilon * static_cast<double>(n) > 4.0 * rep.gamma))
        throw ParameterOutOfRange("needs eps * n > 4 gamma");
    rep.mu = invariant_measure(p);
    rep.bound = 17.0 * rep.gamma / (static_cast<double>(n) * epsilon * epsilon);
    rep.vacuous = rep.bound >= 1.0;
    rep.shift_bound = 1.0 / static_cast<double>(n);
    rep.trials = trials;
    rep.seed = seed;
    const int ns = static_cast<int>(p.size());
    std::vector<long long> devs(ns, 0);
    std::vector<long long> occ1(ns);  // stages 1..n
    long long max_count_gap = 0;      // |stage-1..n count - stage-0..n-1 count|
    for (long long i = 0; i < trials; ++i) {
        Rng rng(trial_seed(seed, static_cast<std::uint64_t>(i)));
        std::fill(occ1.begin(), occ1.end(), 0);
        int state = start;
        int last = start;
        for (long long m = 1; m <= n; ++m) {
            state = rng.categorical(p.row(static_cast<std::size_t>(state)), ns);
            occ1[state]++;
            if (m == n) last = state;
        }
        for (int s = 0; s < ns; ++s) {
            double nu_bar = static_cast<double>(occ1[s]) / static_cast<double>(n);
            if (rep.mu[s] > 0 && std::fabs(nu_bar / rep.mu[s] - 1.0) >= epsilon) devs[s]++;
            // the two occupancy windows differ only at the endpoints
            long long occ0 = occ1[s] - (last == s ? 1 : 0) + (start == s ? 1 : 0);
            max_count_gap = std::max(max_count_gap, std::llabs(occ1[s] - occ0));
        }
    }
    for (int s = 0; s < ns; ++s) {
        double freq = static_cast<double>(devs[s]) / static_cast<double>(trials);
        rep.frequency.push_back(freq);
        rep.ci.push_back(wilson_interval(devs[s], trials));
        double se = std::sqrt(freq * (1.0 - freq) / static_cast<double>(trials));
        if (freq > rep.bound + 3.0 * se) rep.pass = false;
    }
    rep.max_shift_gap = static_cast<double>(max_count_gap) / static_cast<double>(n);
    if (max_count_gap > 1) rep.pass = false;
    return rep;
}

// ── Constrained-process simulation ────────────────────────────────

enum class VPolicyKind { FixedWeights, IidRandom, Cycling };

/// How a constrained process picks a vertex at each step. The weights
/// emitted are always a distribution over the state's vertex set.
struct VProcessPolicy {
    VPolicyKind kind = VPolicyKind::FixedWeights;
    std::vector<std::vector<double>> fixed_weights;  // per state; empty = uniform
    int initial_state = 0;
};

inline VPolicyKind parse_policy_kind(const std::string& name) {
    if (name == "fixed") return VPolicyKind::FixedWeights;
    if (name == "iid-random") return VPolicyKind::IidRandom;
    if (name == "cycling") return VPolicyKind::Cycling;
    throw ParameterOutOfRange("unknown policy '" + name + "'");
}

struct VRealization {
    std::vector<int> states;         // length N+1
    std::vector<int> vertex_choice;  // length N, local vertex index
    std::vector<long long> ns;
    std::vector<std::vector<long long>> nsv;               // [s][v]
    std::vector<std::vector<std::vector<long long>>> nsvt; // [s][v][t]
    Matrix used_average;  // row s: weighted average of the vertices used at s
    std::vector<bool> visited;
};

inline VRealization simulate_v_process(const ProductPolyhedron& V,
                                       const VProcessPolicy& policy, long long N,
                                       std::uint64_t seed) {
    V.validate();
    if (N < 1) throw ParameterOutOfRange("length must be positive");
    const int n = V.size();
    if (policy.initial_state < 0 || policy.initial_state >= n)
        throw ParameterOutOfRange("initial state out of range");
    if (policy.kind == VPolicyKind::FixedWeights && !policy.fixed_weights.empty()) {
        if (policy.fixed_weights.size() != static_cast<std::size_t>(n))
            throw ParameterOutOfRange("fixed weights need one row per state");
        for (int s = 0; s < n; ++s)
            if (policy.fixed_weights[s].size() != V.per_state[s].vertices.size())
                throw ParameterOutOfRange("fixed weight row size mismatch");
    }

    Rng rng(seed);
    VRealization out;
    out.states.reserve(static_cast<std::size_t>(N) + 1);
    out.vertex_choice.reserve(static_cast<std::size_t>(N));
    out.ns.assign(n, 0);
    out.nsv.resize(n);
    out.nsvt.resize(n);
    for (int s = 0; s < n; ++s) {
        out.nsv[s].assign(V.per_state[s].vertices.size(), 0);
        out.nsvt[s].assign(V.per_state[s].vertices.size(), std::vector<long long>(n, 0));
    }
    std::vector<long long> visit_count(n, 0);
    std::vector<double> weights;

    int state = policy.initial_state;
    out.states.push_back(state);
    for (long long m = 0; m < N; ++m) {
        const auto& P = V.per_state[state];
        const int nv = static_cast<int>(P.vertices.size());
        int choice = 0;
        switch (policy.kind) {
            case VPolicyKind::FixedWeights:
                if (policy.fixed_weights.empty()) {
                    weights.assign(nv, 1.0 / nv);
                } else {
                    weights = policy.fixed_weights[state];
                }
                choice = rng.categorical(weights.data(), nv);
                break;
            case VPolicyKind::IidRandom: {
                weights.resize(nv);
                double total = 0;
                for (auto& w : weights) {
                    w = -std::log(1.0 - rng.uniform());
                    total += w;
                }
                for (auto& w : weights) w /= total;
                choice = rng.categorical(weights.data(), nv);
                break;
            }
            case VPolicyKind::Cycling:
                choice = static_cast<int>(visit_count[state] % nv);
                break;
        }
        visit_count[state]++;
        int next = rng.categorical(P.vertices[choice].data(), n);
        out.ns[state]++;
        out.nsv[state][choice]++;
        out.nsvt[state][choice][next]++;
        out.vertex_choice.push_back(choice);
        out.states.push_back(next);
        state = next;
    }
    out.used_average = Matrix(n, n, 0.0);
    out.visited.assign(n, false);
    for (int s = 0; s < n; ++s) {
        if (out.ns[s] == 0) continue;
        out.visited[s] = true;
        for (std::size_t v = 0; v < out.nsv[s].size(); ++v) {
            double share = static_cast<double>(out.nsv[s][v]) /
                           static_cast<double>(out.ns[s]);
            for (int t = 0; t < n; ++t)
                out.used_average(s, t) += share * V.per_state[s].vertices[v][t];
        }
    }
    return out;
}

// ── Per-vertex empirical closeness check ──────────────────────────

struct TStarViolation {
    int s = 0, v = 0, t = 0;
    long long nsv = 0;
    double v_prob = 0, emp = 0;
};

struct TStarReport {
    bool holds = true;
    long long checked = 0;
    std::vector<TStarViolation> violations;
    double delta = 0, eps_prime = 0, xi_prime = 0;
};

/// For each (state, vertex, target) whose usage clears N^(delta/2),
/// requires the empirical transition share to match the vertex
/// probability within relative eps_prime.
inline TStarReport tstar_check(const VRealization& r, const ProductPolyhedron& V,
                               double delta, double eps_prime, double xi_prime = 0) {
    TStarReport rep;
    rep.delta = delta;
    rep.eps_prime = eps_prime;
    rep.xi_prime = xi_prime;
    const long long N = static_cast<long long>(r.states.size()) - 1;
    const double threshold = std::pow(static_cast<double>(N), delta / 2.0);
    const int n = V.size();
    for (int s = 0; s < n; ++s) {
        for (std::size_t v = 0; v < r.nsv[s].size(); ++v) {
            long long cnt = r.nsv[s][v];
            if (cnt == 0) continue;
            for (int t = 0; t < n; ++t) {
                double vp = V.per_state[s].vertices[v][t];
                double emp = static_cast<double>(r.nsvt[s][v][t]) / static_cast<double>(cnt);
                if (static_cast<double>(cnt) * std::max(vp, emp) < threshold) continue;
                rep.checked++;
                double rel = (vp > 0) ? std::fabs(emp / vp - 1.0) : kInf;
                if (!(rel <= eps_prime)) {
                    rep.holds = false;
                    rep.violations.push_back({s, static_cast<int>(v), t, cnt, vp, emp});
                }
            }
        }
    }
    return rep;
}

// ── Typicality frequency experiment ───────────────────────────────

struct TypicalFractionReport {
    long long realizations = 0;
    long long typical = 0;
    double fraction = 0;
    WilsonCI ci;
    std::uint64_t seed = 0;
};

inline TypicalFractionReport typical_fraction_estimate(const ProductPolyhedron& V,
                                                       const VProcessPolicy& policy,
                                                       long long N, double delta,
                                                       double epsilon,
                                                       long long realizations,
                                                       std::uint64_t seed) {
    if (realizations < 1) throw ParameterOutOfRange("realizations must be positive");
    TypicalFractionReport rep;
    rep.realizations = realizations;
    rep.seed = seed;
    for (long long i = 0; i < realizations; ++i) {
        auto r = simulate_v_process(V, policy, N,
                                    trial_seed(seed, static_cast<std::uint64_t>(i)));
        ObservedSequence x(V.alphabet, std::move(r.states));
        if (is_typical(x, V, delta, epsilon).typical) rep.typical++;
    }
    rep.fraction = static_cast<double>(rep.typical) / static_cast<double>(realizations);
    rep.ci = wilson_interval(rep.typical, realizations);
    return rep;
}

// ── Bernoulli running-mean tail ───────────────────────────────────

struct BernoulliTailReport {
    double p = 0, epsilon = 0;
    long long k = 0;
    double c_eps = 0;
    double bound = 0;
    double frequency = 0;
    double se = 0;
    bool vacuous = false;
    bool pass = false;
};

/// Empirical probability that the running mean of an i.i.d. Bernoulli
/// stream ever strays beyond relative epsilon once p*n reaches k,
/// truncated at horizon_mult * k / p steps. The truncated sup is a
/// lower bound for the event, so comparing against the closed-form
/// tail bound stays sound.
inline BernoulliTailReport bernoulli_tail_experiment(double p, double epsilon, long long k,
                                                     long long trials,
                                                     std::uint64_t seed,
                                                     double horizon_mult = 10.0) {
    if (!(p > 0 && p < 1)) throw ParameterOutOfRange("p must lie in (0,1)");
    BernoulliTailReport rep;
    rep.p = p;
    rep.epsilon = epsilon;
    rep.k = k;
    rep.c_eps = std::min(epsilon * epsilon,
                         -epsilon + (1.0 + epsilon) * std::log1p(epsilon));
    rep.bound = 2.0 * std::exp(-rep.c_eps * static_cast<double>(k)) /
                (1.0 - std::exp(-rep.c_eps * p));
    rep.vacuous = rep.bound >= 1.0;
    const long long n0 = static_cast<long long>(std::ceil(static_cast<double>(k) / p));
    const long long n_max =
        static_cast<long long>(std::ceil(horizon_mult * static_cast<double>(k) / p));
    long long hits = 0;
    for (long long i = 0; i < trials; ++i) {
        Rng rng(trial_seed(seed, static_cast<std::uint64_t>(i)));
        long long sum = 0;
        for (long long m = 1; m <= n_max; ++m) {
            sum += rng.bernoulli(p) ? 1 : 0;
            if (m >= n0) {
                double mean = static_cast<double>(sum) / static_cast<double>(m);
                if (std::fabs(mean - p) > epsilon * p) {
                    hits++;
                    break;
                }
            }
        }
    }
    rep.frequency = static_cast<double>(hits) / static_cast<double>(trials);
    rep.se = std::sqrt(rep.frequency * (1.0 - rep.frequency) / static_cast<double>(trials));
    rep.pass = rep.vacuous || rep.frequency <= rep.bound + 3.0 * rep.se;
    return rep;
}

} // namespace seqchain
