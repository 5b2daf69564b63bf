#include <doctest.h>

#include <random>
#include <sstream>

#include <seqchain/approximator.hpp>

#include "testutil.hpp"

using namespace seqchain;

namespace {

/// m a's, m b's, then an a: periodic, exhaustive, and badly mixing.
ObservedSequence block_sequence(int m) {
    std::vector<int> e;
    e.reserve(2 * m + 1);
    for (int i = 0; i < m; ++i) e.push_back(0);
    for (int i = 0; i < m; ++i) e.push_back(1);
    e.push_back(0);
    return ObservedSequence(testutil::letters(2), std::move(e));
}

} // namespace

TEST_CASE("size conditions at small N") {
    auto c = check_constants_basic(2, 10, 0.4, 0.05, 0.05);
    CHECK_FALSE(c.n2);  // 10^0.05 is far below 4*17*16/0.16
    CHECK(c.range_ok);
    CHECK_FALSE(c.all());

    auto tiny = check_constants_basic(3, 2, 0.3, 0.01, 0.01);
    CHECK_FALSE(tiny.n1);
    CHECK_FALSE(tiny.n2);
    CHECK_FALSE(tiny.n3);
    CHECK_FALSE(tiny.n4);
    CHECK_FALSE(tiny.n5);
    CHECK_FALSE(tiny.n6);
}

TEST_CASE("size condition parameter ranges") {
    CHECK_THROWS_AS(check_constants_basic(2, 10, 0.6, 0.05, 0.05), ParameterOutOfRange);
    CHECK_THROWS_AS(check_constants_basic(2, 10, 0.4, 0.2, 0.05), ParameterOutOfRange);
    CHECK_THROWS_AS(check_constants_basic(2, 10, 0.4, 0.05, 0.2), ParameterOutOfRange);
}

TEST_CASE("minimal N is a threshold for the primary conditions") {
    // two states: the second condition needs N^(2 delta - zeta) above
    // 4*17*16/eps^2, far past any practical horizon
    auto c = check_constants_basic(2, 10, 0.4, 0.05, 0.05);
    CHECK(c.astronomical);

    // one state keeps the exponents large enough to reach the threshold
    auto c1 = check_constants_basic(1, 10, 0.45, 0.099, 0.0001);
    REQUIRE_FALSE(c1.astronomical);
    long long n0 = c1.minimal_N0;
    auto at = [&](long long N) {
        auto r = check_constants_basic(1, N, 0.45, 0.099, 0.0001);
        return r.n1 && r.n2;
    };
    CHECK(at(n0));
    CHECK_FALSE(at(n0 - 1));
    // bisection oracle on the same monotone predicate
    long long lo = 1, hi = n0 + 1000;
    while (lo + 1 < hi) {
        long long mid = lo + (hi - lo) / 2;
        if (at(mid)) hi = mid; else lo = mid;
    }
    CHECK(hi == n0);
}

TEST_CASE("two-block construction") {
    const int m = 1000;
    auto x = block_sequence(m);
    auto build = build_basic(x, 0.1, 0.1);
    CHECK(build.xstar.entries == x.entries);  // already periodic + exhaustive

    REQUIRE(build.chain.pieces.size() == 2);
    CHECK(build.chain.total_length == 2 * m);
    CHECK(build.chain.pieces[0].length + build.chain.pieces[1].length == 2 * m);
    CHECK(build.chain.pieces[0].length >= m);
    // both atoms are singletons and each piece kernel is absorbing there
    for (const auto& piece : build.chain.pieces) {
        REQUIRE(set_size(piece.atom) == 1);
        int s = set_members(piece.atom)[0];
        CHECK(piece.kernel(static_cast<std::size_t>(s), static_cast<std::size_t>(s)) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    // deviation from the observed kernel is the removed escape mass 1/m
    CHECK(build.structural_deviation == doctest::Approx(1.0 / m).epsilon(1e-9));
    CHECK(build.structural_deviation <= build.structural_bound + 1e-12);
}

TEST_CASE("single-atom construction reduces to the observed kernel") {
    // alternating sequence, threshold below the split point keeps {S}
    std::vector<int> e;
    for (int i = 0; i < 501; ++i) { e.push_back(0); e.push_back(1); }
    e.push_back(0);
    ObservedSequence x(testutil::letters(2), std::move(e));
    REQUIRE(is_periodic(x));
    // delta so small that N^(4 delta) stays below the run counts
    auto build = build_basic(x, 0.2, 0.01);
    REQUIRE(build.chain.pieces.size() == 1);
    CHECK(build.chain.pieces[0].atom == full_set(2));
    CHECK(build.chain.pieces[0].kernel == build.pxstar);
    CHECK(build.structural_deviation == 0.0);
}

TEST_CASE("piece lengths stay within the stage-ratio bound") {
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 60; ++rep) {
        int n = 2 + static_cast<int>(gen() % 3);
        int len = 50 + static_cast<int>(gen() % 400);
        auto x = testutil::random_sequence(gen, n, len);
        double delta = 0.05 + 0.05 * static_cast<double>(gen() % 4);
        BasicBuild build;
        try {
            build = build_basic(x, 0.2, delta);
        } catch (const DegenerateInput&) {
            continue;  // every atom below the visit threshold
        }
        const auto counts = count_transitions(build.xstar);
        const double dN = static_cast<double>(counts.total);
        long long total = 0;
        for (const auto& piece : build.chain.pieces) {
            total += piece.length;
            double ratio = static_cast<double>(piece.length) /
                           static_cast<double>(counts.visits(piece.atom));
            CHECK(ratio >= 1.0 - 1e-12);
            CHECK(ratio <= 1.0 + static_cast<double>(n) * n / std::pow(dN, delta) + 1e-12);
        }
        CHECK(total == counts.total);
        build.chain.validate();
    }
}

TEST_CASE("observed kernel of the extension carries the occupancy as invariant") {
    std::mt19937_64 gen(32);
    for (int rep = 0; rep < 200; ++rep) {
        int n = 2 + static_cast<int>(gen() % 4);
        int len = 10 + static_cast<int>(gen() % 150);
        auto xstar = periodicize_exhaustify(testutil::random_sequence(gen, n, len));
        auto counts = count_transitions(xstar);
        auto px = observed_transition_matrix(counts).p;
        REQUIRE(is_irreducible(px));
        auto mu = invariant_measure(px);
        auto nu = occupancy_measure(counts);
        for (int s = 0; s < n; ++s) CHECK(std::fabs(mu[s] - nu[s]) <= 1e-9);
    }
}

TEST_CASE("visit-length identity and run-count sandwich on extensions") {
    std::mt19937_64 gen(33);
    for (int rep = 0; rep < 100; ++rep) {
        int n = 2 + static_cast<int>(gen() % 3);
        auto xstar = periodicize_exhaustify(
            testutil::random_sequence(gen, n, 20 + static_cast<int>(gen() % 100)));
        auto counts = count_transitions(xstar);
        auto px = observed_transition_matrix(counts).p;
        StateSet full = full_set(n);
        for (StateSet D = 1; D < full; ++D) {
            auto stats = mixing_stats(px, D);
            long long nd = counts.visits(D);
            long long nd_out = counts.between(D, set_complement(D, n));
            if (nd_out == 0) continue;
            CHECK(stats.visit_len ==
                  doctest::Approx(static_cast<double>(nd) / nd_out).epsilon(1e-9));
            long long rd = run_count(counts, D);
            CHECK(static_cast<double>(nd) / rd <= stats.visit_len + 1e-9);
            if (rd > 1)
                CHECK(stats.visit_len <= static_cast<double>(nd) / (rd - 1) + 1e-9);
        }
    }
}

TEST_CASE("subset exit times against the run-length estimate") {
    // block structure with a two-state atom: c-runs separate (a b) spans
    std::vector<int> e;
    for (int block = 0; block < 12; ++block) {
        for (int i = 0; i < 25; ++i) { e.push_back(0); e.push_back(1); }
        for (int i = 0; i < 30; ++i) e.push_back(2);
    }
    e.push_back(0);
    ObservedSequence x(testutil::letters(3), std::move(e));
    auto xstar = periodicize_exhaustify(x);
    auto counts = count_transitions(xstar);
    auto px = observed_transition_matrix(counts).p;
    const double a = 4.0;
    auto part = structure_partition(xstar, a);
    auto rep = verify_partition(xstar, part);
    REQUIRE(rep.p1_ok);
    REQUIRE(rep.p2_ok);

    bool saw_multi = false;
    for (StateSet atom : part.atoms) {
        if (set_size(atom) < 2) continue;
        saw_multi = true;
        auto stats = mixing_stats(px, atom);
        double worst = 0;
        for_each_proper_subset(atom, [&](StateSet D) {
            long long rd = run_count(counts, D);
            REQUIRE(rd > 1);
            worst = std::max(worst, static_cast<double>(counts.visits(D)) /
                                        static_cast<double>(rd - 1));
        });
        CHECK(stats.rho <= worst + 1e-9);
        CHECK(worst <= (2.0 / a) * stats.lambda + 1e-9);
    }
    CHECK(saw_multi);
}

TEST_CASE("watched mixing report shape") {
    auto x = block_sequence(1000);
    auto build = build_basic(x, 0.1, 0.1);
    auto rep = verify_watched_mixing(build.xstar, build.partition, 0.1);
    REQUIRE(rep.size() == build.partition.atoms.size());
    for (const auto& e : rep) CHECK_FALSE(e.applicable);  // all singleton atoms

    // multi-state atom: watched kernel gamma is reported
    std::vector<int> e2;
    for (int block = 0; block < 10; ++block) {
        for (int i = 0; i < 30; ++i) { e2.push_back(0); e2.push_back(1); }
        for (int i = 0; i < 20; ++i) e2.push_back(2);
    }
    e2.push_back(0);
    ObservedSequence x2(testutil::letters(3), std::move(e2));
    auto xstar2 = periodicize_exhaustify(x2);
    auto part2 = structure_partition(xstar2, 4.0);
    auto rep2 = verify_watched_mixing(xstar2, part2, 0.05);
    bool multi = false;
    for (const auto& entry : rep2) {
        if (entry.applicable) {
            multi = true;
            CHECK(entry.gamma > 0);
            CHECK(entry.bound > 0);
        }
    }
    CHECK(multi);
}

TEST_CASE("degenerate input when nothing reaches the visit threshold") {
    // splits into singletons with two visits each, below N^0.9
    std::vector<int> e{0, 1, 2, 0, 1, 2, 0};
    ObservedSequence x(testutil::letters(3), std::move(e));
    CHECK_THROWS_AS(build_basic(x, 0.2, 0.1), DegenerateInput);
}

TEST_CASE("watched mixing passes for a fast atom under a generous bound") {
    std::vector<int> e;
    for (int block = 0; block < 40; ++block) {
        for (int i = 0; i < 50; ++i) { e.push_back(0); e.push_back(1); }
        for (int i = 0; i < 20; ++i) e.push_back(2);
    }
    e.push_back(0);
    ObservedSequence x(testutil::letters(3), std::move(e));
    auto xstar = periodicize_exhaustify(x);
    auto part = structure_partition(xstar, 8.0);
    auto rep = verify_watched_mixing(xstar, part, 0.05);
    bool saw_pass = false;
    for (const auto& entry : rep) {
        if (entry.applicable && entry.pass) saw_pass = true;
    }
    CHECK(saw_pass);
}

TEST_CASE("first block piece length equals its visit count") {
    auto x = block_sequence(1000);
    auto build = build_basic(x, 0.1, 0.1);
    REQUIRE(build.chain.pieces.size() == 2);
    CHECK(build.chain.pieces[0].length == 1000);
    CHECK(build.chain.pieces[1].length == 1000);
}
