#include <doctest.h>

#include <random>

#include <seqchain/sequence_stats.hpp>

#include "testutil.hpp"

using namespace seqchain;

namespace {
const char* kF1 = "a a a a b b b b a";
const char* kF2 = "0 1 0 1 0 1";
}

TEST_CASE("transition counts on the block fixture") {
    auto x = parse_sequence_text(kF1);
    auto c = count_transitions(x);
    CHECK(c.total == 8);
    CHECK(c.at(0, 0) == 3);
    CHECK(c.at(0, 1) == 1);
    CHECK(c.at(1, 1) == 3);
    CHECK(c.at(1, 0) == 1);
}

TEST_CASE("transition counts on the alternating fixture") {
    auto x = parse_sequence_text(kF2);
    auto c = count_transitions(x);
    CHECK(c.total == 5);
    CHECK(c.at(0, 1) == 3);
    CHECK(c.at(1, 0) == 2);
    CHECK(c.at(0, 0) == 0);
    CHECK(c.at(1, 1) == 0);
}

TEST_CASE("minimal two-entry sequence") {
    auto x = parse_sequence_text("a b");
    auto c = count_transitions(x);
    CHECK(c.total == 1);
    CHECK(c.at(0, 1) == 1);
    CHECK(c.at(0, 0) == 0);
    CHECK(c.at(1, 0) == 0);
    CHECK(c.at(1, 1) == 0);
    auto w = occupancy_measure(c);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[1] == doctest::Approx(0.0));
}

TEST_CASE("occupancy sums to one") {
    auto w1 = occupancy_measure(count_transitions(parse_sequence_text(kF1)));
    CHECK(w1[0] == doctest::Approx(0.5));
    CHECK(w1[1] == doctest::Approx(0.5));
    auto w2 = occupancy_measure(count_transitions(parse_sequence_text(kF2)));
    CHECK(w2[0] == doctest::Approx(0.6));
    CHECK(w2[1] == doctest::Approx(0.4));
}

TEST_CASE("observed kernel and the unvisited-row convention") {
    auto k1 = observed_transition_matrix(count_transitions(parse_sequence_text(kF1)));
    CHECK(k1.p(0, 0) == doctest::Approx(0.75));
    CHECK(k1.p(0, 1) == doctest::Approx(0.25));
    CHECK(k1.p(1, 0) == doctest::Approx(0.25));
    CHECK(k1.p(1, 1) == doctest::Approx(0.75));
    CHECK_FALSE(k1.unvisited[0]);

    auto k2 = observed_transition_matrix(count_transitions(parse_sequence_text(kF2)));
    CHECK(k2.p(0, 1) == doctest::Approx(1.0));
    CHECK(k2.p(1, 0) == doctest::Approx(1.0));

    auto x3 = parse_sequence_text("#alphabet: a b c\na b a");
    auto k3 = observed_transition_matrix(count_transitions(x3));
    CHECK(k3.unvisited[2]);
    CHECK(k3.p(2, 0) == doctest::Approx(1.0 / 3));
    CHECK(k3.p(2, 1) == doctest::Approx(1.0 / 3));
    CHECK(k3.p(2, 2) == doctest::Approx(1.0 / 3));
    k3.p.validate();
}

TEST_CASE("run counts on fixtures") {
    auto x1 = parse_sequence_text(kF1);
    CHECK(run_count(x1, StateSet{0b01}) == 2);
    CHECK(run_count(x1, StateSet{0b10}) == 1);
    CHECK(run_count(x1, StateSet{0b11}) == 1);
    CHECK(run_count(x1, StateSet{0}) == 0);

    auto x2 = parse_sequence_text(kF2);
    CHECK(run_count(x2, StateSet{0b01}) == 3);  // (N+1)/2 with N = 5
    CHECK(run_count(x2, StateSet{0b10}) == 3);
    CHECK(run_count(x2, StateSet{0b11}) == 1);
}

TEST_CASE("run-count identities on random sequences") {
    std::mt19937_64 gen(20240501);
    for (int rep = 0; rep < 400; ++rep) {
        int n = 2 + static_cast<int>(gen() % 4);
        int len = 5 + static_cast<int>(gen() % 60);
        auto x = testutil::random_sequence(gen, n, len);
        auto c = count_transitions(x);
        StateSet full = full_set(n);
        for (StateSet C = 1; C <= full; ++C) {
            long long rc = run_count(c, C);
            CHECK(rc == testutil::naive_run_count(x, C));
            CHECK(rc == run_count_via_exits(c, C));
            long long rcomp = run_count(c, set_complement(C, n));
            CHECK(std::llabs(rc - rcomp) <= 1);
            for_each_proper_subset(C, [&](StateSet D) {
                CHECK(run_count(c, C & ~D) <= rc + run_count(c, D));
            });
        }
    }
}

TEST_CASE("recount oracle over a random corpus") {
    std::mt19937_64 gen(77);
    for (int rep = 0; rep < 1000; ++rep) {
        int n = 2 + static_cast<int>(gen() % 4);
        int len = 2 + static_cast<int>(gen() % 100);
        auto x = testutil::random_sequence(gen, n, len);
        auto c = count_transitions(x);
        auto naive = testutil::naive_pair_counts(x);
        long long total = 0;
        for (int s = 0; s < n; ++s) {
            long long row = 0;
            for (int t = 0; t < n; ++t) {
                CHECK(c.at(s, t) == naive[static_cast<std::size_t>(s) * n + t]);
                row += c.at(s, t);
            }
            CHECK(row == c.row_totals[s]);
            total += row;
        }
        CHECK(total == c.total);
    }
}

TEST_CASE("exhaustive and periodic predicates") {
    CHECK(is_exhaustive(parse_sequence_text(kF1)));
    CHECK(is_periodic(parse_sequence_text(kF1)));
    CHECK(is_exhaustive(parse_sequence_text(kF2)));
    CHECK_FALSE(is_periodic(parse_sequence_text(kF2)));
    auto x = parse_sequence_text("#alphabet: a b\na a a");
    CHECK_FALSE(is_exhaustive(x));
    CHECK(is_periodic(x));
}

TEST_CASE("periodic exhaustive extension") {
    auto f1 = parse_sequence_text(kF1);
    CHECK(periodicize_exhaustify(f1).entries == f1.entries);

    auto f2 = parse_sequence_text(kF2);
    auto e2 = periodicize_exhaustify(f2);
    CHECK(e2.entries == std::vector<int>{0, 1, 0, 1, 0, 1, 0});

    auto x3 = parse_sequence_text("#alphabet: a b c\na b a");
    auto e3 = periodicize_exhaustify(x3);
    CHECK(e3.entries == std::vector<int>{0, 1, 0, 2, 0});
}

TEST_CASE("extension properties on random sequences") {
    std::mt19937_64 gen(4242);
    for (int rep = 0; rep < 300; ++rep) {
        int n = 2 + static_cast<int>(gen() % 4);
        int len = 2 + static_cast<int>(gen() % 40);
        auto x = testutil::random_sequence(gen, n, len);
        auto ext = periodicize_exhaustify(x);
        CHECK(is_exhaustive(ext));
        CHECK(is_periodic(ext));
        CHECK(ext.entries.size() <= x.entries.size() + static_cast<std::size_t>(n) + 1);
        for (std::size_t i = 0; i < x.entries.size(); ++i)
            CHECK(ext.entries[i] == x.entries[i]);
        // applying it again is the identity
        CHECK(periodicize_exhaustify(ext).entries == ext.entries);
    }
}

TEST_CASE("sequence parsing rejects bad input") {
    CHECK_THROWS_AS(parse_sequence_text("a"), ParseError);
    CHECK_THROWS_AS(parse_sequence_text(""), ParseError);
    CHECK_THROWS_AS(parse_sequence_text("#alphabet: a a\na a"), ParseError);
}

TEST_CASE("declared alphabet keeps header order and appends novels") {
    auto x = parse_sequence_text("#alphabet: z y\ny z w");
    CHECK(x.alphabet.symbols == std::vector<std::string>{"z", "y", "w"});
    CHECK(x.entries == std::vector<int>{1, 0, 2});
}
