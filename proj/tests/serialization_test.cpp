#include <doctest.h>

#include <random>
#include <sstream>

#include <seqchain/approximator.hpp>

#include "testutil.hpp"

using namespace seqchain;

TEST_CASE("piecewise chain text round trip is field exact") {
    std::mt19937_64 gen(71);
    for (int rep = 0; rep < 25; ++rep) {
        int n = 2 + static_cast<int>(gen() % 3);
        auto x = testutil::random_sequence(gen, n, 120 + static_cast<int>(gen() % 200));
        BasicBuild build;
        try {
            build = build_basic(x, 0.2, 0.08);
        } catch (const DegenerateInput&) {
            continue;
        }
        std::ostringstream out;
        write_piecewise(out, build.chain);
        std::istringstream in(out.str());
        auto back = load_piecewise(in);
        CHECK(back.alphabet == build.chain.alphabet);
        CHECK(back.total_length == build.chain.total_length);
        CHECK(back.initial == build.chain.initial);
        REQUIRE(back.pieces.size() == build.chain.pieces.size());
        for (std::size_t k = 0; k < back.pieces.size(); ++k) {
            CHECK(back.pieces[k].atom == build.chain.pieces[k].atom);
            CHECK(back.pieces[k].length == build.chain.pieces[k].length);
            CHECK(back.pieces[k].kernel == build.chain.pieces[k].kernel);
        }
        // serialization is deterministic
        std::ostringstream out2;
        write_piecewise(out2, back);
        CHECK(out.str() == out2.str());
    }
}

TEST_CASE("17-digit literals survive the trip") {
    double x = 0.1 + 0.2;  // 0.30000000000000004
    CHECK(parse_real(fmt17(x)) == x);
    CHECK(parse_real(fmt17(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(fmt17(kInf) == "inf");
    CHECK(parse_real("inf") == kInf);
}

TEST_CASE("matrix text io") {
    std::mt19937_64 gen(72);
    auto p = testutil::random_dense_kernel(gen, 4);
    std::ostringstream out;
    write_matrix(out, p.m);
    std::istringstream in(out.str());
    auto back = parse_matrix(in);
    CHECK(back == p.m);
    std::istringstream ragged("0.5 0.5\n1.0\n");
    CHECK_THROWS_AS(parse_matrix(ragged), ParseError);
}

TEST_CASE("piecewise loader rejects corrupted documents") {
    std::vector<int> e;
    for (int i = 0; i < 15; ++i) e.push_back(0);
    for (int i = 0; i < 15; ++i) e.push_back(1);
    e.push_back(0);
    ObservedSequence x(testutil::letters(2), std::move(e));
    auto build = build_basic(x, 0.4, 0.3);
    std::ostringstream out;
    write_piecewise(out, build.chain);
    std::string text = out.str();

    SUBCASE("wrong header") {
        std::istringstream in("nonsense\n" + text);
        CHECK_THROWS_AS(load_piecewise(in), ParseError);
    }
    SUBCASE("truncated kernel") {
        std::istringstream in(text.substr(0, text.size() / 2));
        CHECK_THROWS_AS(load_piecewise(in), ParseError);
    }
}
