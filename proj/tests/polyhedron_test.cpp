#include <doctest.h>

#include <random>
#include <sstream>

#include <seqchain/polyhedron.hpp>

#include "testutil.hpp"

using namespace seqchain;

TEST_CASE("membership at a vertex") {
    Polyhedron P{{{0.5, 0.5}, {0.9, 0.1}}};
    auto w = polyhedron_membership({0.9, 0.1}, P);
    REQUIRE(w);
    auto rec = P.combine(*w);
    CHECK(rec[0] == doctest::Approx(0.9).epsilon(1e-9));
    CHECK(rec[1] == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("membership at a midpoint") {
    Polyhedron P{{{0.5, 0.5}, {0.9, 0.1}}};
    auto w = polyhedron_membership({0.7, 0.3}, P);
    REQUIRE(w);
    double sum = 0;
    for (double wi : *w) {
        CHECK(wi >= -1e-12);
        sum += wi;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    auto rec = P.combine(*w);
    CHECK(rec[0] == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(rec[1] == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("membership outside a singleton hull is infeasible") {
    Polyhedron P{{{0.5, 0.5}}};
    CHECK_FALSE(polyhedron_membership({1.0, 0.0}, P));
    CHECK(polyhedron_membership({0.5, 0.5}, P));
}

TEST_CASE("membership over random hulls") {
    std::mt19937_64 gen(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        int dim = 2 + static_cast<int>(gen() % 3);
        int nv = 1 + static_cast<int>(gen() % 4);
        Polyhedron P;
        for (int v = 0; v < nv; ++v) {
            std::vector<double> vert(dim);
            double total = 0;
            for (double& x : vert) { x = -std::log(1.0 - u(gen)); total += x; }
            for (double& x : vert) x /= total;
            P.vertices.push_back(vert);
        }
        // random convex combination must be a member
        std::vector<double> w(nv);
        double tw = 0;
        for (double& x : w) { x = -std::log(1.0 - u(gen)); tw += x; }
        for (double& x : w) x /= tw;
        auto point = P.combine(w);
        auto got = polyhedron_membership(point, P);
        REQUIRE(got);
        auto rec = P.combine(*got);
        for (int t = 0; t < dim; ++t) CHECK(std::fabs(rec[t] - point[t]) <= 1e-8);
    }
}

TEST_CASE("box feasibility honors one-sided bounds") {
    Polyhedron P{{{0.2, 0.8}, {0.8, 0.2}}};
    std::vector<double> lo{0.0, 0.0}, hi{kInf, kInf};
    CHECK(feasible_vertex_weights(P, lo, hi));

    lo = {0.75, 0.0};
    hi = {kInf, kInf};
    auto w = feasible_vertex_weights(P, lo, hi);
    REQUIRE(w);
    CHECK(P.combine(*w)[0] >= 0.75 - 1e-9);

    lo = {0.9, 0.0};  // beyond the hull's first coordinate range
    CHECK_FALSE(feasible_vertex_weights(P, lo, hi));

    lo = {0.0, 0.0};
    hi = {0.1, kInf};
    CHECK_FALSE(feasible_vertex_weights(P, lo, hi));
}

TEST_CASE("tight equality-like boxes stay solvable") {
    Polyhedron P{{{1.0, 0.0}, {0.9, 0.1}}};
    double target = 1.0 - 1.0417e-5;
    std::vector<double> lo{target * (1 - 1e-9), (1 - target) * (1 - 1e-9)};
    std::vector<double> hi{target * (1 + 1e-9), (1 - target) * (1 + 1e-9)};
    auto w = feasible_vertex_weights(P, lo, hi);
    REQUIRE(w);
    auto rec = P.combine(*w);
    CHECK(rec[0] == doctest::Approx(target).epsilon(1e-8));
}

TEST_CASE("polyhedra file round trip") {
    ProductPolyhedron V;
    V.alphabet = testutil::letters(2);
    V.per_state = {Polyhedron{{{0.5, 0.5}, {0.9, 0.1}}}, Polyhedron{{{0.25, 0.75}}}};
    std::ostringstream out;
    write_polyhedra(out, V);
    std::istringstream in(out.str());
    auto back = parse_polyhedra(in);
    CHECK(back.alphabet == V.alphabet);
    REQUIRE(back.per_state.size() == 2);
    CHECK(back.per_state[0].vertices == V.per_state[0].vertices);
    CHECK(back.per_state[1].vertices == V.per_state[1].vertices);
}

TEST_CASE("polyhedra file validation") {
    std::istringstream missing("polyhedra v1\nalphabet: a b\nstate a\n0.5 0.5\n");
    CHECK_THROWS_AS(parse_polyhedra(missing), ParseError);  // state b has no vertex
    std::istringstream bad_sum("polyhedra v1\nalphabet: a\nstate a\n0.5 0.4\n");
    CHECK_THROWS_AS(parse_polyhedra(bad_sum), ParseError);
}
