#include <doctest.h>

#include "helpers.hpp"
#include "mmi/bench.hpp"
#include "mmi/model.hpp"
#include "mmi/trees.hpp"

using namespace mmi;

namespace {

// A sum chain of three nodes where the middle node carries two max leaves.
PairwiseModel double_leaf_model() {
    using R = NodeRole;
    return PairwiseModel(
        {2, 2, 2, 2, 2}, {{0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}},
        {{0, 1}, {1, 2}, {1, 3}, {1, 4}},
        {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}},
        {R::Sum, R::Sum, R::Sum, R::Max, R::Max});
}

}  // namespace

TEST_CASE("first tree family on the chain-with-leaves model") {
    auto m = gen_hmm(10, 3, 0.8, 1);
    auto trees = enumerate_type1(m, 1);
    REQUIRE(trees.size() == 10);
    for (const auto& t : trees) {
        CHECK(t.edges.size() == 10);  // nine chain edges plus one crossing edge
        CHECK(t.weight == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(valid_ab_subtree(m, t));
    }
    auto rho = compute_rho(m, trees);
    auto c = classify_edges(m);
    for (int e : c.e_a) CHECK(rho.rho[e] == doctest::Approx(1.0).epsilon(1e-12));
    for (int e : c.boundary) CHECK(rho.rho[e] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("two-node model yields the single-edge subtree in both families") {
    auto m = testutil::two_node_ab();
    auto t1 = enumerate_type1(m);
    REQUIRE(t1.size() == 1);
    CHECK(t1[0].edges == std::vector<int>{0});
    CHECK(t1[0].weight == doctest::Approx(1.0));
    auto t2 = enumerate_type2(m);
    REQUIRE(t2.size() == 1);
    CHECK(t2[0].edges == std::vector<int>{0});
    CHECK(t2[0].weight == doctest::Approx(1.0));
}

TEST_CASE("second tree family covers the crossing edges") {
    SUBCASE("distinct sum endpoints collapse to one subtree") {
        auto m = gen_hmm(10, 3, 0.8, 1);
        auto trees = enumerate_type2(m);
        REQUIRE(trees.size() == 1);
        CHECK(trees[0].edges.size() == 10);
        auto rho = compute_rho(m, trees, 0.0);
        auto c = classify_edges(m);
        for (int e : c.boundary) CHECK(rho.rho[e] == doctest::Approx(1.0));
        for (int e : c.e_a) CHECK(rho.rho[e] == doctest::Approx(0.0));
    }
    SUBCASE("conflicting edges split across subtrees") {
        auto m = double_leaf_model();
        auto trees = enumerate_type2(m);
        REQUIRE(trees.size() == 2);
        auto rho = compute_rho(m, trees, 0.0);
        CHECK(rho.rho[2] == doctest::Approx(0.5));
        CHECK(rho.rho[3] == doctest::Approx(0.5));
        for (const auto& t : trees) CHECK(valid_ab_subtree(m, t));
    }
}

TEST_CASE("mixing collections") {
    auto m = gen_hmm(10, 3, 0.8, 1);
    auto t1 = enumerate_type1(m, 1);
    auto t2 = enumerate_type2(m);
    SUBCASE("alpha one keeps the first collection") {
        auto mixed = mix_collections(t1, t2, 1.0);
        double total = 0.0;
        for (const auto& t : mixed) total += t.weight;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        auto rho = compute_rho(m, mixed);
        auto base = compute_rho(m, t1);
        for (int e = 0; e < m.num_edges(); ++e)
            CHECK(rho.rho[e] == doctest::Approx(base.rho[e]).epsilon(1e-12));
    }
    SUBCASE("even mixture reproduces the published appearance values") {
        auto mixed = mix_collections(t1, t2, 0.5);
        double total = 0.0;
        for (const auto& t : mixed) total += t.weight;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        auto rho = compute_rho(m, mixed);
        auto c = classify_edges(m);
        for (int e : c.e_a) CHECK(rho.rho[e] == doctest::Approx(0.5).epsilon(1e-12));
        for (int e : c.boundary) CHECK(rho.rho[e] == doctest::Approx(0.55).epsilon(1e-12));
    }
}

TEST_CASE("appearance probabilities stay within the unit interval") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        auto m = gen_ab_tree(9, 2, 0.5, seed);
        auto t1 = enumerate_type1(m, seed);
        for (const auto& t : t1) CHECK(valid_ab_subtree(m, t));
        auto mixed = mix_collections(t1, enumerate_type2(m), 0.3);
        auto rho = compute_rho(m, mixed);
        auto c = classify_edges(m);
        for (int e : c.e_a) {
            CHECK(rho.rho[e] >= -1e-12);
            CHECK(rho.rho[e] <= 1.0 + 1e-12);
        }
        for (int e : c.boundary) {
            CHECK(rho.rho[e] >= -1e-12);
            CHECK(rho.rho[e] <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("sampled spanning forests keep subtree validity on cyclic sum parts") {
    using R = NodeRole;
    std::vector<std::vector<double>> zero4(5, std::vector<double>{0, 0});
    std::vector<std::vector<double>> zt(6, std::vector<double>(4, 0.0));
    PairwiseModel m({2, 2, 2, 2, 2}, zero4,
                    {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {2, 4}}, zt,
                    {R::Sum, R::Sum, R::Sum, R::Sum, R::Max});
    auto trees = enumerate_type1(m, 5);
    double total = 0.0;
    for (const auto& t : trees) {
        CHECK(valid_ab_subtree(m, t));
        total += t.weight;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("invalid collections are rejected") {
    auto m = gen_hmm(4, 2, 0.5, 1);
    auto trees = enumerate_type1(m, 1);
    trees[0].weight *= 2.0;  // weights no longer sum to one
    CHECK_THROWS_AS(compute_rho(m, trees), ModelError);
}

TEST_CASE("uniform appearance weighting") {
    auto m = gen_hmm(4, 2, 0.5, 1);
    auto rho = rho_bethe(m);
    for (double v : rho.rho) CHECK(v == 1.0);
}
