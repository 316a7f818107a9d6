#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mmi/bench.hpp"
#include "mmi/exact.hpp"
#include "mmi/mixed_mp.hpp"
#include "mmi/optimizers.hpp"
#include "mmi/trees.hpp"

using namespace mmi;

TEST_CASE("entropy decompositions") {
    SUBCASE("the default split carries exactly the truncated terms") {
        auto m = gen_hmm(5, 2, 0.5, 1);
        auto target = weights_bethe_truncated(m);
        auto d = default_decomposition(m, target);
        auto c = classify_edges(m);
        for (int i = 0; i < m.num_nodes(); ++i) {
            CHECK(d.plus.node[i] == 1.0);
            CHECK(d.minus.node[i] == (m.is_max(i) ? 1.0 : 0.0));
        }
        for (int e : c.e_a) CHECK(d.minus.edge[e] == 0.0);
        for (int e : c.boundary) CHECK(d.minus.edge[e] == 0.0);
        for (int e : c.e_b) CHECK(d.minus.edge[e] == 1.0);
    }
    SUBCASE("all-sum model needs no subtraction") {
        auto m = testutil::random_chain(4, 2, 0.5, NodeRole::Sum, 2);
        auto d = default_decomposition(m, weights_bethe_truncated(m));
        for (double v : d.minus.node) CHECK(v == 0.0);
        for (double v : d.minus.edge) CHECK(v == 0.0);
    }
    SUBCASE("plus minus difference equals the target entrywise") {
        auto m = gen_ab_tree(8, 2, 1.0, 5);
        auto target = weights_trw_truncated(m, compute_rho(m, enumerate_type1(m, 1)));
        for (const auto& d :
             {default_decomposition(m, target), concave_decomposition(m, target)}) {
            for (int i = 0; i < m.num_nodes(); ++i)
                CHECK(d.plus.node[i] - d.minus.node[i] ==
                      doctest::Approx(target.node[i]).epsilon(1e-12));
            for (int e = 0; e < m.num_edges(); ++e)
                CHECK(d.plus.edge[e] - d.minus.edge[e] ==
                      doctest::Approx(target.edge[e]).epsilon(1e-12));
        }
    }
}

TEST_CASE("outer loop behavior") {
    SUBCASE("zero potentials settle immediately") {
        auto m = testutil::two_node_ab({0, 0, 0, 0});
        auto target = weights_bethe_truncated(m);
        auto [b, rep] = cccp_solve(m, default_decomposition(m, target), {});
        CHECK(rep.solve.converged());
        CHECK(rep.trace.size() <= 3);
        for (const auto& t : b.node)
            for (double v : t) CHECK(v == doctest::Approx(0.5).epsilon(1e-8));
    }
    SUBCASE("tree instances recover the oracle optimum") {
        for (uint64_t seed = 0; seed < 10; ++seed) {
            auto m = gen_ab_tree(8, 2, 1.0, seed + 300);
            auto oracle = marginal_map_bruteforce(m);
            auto target = weights_bethe_truncated(m);
            auto [b, rep] = cccp_solve(m, default_decomposition(m, target), {});
            CHECK(rep.solve.decoded_xb == oracle.argmax_b);
            REQUIRE(rep.solve.q_decoded.has_value());
            CHECK(*rep.solve.q_decoded == doctest::Approx(oracle.phi_ab).epsilon(1e-6));
        }
    }
    SUBCASE("concave decomposition gives a monotone trace") {
        for (uint64_t seed = 0; seed < 5; ++seed) {
            auto m = gen_hmm(6, 3, 0.8, seed + 11);
            auto rho = compute_rho(m, enumerate_type1(m, seed));
            auto target = weights_trw_truncated(m, rho);
            auto [b, rep] = cccp_solve(m, concave_decomposition(m, target), {});
            for (size_t k = 1; k < rep.trace.size(); ++k)
                CHECK(rep.trace[k] >= rep.trace[k - 1] - 1e-9);
        }
    }
    SUBCASE("a converged outer loop is self consistent") {
        auto m = gen_ab_tree(8, 2, 0.5, 888);
        auto target = weights_bethe_truncated(m);
        CccpConfig cfg;
        auto [b, rep] = cccp_solve(m, default_decomposition(m, target), cfg);
        REQUIRE(rep.trace.size() >= 2);
        CHECK(std::fabs(rep.trace.back() - rep.trace[rep.trace.size() - 2]) < 1e-6);
    }
}

TEST_CASE("coordinate ascent") {
    SUBCASE("two-node model converges in at most two steps from any start") {
        auto m = testutil::two_node_ab();
        EmConfig cfg;
        cfg.restarts = 4;
        auto [state, rep] = em_solve(m, cfg);
        CHECK(state.x_b == std::vector<int>{0});
        CHECK(state.trace.size() <= 3);
        CHECK(state.trace.back() == doctest::Approx(1.3132617).epsilon(1e-6));
    }
    SUBCASE("every restart trace is monotone") {
        for (uint64_t seed = 0; seed < 8; ++seed) {
            auto m = gen_hmm(6, 3, 0.8, seed + 70);
            EmConfig cfg;
            cfg.seed = seed;
            auto [state, rep] = em_solve(m, cfg);
            for (const auto& trace : state.all_traces)
                for (size_t k = 1; k < trace.size(); ++k)
                    CHECK(trace[k] >= trace[k - 1] - 1e-12);
        }
    }
    SUBCASE("fixed points are locally optimal when the max part is edgeless") {
        for (uint64_t seed = 0; seed < 5; ++seed) {
            auto m = gen_hmm(5, 2, 1.0, seed + 90);
            EmConfig cfg;
            cfg.seed = seed;
            auto [state, rep] = em_solve(m, cfg);
            CHECK(certify_local(m, state.x_b, 1));
        }
    }
    SUBCASE("approximate mode still produces a valid assignment") {
        auto m = gen_hmm(5, 3, 0.8, 123);
        EmConfig cfg;
        cfg.mode = EmMode::Bethe;
        auto [state, rep] = em_solve(m, cfg);
        REQUIRE(state.x_b.size() == 5);
        double q = q_of_xb(m, state.x_b);
        CHECK(std::isfinite(q));
    }
}

TEST_CASE("the three solvers agree on tractable trees") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        auto m = gen_ab_tree(8, 2, 1.0, seed + 500);
        auto oracle = marginal_map_bruteforce(m);
        auto target = weights_bethe_truncated(m);
        auto [b1, r1] = cccp_solve(m, default_decomposition(m, target), {});
        auto [b2, r2] = mixed_mp_fixed_point(m, rho_bethe(m), {});
        EmConfig cfg;
        cfg.seed = seed;
        auto [state, r3] = em_solve(m, cfg);
        REQUIRE(r1.solve.q_decoded.has_value());
        CHECK(*r1.solve.q_decoded == doctest::Approx(oracle.phi_ab).epsilon(1e-6));
        if (r2.q_decoded)
            CHECK(*r2.q_decoded <= oracle.phi_ab + 1e-9);
        CHECK(state.trace.back() <= oracle.phi_ab + 1e-9);
    }
}
