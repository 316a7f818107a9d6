#pragma once

#include <random>
#include <vector>

#include "mmi/model.hpp"

namespace testutil {

using mmi::NodeRole;
using mmi::PairwiseModel;

// Single binary node, optionally a max node.
inline PairwiseModel one_node(std::vector<double> theta = {0.0, 0.0},
                              NodeRole role = NodeRole::Sum) {
    return PairwiseModel({2}, {std::move(theta)}, {}, {}, {role});
}

// Two binary nodes, node 0 sum and node 1 max, coupled by an identity-favoring
// table [[1,0],[0,1]] unless overridden.
inline PairwiseModel two_node_ab(std::vector<double> edge = {1, 0, 0, 1}) {
    return PairwiseModel({2, 2}, {{0, 0}, {0, 0}}, {{0, 1}}, {std::move(edge)},
                         {NodeRole::Sum, NodeRole::Max});
}

// n binary nodes, no edges, all zero potentials, all sum.
inline PairwiseModel zero_independent(int n, NodeRole role = NodeRole::Sum) {
    std::vector<int> cards(n, 2);
    std::vector<std::vector<double>> th(n, std::vector<double>{0, 0});
    return PairwiseModel(cards, th, {}, {}, std::vector<NodeRole>(n, role));
}

// Random connected tree with normal potentials; roles supplied per node.
inline PairwiseModel random_tree(int n, int states, double sigma,
                                 std::vector<NodeRole> roles, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sigma);
    std::vector<std::pair<int, int>> edges;
    for (int k = 1; k < n; ++k)
        edges.emplace_back(std::uniform_int_distribution<int>(0, k - 1)(rng), k);
    std::vector<int> cards(n, states);
    std::vector<std::vector<double>> th(n);
    for (int i = 0; i < n; ++i) {
        th[i].resize(states);
        for (double& v : th[i]) v = nd(rng);
    }
    std::vector<std::vector<double>> te(edges.size());
    for (auto& t : te) {
        t.resize(states * states);
        for (double& v : t) v = nd(rng);
    }
    return PairwiseModel(cards, th, edges, te, std::move(roles));
}

// Chain of n nodes with a single role everywhere.
inline PairwiseModel random_chain(int n, int states, double sigma, NodeRole role,
                                  uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sigma);
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k + 1 < n; ++k) edges.emplace_back(k, k + 1);
    std::vector<int> cards(n, states);
    std::vector<std::vector<double>> th(n);
    for (auto& t : th) {
        t.resize(states);
        for (double& v : t) v = nd(rng);
    }
    std::vector<std::vector<double>> te(edges.size());
    for (auto& t : te) {
        t.resize(states * states);
        for (double& v : t) v = nd(rng);
    }
    return PairwiseModel(cards, th, edges, te, std::vector<NodeRole>(n, role));
}

}  // namespace testutil
