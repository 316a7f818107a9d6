#pragma once

#include <cstdint>
#include <vector>

#include "mmi/model.hpp"

namespace mmi {

/// A weighted A-B subtree, stored as edge indices into the model's edge list.
struct ABSubtree {
    std::vector<int> edges;
    double weight = 0.0;
};

/// Per-edge appearance probabilities. Indexed like the model's edge list;
/// edges in no subtree (notably E_B) carry the value set by the caller.
struct EdgeAppearance {
    std::vector<double> rho;
};

/// Acyclic, and each connected component of the subtree's sum part touches
/// at most one of the subtree's crossing edges.
bool valid_ab_subtree(const PairwiseModel& m, const ABSubtree& t);

/// One subtree per boundary edge: a spanning forest of G_A plus that edge,
/// uniform weights. When G_A has cycles the spanning forest is sampled
/// uniformly per subtree (Wilson's algorithm), seeded.
std::vector<ABSubtree> enumerate_type1(const PairwiseModel& m, uint64_t seed = 0);

/// Greedy conflict coloring of boundary edges by sum endpoint: maximal sets
/// of boundary edges with pairwise-distinct sum endpoints, uniform weights.
std::vector<ABSubtree> enumerate_type2(const PairwiseModel& m);

/// Union with weights alpha * w on c1 and (1 - alpha) * w on c2.
std::vector<ABSubtree> mix_collections(const std::vector<ABSubtree>& c1,
                                       const std::vector<ABSubtree>& c2, double alpha);

/// rho_ij = sum of weights of subtrees containing the edge. E_B entries are
/// filled with rho_b_default.
EdgeAppearance compute_rho(const PairwiseModel& m, const std::vector<ABSubtree>& trees,
                           double rho_b_default = 0.5);

/// rho = 1 on E_A, boundary, and E_B alike (the truncated-Bethe choice).
EdgeAppearance rho_bethe(const PairwiseModel& m);

}  // namespace mmi
