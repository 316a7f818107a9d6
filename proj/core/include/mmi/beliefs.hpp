#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mmi/model.hpp"

namespace mmi {

/// A point in the local polytope: per-node and per-edge probability tables.
/// Edge tables are row-major in the state of the first (lower) endpoint.
struct Beliefs {
    std::vector<std::vector<double>> node;
    std::vector<std::vector<double>> edge;
};

struct FreeEnergyWeights {
    std::vector<double> node;  // w_i >= 0
    std::vector<double> edge;  // w_ij >= 0
};

double node_entropy(const std::vector<double>& tau_i);

double mutual_info(const std::vector<double>& tau_ij, const std::vector<double>& tau_i,
                   const std::vector<double>& tau_j);

/// <theta, tau> + sum_i w_i H_i - sum_ij w_ij I_ij.
double eval_free_energy(const Beliefs& b, const PairwiseModel& m, const FreeEnergyWeights& w);

/// Truncated Bethe: w_i = 1 on A, 0 on B; w_ij = 1 on E_A and boundary, 0 on E_B.
FreeEnergyWeights weights_bethe_truncated(const PairwiseModel& m);

/// All weights 1 (ordinary sum-inference Bethe).
FreeEnergyWeights weights_sum_bethe(const PairwiseModel& m);

struct EdgeAppearance;  // trees.hpp

/// Truncated TRW: same support as truncated Bethe with rho_ij edge weights.
FreeEnergyWeights weights_trw_truncated(const PairwiseModel& m, const EdgeAppearance& rho);

/// Max absolute violation over normalization, nonnegativity, and
/// pairwise-to-singleton marginalization constraints.
double consistency_residual(const Beliefs& b, const PairwiseModel& m);

/// Clamp every max node to its decoded state: one-hot node beliefs on B,
/// edge tables restricted to the decoded slice. Sum beliefs are kept.
/// decoded_xb lists the decoded states of the max nodes in index order.
Beliefs harden_at_decode(const Beliefs& b, const PairwiseModel& m,
                         const std::vector<int>& decoded_xb);

struct ConcavityCertificate {
    std::vector<double> kappa_node;  // per max node index (full node indexing; 0 for sum nodes)
    // kappa for each (E_B edge, endpoint) directed share: kappa[e][0] is the
    // share charged to the lower endpoint, kappa[e][1] to the higher one.
    std::vector<std::array<double, 2>> kappa_directed;
    std::vector<int> e_b_edges;
};

/// Feasibility of the entropy decomposition certifying concavity of
/// H(x_B) = sum_{i in B} H_i - sum_{E_B} rho_ij I_ij. rho_b maps each E_B
/// edge index to its weight.
std::optional<ConcavityCertificate> check_provably_concave(
    const PairwiseModel& m, const std::vector<std::pair<int, double>>& rho_b);

}  // namespace mmi
