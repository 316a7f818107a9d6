#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "mmi/model.hpp"

namespace mmi {

struct Beliefs;  // beliefs.hpp

struct StateSpaceExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OracleCaps {
    uint64_t joint_cap = uint64_t(1) << 24;  // full joint enumeration
    uint64_t max_cap = uint64_t(1) << 20;    // max-configuration enumeration
};

struct ExactResult {
    double phi_ab = 0.0;
    std::vector<int> argmax_b;  // indexed by max-node position (ascending node id)
    std::optional<std::map<std::vector<int>, double>> q_values;
};

double log_sum_exp(const std::vector<double>& v);

/// Exact log-partition by enumeration over the full joint space.
double log_partition_bruteforce(const PairwiseModel& m, const OracleCaps& caps = {});

/// The sum-conditioned model: nodes of A only, with the max assignment
/// absorbed into unary terms, plus the constant carried by B-only terms.
struct ConditionedSumModel {
    std::vector<int> a_nodes;                       // ascending node ids in A
    std::vector<int> cards;                         // per a_nodes position
    std::vector<std::vector<double>> unary;         // theta_i plus clamped crossing terms
    std::vector<std::pair<int, int>> edges;         // positions into a_nodes
    std::vector<const std::vector<double>*> tables; // E_A tables (first endpoint-major)
    std::vector<int> table_card_second;
    double constant = 0.0;                          // B-node and E_B contributions
    bool forest = false;
};

ConditionedSumModel condition_on_max(const PairwiseModel& m, const std::vector<int>& x_b);

/// Log-partition of the conditioned sum part (forest elimination when the
/// sum graph is a forest, enumeration otherwise).
double conditioned_log_partition(const ConditionedSumModel& c, const OracleCaps& caps = {});

/// Node marginals of the conditioned sum part, same tractability rules.
std::vector<std::vector<double>> conditioned_marginals(const ConditionedSumModel& c,
                                                       const OracleCaps& caps = {});

/// Q(x_B; theta) = log sum over x_A of exp theta(x).
double q_of_xb(const PairwiseModel& m, const std::vector<int>& x_b, const OracleCaps& caps = {});

ExactResult marginal_map_bruteforce(const PairwiseModel& m, const OracleCaps& caps = {},
                                    bool keep_q_values = false);

Beliefs exact_marginals(const PairwiseModel& m, const OracleCaps& caps = {});

/// Exact MAP over the full joint space (all nodes), lexicographic tie-break.
std::vector<int> map_bruteforce(const PairwiseModel& m, const OracleCaps& caps = {});

}  // namespace mmi
