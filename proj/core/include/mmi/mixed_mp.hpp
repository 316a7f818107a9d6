#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmi/beliefs.hpp"
#include "mmi/exact.hpp"
#include "mmi/model.hpp"
#include "mmi/trees.hpp"

namespace mmi {

/// Directed-edge messages in log domain, normalized so each message sums
/// to one. Direction 2e is first->second on edge e, 2e+1 the reverse.
struct MessageSet {
    std::vector<std::vector<double>> log_msg;
};

struct MixedMarginals {
    std::vector<std::vector<double>> node;
    std::vector<std::vector<double>> edge;

    Beliefs as_beliefs() const { return {node, edge}; }
};

enum class SolveStatus { Converged, NotConverged, Failed };

struct SolveConfig {
    double damping = 0.0;           // geometric, in log domain
    double tolerance = 1e-10;       // message residual (probability scale)
    int max_iterations = 2000;
    double argmax_inclusion_tol = 1e-12;  // relative band for B->A argmax sets
    uint64_t seed = 0;
};

struct SolveReport {
    SolveStatus status = SolveStatus::NotConverged;
    int iterations = 0;
    double residual = 0.0;
    double objective = 0.0;  // free energy at the returned beliefs
    std::vector<int> decoded_xb;
    bool decode_tie = false;
    std::optional<double> q_decoded;  // oracle Q of the decode, when tractable
    double consistency = 0.0;         // local-consistency residual
    double max_belief_gap = 1.0;      // max over B of (1 - top node-belief mass)
    bool concave_weighting = false;   // set by callers that solved a concave objective

    bool converged() const { return status == SolveStatus::Converged; }
};

/// Fixed point of the positive-weight scheme; weights must be strictly
/// positive. Optionally warm-started from a previous message set.
std::pair<Beliefs, SolveReport> weighted_mp_fixed_point(
    const PairwiseModel& m, const FreeEnergyWeights& w, const SolveConfig& cfg,
    MessageSet* warm = nullptr);

/// Fixed point of the mixed scheme (sum messages from A, max messages within
/// B, argmax-restricted sums from B to A). With jiang_variant the B->A rule
/// is replaced by the plain max-product message.
std::pair<MixedMarginals, SolveReport> mixed_mp_fixed_point(
    const PairwiseModel& m, const EdgeAppearance& rho, const SolveConfig& cfg,
    bool jiang_variant = false);

/// Per-max-node argmax of the node beliefs; ties break to the lowest state.
std::vector<int> decode(const std::vector<std::vector<double>>& node_beliefs,
                        const PairwiseModel& m, bool* tie = nullptr);

struct ReparamReport {
    double admissibility = 0.0;  // spread of log-reparameterization minus theta
    double sum_res = 0.0;        // family (a)
    double max_res = 0.0;        // family (b)
    double argmax_res = 0.0;     // family (c)

    double worst() const;
};

ReparamReport check_reparam(const MixedMarginals& b, const PairwiseModel& m,
                            const EdgeAppearance& rho, int samples = 64, uint64_t seed = 1);

struct AnnealStep {
    double epsilon = 0.0;
    Beliefs beliefs;
    double fhat = 0.0;      // surrogate free energy at the step's solution
    double fhat_eps = 0.0;  // epsilon-augmented free energy (upper bounds max fhat)
    SolveReport report;
};

struct AnnealResult {
    std::vector<AnnealStep> steps;
    Beliefs final_beliefs;
    SolveReport final_report;
};

/// Runs the positive-weight scheme along a decreasing epsilon schedule,
/// warm-starting each solve. fhat_weights is the truncated weighting; rho_b
/// supplies E_B edge weights for the added max-part entropy.
AnnealResult anneal_solve(const PairwiseModel& m, const FreeEnergyWeights& fhat_weights,
                          const std::vector<std::pair<int, double>>& rho_b,
                          const std::vector<double>& eps_schedule, const SolveConfig& cfg);

enum class CertVerdict { Global, Unknown };

struct GlobalCertificate {
    CertVerdict verdict = CertVerdict::Unknown;
    std::string reason;
};

GlobalCertificate certify_global(const PairwiseModel& m, const SolveReport& report,
                                 const EdgeAppearance& rho, double tol = 1e-6);

/// Exhaustive Hamming-ball check of Q around x_b.
bool certify_local(const PairwiseModel& m, const std::vector<int>& x_b, int radius,
                   const OracleCaps& caps = {});

}  // namespace mmi
