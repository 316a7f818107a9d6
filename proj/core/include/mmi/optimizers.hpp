#pragma once

#include <cstdint>
#include <vector>

#include "mmi/beliefs.hpp"
#include "mmi/exact.hpp"
#include "mmi/mixed_mp.hpp"
#include "mmi/model.hpp"

namespace mmi {

/// Split of the surrogate entropy into a part kept in the inner problem
/// (plus) and a part handled by linearization (minus); plus - minus equals
/// the target truncated weighting entrywise.
struct EntropyDecomposition {
    FreeEnergyWeights plus;
    FreeEnergyWeights minus;
};

/// plus = all ones (ordinary sum-inference Bethe); minus = plus - target.
EntropyDecomposition default_decomposition(const PairwiseModel& m,
                                           const FreeEnergyWeights& target);

/// minus carries only what truncation removed (1 on max nodes, rho_b on E_B
/// edges); plus = target + minus. Keeps both parts concave for TRW targets.
EntropyDecomposition concave_decomposition(const PairwiseModel& m,
                                           const FreeEnergyWeights& target, double rho_b = 0.5);

struct CccpConfig {
    double outer_tolerance = 1e-9;
    int max_outer = 1000;
    SolveConfig inner;
};

struct CccpReport {
    SolveReport solve;
    std::vector<double> trace;  // target free energy per outer iteration
    int inner_iterations = 0;
};

/// Iterated linearization of the minus part; the inner problem is solved
/// with the positive-weight message scheme under the plus weights.
std::pair<Beliefs, CccpReport> cccp_solve(const PairwiseModel& m,
                                          const EntropyDecomposition& decomp,
                                          const CccpConfig& cfg);

enum class EmMode { Exact, Bethe };

struct EmConfig {
    int restarts = 10;
    int max_iterations = 100;
    uint64_t seed = 0;
    EmMode mode = EmMode::Exact;
    OracleCaps caps;
    SolveConfig inner;  // Bethe-mode E-step and max-product M-step settings
};

struct EmState {
    std::vector<int> x_b;
    std::vector<std::vector<double>> q_a;  // sum-part marginals at the fixed point
    std::vector<double> trace;             // Q(x_B^n) of the winning restart
    std::vector<std::vector<double>> all_traces;
};

std::pair<EmState, SolveReport> em_solve(const PairwiseModel& m, const EmConfig& cfg);

}  // namespace mmi
