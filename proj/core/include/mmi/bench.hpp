#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmi/exact.hpp"
#include "mmi/mixed_mp.hpp"
#include "mmi/model.hpp"

namespace mmi {

/// Hidden Markov chain: num_pairs sum nodes in a chain, one max leaf each.
/// Node potentials N(0, 0.1); off-diagonal couplings N(0, sigma); diagonal
/// coupling entries exactly zero.
PairwiseModel gen_hmm(int num_pairs, int states, double sigma, uint64_t seed);

enum class IsingMode { Mixed, Attractive };

/// Binary grid with a chessboard sum/max partition ((r+c) even is sum).
PairwiseModel gen_ising(int rows, int cols, IsingMode mode, double sigma, uint64_t seed);

/// Random tree with a random partition resampled until the graph is an A-B
/// tree with both node kinds present; potentials as in gen_hmm.
PairwiseModel gen_ab_tree(int num_nodes, int states, double sigma, uint64_t seed);

struct AlgorithmResult {
    std::vector<int> decoded;
    double q_hat = 0.0;
    std::optional<double> upper_bound;
    int iterations = 0;
    bool converged = false;
    bool decode_tie = false;
    double objective = 0.0;
    double consistency = 0.0;
};

extern const std::vector<std::string> kAlgorithms;

/// Runs one named algorithm on a model. Unknown names throw.
AlgorithmResult run_algorithm(const PairwiseModel& m, const std::string& name, uint64_t seed,
                              const SolveConfig& base = {});

/// Epsilon-annealed value of the truncated TRW objective; a certified upper
/// bound on Phi_AB when the weighting is concave.
double trw_upper_bound(const PairwiseModel& m, const EdgeAppearance& rho,
                       const SolveConfig& base = {}, double final_eps = 1e-3);

struct BenchmarkRecord {
    std::string instance_id;
    uint64_t seed = 0;
    double sigma = 0.0;
    std::string algorithm;
    double q_hat = 0.0;
    double reference = 0.0;
    double rel_error = 0.0;
    bool exact_match = false;
    std::optional<double> upper_bound;
    int iterations = 0;
    bool converged = false;
    double wall_ms = 0.0;
};

enum class BenchFamily { Hmm, IsingMixed, IsingAttractive };

struct BenchOptions {
    BenchFamily family = BenchFamily::Hmm;
    std::vector<double> sigmas = {0.3, 0.8, 1.3};
    int instances_per_sigma = 50;
    std::vector<std::string> algorithms = kAlgorithms;
    uint64_t seed = 0;
    OracleCaps caps;
    int hmm_pairs = 10;
    int hmm_states = 3;
    int grid_rows = 10;
    int grid_cols = 10;
    SolveConfig solve;
};

std::vector<BenchmarkRecord> run_benchmark(const BenchOptions& opt);

/// CSV stream: header + raw rows, blank line, aggregate block.
void write_csv(const std::vector<BenchmarkRecord>& records, std::ostream& out);

}  // namespace mmi
