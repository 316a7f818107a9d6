#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mmi/baselines.hpp"
#include "mmi/bench.hpp"
#include "mmi/exact.hpp"
#include "mmi/mixed_mp.hpp"
#include "mmi/model.hpp"
#include "mmi/optimizers.hpp"
#include "mmi/trees.hpp"

namespace {

void print_assignment(const std::vector<int>& x) {
    for (size_t k = 0; k < x.size(); ++k) std::cout << (k ? " " : "") << x[k];
    std::cout << "\n";
}

mmi::EdgeAppearance load_rho_file(const std::string& path, const mmi::PairwiseModel& m) {
    std::ifstream in(path);
    if (!in) throw mmi::ModelError("cannot open rho file: " + path);
    mmi::EdgeAppearance rho;
    double v;
    while (in >> v) rho.rho.push_back(v);
    if ((int)rho.rho.size() != m.num_edges())
        throw mmi::ModelError("rho file entry count does not match edge count");
    return rho;
}

int cmd_solve(const std::string& model_path, const std::string& algo,
              const std::string& rho_file, const mmi::SolveConfig& cfg, uint64_t seed) {
    mmi::PairwiseModel m = mmi::load_model_file(model_path);
    mmi::AlgorithmResult r;
    if (!rho_file.empty() && (algo == "mixed-mp" || algo == "jiang-hybrid")) {
        auto rho = load_rho_file(rho_file, m);
        auto [b, rep] = mmi::mixed_mp_fixed_point(m, rho, cfg, algo == "jiang-hybrid");
        r.decoded = rep.decoded_xb;
        r.q_hat = rep.q_decoded ? *rep.q_decoded : mmi::q_of_xb(m, rep.decoded_xb);
        r.iterations = rep.iterations;
        r.converged = rep.converged();
        r.objective = rep.objective;
        r.consistency = rep.consistency;
    } else {
        r = mmi::run_algorithm(m, algo, seed, cfg);
    }
    std::printf("algorithm: %s\n", algo.c_str());
    std::printf("q_hat: %.12g\n", r.q_hat);
    std::printf("objective: %.12g\n", r.objective);
    std::printf("iterations: %d\n", r.iterations);
    std::printf("converged: %s\n", r.converged ? "yes" : "no");
    std::printf("consistency: %.3g\n", r.consistency);
    if (r.upper_bound) std::printf("upper_bound: %.12g\n", *r.upper_bound);
    std::printf("x_b:");
    for (int v : r.decoded) std::printf(" %d", v);
    std::printf("\n");
    return r.converged ? 0 : 2;
}

int cmd_exact(const std::string& model_path) {
    mmi::PairwiseModel m = mmi::load_model_file(model_path);
    mmi::ExactResult r = mmi::marginal_map_bruteforce(m);
    std::printf("phi_ab: %.12g\n", r.phi_ab);
    std::printf("argmax_b:");
    for (int v : r.argmax_b) std::printf(" %d", v);
    std::printf("\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"marginal MAP inference for discrete pairwise models"};
    app.require_subcommand(1);

    std::string model_path, algo = "mix-bethe-cccp", rho_file, out_path;
    mmi::SolveConfig cfg;
    uint64_t seed = 0;

    auto* solve = app.add_subcommand("solve", "run one algorithm on a model file");
    solve->add_option("model", model_path)->required();
    solve->add_option("--algo", algo);
    solve->add_option("--rho-file", rho_file);
    solve->add_option("--damping", cfg.damping);
    solve->add_option("--tol", cfg.tolerance);
    solve->add_option("--max-iters", cfg.max_iterations);
    solve->add_option("--seed", seed);

    auto* exact = app.add_subcommand("exact", "exact marginal MAP by enumeration");
    exact->add_option("model", model_path)->required();

    auto* gen = app.add_subcommand("gen", "generate a random model");
    gen->require_subcommand(1);
    int pairs = 10, states = 3, rows = 10, cols = 10, nodes = 8;
    double sigma = 0.5;
    bool attractive = false;
    auto* gen_hmm = gen->add_subcommand("hmm", "hidden Markov chain family");
    gen_hmm->add_option("--pairs", pairs);
    gen_hmm->add_option("--states", states);
    gen_hmm->add_option("--sigma", sigma);
    gen_hmm->add_option("--seed", seed);
    gen_hmm->add_option("-o,--out", out_path)->required();
    auto* gen_ising = gen->add_subcommand("ising", "binary grid family");
    gen_ising->add_option("--rows", rows);
    gen_ising->add_option("--cols", cols);
    gen_ising->add_option("--sigma", sigma);
    gen_ising->add_option("--seed", seed);
    gen_ising->add_flag("--attractive", attractive);
    gen_ising->add_option("-o,--out", out_path)->required();
    auto* gen_tree = gen->add_subcommand("tree", "random tree with a random partition");
    gen_tree->add_option("--nodes", nodes);
    gen_tree->add_option("--states", states);
    gen_tree->add_option("--sigma", sigma);
    gen_tree->add_option("--seed", seed);
    gen_tree->add_option("-o,--out", out_path)->required();

    auto* bench = app.add_subcommand("bench", "benchmark sweep to CSV");
    bench->require_subcommand(1);
    mmi::BenchOptions opt;
    auto add_bench_common = [&](CLI::App* b) {
        b->add_option("--sigmas", opt.sigmas);
        b->add_option("--instances", opt.instances_per_sigma);
        b->add_option("--algorithms", opt.algorithms);
        b->add_option("--seed", opt.seed);
        b->add_option("-o,--out", out_path)->required();
    };
    auto* bench_hmm = bench->add_subcommand("hmm", "hidden Markov chain sweep");
    bench_hmm->add_option("--pairs", opt.hmm_pairs);
    bench_hmm->add_option("--states", opt.hmm_states);
    add_bench_common(bench_hmm);
    auto* bench_ising = bench->add_subcommand("ising", "binary grid sweep");
    bench_ising->add_option("--rows", opt.grid_rows);
    bench_ising->add_option("--cols", opt.grid_cols);
    bench_ising->add_flag("--attractive", attractive);
    add_bench_common(bench_ising);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) {
            cfg.seed = seed;
            return cmd_solve(model_path, algo, rho_file, cfg, seed);
        }
        if (exact->parsed()) return cmd_exact(model_path);
        if (gen->parsed()) {
            mmi::PairwiseModel m =
                gen_hmm->parsed()   ? mmi::gen_hmm(pairs, states, sigma, seed)
                : gen_ising->parsed()
                    ? mmi::gen_ising(rows, cols,
                                     attractive ? mmi::IsingMode::Attractive
                                                : mmi::IsingMode::Mixed,
                                     sigma, seed)
                    : mmi::gen_ab_tree(nodes, states, sigma, seed);
            mmi::save_model_file(m, out_path);
            return 0;
        }
        if (bench->parsed()) {
            opt.family = bench_hmm->parsed() ? mmi::BenchFamily::Hmm
                         : attractive       ? mmi::BenchFamily::IsingAttractive
                                            : mmi::BenchFamily::IsingMixed;
            auto records = mmi::run_benchmark(opt);
            std::ofstream out(out_path);
            if (!out) throw mmi::ModelError("cannot open output file: " + out_path);
            mmi::write_csv(records, out);
            return 0;
        }
    } catch (const mmi::ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
