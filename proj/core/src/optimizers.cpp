#include "mmi/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mmi/baselines.hpp"

namespace mmi {

namespace {
constexpr double kLogFloor = 1e-300;

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }
}  // namespace

EntropyDecomposition default_decomposition(const PairwiseModel& m,
                                           const FreeEnergyWeights& target) {
    EntropyDecomposition d;
    d.plus = weights_sum_bethe(m);
    d.minus.node.resize(m.num_nodes());
    d.minus.edge.resize(m.num_edges());
    for (int i = 0; i < m.num_nodes(); ++i) {
        d.minus.node[i] = d.plus.node[i] - target.node[i];
        if (d.minus.node[i] < 0.0) throw ModelError("target node weight exceeds 1");
    }
    for (int e = 0; e < m.num_edges(); ++e) {
        d.minus.edge[e] = d.plus.edge[e] - target.edge[e];
        if (d.minus.edge[e] < 0.0) throw ModelError("target edge weight exceeds 1");
    }
    return d;
}

EntropyDecomposition concave_decomposition(const PairwiseModel& m,
                                           const FreeEnergyWeights& target, double rho_b) {
    EntropyDecomposition d;
    d.minus.node.assign(m.num_nodes(), 0.0);
    d.minus.edge.assign(m.num_edges(), 0.0);
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_max(i)) d.minus.node[i] = 1.0;
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_max(i) && m.is_max(j)) d.minus.edge[e] = rho_b;
    }
    d.plus.node.resize(m.num_nodes());
    d.plus.edge.resize(m.num_edges());
    for (int i = 0; i < m.num_nodes(); ++i) d.plus.node[i] = target.node[i] + d.minus.node[i];
    for (int e = 0; e < m.num_edges(); ++e) d.plus.edge[e] = target.edge[e] + d.minus.edge[e];
    return d;
}

std::pair<Beliefs, CccpReport> cccp_solve(const PairwiseModel& m,
                                          const EntropyDecomposition& decomp,
                                          const CccpConfig& cfg) {
    FreeEnergyWeights target;
    target.node.resize(m.num_nodes());
    target.edge.resize(m.num_edges());
    for (int i = 0; i < m.num_nodes(); ++i)
        target.node[i] = decomp.plus.node[i] - decomp.minus.node[i];
    for (int e = 0; e < m.num_edges(); ++e)
        target.edge[e] = decomp.plus.edge[e] - decomp.minus.edge[e];

    // Uniform starting point.
    Beliefs tau;
    tau.node.resize(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i)
        tau.node[i].assign(m.card(i), 1.0 / m.card(i));
    tau.edge.resize(m.num_edges());
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        tau.edge[e].assign(m.card(i) * m.card(j), 1.0 / (m.card(i) * m.card(j)));
    }

    CccpReport rep;
    MessageSet warm;
    double prev_f = -std::numeric_limits<double>::infinity();
    bool converged = false;
    SolveReport inner_rep;
    for (int outer = 0; outer < cfg.max_outer; ++outer) {
        // Linearize the minus part at tau: adjust theta toward the original.
        std::vector<std::vector<double>> th_i(m.num_nodes());
        std::vector<std::vector<double>> th_ij(m.num_edges());
        for (int i = 0; i < m.num_nodes(); ++i) {
            th_i[i] = m.theta_node(i);
            if (decomp.minus.node[i] != 0.0)
                for (int x = 0; x < m.card(i); ++x)
                    th_i[i][x] += decomp.minus.node[i] * safe_log(tau.node[i][x]);
        }
        for (int e = 0; e < m.num_edges(); ++e) {
            th_ij[e] = m.theta_edge(e);
            if (decomp.minus.edge[e] != 0.0) {
                auto [i, j] = m.edge(e);
                int cj = m.card(j);
                for (int a = 0; a < m.card(i); ++a)
                    for (int c = 0; c < cj; ++c)
                        th_ij[e][a * cj + c] +=
                            decomp.minus.edge[e] *
                            (safe_log(tau.edge[e][a * cj + c]) -
                             safe_log(tau.node[i][a]) - safe_log(tau.node[j][c]));
            }
        }
        PairwiseModel adjusted(m.cards(), std::move(th_i), m.edges(), std::move(th_ij),
                               m.partition());
        auto [b, irep] = weighted_mp_fixed_point(adjusted, decomp.plus, cfg.inner, &warm);
        rep.inner_iterations += irep.iterations;
        inner_rep = irep;
        tau = std::move(b);
        double f = eval_free_energy(tau, m, target);
        rep.trace.push_back(f);
        if (outer > 0 && std::fabs(f - prev_f) < cfg.outer_tolerance) {
            converged = true;
            break;
        }
        prev_f = f;
    }

    SolveReport& out = rep.solve;
    out.status = converged ? SolveStatus::Converged : SolveStatus::NotConverged;
    out.iterations = static_cast<int>(rep.trace.size());
    out.residual = inner_rep.residual;
    out.consistency = consistency_residual(tau, m);
    out.decoded_xb = decode(tau.node, m, &out.decode_tie);
    // Score the rounded point; the iterate's max beliefs may still be
    // slightly fractional when the outer loop stops.
    out.objective = eval_free_energy(harden_at_decode(tau, m, out.decoded_xb), m, target);
    out.max_belief_gap = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_max(i))
            out.max_belief_gap =
                std::max(out.max_belief_gap,
                         1.0 - *std::max_element(tau.node[i].begin(), tau.node[i].end()));
    try {
        out.q_decoded = q_of_xb(m, out.decoded_xb);
    } catch (const StateSpaceExceeded&) {
    }
    return {std::move(tau), rep};
}

namespace {

PairwiseModel materialize_sum_model(const ConditionedSumModel& c) {
    std::vector<std::vector<double>> tables;
    tables.reserve(c.tables.size());
    for (auto* t : c.tables) tables.push_back(*t);
    return PairwiseModel(c.cards, c.unary, c.edges, std::move(tables),
                         std::vector<NodeRole>(c.cards.size(), NodeRole::Sum));
}

struct MStepInput {
    std::vector<int> b_nodes;
    std::vector<std::vector<double>> unary;      // expected potentials per b node
    std::vector<std::pair<int, int>> eb_edges;   // model edge index pairs into b positions
    std::vector<int> eb_model_edges;
};

MStepInput expected_potentials(const PairwiseModel& m,
                               const std::vector<std::vector<double>>& sum_marginals) {
    MStepInput in;
    std::vector<int> bpos(m.num_nodes(), -1), apos(m.num_nodes(), -1);
    int na = 0;
    for (int i = 0; i < m.num_nodes(); ++i) {
        if (m.is_max(i)) {
            bpos[i] = static_cast<int>(in.b_nodes.size());
            in.b_nodes.push_back(i);
            in.unary.push_back(m.theta_node(i));
        } else {
            apos[i] = na++;
        }
    }
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_max(i) && m.is_max(j)) {
            in.eb_edges.emplace_back(bpos[i], bpos[j]);
            in.eb_model_edges.push_back(e);
        } else if (m.is_max(i) != m.is_max(j)) {
            int s = m.is_sum(i) ? i : j;
            int b = m.is_sum(i) ? j : i;
            const auto& mu = sum_marginals[apos[s]];
            auto& u = in.unary[bpos[b]];
            for (int xb = 0; xb < m.card(b); ++xb) {
                double acc = 0.0;
                for (int xs = 0; xs < m.card(s); ++xs)
                    acc += mu[xs] * (s == i ? m.theta_edge(e, xs, xb) : m.theta_edge(e, xb, xs));
                u[xb] += acc;
            }
        }
    }
    return in;
}

// Argmax of sum of unaries plus E_B pair terms; exact when the max space is
// small, damped max-product otherwise (caller guards monotonicity).
std::vector<int> maximize_b(const PairwiseModel& m, const MStepInput& in, const OracleCaps& caps,
                            const SolveConfig& inner, bool force_max_product) {
    int nb = static_cast<int>(in.b_nodes.size());
    if (in.eb_edges.empty() && !force_max_product) {
        std::vector<int> xb(nb, 0);
        for (int k = 0; k < nb; ++k) {
            const auto& u = in.unary[k];
            for (size_t x = 1; x < u.size(); ++x)
                if (u[x] > u[xb[k]]) xb[k] = static_cast<int>(x);
        }
        return xb;
    }
    std::vector<int> cards(nb);
    for (int k = 0; k < nb; ++k) cards[k] = m.card(in.b_nodes[k]);
    uint64_t space = 1;
    bool small = true;
    for (int c : cards) {
        space *= static_cast<uint64_t>(c);
        if (space > caps.max_cap) {
            small = false;
            break;
        }
    }
    std::vector<std::vector<double>> tables;
    for (size_t k = 0; k < in.eb_edges.size(); ++k)
        tables.push_back(m.theta_edge(in.eb_model_edges[k]));
    PairwiseModel sub(cards, in.unary, in.eb_edges, std::move(tables),
                      std::vector<NodeRole>(nb, NodeRole::Max));
    if (small && !force_max_product) return map_bruteforce(sub, caps);
    SolveConfig cfg = inner;
    cfg.damping = std::max(cfg.damping, 0.1);
    cfg.max_iterations = 50;
    auto [b, rep] = max_product(sub, cfg);
    std::vector<int> xb(nb, 0);
    for (int k = 0; k < nb; ++k) {
        const auto& bk = b.node[k];
        for (size_t x = 1; x < bk.size(); ++x)
            if (bk[x] > bk[xb[k]]) xb[k] = static_cast<int>(x);
    }
    return xb;
}

}  // namespace

std::pair<EmState, SolveReport> em_solve(const PairwiseModel& m, const EmConfig& cfg) {
    std::vector<int> bnodes = m.max_nodes();
    int nb = static_cast<int>(bnodes.size());
    std::mt19937_64 rng(cfg.seed);

    EmState best;
    double best_q = -std::numeric_limits<double>::infinity();
    int best_iters = 0;

    for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
        std::vector<int> xb(nb);
        for (int k = 0; k < nb; ++k)
            xb[k] = std::uniform_int_distribution<int>(0, m.card(bnodes[k]) - 1)(rng);
        std::vector<double> trace{q_of_xb(m, xb, cfg.caps)};
        std::vector<std::vector<double>> marg;
        int iters = 0;
        for (; iters < cfg.max_iterations; ++iters) {
            auto cond = condition_on_max(m, xb);
            if (cfg.mode == EmMode::Exact) {
                marg = conditioned_marginals(cond, cfg.caps);
            } else {
                // Bethe E-step on the conditioned sum model.
                if (cond.cards.empty()) {
                    marg.clear();
                } else {
                    PairwiseModel reduced = materialize_sum_model(cond);
                    auto [b, rep] =
                        weighted_mp_fixed_point(reduced, weights_sum_bethe(reduced), cfg.inner);
                    marg = b.node;
                }
            }
            auto in = expected_potentials(m, marg);
            std::vector<int> xb_next =
                maximize_b(m, in, cfg.caps, cfg.inner, cfg.mode == EmMode::Bethe);
            if (xb_next == xb) break;
            double q_next = q_of_xb(m, xb_next, cfg.caps);
            if (q_next < trace.back()) break;  // acceptance guard for approximate M-steps
            xb = xb_next;
            trace.push_back(q_next);
        }
        if (trace.back() > best_q) {
            best_q = trace.back();
            best.x_b = xb;
            best.q_a = marg;
            best.trace = trace;
            best_iters = iters;
        }
        best.all_traces.push_back(std::move(trace));
    }

    SolveReport rep;
    rep.status = SolveStatus::Converged;
    rep.iterations = best_iters;
    rep.objective = best_q;
    rep.q_decoded = best_q;
    rep.decoded_xb = best.x_b;
    rep.max_belief_gap = 0.0;
    return {std::move(best), rep};
}

}  // namespace mmi
