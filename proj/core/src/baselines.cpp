#include "mmi/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mmi {

namespace {

// Standalone synchronous BP in log domain; kept deliberately separate from
// the weighted engine so reduction checks compare independent code paths.
std::pair<Beliefs, SolveReport> plain_bp(const PairwiseModel& m, const SolveConfig& cfg,
                                         bool maximize) {
    const int ne = m.num_edges();
    auto dir = [&](int e, int from) { return 2 * e + (m.edge(e).first == from ? 0 : 1); };
    std::vector<std::vector<double>> lm(2 * ne);
    for (int e = 0; e < ne; ++e) {
        auto [i, j] = m.edge(e);
        lm[2 * e].assign(m.card(j), -std::log(double(m.card(j))));
        lm[2 * e + 1].assign(m.card(i), -std::log(double(m.card(i))));
    }

    SolveReport rep;
    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        std::vector<std::vector<double>> pre(m.num_nodes());
        for (int i = 0; i < m.num_nodes(); ++i) {
            pre[i] = m.theta_node(i);
            for (auto [k, e] : m.neighbors(i))
                for (int x = 0; x < m.card(i); ++x) pre[i][x] += lm[dir(e, k)][x];
        }
        std::vector<std::vector<double>> next(2 * ne);
        for (int e = 0; e < ne; ++e) {
            auto [i, j] = m.edge(e);
            for (int from : {i, j}) {
                int to = from == i ? j : i;
                std::vector<double> raw(m.card(to));
                for (int xt = 0; xt < m.card(to); ++xt) {
                    std::vector<double> terms(m.card(from));
                    for (int xf = 0; xf < m.card(from); ++xf) {
                        double th = from == i ? m.theta_edge(e, xf, xt)
                                              : m.theta_edge(e, xt, xf);
                        terms[xf] = pre[from][xf] - lm[dir(e, to)][xf] + th;
                    }
                    raw[xt] = maximize ? *std::max_element(terms.begin(), terms.end())
                                       : log_sum_exp(terms);
                }
                double z = log_sum_exp(raw);
                for (double& v : raw) v -= z;
                next[dir(e, from)] = std::move(raw);
            }
        }
        double res = 0.0;
        for (int d = 0; d < 2 * ne; ++d) {
            if (cfg.damping > 0.0) {
                for (size_t x = 0; x < next[d].size(); ++x)
                    next[d][x] = (1.0 - cfg.damping) * next[d][x] + cfg.damping * lm[d][x];
                double z = log_sum_exp(next[d]);
                for (double& v : next[d]) v -= z;
            }
            for (size_t x = 0; x < next[d].size(); ++x)
                res = std::max(res, std::fabs(std::exp(next[d][x]) - std::exp(lm[d][x])));
        }
        lm.swap(next);
        rep.residual = res;
        if (res <= cfg.tolerance) {
            rep.status = SolveStatus::Converged;
            ++it;
            break;
        }
    }
    rep.iterations = it;

    Beliefs b;
    b.node.resize(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i) {
        std::vector<double> lb = m.theta_node(i);
        for (auto [k, e] : m.neighbors(i))
            for (int x = 0; x < m.card(i); ++x) lb[x] += lm[dir(e, k)][x];
        double z = log_sum_exp(lb);
        b.node[i].resize(m.card(i));
        for (int x = 0; x < m.card(i); ++x) b.node[i][x] = std::exp(lb[x] - z);
    }
    b.edge.resize(m.num_edges());
    for (int e = 0; e < ne; ++e) {
        auto [i, j] = m.edge(e);
        int cj = m.card(j);
        std::vector<double> lt(m.card(i) * cj);
        for (int a = 0; a < m.card(i); ++a)
            for (int c = 0; c < cj; ++c) {
                double li = std::log(std::max(b.node[i][a], 1e-300)) - lm[dir(e, j)][a];
                double lj = std::log(std::max(b.node[j][c], 1e-300)) - lm[dir(e, i)][c];
                lt[a * cj + c] = li + lj + m.theta_edge(e, a, c);
            }
        double z = log_sum_exp(lt);
        b.edge[e].resize(lt.size());
        for (size_t k = 0; k < lt.size(); ++k) b.edge[e][k] = std::exp(lt[k] - z);
    }

    rep.decoded_xb = decode(b.node, m, &rep.decode_tie);
    rep.max_belief_gap = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_max(i))
            rep.max_belief_gap =
                std::max(rep.max_belief_gap,
                         1.0 - *std::max_element(b.node[i].begin(), b.node[i].end()));
    try {
        rep.q_decoded = q_of_xb(m, rep.decoded_xb);
    } catch (const StateSpaceExceeded&) {
    }
    rep.consistency = consistency_residual(b, m);
    rep.objective = rep.q_decoded.value_or(0.0);
    return {std::move(b), rep};
}

}  // namespace

std::pair<Beliefs, SolveReport> sum_product(const PairwiseModel& m, const SolveConfig& cfg) {
    return plain_bp(m, cfg, false);
}

std::pair<Beliefs, SolveReport> max_product(const PairwiseModel& m, const SolveConfig& cfg) {
    return plain_bp(m, cfg, true);
}

}  // namespace mmi
