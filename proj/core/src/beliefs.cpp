#include "mmi/beliefs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "mmi/trees.hpp"

namespace mmi {

namespace {
constexpr double kLogFloor = 1e-300;
}

double node_entropy(const std::vector<double>& tau_i) {
    double h = 0.0;
    for (double p : tau_i)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double mutual_info(const std::vector<double>& tau_ij, const std::vector<double>& tau_i,
                   const std::vector<double>& tau_j) {
    double mi = 0.0;
    const size_t cj = tau_j.size();
    for (size_t a = 0; a < tau_i.size(); ++a) {
        for (size_t b = 0; b < cj; ++b) {
            double p = tau_ij[a * cj + b];
            if (p <= 0.0) continue;
            mi += p * std::log(p / std::max(tau_i[a] * tau_j[b], kLogFloor));
        }
    }
    return mi;
}

double eval_free_energy(const Beliefs& b, const PairwiseModel& m, const FreeEnergyWeights& w) {
    if (static_cast<int>(b.node.size()) != m.num_nodes() ||
        static_cast<int>(b.edge.size()) != m.num_edges())
        throw ModelError("beliefs shape mismatch");
    double f = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i) {
        if (static_cast<int>(b.node[i].size()) != m.card(i))
            throw ModelError("beliefs shape mismatch");
        const auto& th = m.theta_node(i);
        for (int x = 0; x < m.card(i); ++x) f += th[x] * b.node[i][x];
        if (w.node[i] != 0.0) f += w.node[i] * node_entropy(b.node[i]);
    }
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (static_cast<int>(b.edge[e].size()) != m.card(i) * m.card(j))
            throw ModelError("beliefs shape mismatch");
        const auto& th = m.theta_edge(e);
        for (size_t k = 0; k < th.size(); ++k) f += th[k] * b.edge[e][k];
        if (w.edge[e] != 0.0)
            f -= w.edge[e] * mutual_info(b.edge[e], b.node[i], b.node[j]);
    }
    return f;
}

FreeEnergyWeights weights_sum_bethe(const PairwiseModel& m) {
    return {std::vector<double>(m.num_nodes(), 1.0), std::vector<double>(m.num_edges(), 1.0)};
}

FreeEnergyWeights weights_bethe_truncated(const PairwiseModel& m) {
    FreeEnergyWeights w{std::vector<double>(m.num_nodes(), 0.0),
                        std::vector<double>(m.num_edges(), 0.0)};
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_sum(i)) w.node[i] = 1.0;
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_sum(i) || m.is_sum(j)) w.edge[e] = 1.0;
    }
    return w;
}

FreeEnergyWeights weights_trw_truncated(const PairwiseModel& m, const EdgeAppearance& rho) {
    if (static_cast<int>(rho.rho.size()) != m.num_edges())
        throw ModelError("edge appearance vector does not cover all edges");
    FreeEnergyWeights w{std::vector<double>(m.num_nodes(), 0.0),
                        std::vector<double>(m.num_edges(), 0.0)};
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_sum(i)) w.node[i] = 1.0;
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_sum(i) || m.is_sum(j)) w.edge[e] = rho.rho[e];
    }
    return w;
}

double consistency_residual(const Beliefs& b, const PairwiseModel& m) {
    double r = 0.0;
    for (int i = 0; i < m.num_nodes(); ++i) {
        double s = 0.0;
        for (double p : b.node[i]) {
            s += p;
            r = std::max(r, -p);
        }
        r = std::max(r, std::fabs(s - 1.0));
    }
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        int ci = m.card(i), cj = m.card(j);
        double s = 0.0;
        for (double p : b.edge[e]) {
            s += p;
            r = std::max(r, -p);
        }
        r = std::max(r, std::fabs(s - 1.0));
        for (int a = 0; a < ci; ++a) {
            double row = 0.0;
            for (int c = 0; c < cj; ++c) row += b.edge[e][a * cj + c];
            r = std::max(r, std::fabs(row - b.node[i][a]));
        }
        for (int c = 0; c < cj; ++c) {
            double col = 0.0;
            for (int a = 0; a < ci; ++a) col += b.edge[e][a * cj + c];
            r = std::max(r, std::fabs(col - b.node[j][c]));
        }
    }
    return r;
}

Beliefs harden_at_decode(const Beliefs& b, const PairwiseModel& m,
                         const std::vector<int>& decoded_xb) {
    std::vector<int> full(m.num_nodes(), -1);
    int k = 0;
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_max(i)) full[i] = decoded_xb[k++];
    Beliefs hard = b;
    for (int i = 0; i < m.num_nodes(); ++i) {
        if (full[i] < 0) continue;
        hard.node[i].assign(m.card(i), 0.0);
        hard.node[i][full[i]] = 1.0;
    }
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        int ci = m.card(i), cj = m.card(j);
        if (full[i] < 0 && full[j] < 0) continue;
        hard.edge[e].assign(ci * cj, 0.0);
        if (full[i] >= 0 && full[j] >= 0) {
            hard.edge[e][full[i] * cj + full[j]] = 1.0;
        } else if (full[i] >= 0) {
            for (int x = 0; x < cj; ++x) hard.edge[e][full[i] * cj + x] = hard.node[j][x];
        } else {
            for (int x = 0; x < ci; ++x) hard.edge[e][x * cj + full[j]] = hard.node[i][x];
        }
    }
    return hard;
}

namespace {

// Dense-ish max flow (Edmonds-Karp), adequate for desk-scale E_B.
struct MaxFlow {
    struct Arc {
        int to;
        double cap;
        int rev;
    };
    std::vector<std::vector<Arc>> g;
    explicit MaxFlow(int n) : g(n) {}
    void add(int u, int v, double cap) {
        g[u].push_back({v, cap, static_cast<int>(g[v].size())});
        g[v].push_back({u, 0.0, static_cast<int>(g[u].size()) - 1});
    }
    double run(int s, int t) {
        double total = 0.0;
        for (;;) {
            std::vector<int> pv(g.size(), -1), pe(g.size(), -1);
            std::deque<int> q{s};
            pv[s] = s;
            while (!q.empty() && pv[t] < 0) {
                int u = q.front();
                q.pop_front();
                for (size_t k = 0; k < g[u].size(); ++k) {
                    const Arc& a = g[u][k];
                    if (a.cap > 1e-12 && pv[a.to] < 0) {
                        pv[a.to] = u;
                        pe[a.to] = static_cast<int>(k);
                        q.push_back(a.to);
                    }
                }
            }
            if (pv[t] < 0) return total;
            double f = std::numeric_limits<double>::infinity();
            for (int v = t; v != s; v = pv[v]) f = std::min(f, g[pv[v]][pe[v]].cap);
            for (int v = t; v != s; v = pv[v]) {
                Arc& a = g[pv[v]][pe[v]];
                a.cap -= f;
                g[a.to][a.rev].cap += f;
            }
            total += f;
        }
    }
};

}  // namespace

std::optional<ConcavityCertificate> check_provably_concave(
    const PairwiseModel& m, const std::vector<std::pair<int, double>>& rho_b) {
    ConcavityCertificate cert;
    cert.kappa_node.assign(m.num_nodes(), 0.0);
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_max(i)) cert.kappa_node[i] = 1.0;

    double total = 0.0;
    std::vector<int> nodes;  // B nodes incident to E_B edges, deduplicated
    std::vector<int> node_slot(m.num_nodes(), -1);
    for (auto [e, rho] : rho_b) {
        if (rho < 0.0) return std::nullopt;
        auto [i, j] = m.edge(e);
        if (!m.is_max(i) || !m.is_max(j))
            throw ModelError("rho_b edge is not in E_B");
        total += rho;
        for (int v : {i, j}) {
            if (node_slot[v] < 0) {
                node_slot[v] = static_cast<int>(nodes.size());
                nodes.push_back(v);
            }
        }
    }
    if (rho_b.empty()) return cert;

    // Source -> edge (cap rho), edge -> endpoints (cap rho), node -> sink (cap 1).
    int ne = static_cast<int>(rho_b.size()), nn = static_cast<int>(nodes.size());
    MaxFlow mf(2 + ne + nn);
    int src = 0, snk = 1;
    for (int k = 0; k < ne; ++k) {
        auto [e, rho] = rho_b[k];
        auto [i, j] = m.edge(e);
        mf.add(src, 2 + k, rho);
        mf.add(2 + k, 2 + ne + node_slot[i], rho);
        mf.add(2 + k, 2 + ne + node_slot[j], rho);
    }
    for (int k = 0; k < nn; ++k) mf.add(2 + ne + k, snk, 1.0);
    double flow = mf.run(src, snk);
    if (flow < total - 1e-9) return std::nullopt;

    cert.e_b_edges.resize(ne);
    cert.kappa_directed.assign(ne, {0.0, 0.0});
    std::vector<double> used(nn, 0.0);
    for (int k = 0; k < ne; ++k) {
        cert.e_b_edges[k] = rho_b[k].first;
        auto [i, j] = m.edge(rho_b[k].first);
        // Residual graph: flow on arc edge->node = original cap minus remaining.
        const auto& arcs = mf.g[2 + k];
        for (const auto& a : arcs) {
            if (a.to == 2 + ne + node_slot[i])
                cert.kappa_directed[k][0] = rho_b[k].second - a.cap;
            else if (a.to == 2 + ne + node_slot[j])
                cert.kappa_directed[k][1] = rho_b[k].second - a.cap;
        }
        used[node_slot[i]] += cert.kappa_directed[k][0];
        used[node_slot[j]] += cert.kappa_directed[k][1];
    }
    for (int k = 0; k < nn; ++k) cert.kappa_node[nodes[k]] = std::max(0.0, 1.0 - used[k]);
    return cert;
}

}  // namespace mmi
