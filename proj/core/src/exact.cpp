#include "mmi/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmi/beliefs.hpp"

namespace mmi {

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

namespace {

uint64_t joint_size(const std::vector<int>& cards, uint64_t cap) {
    uint64_t n = 1;
    for (int c : cards) {
        n *= static_cast<uint64_t>(c);
        if (n > cap) return cap + 1;
    }
    return n;
}

// Odometer increment; returns false after the last assignment.
bool advance(std::vector<int>& x, const std::vector<int>& cards) {
    for (size_t i = x.size(); i-- > 0;) {
        if (++x[i] < cards[i]) return true;
        x[i] = 0;
    }
    return false;
}

}  // namespace

double log_partition_bruteforce(const PairwiseModel& m, const OracleCaps& caps) {
    if (joint_size(m.cards(), caps.joint_cap) > caps.joint_cap)
        throw StateSpaceExceeded("joint state space exceeds cap");
    std::vector<int> x(m.num_nodes(), 0);
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> scores;
    do {
        scores.push_back(m.score(x));
        mx = std::max(mx, scores.back());
    } while (advance(x, m.cards()));
    double s = 0.0;
    for (double v : scores) s += std::exp(v - mx);
    return mx + std::log(s);
}

ConditionedSumModel condition_on_max(const PairwiseModel& m, const std::vector<int>& x_b) {
    ConditionedSumModel c;
    std::vector<int> pos(m.num_nodes(), -1);
    std::vector<int> bpos(m.num_nodes(), -1);
    int nb = 0;
    for (int i = 0; i < m.num_nodes(); ++i) {
        if (m.is_sum(i)) {
            pos[i] = static_cast<int>(c.a_nodes.size());
            c.a_nodes.push_back(i);
            c.cards.push_back(m.card(i));
            c.unary.push_back(m.theta_node(i));
        } else {
            bpos[i] = nb++;
        }
    }
    if (static_cast<int>(x_b.size()) != nb)
        throw ModelError("max assignment size mismatch");
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_max(i)) c.constant += m.theta_node(i)[x_b[bpos[i]]];
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_sum(i) && m.is_sum(j)) {
            c.edges.emplace_back(pos[i], pos[j]);
            c.tables.push_back(&m.theta_edge(e));
            c.table_card_second.push_back(m.card(j));
        } else if (m.is_max(i) && m.is_max(j)) {
            c.constant += m.theta_edge(e, x_b[bpos[i]], x_b[bpos[j]]);
        } else {
            int s = m.is_sum(i) ? i : j;
            int b = m.is_sum(i) ? j : i;
            int xb = x_b[bpos[b]];
            auto& u = c.unary[pos[s]];
            for (int xs = 0; xs < m.card(s); ++xs)
                u[xs] += (s == i) ? m.theta_edge(e, xs, xb) : m.theta_edge(e, xb, xs);
        }
    }
    // Forest test on the sum subgraph.
    int na = static_cast<int>(c.a_nodes.size());
    std::vector<int> parent(na);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](auto&& self, int x) -> int {
        return parent[x] == x ? x : parent[x] = self(self, parent[x]);
    };
    c.forest = true;
    for (auto [u, v] : c.edges) {
        int ru = find(find, u), rv = find(find, v);
        if (ru == rv) {
            c.forest = false;
            break;
        }
        parent[ru] = rv;
    }
    return c;
}

namespace {

struct ForestBp {
    const ConditionedSumModel& c;
    std::vector<std::vector<std::pair<int, int>>> adj;  // (neighbor, edge)
    // Log messages per directed edge: 2e = first->second, 2e+1 = second->first.
    std::vector<std::vector<double>> msg;

    explicit ForestBp(const ConditionedSumModel& cm) : c(cm) {
        int n = static_cast<int>(c.cards.size());
        adj.assign(n, {});
        for (size_t e = 0; e < c.edges.size(); ++e) {
            adj[c.edges[e].first].emplace_back(c.edges[e].second, static_cast<int>(e));
            adj[c.edges[e].second].emplace_back(c.edges[e].first, static_cast<int>(e));
        }
        msg.assign(2 * c.edges.size(), {});
    }

    double table(int e, int xu, int xv, bool u_is_first) const {
        int cs = c.table_card_second[e];
        return u_is_first ? (*c.tables[e])[xu * cs + xv] : (*c.tables[e])[xv * cs + xu];
    }

    // Unnormalized log message u -> v, from unary of u and all other incoming.
    std::vector<double> compute(int u, int v, int e) const {
        std::vector<double> out(c.cards[v]);
        std::vector<double> in = c.unary[u];
        for (auto [w, ee] : adj[u]) {
            if (w == v) continue;
            const auto& mm = msg[dir(ee, w, u)];
            for (int x = 0; x < c.cards[u]; ++x) in[x] += mm[x];
        }
        bool u_first = (c.edges[e].first == u);
        std::vector<double> terms(c.cards[u]);
        for (int xv = 0; xv < c.cards[v]; ++xv) {
            for (int xu = 0; xu < c.cards[u]; ++xu)
                terms[xu] = in[xu] + table(e, xu, xv, u_first);
            out[xv] = log_sum_exp(terms);
        }
        return out;
    }

    int dir(int e, int from, int /*to*/) const {
        return 2 * e + (c.edges[e].first == from ? 0 : 1);
    }

    // Fills all messages via rooted up/down passes; returns component roots.
    std::vector<int> run() {
        int n = static_cast<int>(c.cards.size());
        std::vector<int> roots, order, par(n, -1), par_edge(n, -1);
        std::vector<char> seen(n, 0);
        for (int r = 0; r < n; ++r) {
            if (seen[r]) continue;
            roots.push_back(r);
            std::vector<int> stack{r};
            seen[r] = 1;
            size_t head = order.size();
            while (!stack.empty()) {
                int u = stack.back();
                stack.pop_back();
                order.push_back(u);
                for (auto [w, e] : adj[u]) {
                    if (seen[w]) continue;
                    seen[w] = 1;
                    par[w] = u;
                    par_edge[w] = e;
                    stack.push_back(w);
                }
            }
            // Upward: children before parents.
            for (size_t k = order.size(); k-- > head;) {
                int u = order[k];
                if (par[u] >= 0)
                    msg[dir(par_edge[u], u, par[u])] = compute(u, par[u], par_edge[u]);
            }
            // Downward.
            for (size_t k = head; k < order.size(); ++k) {
                int u = order[k];
                if (par[u] >= 0)
                    msg[dir(par_edge[u], par[u], u)] = compute(par[u], u, par_edge[u]);
            }
        }
        return roots;
    }

    std::vector<double> node_log_belief(int u) const {
        std::vector<double> b = c.unary[u];
        for (auto [w, e] : adj[u]) {
            const auto& mm = msg[dir(e, w, u)];
            for (int x = 0; x < c.cards[u]; ++x) b[x] += mm[x];
        }
        return b;
    }
};

double enumerate_log_partition(const ConditionedSumModel& c, uint64_t cap) {
    if (c.cards.empty()) return 0.0;
    if (joint_size(c.cards, cap) > cap)
        throw StateSpaceExceeded("sum-part state space exceeds cap");
    std::vector<int> x(c.cards.size(), 0);
    std::vector<double> scores;
    do {
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i) s += c.unary[i][x[i]];
        for (size_t e = 0; e < c.edges.size(); ++e) {
            auto [u, v] = c.edges[e];
            s += (*c.tables[e])[x[u] * c.table_card_second[e] + x[v]];
        }
        scores.push_back(s);
    } while (advance(x, c.cards));
    return log_sum_exp(scores);
}

}  // namespace

double conditioned_log_partition(const ConditionedSumModel& c, const OracleCaps& caps) {
    if (c.cards.empty()) return c.constant;
    if (!c.forest) return c.constant + enumerate_log_partition(c, caps.joint_cap);
    ForestBp bp(c);
    auto roots = bp.run();
    double lz = 0.0;
    for (int r : roots) lz += log_sum_exp(bp.node_log_belief(r));
    return c.constant + lz;
}

std::vector<std::vector<double>> conditioned_marginals(const ConditionedSumModel& c,
                                                       const OracleCaps& caps) {
    std::vector<std::vector<double>> out(c.cards.size());
    if (c.cards.empty()) return out;
    if (c.forest) {
        ForestBp bp(c);
        bp.run();
        for (size_t u = 0; u < c.cards.size(); ++u) {
            auto lb = bp.node_log_belief(u);
            double lz = log_sum_exp(lb);
            out[u].resize(c.cards[u]);
            for (int x = 0; x < c.cards[u]; ++x) out[u][x] = std::exp(lb[x] - lz);
        }
        return out;
    }
    if (joint_size(c.cards, caps.joint_cap) > caps.joint_cap)
        throw StateSpaceExceeded("sum-part state space exceeds cap");
    for (size_t u = 0; u < c.cards.size(); ++u) out[u].assign(c.cards[u], 0.0);
    std::vector<int> x(c.cards.size(), 0);
    std::vector<double> scores;
    std::vector<std::vector<int>> states;
    do {
        double s = 0.0;
        for (size_t i = 0; i < x.size(); ++i) s += c.unary[i][x[i]];
        for (size_t e = 0; e < c.edges.size(); ++e) {
            auto [u, v] = c.edges[e];
            s += (*c.tables[e])[x[u] * c.table_card_second[e] + x[v]];
        }
        scores.push_back(s);
        states.push_back(x);
    } while (advance(x, c.cards));
    double lz = log_sum_exp(scores);
    for (size_t k = 0; k < scores.size(); ++k) {
        double w = std::exp(scores[k] - lz);
        for (size_t u = 0; u < c.cards.size(); ++u) out[u][states[k][u]] += w;
    }
    return out;
}

double q_of_xb(const PairwiseModel& m, const std::vector<int>& x_b, const OracleCaps& caps) {
    return conditioned_log_partition(condition_on_max(m, x_b), caps);
}

ExactResult marginal_map_bruteforce(const PairwiseModel& m, const OracleCaps& caps,
                                    bool keep_q_values) {
    std::vector<int> bcards;
    for (int i = 0; i < m.num_nodes(); ++i)
        if (m.is_max(i)) bcards.push_back(m.card(i));
    if (joint_size(bcards, caps.max_cap) > caps.max_cap)
        throw StateSpaceExceeded("max-part state space exceeds cap");
    ExactResult r;
    if (keep_q_values) r.q_values.emplace();
    if (bcards.empty()) {
        r.phi_ab = q_of_xb(m, {}, caps);
        return r;
    }
    std::vector<int> xb(bcards.size(), 0);
    bool first = true;
    do {
        double q = q_of_xb(m, xb, caps);
        if (keep_q_values) (*r.q_values)[xb] = q;
        // Strict improvement keeps the lexicographically smallest argmax.
        if (first || q > r.phi_ab) {
            r.phi_ab = q;
            r.argmax_b = xb;
            first = false;
        }
    } while (advance(xb, bcards));
    return r;
}

Beliefs exact_marginals(const PairwiseModel& m, const OracleCaps& caps) {
    if (joint_size(m.cards(), caps.joint_cap) > caps.joint_cap)
        throw StateSpaceExceeded("joint state space exceeds cap");
    std::vector<int> x(m.num_nodes(), 0);
    std::vector<double> scores;
    std::vector<std::vector<int>> states;
    do {
        scores.push_back(m.score(x));
        states.push_back(x);
    } while (advance(x, m.cards()));
    double lz = log_sum_exp(scores);
    Beliefs b;
    b.node.resize(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i) b.node[i].assign(m.card(i), 0.0);
    b.edge.resize(m.num_edges());
    for (int e = 0; e < m.num_edges(); ++e)
        b.edge[e].assign(m.card(m.edge(e).first) * m.card(m.edge(e).second), 0.0);
    for (size_t k = 0; k < scores.size(); ++k) {
        double w = std::exp(scores[k] - lz);
        const auto& s = states[k];
        for (int i = 0; i < m.num_nodes(); ++i) b.node[i][s[i]] += w;
        for (int e = 0; e < m.num_edges(); ++e) {
            auto [i, j] = m.edge(e);
            b.edge[e][s[i] * m.card(j) + s[j]] += w;
        }
    }
    return b;
}

std::vector<int> map_bruteforce(const PairwiseModel& m, const OracleCaps& caps) {
    if (joint_size(m.cards(), caps.joint_cap) > caps.joint_cap)
        throw StateSpaceExceeded("joint state space exceeds cap");
    std::vector<int> x(m.num_nodes(), 0), best;
    double best_score = -std::numeric_limits<double>::infinity();
    do {
        double s = m.score(x);
        if (s > best_score) {
            best_score = s;
            best = x;
        }
    } while (advance(x, m.cards()));
    return best;
}

}  // namespace mmi
