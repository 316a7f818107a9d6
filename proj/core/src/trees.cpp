#include "mmi/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mmi {

namespace {

struct Dsu {
    std::vector<int> p;
    explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    bool unite(int x, int y) {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        p[x] = y;
        return true;
    }
};

}  // namespace

bool valid_ab_subtree(const PairwiseModel& m, const ABSubtree& t) {
    if (t.weight < 0.0) return false;
    Dsu acyc(m.num_nodes());
    for (int e : t.edges) {
        if (e < 0 || e >= m.num_edges()) return false;
        auto [i, j] = m.edge(e);
        if (m.is_max(i) && m.is_max(j)) return false;  // subtrees live on E_A and boundary
        if (!acyc.unite(i, j)) return false;
    }
    // Components of the subtree's sum part vs its own boundary edges.
    Dsu sum_part(m.num_nodes());
    std::vector<int> boundary;
    for (int e : t.edges) {
        auto [i, j] = m.edge(e);
        if (m.is_sum(i) && m.is_sum(j))
            sum_part.unite(i, j);
        else
            boundary.push_back(e);
    }
    std::vector<int> touched(m.num_nodes(), 0);
    for (int e : boundary) {
        auto [i, j] = m.edge(e);
        int s = m.is_sum(i) ? i : j;
        if (++touched[sum_part.find(s)] > 1) return false;
    }
    return true;
}

namespace {

// Uniform spanning forest of the sum subgraph via Wilson's loop-erased
// random walks; deterministic given the rng state.
std::vector<int> sample_sum_spanning_forest(const PairwiseModel& m, std::mt19937_64& rng) {
    std::vector<std::vector<std::pair<int, int>>> adj(m.num_nodes());
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_sum(i) && m.is_sum(j)) {
            adj[i].emplace_back(j, e);
            adj[j].emplace_back(i, e);
        }
    }
    std::vector<char> in_tree(m.num_nodes(), 0);
    std::vector<int> next_edge(m.num_nodes(), -1), next_node(m.num_nodes(), -1);
    std::vector<int> out;
    // Pick a root per component, then walk every remaining node to the tree.
    std::vector<int> comp(m.num_nodes(), -1);
    for (int i = 0; i < m.num_nodes(); ++i) {
        if (!m.is_sum(i) || comp[i] >= 0) continue;
        std::vector<int> stack{i};
        comp[i] = i;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (auto [v, e] : adj[u])
                if (comp[v] < 0) {
                    comp[v] = i;
                    stack.push_back(v);
                }
        }
        in_tree[i] = 1;  // component root
    }
    for (int s = 0; s < m.num_nodes(); ++s) {
        if (!m.is_sum(s) || in_tree[s]) continue;
        int u = s;
        while (!in_tree[u]) {
            auto& nb = adj[u];
            auto [v, e] = nb[std::uniform_int_distribution<size_t>(0, nb.size() - 1)(rng)];
            next_node[u] = v;
            next_edge[u] = e;
            u = v;
        }
        u = s;
        while (!in_tree[u]) {
            in_tree[u] = 1;
            out.push_back(next_edge[u]);
            u = next_node[u];
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<ABSubtree> enumerate_type1(const PairwiseModel& m, uint64_t seed) {
    auto cls = classify_edges(m);
    if (cls.boundary.empty()) throw ModelError("type-I subtrees need a nonempty boundary");
    // Forest sum graph: the spanning forest is all of E_A, sampled otherwise.
    Dsu d(m.num_nodes());
    bool forest = true;
    for (int e : cls.e_a)
        if (!d.unite(m.edge(e).first, m.edge(e).second)) forest = false;
    std::mt19937_64 rng(seed);
    std::vector<ABSubtree> out;
    double w = 1.0 / static_cast<double>(cls.boundary.size());
    for (int be : cls.boundary) {
        ABSubtree t;
        t.edges = forest ? cls.e_a : sample_sum_spanning_forest(m, rng);
        t.edges.push_back(be);
        t.weight = w;
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<ABSubtree> enumerate_type2(const PairwiseModel& m) {
    auto cls = classify_edges(m);
    std::vector<int> remaining = cls.boundary;
    std::vector<ABSubtree> out;
    while (!remaining.empty()) {
        ABSubtree t;
        std::vector<char> sum_used(m.num_nodes(), 0);
        std::vector<int> rest;
        for (int e : remaining) {
            auto [i, j] = m.edge(e);
            int s = m.is_sum(i) ? i : j;
            if (sum_used[s])
                rest.push_back(e);
            else {
                sum_used[s] = 1;
                t.edges.push_back(e);
            }
        }
        remaining = std::move(rest);
        out.push_back(std::move(t));
    }
    for (auto& t : out) t.weight = out.empty() ? 0.0 : 1.0 / static_cast<double>(out.size());
    return out;
}

std::vector<ABSubtree> mix_collections(const std::vector<ABSubtree>& c1,
                                       const std::vector<ABSubtree>& c2, double alpha) {
    std::vector<ABSubtree> out;
    for (const auto& t : c1) out.push_back({t.edges, alpha * t.weight});
    for (const auto& t : c2) out.push_back({t.edges, (1.0 - alpha) * t.weight});
    return out;
}

EdgeAppearance compute_rho(const PairwiseModel& m, const std::vector<ABSubtree>& trees,
                           double rho_b_default) {
    double wsum = 0.0;
    for (const auto& t : trees) {
        if (!valid_ab_subtree(m, t)) throw ModelError("invalid A-B subtree in collection");
        wsum += t.weight;
    }
    if (std::fabs(wsum - 1.0) > 1e-9)
        throw ModelError("subtree weights must sum to 1");
    EdgeAppearance rho;
    rho.rho.assign(m.num_edges(), 0.0);
    for (const auto& t : trees)
        for (int e : t.edges) rho.rho[e] += t.weight;
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_max(i) && m.is_max(j)) rho.rho[e] = rho_b_default;
    }
    return rho;
}

EdgeAppearance rho_bethe(const PairwiseModel& m) {
    EdgeAppearance rho;
    rho.rho.assign(m.num_edges(), 1.0);
    return rho;
}

}  // namespace mmi
