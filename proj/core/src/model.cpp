#include "mmi/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace mmi {

PairwiseModel::PairwiseModel(std::vector<int> cardinalities,
                             std::vector<std::vector<double>> node_potentials,
                             std::vector<std::pair<int, int>> edges,
                             std::vector<std::vector<double>> edge_potentials,
                             std::vector<NodeRole> partition)
    : cards_(std::move(cardinalities)),
      theta_i_(std::move(node_potentials)),
      edges_(std::move(edges)),
      theta_ij_(std::move(edge_potentials)),
      roles_(std::move(partition)) {
    for (auto& e : edges_)
        if (e.first > e.second) std::swap(e.first, e.second);
    validate();
    adj_.assign(cards_.size(), {});
    for (int e = 0; e < num_edges(); ++e) {
        adj_[edges_[e].first].emplace_back(edges_[e].second, e);
        adj_[edges_[e].second].emplace_back(edges_[e].first, e);
    }
}

void PairwiseModel::validate() const {
    const int n = static_cast<int>(cards_.size());
    if (n <= 0) throw ModelError("model must have at least one node");
    if (static_cast<int>(theta_i_.size()) != n || static_cast<int>(roles_.size()) != n)
        throw ModelError("node arrays must cover all nodes");
    for (int i = 0; i < n; ++i) {
        if (cards_[i] < 2) throw ModelError("cardinality must be >= 2");
        if (static_cast<int>(theta_i_[i].size()) != cards_[i])
            throw ModelError("node potential shape mismatch");
        for (double v : theta_i_[i])
            if (!std::isfinite(v)) throw ModelError("non-finite node potential");
    }
    if (theta_ij_.size() != edges_.size()) throw ModelError("edge table count mismatch");
    std::set<std::pair<int, int>> seen;
    for (size_t e = 0; e < edges_.size(); ++e) {
        auto [i, j] = edges_[e];
        if (i < 0 || j < 0 || i >= n || j >= n) throw ModelError("edge index out of range");
        if (i == j) throw ModelError("self-loop");
        if (!seen.insert({i, j}).second) throw ModelError("duplicate edge");
        if (static_cast<int>(theta_ij_[e].size()) != cards_[i] * cards_[j])
            throw ModelError("edge potential shape mismatch");
        for (double v : theta_ij_[e])
            if (!std::isfinite(v)) throw ModelError("non-finite edge potential");
    }
}

std::vector<int> PairwiseModel::sum_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < num_nodes(); ++i)
        if (is_sum(i)) out.push_back(i);
    return out;
}

std::vector<int> PairwiseModel::max_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < num_nodes(); ++i)
        if (is_max(i)) out.push_back(i);
    return out;
}

double PairwiseModel::score(const std::vector<int>& x) const {
    double s = 0.0;
    for (int i = 0; i < num_nodes(); ++i) s += theta_i_[i][x[i]];
    for (int e = 0; e < num_edges(); ++e) {
        auto [i, j] = edges_[e];
        s += theta_edge(e, x[i], x[j]);
    }
    return s;
}

EdgeClassification classify_edges(const PairwiseModel& m) {
    EdgeClassification c;
    for (int e = 0; e < m.num_edges(); ++e) {
        auto [i, j] = m.edge(e);
        if (m.is_sum(i) && m.is_sum(j))
            c.e_a.push_back(e);
        else if (m.is_max(i) && m.is_max(j))
            c.e_b.push_back(e);
        else
            c.boundary.push_back(e);
    }
    return c;
}

namespace {

// Union-find over node indices.
struct Dsu {
    std::vector<int> p;
    explicit Dsu(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    // Returns false if x and y are already connected.
    bool unite(int x, int y) {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        p[x] = y;
        return true;
    }
};

}  // namespace

bool is_ab_tree(const PairwiseModel& m) {
    const int n = m.num_nodes();
    Dsu whole(n);
    for (auto [i, j] : m.edges())
        if (!whole.unite(i, j)) return false;  // cycle

    const auto cls = classify_edges(m);
    Dsu sum_part(n);
    for (int e : cls.e_a) sum_part.unite(m.edge(e).first, m.edge(e).second);

    std::vector<int> touched(n, 0);
    for (int e : cls.boundary) {
        auto [i, j] = m.edge(e);
        int s = m.is_sum(i) ? i : j;
        if (++touched[sum_part.find(s)] > 1) return false;
    }

    // Quotient graph: contract each sum component, keep max nodes.
    Dsu quot(n);
    for (int e : cls.e_a) quot.unite(m.edge(e).first, m.edge(e).second);
    for (int e : cls.boundary)
        if (!quot.unite(m.edge(e).first, m.edge(e).second)) return false;
    for (int e : cls.e_b)
        if (!quot.unite(m.edge(e).first, m.edge(e).second)) return false;
    return true;
}

namespace {

// Token reader that tracks line numbers and skips '#' comments.
class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next(const char* what) {
        for (;;) {
            if (pos_ >= line_tokens_.size()) {
                std::string line;
                if (!std::getline(in_, line))
                    throw ModelError("parse error at line " + std::to_string(line_no_) +
                                     ": unexpected end of input while reading " + what);
                ++line_no_;
                line_tokens_.clear();
                pos_ = 0;
                std::istringstream ls(line);
                std::string tok;
                while (ls >> tok) {
                    if (tok[0] == '#') break;
                    line_tokens_.push_back(tok);
                }
                continue;
            }
            return line_tokens_[pos_++];
        }
    }

    int next_int(const char* what) {
        std::string t = next(what);
        try {
            size_t used = 0;
            int v = std::stoi(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw ModelError("parse error at line " + std::to_string(line_no_) +
                             ": expected integer for " + what + ", got '" + t + "'");
        }
    }

    double next_double(const char* what) {
        std::string t = next(what);
        try {
            size_t used = 0;
            double v = std::stod(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw ModelError("parse error at line " + std::to_string(line_no_) +
                             ": expected real for " + what + ", got '" + t + "'");
        }
    }

    int line() const { return line_no_; }

private:
    std::istream& in_;
    std::vector<std::string> line_tokens_;
    size_t pos_ = 0;
    int line_no_ = 0;
};

}  // namespace

PairwiseModel load_model(std::istream& in) {
    TokenReader r(in);
    std::string magic = r.next("header");
    if (magic != "MMAP-PAIRWISE")
        throw ModelError("parse error at line " + std::to_string(r.line()) +
                         ": expected MMAP-PAIRWISE header, got '" + magic + "'");
    int n = r.next_int("node count");
    if (n <= 0) throw ModelError("node count must be positive");
    std::vector<int> cards(n);
    for (int i = 0; i < n; ++i) cards[i] = r.next_int("cardinality");
    std::vector<NodeRole> roles(n);
    for (int i = 0; i < n; ++i) {
        std::string t = r.next("partition label");
        if (t == "S")
            roles[i] = NodeRole::Sum;
        else if (t == "M")
            roles[i] = NodeRole::Max;
        else
            throw ModelError("parse error at line " + std::to_string(r.line()) +
                             ": partition label must be S or M, got '" + t + "'");
    }
    int me = r.next_int("edge count");
    if (me < 0) throw ModelError("edge count must be nonnegative");
    std::vector<std::pair<int, int>> edges(me);
    for (int e = 0; e < me; ++e) {
        edges[e].first = r.next_int("edge endpoint");
        edges[e].second = r.next_int("edge endpoint");
    }
    std::vector<std::vector<double>> theta_i(n);
    for (int i = 0; i < n; ++i) {
        if (cards[i] < 2) throw ModelError("cardinality must be >= 2");
        theta_i[i].resize(cards[i]);
        for (int k = 0; k < cards[i]; ++k) theta_i[i][k] = r.next_double("node potential");
    }
    std::vector<std::vector<double>> theta_ij(me);
    for (int e = 0; e < me; ++e) {
        auto [i, j] = edges[e];
        if (i < 0 || j < 0 || i >= n || j >= n) throw ModelError("edge index out of range");
        int sz = cards[i] * cards[j];
        theta_ij[e].resize(sz);
        for (int k = 0; k < sz; ++k) theta_ij[e][k] = r.next_double("edge potential");
    }
    return PairwiseModel(std::move(cards), std::move(theta_i), std::move(edges),
                         std::move(theta_ij), std::move(roles));
}

PairwiseModel load_model_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ModelError("cannot open model file: " + path);
    return load_model(f);
}

namespace {

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void save_model(const PairwiseModel& m, std::ostream& out) {
    out << "MMAP-PAIRWISE\n" << m.num_nodes() << "\n";
    for (int i = 0; i < m.num_nodes(); ++i) out << (i ? " " : "") << m.card(i);
    out << "\n";
    for (int i = 0; i < m.num_nodes(); ++i) out << (i ? " " : "") << (m.is_sum(i) ? 'S' : 'M');
    out << "\n" << m.num_edges() << "\n";
    for (auto [i, j] : m.edges()) out << i << " " << j << "\n";
    for (int i = 0; i < m.num_nodes(); ++i)
        for (double v : m.theta_node(i)) out << fmt_real(v) << "\n";
    for (int e = 0; e < m.num_edges(); ++e) {
        const auto& t = m.theta_edge(e);
        int cj = m.card(m.edge(e).second);
        for (size_t k = 0; k < t.size(); ++k)
            out << fmt_real(t[k]) << (((static_cast<int>(k) + 1) % cj == 0) ? "\n" : " ");
    }
}

void save_model_file(const PairwiseModel& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ModelError("cannot open output file: " + path);
    save_model(m, f);
}

bool models_equal(const PairwiseModel& a, const PairwiseModel& b) {
    if (a.cards() != b.cards() || a.partition() != b.partition() || a.edges() != b.edges())
        return false;
    for (int i = 0; i < a.num_nodes(); ++i)
        if (a.theta_node(i) != b.theta_node(i)) return false;
    for (int e = 0; e < a.num_edges(); ++e)
        if (a.theta_edge(e) != b.theta_edge(e)) return false;
    return true;
}

}  // namespace mmi
