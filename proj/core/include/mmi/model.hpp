#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mmi {

enum class NodeRole : uint8_t { Sum, Max };

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Discrete pairwise model in log domain with a sum/max node partition.
/// Edges are stored canonically with first < second; edge tables are
/// row-major in the state of the first endpoint.
class PairwiseModel {
public:
    PairwiseModel(std::vector<int> cardinalities,
                  std::vector<std::vector<double>> node_potentials,
                  std::vector<std::pair<int, int>> edges,
                  std::vector<std::vector<double>> edge_potentials,
                  std::vector<NodeRole> partition);

    int num_nodes() const { return static_cast<int>(cards_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int card(int i) const { return cards_[i]; }
    const std::vector<int>& cards() const { return cards_; }
    NodeRole role(int i) const { return roles_[i]; }
    bool is_sum(int i) const { return roles_[i] == NodeRole::Sum; }
    bool is_max(int i) const { return roles_[i] == NodeRole::Max; }
    const std::vector<NodeRole>& partition() const { return roles_; }

    const std::vector<double>& theta_node(int i) const { return theta_i_[i]; }
    const std::vector<double>& theta_edge(int e) const { return theta_ij_[e]; }
    double theta_edge(int e, int xi, int xj) const {
        return theta_ij_[e][xi * cards_[edges_[e].second] + xj];
    }
    const std::pair<int, int>& edge(int e) const { return edges_[e]; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    /// (neighbor node, edge index) pairs for node i.
    const std::vector<std::pair<int, int>>& neighbors(int i) const { return adj_[i]; }

    std::vector<int> sum_nodes() const;
    std::vector<int> max_nodes() const;

    /// theta(x) for a full assignment.
    double score(const std::vector<int>& x) const;

private:
    std::vector<int> cards_;
    std::vector<std::vector<double>> theta_i_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<double>> theta_ij_;
    std::vector<NodeRole> roles_;
    std::vector<std::vector<std::pair<int, int>>> adj_;

    void validate() const;
};

struct EdgeClassification {
    std::vector<int> e_a;       // edges with both endpoints in the sum set
    std::vector<int> e_b;       // edges with both endpoints in the max set
    std::vector<int> boundary;  // crossing edges
};

EdgeClassification classify_edges(const PairwiseModel& m);

/// True iff the graph is a forest, every connected component of the
/// sum-induced subgraph touches at most one crossing edge, and the quotient
/// graph (sum components contracted) is a forest.
bool is_ab_tree(const PairwiseModel& m);

PairwiseModel load_model(std::istream& in);
PairwiseModel load_model_file(const std::string& path);
void save_model(const PairwiseModel& m, std::ostream& out);
void save_model_file(const PairwiseModel& m, const std::string& path);

bool models_equal(const PairwiseModel& a, const PairwiseModel& b);

}  // namespace mmi
