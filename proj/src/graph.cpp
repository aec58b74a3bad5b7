#include "macs/graph.hpp"

#include <string>

#include "macs/errors.hpp"

namespace macs {

Topology::Topology(std::size_t node_count, Mat weights)
    : node_count_(node_count), weights_(std::move(weights)) {
    if (node_count_ == 0) {
        throw ValidationError("Topology: need at least the leader node");
    }
    if (weights_.rows() != node_count_ || weights_.cols() != node_count_) {
        throw DimensionError("Topology: weight matrix must be node_count x node_count");
    }
    for (std::size_t i = 0; i < node_count_; ++i) {
        if (weights_(i, i) != 0.0) {
            throw ValidationError("Topology: self-loop at node " + std::to_string(i));
        }
        for (std::size_t j = 0; j < node_count_; ++j) {
            if (weights_(i, j) < 0.0) {
                throw ValidationError("Topology: negative weight on edge " + std::to_string(i) +
                                      "->" + std::to_string(j));
            }
        }
        if (weights_(i, 0) != 0.0) {
            throw ValidationError("Topology: leader must not have in-edges (found " +
                                  std::to_string(i) + "->0)");
        }
    }
}

Topology Topology::from_edges(std::size_t node_count, const std::vector<Edge>& edges) {
    Mat w(node_count, node_count);
    for (const Edge& e : edges) {
        if (e.from >= node_count || e.to >= node_count) {
            throw ValidationError("Topology: edge endpoint out of range");
        }
        w(e.from, e.to) = e.weight;
    }
    return Topology(node_count, std::move(w));
}

std::vector<std::size_t> Topology::in_neighbors(std::size_t node) const {
    std::vector<std::size_t> in;
    for (std::size_t j = 0; j < node_count_; ++j) {
        if (weights_(j, node) != 0.0) in.push_back(j);
    }
    return in;
}

ParentMap::ParentMap(std::vector<std::size_t> parents) : parents_(std::move(parents)) {}

std::size_t ParentMap::parent_of(std::size_t follower) const {
    if (follower == 0 || follower > parents_.size()) {
        throw ContractError("ParentMap: follower index " + std::to_string(follower) +
                            " out of range");
    }
    return parents_[follower - 1];
}

std::vector<std::size_t> ParentMap::topological_order() const {
    const std::size_t n = parents_.size();
    std::vector<std::size_t> order;
    order.reserve(n);
    std::vector<bool> placed(n + 1, false);
    placed[0] = true;
    while (order.size() < n) {
        bool progressed = false;
        for (std::size_t i = 1; i <= n; ++i) {
            if (!placed[i] && placed[parents_[i - 1]]) {
                order.push_back(i);
                placed[i] = true;
                progressed = true;
            }
        }
        if (!progressed) {
            throw NoSpanningTreeError("ParentMap: parent links do not reach the leader");
        }
    }
    return order;
}

ParentMap validate_spanning_tree(const Topology& t) {
    const std::size_t n = t.follower_count();
    std::vector<std::size_t> parents(n);
    for (std::size_t i = 1; i <= n; ++i) {
        const auto in = t.in_neighbors(i);
        if (in.size() != 1) {
            throw TopologyShapeError("follower " + std::to_string(i) + " has " +
                                     std::to_string(in.size()) +
                                     " in-neighbors; exactly one is required");
        }
        parents[i - 1] = in.front();
    }
    // Walk each parent chain; it must land on the leader without revisiting.
    for (std::size_t i = 1; i <= n; ++i) {
        std::size_t node = i;
        std::size_t hops = 0;
        while (node != 0) {
            node = parents[node - 1];
            if (++hops > n) {
                throw NoSpanningTreeError("cycle in parent links reachable from follower " +
                                          std::to_string(i));
            }
        }
    }
    return ParentMap(std::move(parents));
}

std::vector<Mat> build_selectors(const ParentMap& pm, std::size_t block_dim) {
    const std::size_t n = pm.follower_count();
    std::vector<Mat> selectors;
    selectors.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Mat h(block_dim, n * block_dim);
        h.set_block(0, i * block_dim, Mat::identity(block_dim));
        selectors.push_back(std::move(h));
    }
    return selectors;
}

}  // namespace macs
