#pragma once

#include <cstddef>
#include <vector>

#include "macs/mat.hpp"

namespace macs {

/// Directed communication topology over nodes 0..N where node 0 is the
/// leader. weight(i, j) > 0 means an edge i -> j: node j consumes the state
/// and input of node i.
class Topology {
  public:
    Topology(std::size_t node_count, Mat weights);

    struct Edge {
        std::size_t from;
        std::size_t to;
        double weight;
    };
    static Topology from_edges(std::size_t node_count, const std::vector<Edge>& edges);

    std::size_t node_count() const { return node_count_; }
    std::size_t follower_count() const { return node_count_ - 1; }
    double weight(std::size_t from, std::size_t to) const { return weights_(from, to); }
    const Mat& weights() const { return weights_; }

    /// In-neighbors of a node (nodes whose state it consumes).
    std::vector<std::size_t> in_neighbors(std::size_t node) const;

  private:
    std::size_t node_count_;
    Mat weights_;
};

/// Parent links of a validated single-parent spanning tree. Followers are
/// numbered 1..N; parent_of(i) is the node whose state and input follower i
/// consumes (possibly the leader, node 0).
class ParentMap {
  public:
    explicit ParentMap(std::vector<std::size_t> parents);

    std::size_t follower_count() const { return parents_.size(); }
    std::size_t parent_of(std::size_t follower) const;

    /// Follower ids ordered so every parent precedes its children; the order
    /// the simulator uses to propagate inputs down the tree.
    std::vector<std::size_t> topological_order() const;

  private:
    std::vector<std::size_t> parents_;  // parents_[i-1] = parent of follower i
};

/// Checks the single-parent rooted-tree contract and extracts parent links.
/// Throws TopologyShapeError when a follower has zero or multiple
/// in-neighbors, NoSpanningTreeError when parent links cycle instead of
/// reaching the leader.
ParentMap validate_spanning_tree(const Topology& t);

/// Measurement selectors: follower i observes exactly the error block that
/// pairs it with its parent, which by construction is block i of the stack.
/// Each selector is block_dim x (N*block_dim), zero except one identity
/// block.
std::vector<Mat> build_selectors(const ParentMap& pm, std::size_t block_dim);

}  // namespace macs
