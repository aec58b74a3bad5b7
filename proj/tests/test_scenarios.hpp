#pragma once

// Shared scenario builders for the test suites. hetero_chain_scenario
// mirrors scenarios/hetero_chain.json; the loaders in test_scenario_io check
// the two stay in sync.

#include <cmath>

#include "macs/model.hpp"

namespace macs::testing {

inline Topology chain_topology(std::size_t nodes) {
    std::vector<Topology::Edge> edges;
    for (std::size_t i = 0; i + 1 < nodes; ++i) edges.push_back({i, i + 1, 1.0});
    return Topology::from_edges(nodes, edges);
}

/// Three heterogeneous followers on a chain behind a rotation leader.
inline Scenario hetero_chain_scenario() {
    Scenario s{chain_topology(4),
               {
                   {Mat{{1.1, 1.0}, {-2.0, 1.0}}, Mat{{0.0, 1.0}, {0.4, 0.2}}, {}},
                   {Mat{{-2.0, 1.0}, {1.0, -1.0}}, Mat{{0.1, 0.2}, {1.0, 0.5}}, {}},
                   {Mat{{0.5, 0.0}, {-2.0, -0.6}}, Mat{{0.2, 0.0}, {0.1, 1.0}}, {}},
               },
               {Mat{{std::cos(0.5), std::sin(0.5)}, {-std::sin(0.5), std::cos(0.5)}},
                {},
                Mat::col_vec({1.0, 0.0})},
               {Mat::identity(2), {Mat::identity(2), Mat::identity(2), Mat::identity(2)}},
               {Mat::col_vec({0.6, 0.8}), Mat::col_vec({1.6, -0.6}), Mat::col_vec({0.4, 0.7})},
               60,
               ConsensusMode::State};
    return s;
}

/// All followers share the leader's rotation dynamics with identity input.
inline Scenario homogeneous_scenario() {
    const Mat rot{{std::cos(0.5), std::sin(0.5)}, {-std::sin(0.5), std::cos(0.5)}};
    Scenario s{chain_topology(4),
               {
                   {rot, Mat::identity(2), {}},
                   {rot, Mat::identity(2), {}},
                   {rot, Mat::identity(2), {}},
               },
               {rot, {}, Mat::col_vec({1.0, 0.0})},
               {Mat::identity(2), {Mat::identity(2), Mat::identity(2), Mat::identity(2)}},
               {Mat::col_vec({0.2, 0.9}), Mat::col_vec({1.5, -0.4}), Mat::col_vec({0.5, 0.6})},
               40,
               ConsensusMode::State};
    return s;
}

/// Output consensus with mixed state dimensions (2, 3, 2) and q = 2.
inline Scenario mixed_output_scenario() {
    const Mat rot{{std::cos(0.3), std::sin(0.3)}, {-std::sin(0.3), std::cos(0.3)}};
    Scenario s{chain_topology(4),
               {
                   {Mat{{0.9, 0.2}, {-0.1, 0.8}}, Mat{{1.0, 0.1}, {0.0, 1.0}},
                    Mat{{1.0, 0.0}, {0.0, 1.0}}},
                   {Mat{{0.8, 0.1, 0.0}, {0.0, 0.7, 0.1}, {0.1, 0.0, 0.6}},
                    Mat{{1.0, 0.0}, {0.0, 1.0}, {0.2, 0.3}},
                    Mat{{1.0, 0.0, 0.1}, {0.0, 1.0, 0.1}}},
                   {Mat{{0.6, -0.2}, {0.3, 0.7}}, Mat{{0.8, 0.0}, {0.1, 0.9}},
                    Mat{{1.0, 0.2}, {0.0, 1.0}}},
               },
               {rot, Mat::identity(2), Mat::col_vec({1.0, 0.5})},
               {Mat::identity(2), {Mat::identity(2), Mat::identity(2), Mat::identity(2)}},
               {Mat::col_vec({0.5, -0.3}), Mat::col_vec({0.2, 0.8, -0.5}),
                Mat::col_vec({-0.4, 0.6})},
               60,
               ConsensusMode::Output};
    return s;
}

/// One-dimensional chain of two followers, handy for closed-form oracles.
inline Scenario scalar_chain_scenario() {
    Scenario s{chain_topology(3),
               {
                   {Mat{{1.2}}, Mat{{1.0}}, {}},
                   {Mat{{0.7}}, Mat{{0.5}}, {}},
               },
               {Mat{{1.0}}, {}, Mat::col_vec({1.0})},
               {Mat::identity(1), {Mat::identity(1), Mat::identity(1)}},
               {Mat::col_vec({2.0}), Mat::col_vec({-1.0})},
               30,
               ConsensusMode::State};
    return s;
}

}  // namespace macs::testing
