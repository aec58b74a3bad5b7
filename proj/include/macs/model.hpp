#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "macs/graph.hpp"
#include "macs/mat.hpp"

namespace macs {

struct AgentModel {
    Mat A;                  // n_i x n_i
    Mat B;                  // n_i x m_i
    std::optional<Mat> C;   // q x n_i, required for output consensus
};

struct LeaderModel {
    Mat A0;                 // p x p
    std::optional<Mat> C0;  // q x p, output consensus only
    Mat x0;                 // initial leader state, p x 1
};

struct Weights {
    Mat Q;               // error weight, PSD
    std::vector<Mat> R;  // per-agent input weight, PD
};

enum class ConsensusMode { State, Output };
enum class ObserverInit { Zero, True, Perturbed };

struct Scenario {
    Topology topology;
    std::vector<AgentModel> agents;
    LeaderModel leader;
    Weights weights;
    std::vector<Mat> initial_states;
    std::size_t horizon = 0;
    ConsensusMode mode = ConsensusMode::State;
    ObserverInit observer_init = ObserverInit::Zero;
    std::uint64_t optimizer_seed = 1;
};

/// Scenario that passed validate(), plus everything validation derived.
struct ValidatedScenario {
    Scenario scenario;
    ParentMap parents;
    std::size_t block_dim;   // error-block dimension: n (state) or q (output)
    std::size_t leader_dim;  // p

    const AgentModel& agent(std::size_t follower) const {
        return scenario.agents[follower - 1];
    }
    std::size_t follower_count() const { return scenario.agents.size(); }
};

/// Cross-checks every dimension and definiteness requirement. Error messages
/// name the agent index and the offending dimension. Validation is
/// idempotent: validating the scenario inside a ValidatedScenario returns an
/// equal result.
ValidatedScenario validate(const Scenario& s);

/// True iff all agents share one (A, B) and that A equals the leader's.
/// Reporting only; the synthesis pipeline is identical either way.
bool is_homogeneous(const ValidatedScenario& vs);

}  // namespace macs
