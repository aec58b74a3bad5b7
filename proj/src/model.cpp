#include "macs/model.hpp"

#include <string>

#include "macs/errors.hpp"
#include "macs/linalg.hpp"

namespace macs {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

std::string agent_tag(std::size_t i) { return "agent " + std::to_string(i); }

}  // namespace

ValidatedScenario validate(const Scenario& s) {
    const std::size_t n_followers = s.topology.follower_count();
    require(s.agents.size() == n_followers,
            "scenario: " + std::to_string(s.agents.size()) + " agent models for " +
                std::to_string(n_followers) + " follower nodes");
    require(!s.agents.empty(), "scenario: at least one follower is required");

    ParentMap parents = validate_spanning_tree(s.topology);

    const std::size_t p = s.leader.A0.rows();
    require(s.leader.A0.square(), "leader: A0 must be square");
    require(s.leader.x0.rows() == p && s.leader.x0.cols() == 1,
            "leader: x0 must be a " + std::to_string(p) + "-vector");

    for (std::size_t i = 1; i <= n_followers; ++i) {
        const AgentModel& a = s.agents[i - 1];
        require(a.A.square(), agent_tag(i) + ": A must be square");
        require(a.B.rows() == a.A.rows(),
                agent_tag(i) + ": B has " + std::to_string(a.B.rows()) + " rows, expected " +
                    std::to_string(a.A.rows()));
        require(a.B.cols() > 0, agent_tag(i) + ": B must have at least one column");
    }

    std::size_t block_dim = 0;
    if (s.mode == ConsensusMode::State) {
        const std::size_t n = s.agents.front().A.rows();
        for (std::size_t i = 1; i <= n_followers; ++i) {
            require(s.agents[i - 1].A.rows() == n,
                    agent_tag(i) + ": state dimension " +
                        std::to_string(s.agents[i - 1].A.rows()) +
                        " differs from common dimension " + std::to_string(n));
        }
        require(p == n, "leader: dimension " + std::to_string(p) +
                            " must equal the common agent dimension " + std::to_string(n));
        require(!s.leader.C0.has_value(), "leader: C0 is only meaningful in output mode");
        block_dim = n;
    } else {
        require(s.leader.C0.has_value(), "leader: C0 required in output mode");
        const std::size_t q = s.leader.C0->rows();
        require(s.leader.C0->cols() == p,
                "leader: C0 must be q x " + std::to_string(p));
        for (std::size_t i = 1; i <= n_followers; ++i) {
            const AgentModel& a = s.agents[i - 1];
            require(a.C.has_value(), agent_tag(i) + ": C required in output mode");
            require(a.C->rows() == q, agent_tag(i) + ": C has " + std::to_string(a.C->rows()) +
                                          " rows, expected q = " + std::to_string(q));
            require(a.C->cols() == a.A.rows(),
                    agent_tag(i) + ": C must be q x " + std::to_string(a.A.rows()));
            require(a.B.cols() == q,
                    agent_tag(i) + ": output mode needs m = q, got m = " +
                        std::to_string(a.B.cols()) + ", q = " + std::to_string(q));
            const Mat cb = *a.C * a.B;
            // C*B must be invertible; probe with the pivoted solver.
            try {
                solve_linear(cb, Mat::identity(q));
            } catch (const SingularMatrixError&) {
                throw ValidationError(agent_tag(i) + ": C*B is singular");
            }
        }
        block_dim = q;
    }

    require(s.weights.Q.square() && s.weights.Q.rows() == block_dim,
            "weights: Q must be " + std::to_string(block_dim) + " x " +
                std::to_string(block_dim));
    require(is_positive_semidefinite(s.weights.Q),
            "weights: Q has a negative eigenvalue");
    require(s.weights.R.size() == n_followers,
            "weights: need one R per agent, got " + std::to_string(s.weights.R.size()));
    for (std::size_t i = 1; i <= n_followers; ++i) {
        const Mat& r = s.weights.R[i - 1];
        const std::size_t m = s.agents[i - 1].B.cols();
        require(r.square() && r.rows() == m,
                agent_tag(i) + ": R must be " + std::to_string(m) + " x " + std::to_string(m));
        require(is_positive_definite(r), agent_tag(i) + ": R is not positive definite");
    }

    require(s.initial_states.size() == n_followers,
            "scenario: need one initial state per agent, got " +
                std::to_string(s.initial_states.size()));
    for (std::size_t i = 1; i <= n_followers; ++i) {
        const Mat& x = s.initial_states[i - 1];
        const std::size_t n_i = s.agents[i - 1].A.rows();
        require(x.rows() == n_i && x.cols() == 1,
                agent_tag(i) + ": initial state must be a " + std::to_string(n_i) + "-vector");
    }

    ValidatedScenario vs{s, std::move(parents), block_dim, p};
    return vs;
}

bool is_homogeneous(const ValidatedScenario& vs) {
    const Mat& a0 = vs.scenario.leader.A0;
    const Mat& a1 = vs.scenario.agents.front().A;
    const Mat& b1 = vs.scenario.agents.front().B;
    if (!(a1 == a0)) return false;
    for (const AgentModel& a : vs.scenario.agents) {
        if (!(a.A == a1) || !(a.B == b1)) return false;
    }
    return true;
}

}  // namespace macs
