#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "macs/synthesis.hpp"

namespace macs {

/// Time-indexed record of one closed-loop run. States and errors are stored
/// for k = 0..horizon; controls for k = 0..horizon-1 (the control at k
/// drives the transition to k+1, so a horizon-0 trace is a single row with
/// zero accumulated cost).
struct SimulationTrace {
    ConsensusMode mode = ConsensusMode::State;
    std::string controller;  // "distributed", "centralized" or "baseline"
    std::size_t horizon = 0;

    std::vector<Mat> leader_states;               // [k], p x 1
    std::vector<std::vector<Mat>> agent_states;   // [k][i]
    std::vector<Mat> leader_outputs;              // output mode only
    std::vector<std::vector<Mat>> agent_outputs;  // output mode only
    std::vector<std::vector<Mat>> u_ff;           // [k][i], k < horizon
    std::vector<std::vector<Mat>> u_fb;           // [k][i], k < horizon
    std::vector<Mat> stacked_error;               // E(k) or Upsilon(k)
    std::vector<double> stage_costs;              // [k], k < horizon: E'QE + u_fb'R u_fb
    std::vector<std::vector<Mat>> estimates;      // [k][i]; empty when the run keeps no observers
    // "global-error": estimates are whole-stack observers; "leader-state":
    // per-agent leader estimates (baseline runs).
    std::string observer_kind;

    std::size_t steps() const { return leader_states.size(); }
    Mat observer_error(std::size_t k, std::size_t i) const;  // E(k) - estimate
    Mat stacked_observer_error(std::size_t k) const;         // all observers stacked
    double tracking_error(std::size_t k) const;  // max_i over states or outputs vs leader
};

struct SimOptions {
    ObserverInit observer_init = ObserverInit::Zero;
    bool feedback_enabled = true;
    std::size_t horizon_override = 0;  // 0: use the scenario's horizon
    std::uint64_t perturb_seed = 7;
    double perturb_scale = 0.5;  // relative to ||E(0)||, Perturbed init only
};

/// One observer update for every agent: each observer propagates the whole
/// stacked error, substituting its own estimate into the other agents'
/// feedback terms, plus innovation on its own measured block.
std::vector<Mat> step_observers(const SynthesisResult& synth, const std::vector<Mat>& estimates,
                                const std::vector<Mat>& measurements,
                                const std::vector<Mat>& feedback_controls);

/// Closed-loop run with the distributed controller: feedforward from the
/// parent plus observer-based feedback. Agent i's control is computed from
/// its own state, its parent's state and input, its own measurement and its
/// own estimate, nothing else; inputs propagate down the tree so the parent
/// input is always available. Throws StabilityError when the synthesis is
/// unstable (skipped when feedback is disabled, which is a diagnostic mode).
SimulationTrace run_distributed(const ValidatedScenario& vs, const SynthesisResult& synth,
                                const SimOptions& opts = {});

/// Reference run with the complete-information optimal feedback u = K E(k)
/// on the true stacked error; feedforward unchanged.
SimulationTrace run_centralized(const ValidatedScenario& vs, const SynthesisResult& synth,
                                const SimOptions& opts = {});

struct CostEntry {
    std::size_t s = 0;
    double j_sim = 0.0;                 // truncated simulated cost from s
    double j_star = 0.0;                // E(s)' P E(s)
    double delta_j = 0.0;               // truncated correction sum from s
    double j_star_distributed = 0.0;    // j_star + delta_j
};

struct CostReport {
    std::vector<CostEntry> entries;
    std::vector<double> stage_costs;       // per-transition E'QE + u_fb'R u_fb
    std::vector<double> correction_terms;  // per-step [E;Et]' Mbar [E;Et]
    double boundary_term = 0.0;            // E(h)' P E(h), the dropped tail head
    double truncation_bound = 0.0;         // geometric estimate of everything past h
};

/// Cost accounting over a trace. Costs charge the feedback component only.
/// Throws TraceRangeError when a requested start index exceeds the horizon.
CostReport compute_costs(const SimulationTrace& trace, const SynthesisResult& synth,
                         const std::vector<std::size_t>& s_values);

struct ConvergenceMetrics {
    std::vector<double> tracking_errors;  // per step
    std::vector<double> z_norms;          // ||[E; Etilde]|| per step
    double threshold = 0.0;
    std::size_t consensus_step = 0;  // first step from which the error stays below threshold
    bool consensus_reached = false;
    double decay_rate = 0.0;  // geometric-mean ratio over the post-peak window
    double fitted_c = 0.0;    // smallest c with z(k) <= c * rho_bar^k * z(0)
};

ConvergenceMetrics convergence_metrics(const SimulationTrace& trace, double rho_bar,
                                       double threshold);

}  // namespace macs
