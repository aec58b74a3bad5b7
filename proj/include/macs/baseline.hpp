#pragma once

#include "macs/sim.hpp"

namespace macs {

/// Per-agent solutions of the regulator equations
///   X_i A_0 = A_i X_i + B_i U_i,   C_i X_i = C_0
/// (state mode reads C_i = C_0 = I). The comparison baseline needs them; the
/// main pipeline never does.
struct RegulatorSolution {
    std::vector<Mat> X;  // n_i x p
    std::vector<Mat> U;  // m_i x p
    double residual = 0.0;
};

/// Least-squares solve of the stacked linear system in vec(X_i), vec(U_i).
/// Throws RegulatorInfeasibleError when the residual exceeds 1e-6.
RegulatorSolution solve_regulator_equations(const ValidatedScenario& vs);

struct LeaderObserverConfig {
    double mu = 0.0;           // coupling gain, > 0
    bool eta_from_leader = false;  // start every estimate at x_0(0) instead of 0
};

/// Coupling gain of the conventional leader-observer, chosen by the
/// spectrum-agnostic rule mu = 1 / (2 N d_max) with d_max the largest
/// weighted in-degree. Deliberately conservative: the traditional scheme
/// picks its gain from worst-case topology bounds, not from the realized
/// spectrum, and that conservatism is what the comparison measures.
double default_coupling_gain(const ValidatedScenario& vs);

/// 1-D grid search minimizing the stacked observer spectral radius. On a
/// tree this reaches an exact deadbeat estimator (radius 0), i.e. a
/// topology-aware tuning the conventional literature does not assume; kept
/// for experiments and exposed through the CLI.
double optimize_coupling_gain(const ValidatedScenario& vs);

/// Per-agent stabilizing gains F_i with A_i + B_i F_i Schur, from the same
/// Riccati solver the main pipeline uses.
std::vector<Mat> baseline_feedback_gains(const ValidatedScenario& vs);

/// Stacked observer-error matrix (I - mu H) (x) A_0 of the leader observer.
Mat baseline_observer_matrix(const ValidatedScenario& vs, double mu);

/// Full stacked closed loop over (tracking errors, observer errors); its
/// spectral radius is the baseline's convergence rate.
Mat baseline_closed_loop_matrix(const ValidatedScenario& vs, const RegulatorSolution& reg,
                                const std::vector<Mat>& feedback_gains, double mu);

/// Conventional scheme: leader observer eta_i coupled through the graph,
/// control u_i = F_i (x_i - X_i eta_i) + U_i eta_i. Throws
/// BaselineUnstableError when the observer network is unstable for the given
/// coupling gain.
SimulationTrace run_baseline(const ValidatedScenario& vs, const RegulatorSolution& reg,
                             const LeaderObserverConfig& cfg,
                             const std::vector<Mat>& feedback_gains,
                             const SimOptions& opts = {});

struct ComparisonReport {
    double rho_proposed = 0.0;   // rho(A_bar_c) of the proposed method
    double rho_baseline = 0.0;   // spectral radius of the baseline closed loop
    double threshold = 0.0;
    std::size_t consensus_step_proposed = 0;
    std::size_t consensus_step_baseline = 0;
    bool proposed_reached = false;
    bool baseline_reached = false;
    double step_ratio = 0.0;  // baseline / proposed consensus steps
    std::vector<double> proposed_errors;  // per-step tracking errors
    std::vector<double> baseline_errors;
};

/// Side-by-side convergence comparison. Both traces must come from the same
/// scenario and initial conditions (checked); otherwise throws ContractError.
ComparisonReport compare(const SimulationTrace& proposed, const SynthesisResult& synth,
                         const SimulationTrace& baseline, double baseline_rho,
                         double threshold);

}  // namespace macs
