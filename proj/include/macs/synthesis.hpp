#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "macs/model.hpp"

namespace macs {

/// Stacked error system. State mode stacks the agent dynamics blockwise;
/// output mode stacks integrators driven through C_i*B_i.
struct ErrorStack {
    ConsensusMode mode = ConsensusMode::State;
    std::vector<std::pair<std::size_t, std::size_t>> pair_order;  // (i, parent(i))
    std::size_t block_dim = 0;            // per-pair error dimension
    std::vector<std::size_t> input_dims;  // m_i per agent
    std::vector<Mat> a_blocks;            // A_i (state) or I_q (output)
    std::vector<Mat> b_blocks;            // B_i (state) or C_i*B_i (output)
    Mat a_tilde;                          // block diag of a_blocks
    Mat b_tilde;                          // block diag of b_blocks
    std::vector<Mat> b_cols;              // column slices of b_tilde, one per agent
    Mat q_cal;                            // I_N (x) Q
    Mat r_cal;                            // diag(R_1..R_N)
    std::vector<Mat> r_blocks;

    std::size_t stack_dim() const { return pair_order.size() * block_dim; }
    std::size_t follower_count() const { return pair_order.size(); }
};

ErrorStack build_error_stack(const ValidatedScenario& vs);

struct DareOptions {
    int max_iters = 10000;
    // Step tolerance for the fixed-point iteration, relative to 1 + ||P||.
    double step_tol = 1e-14;
};

struct DareSolution {
    Mat p;                      // stacked Riccati solution
    Mat k;                      // stacked gain, u = K e
    std::vector<Mat> p_blocks;  // per-agent Riccati blocks
    std::vector<Mat> k_blocks;  // per-agent gain blocks (m_i x block_dim)
    std::vector<Mat> k_rows;    // K_i = [0 .. k_block_i .. 0], full-width rows
    double residual = 0.0;      // ||P - f(P)|| (Frobenius)
    double rho_closed = 0.0;    // spectral radius of A~ + B~K
};

/// Solves the stacked Riccati equation by per-agent fixed-point iteration
/// (the stack is block diagonal, so the global equation decomposes exactly).
DareSolution solve_dare(const ErrorStack& stack, const DareOptions& opts = {});

struct SingleDare {
    Mat p;
    Mat k;  // u = K x
};

/// One-system Riccati solve, same fixed-point iteration the stacked solver
/// runs per block.
SingleDare solve_single_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                             const DareOptions& opts = {});

/// Single stacked fixed-point map P -> A'PA + Q - A'PB (R + B'PB)^-1 B'PA.
/// Exposed so tests can iterate the dense global equation independently.
Mat dare_step(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& p);

/// Frobenius norm of P - dare_step(P) on the stacked system.
double dare_residual(const ErrorStack& stack, const Mat& p);

/// Feedforward input cancelling the dynamics mismatch against the parent,
/// state-consensus form. Uses B^-1 when the agent's input matrix is square
/// invertible, otherwise the pseudoinverse branch guarded by the range test
/// rank([B | A_i - A_j]) == rank(B). For a leader parent pass b_parent with
/// zero columns (B_0 = 0) and u_parent empty.
Mat feedforward_state(const Mat& a_own, const Mat& b_own, std::size_t agent_index,
                      std::size_t parent_index, const Mat& a_parent, const Mat& b_parent,
                      const Mat& x_parent, const Mat& u_parent);

/// Output-consensus feedforward. Realizes the unique input with
/// C_i B_i u~ = -C_i(A_i - I)x_i + C_j(A_j - I)x_j + C_j B_j u_j,
/// which reduces to the split inverse form whenever B_i is itself square
/// invertible.
Mat feedforward_output(const Mat& a_own, const Mat& b_own, const Mat& c_own,
                       std::size_t agent_index, std::size_t parent_index, const Mat& x_own,
                       const Mat& a_parent, const Mat& b_parent, const Mat& c_parent,
                       const Mat& x_parent, const Mat& u_parent);

struct ClosedLoop {
    std::vector<Mat> theta;  // Theta_i = A~ + B~K - B~_i K_i - L_i H_i
    Mat a_c;                 // stacked observer-error matrix
    Mat psi;                 // [-B~_1 K_1 ... -B~_N K_N]
    Mat a_bar_c;             // [[A~ + B~K, Psi], [0, A_c]]
};

ClosedLoop assemble_closed_loop(const ErrorStack& stack, const Mat& k,
                                const std::vector<Mat>& k_rows,
                                const std::vector<Mat>& l_gains,
                                const std::vector<Mat>& selectors);

/// Cost-correction matrices for the distributed-vs-centralized cost split:
/// M1 = (A~ + B~K)' P Psi - [K_1'R_1K_1 ... K_N'R_NK_N],
/// M2 = blockdiag(K_i'R_iK_i) + Psi' P Psi.
std::pair<Mat, Mat> compute_m1_m2(const ErrorStack& stack, const Mat& p, const Mat& k,
                                  const std::vector<Mat>& k_rows, const Mat& psi);

struct ObserverGainOptions {
    std::uint64_t seed = 0;  // 0: synthesize() substitutes the scenario's optimizer seed
    bool parallel = true;
    // Direct-search budgets, in accepted-move sweeps per phase.
    int sigma_phase_moves = 800;
    int rho_phase_moves = 600;
    int restarts = 1;
    double initial_step = 0.5;
    double min_step = 1e-9;
    // Keep the spectral-radius polish phase on by default; turning it off
    // stops after the singular-value phase (plus the instability fallback).
    bool polish_spectral_radius = true;
};

struct ObserverGainResult {
    std::vector<Mat> l_gains;
    double sigma_max = 0.0;  // sigma_max(A_c) at the returned gains
    double alpha = 0.0;      // sigma_max^2: A_c'A_c <= alpha I holds
    double rho = 0.0;        // spectral radius of A_c at the returned gains
    long objective_evals = 0;
};

/// Minimizes sigma_max(A_c) over the observer gains by batch pattern search
/// seeded at L_i = (A~ + B~K - B~_i K_i) H_i', then polishes the spectral
/// radius directly. Falls back to the radius objective whenever the
/// singular-value phase stalls above 1. Deterministic for a fixed seed; the
/// candidate batch may be evaluated in parallel.
ObserverGainResult synthesize_observer_gains(const ErrorStack& stack, const Mat& k,
                                             const std::vector<Mat>& k_rows,
                                             const std::vector<Mat>& selectors,
                                             const ObserverGainOptions& opts = {});

struct SynthesisOptions {
    DareOptions dare;
    ObserverGainOptions observer;
};

struct SynthesisResult {
    ConsensusMode mode = ConsensusMode::State;
    ErrorStack stack;
    std::vector<Mat> selectors;  // H_i (state) or F_i (output)
    DareSolution dare;
    std::vector<Mat> l_gains;
    ClosedLoop loop;
    Mat m1, m2;
    double alpha = 0.0;
    double sigma_max_ac = 0.0;
    double rho_ac = 0.0;
    double rho_closed = 0.0;    // rho(A~ + B~K)
    double rho_bar = 0.0;       // rho(A_bar_c)
    long observer_evals = 0;
};

/// Full synthesis pipeline: stack, Riccati gains, observer gains, closed
/// loop, cost-correction matrices. Throws ObserverSynthesisError when no
/// stabilizing observer gains are found.
SynthesisResult synthesize(const ValidatedScenario& vs, const SynthesisOptions& opts = {});

}  // namespace macs
