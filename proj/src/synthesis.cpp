#include "macs/synthesis.hpp"

#include <cmath>
#include <string>

#include "macs/errors.hpp"
#include "macs/linalg.hpp"

namespace macs {

ErrorStack build_error_stack(const ValidatedScenario& vs) {
    const std::size_t n_followers = vs.follower_count();
    ErrorStack stack;
    stack.mode = vs.scenario.mode;
    stack.block_dim = vs.block_dim;

    for (std::size_t i = 1; i <= n_followers; ++i) {
        stack.pair_order.emplace_back(i, vs.parents.parent_of(i));
        const AgentModel& agent = vs.agent(i);
        if (stack.mode == ConsensusMode::State) {
            stack.a_blocks.push_back(agent.A);
            stack.b_blocks.push_back(agent.B);
        } else {
            stack.a_blocks.push_back(Mat::identity(vs.block_dim));
            stack.b_blocks.push_back(*agent.C * agent.B);
        }
        stack.input_dims.push_back(stack.b_blocks.back().cols());
        stack.r_blocks.push_back(vs.scenario.weights.R[i - 1]);
    }

    stack.a_tilde = block_diag(stack.a_blocks);
    stack.b_tilde = block_diag(stack.b_blocks);
    stack.q_cal = kron(Mat::identity(n_followers), vs.scenario.weights.Q);
    stack.r_cal = block_diag(stack.r_blocks);

    const std::size_t dim = stack.stack_dim();
    for (std::size_t i = 0; i < n_followers; ++i) {
        Mat bi(dim, stack.input_dims[i]);
        bi.set_block(i * stack.block_dim, 0, stack.b_blocks[i]);
        stack.b_cols.push_back(std::move(bi));
    }
    return stack;
}

Mat dare_step(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& p) {
    const Mat bt_p = b.transposed() * p;
    const Mat s = r + bt_p * b;
    const Mat bt_p_a = bt_p * a;
    Mat gain_term;
    try {
        gain_term = solve_linear(s, bt_p_a);
    } catch (const SingularMatrixError&) {
        throw ConditioningError("dare_step: R + B'PB is numerically singular");
    }
    return a.transposed() * p * a + q - bt_p_a.transposed() * gain_term;
}

namespace {

struct BlockDare {
    Mat p;
    Mat k;
    int iters = 0;
};

BlockDare solve_block_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                           const DareOptions& opts, std::size_t agent_index) {
    Mat p = q;
    for (int it = 0; it < opts.max_iters; ++it) {
        Mat next = dare_step(a, b, q, r, p);
        // Symmetrize: the map preserves symmetry only in exact arithmetic,
        // and asymmetric rounding noise feeds an unstable direction of the
        // iteration for unstable A.
        next = 0.5 * (next + next.transposed());
        const double delta = (next - p).norm_fro();
        const double pnorm = next.norm_fro();
        if (!next.all_finite() || pnorm > 1e100) {
            throw NonStabilizableError("solve_dare: iteration diverged for agent " +
                                       std::to_string(agent_index));
        }
        p = next;
        if (delta <= opts.step_tol * (1.0 + pnorm)) {
            const Mat s = r + b.transposed() * p * b;
            const Mat k = -1.0 * solve_linear(s, b.transposed() * p * a);
            return {p, k, it + 1};
        }
    }
    throw NonStabilizableError("solve_dare: iteration cap reached for agent " +
                               std::to_string(agent_index) + "; pair likely unstabilizable");
}

}  // namespace

SingleDare solve_single_dare(const Mat& a, const Mat& b, const Mat& q, const Mat& r,
                             const DareOptions& opts) {
    const BlockDare bd = solve_block_dare(a, b, q, r, opts, 0);
    return {bd.p, bd.k};
}

DareSolution solve_dare(const ErrorStack& stack, const DareOptions& opts) {
    const std::size_t n = stack.follower_count();
    DareSolution sol;

    for (std::size_t i = 0; i < n; ++i) {
        const BlockDare bd = solve_block_dare(stack.a_blocks[i], stack.b_blocks[i],
                                              stack.q_cal.block(i * stack.block_dim,
                                                                i * stack.block_dim,
                                                                stack.block_dim, stack.block_dim),
                                              stack.r_blocks[i], opts, i + 1);
        sol.p_blocks.push_back(bd.p);
        sol.k_blocks.push_back(bd.k);
    }

    sol.p = block_diag(sol.p_blocks);
    sol.k = block_diag(sol.k_blocks);
    const std::size_t dim = stack.stack_dim();
    for (std::size_t i = 0; i < n; ++i) {
        Mat row(stack.input_dims[i], dim);
        row.set_block(0, i * stack.block_dim, sol.k_blocks[i]);
        sol.k_rows.push_back(std::move(row));
    }

    sol.residual = dare_residual(stack, sol.p);
    sol.rho_closed = spectral_radius(stack.a_tilde + stack.b_tilde * sol.k);
    if (!is_positive_definite(sol.p)) {
        throw NonStabilizableError("solve_dare: stacked Riccati solution is not positive definite");
    }
    if (sol.rho_closed >= 1.0) {
        throw NonStabilizableError("solve_dare: closed loop not contractive, rho = " +
                                   std::to_string(sol.rho_closed));
    }
    return sol;
}

double dare_residual(const ErrorStack& stack, const Mat& p) {
    return (p - dare_step(stack.a_tilde, stack.b_tilde, stack.q_cal, stack.r_cal, p)).norm_fro();
}

// ---- feedforward -----------------------------------------------------------

namespace {

// Solve B u = rhs exactly (square invertible B) or via the pseudoinverse
// after the range test rank([B | rhs_map]) == rank(B).
Mat cancellation_input(const Mat& b, const Mat& mismatch, const Mat& x_parent,
                       std::size_t agent_index, std::size_t parent_index) {
    if (b.square()) {
        try {
            return solve_linear(b, mismatch * x_parent);
        } catch (const SingularMatrixError&) {
            // fall through to the pseudoinverse branch
        }
    }
    const std::size_t rank_b = numerical_rank(b);
    const Mat augmented = hstack({b, mismatch});
    if (numerical_rank(augmented) != rank_b) {
        throw FeedforwardInfeasibleError(
            "feedforward: pair (" + std::to_string(agent_index) + ", " +
            std::to_string(parent_index) +
            "): B is singular and the dynamics mismatch leaves range(B)");
    }
    return pseudo_inverse(b) * (mismatch * x_parent);
}

}  // namespace

Mat feedforward_state(const Mat& a_own, const Mat& b_own, std::size_t agent_index,
                      std::size_t parent_index, const Mat& a_parent, const Mat& b_parent,
                      const Mat& x_parent, const Mat& u_parent) {
    const Mat mismatch = a_own - a_parent;
    Mat u = -1.0 * cancellation_input(b_own, mismatch, x_parent, agent_index, parent_index);
    if (b_parent.cols() > 0 && u_parent.rows() > 0) {
        const Mat drive = b_parent * u_parent;
        if (b_own.square()) {
            try {
                u += solve_linear(b_own, drive);
                return u;
            } catch (const SingularMatrixError&) {
            }
        }
        // Same range test, now against the parent's input matrix.
        const std::size_t rank_b = numerical_rank(b_own);
        if (numerical_rank(hstack({b_own, b_parent})) != rank_b) {
            throw FeedforwardInfeasibleError(
                "feedforward: pair (" + std::to_string(agent_index) + ", " +
                std::to_string(parent_index) + "): parent input drive leaves range(B)");
        }
        u += pseudo_inverse(b_own) * drive;
    }
    return u;
}

Mat feedforward_output(const Mat& a_own, const Mat& b_own, const Mat& c_own,
                       std::size_t agent_index, std::size_t parent_index, const Mat& x_own,
                       const Mat& a_parent, const Mat& b_parent, const Mat& c_parent,
                       const Mat& x_parent, const Mat& u_parent) {
    const Mat cb = c_own * b_own;
    if (cb.rows() != cb.cols()) {
        throw FeedforwardInfeasibleError("feedforward: pair (" + std::to_string(agent_index) +
                                         ", " + std::to_string(parent_index) +
                                         "): C*B is not square (m != q)");
    }
    Mat rhs = -1.0 * (c_own * ((a_own - Mat::identity(a_own.rows())) * x_own));
    rhs += c_parent * ((a_parent - Mat::identity(a_parent.rows())) * x_parent);
    if (b_parent.cols() > 0 && u_parent.rows() > 0) {
        rhs += c_parent * (b_parent * u_parent);
    }
    try {
        return solve_linear(cb, rhs);
    } catch (const SingularMatrixError&) {
        throw FeedforwardInfeasibleError("feedforward: pair (" + std::to_string(agent_index) +
                                         ", " + std::to_string(parent_index) +
                                         "): C*B is singular");
    }
}

// ---- closed loop -----------------------------------------------------------

ClosedLoop assemble_closed_loop(const ErrorStack& stack, const Mat& k,
                                const std::vector<Mat>& k_rows,
                                const std::vector<Mat>& l_gains,
                                const std::vector<Mat>& selectors) {
    const std::size_t n = stack.follower_count();
    const std::size_t dim = stack.stack_dim();
    if (k_rows.size() != n || l_gains.size() != n || selectors.size() != n) {
        throw ContractError("assemble_closed_loop: need one K_i, L_i, H_i per agent");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (l_gains[i].rows() != dim || l_gains[i].cols() != selectors[i].rows()) {
            throw ContractError("assemble_closed_loop: L_" + std::to_string(i + 1) +
                                " must be " + std::to_string(dim) + " x " +
                                std::to_string(selectors[i].rows()));
        }
        if (k_rows[i].cols() != dim) {
            throw ContractError("assemble_closed_loop: K_" + std::to_string(i + 1) +
                                " must have " + std::to_string(dim) + " columns");
        }
    }

    const Mat a_closed = stack.a_tilde + stack.b_tilde * k;

    ClosedLoop loop;
    std::vector<Mat> bk(n);  // B~_i K_i as full stack-square blocks
    for (std::size_t i = 0; i < n; ++i) bk[i] = stack.b_cols[i] * k_rows[i];

    for (std::size_t i = 0; i < n; ++i) {
        loop.theta.push_back(a_closed - bk[i] - l_gains[i] * selectors[i]);
    }

    Mat a_c(n * dim, n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a_c.set_block(i * dim, j * dim, i == j ? loop.theta[i] : -1.0 * bk[j]);
        }
    }
    loop.a_c = std::move(a_c);

    std::vector<Mat> psi_parts;
    psi_parts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) psi_parts.push_back(-1.0 * bk[i]);
    loop.psi = hstack(psi_parts);

    Mat a_bar(dim + n * dim, dim + n * dim);
    a_bar.set_block(0, 0, a_closed);
    a_bar.set_block(0, dim, loop.psi);
    a_bar.set_block(dim, dim, loop.a_c);
    loop.a_bar_c = std::move(a_bar);
    return loop;
}

std::pair<Mat, Mat> compute_m1_m2(const ErrorStack& stack, const Mat& p, const Mat& k,
                                  const std::vector<Mat>& k_rows, const Mat& psi) {
    const std::size_t n = stack.follower_count();
    const std::size_t dim = stack.stack_dim();
    if (psi.rows() != dim || psi.cols() != n * dim) {
        throw ContractError("compute_m1_m2: Psi must be " + std::to_string(dim) + " x " +
                            std::to_string(n * dim));
    }

    std::vector<Mat> krk(n);  // K_i' R_i K_i, each stack-square
    for (std::size_t i = 0; i < n; ++i) {
        krk[i] = k_rows[i].transposed() * stack.r_blocks[i] * k_rows[i];
    }

    const Mat a_closed = stack.a_tilde + stack.b_tilde * k;
    Mat m1 = a_closed.transposed() * p * psi;
    for (std::size_t i = 0; i < n; ++i) {
        m1.set_block(0, i * dim, m1.block(0, i * dim, dim, dim) - krk[i]);
    }

    Mat m2 = block_diag(krk) + psi.transposed() * p * psi;
    return {std::move(m1), std::move(m2)};
}

namespace {

// Static feasibility of the cancellation: every follower must be able to
// absorb its dynamics mismatch and its parent's drive through B. Checked up
// front so infeasible scenarios fail here instead of deep in a simulation.
void check_feedforward_feasibility(const ValidatedScenario& vs) {
    if (vs.scenario.mode != ConsensusMode::State) return;  // validate() covered C*B
    for (std::size_t i = 1; i <= vs.follower_count(); ++i) {
        const AgentModel& own = vs.agent(i);
        const std::size_t parent = vs.parents.parent_of(i);
        const Mat& a_parent = parent == 0 ? vs.scenario.leader.A0 : vs.agent(parent).A;
        if (own.B.square()) {
            try {
                solve_linear(own.B, Mat::identity(own.B.rows()));
                continue;
            } catch (const SingularMatrixError&) {
            }
        }
        const std::size_t rank_b = numerical_rank(own.B);
        if (numerical_rank(hstack({own.B, own.A - a_parent})) != rank_b) {
            throw FeedforwardInfeasibleError(
                "feedforward: pair (" + std::to_string(i) + ", " + std::to_string(parent) +
                "): B is singular and the dynamics mismatch leaves range(B)");
        }
        if (parent != 0 &&
            numerical_rank(hstack({own.B, vs.agent(parent).B})) != rank_b) {
            throw FeedforwardInfeasibleError(
                "feedforward: pair (" + std::to_string(i) + ", " + std::to_string(parent) +
                "): parent input drive leaves range(B)");
        }
    }
}

}  // namespace

SynthesisResult synthesize(const ValidatedScenario& vs, const SynthesisOptions& opts) {
    check_feedforward_feasibility(vs);
    SynthesisResult out;
    out.mode = vs.scenario.mode;
    out.stack = build_error_stack(vs);
    out.selectors = build_selectors(vs.parents, vs.block_dim);
    out.dare = solve_dare(out.stack, opts.dare);

    ObserverGainOptions obs_opts = opts.observer;
    if (obs_opts.seed == 0) obs_opts.seed = vs.scenario.optimizer_seed;
    const ObserverGainResult gains = synthesize_observer_gains(
        out.stack, out.dare.k, out.dare.k_rows, out.selectors, obs_opts);

    out.l_gains = gains.l_gains;
    out.alpha = gains.alpha;
    out.sigma_max_ac = gains.sigma_max;
    out.rho_ac = gains.rho;
    out.observer_evals = gains.objective_evals;
    out.loop = assemble_closed_loop(out.stack, out.dare.k, out.dare.k_rows, out.l_gains,
                                    out.selectors);
    auto [m1, m2] = compute_m1_m2(out.stack, out.dare.p, out.dare.k, out.dare.k_rows,
                                  out.loop.psi);
    out.m1 = std::move(m1);
    out.m2 = std::move(m2);
    out.rho_closed = out.dare.rho_closed;
    out.rho_bar = spectral_radius(out.loop.a_bar_c);
    return out;
}

}  // namespace macs
