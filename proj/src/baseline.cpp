#include "macs/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "macs/errors.hpp"
#include "macs/linalg.hpp"

namespace macs {

namespace {

// Column-major vectorization, the convention vec(A X B) = (B' (x) A) vec(X).
Mat vec(const Mat& m) {
    Mat v(m.rows() * m.cols(), 1);
    std::size_t idx = 0;
    for (std::size_t c = 0; c < m.cols(); ++c)
        for (std::size_t r = 0; r < m.rows(); ++r) v(idx++, 0) = m(r, c);
    return v;
}

Mat unvec(const Mat& v, std::size_t rows, std::size_t cols) {
    Mat m(rows, cols);
    std::size_t idx = 0;
    for (std::size_t c = 0; c < cols; ++c)
        for (std::size_t r = 0; r < rows; ++r) m(r, c) = v(idx++, 0);
    return m;
}

Mat output_matrix(const ValidatedScenario& vs, std::size_t follower) {
    if (vs.scenario.mode == ConsensusMode::Output) return *vs.agent(follower).C;
    return Mat::identity(vs.agent(follower).A.rows());
}

Mat leader_output_matrix(const ValidatedScenario& vs) {
    if (vs.scenario.mode == ConsensusMode::Output) return *vs.scenario.leader.C0;
    return Mat::identity(vs.leader_dim);
}

// Grounded in-degree Laplacian over the followers: row i carries the total
// weighted in-degree on the diagonal and -a_ji for follower in-neighbors.
Mat grounded_laplacian(const ValidatedScenario& vs) {
    const std::size_t n = vs.follower_count();
    const Topology& t = vs.scenario.topology;
    Mat h(n, n);
    for (std::size_t i = 1; i <= n; ++i) {
        double degree = 0.0;
        for (std::size_t j : t.in_neighbors(i)) {
            degree += t.weight(j, i);
            if (j >= 1) h(i - 1, j - 1) -= t.weight(j, i);
        }
        h(i - 1, i - 1) += degree;
    }
    return h;
}

}  // namespace

RegulatorSolution solve_regulator_equations(const ValidatedScenario& vs) {
    const std::size_t p = vs.leader_dim;
    const Mat c0 = leader_output_matrix(vs);
    const std::size_t q = c0.rows();
    const Mat ip = Mat::identity(p);

    RegulatorSolution sol;
    double worst = 0.0;
    for (std::size_t i = 1; i <= vs.follower_count(); ++i) {
        const AgentModel& agent = vs.agent(i);
        const Mat ci = output_matrix(vs, i);
        const std::size_t ni = agent.A.rows();
        const std::size_t mi = agent.B.cols();
        const Mat a0t = vs.scenario.leader.A0.transposed();

        // [ A0' (x) I - I (x) A_i,  -(I (x) B_i) ] [vec X]   [0     ]
        // [ I (x) C_i,               0           ] [vec U] = [vec C0]
        const Mat sylvester = hstack({kron(a0t, Mat::identity(ni)) - kron(ip, agent.A),
                                      -1.0 * kron(ip, agent.B)});
        const Mat output_rows = hstack({kron(ip, ci), Mat(q * p, mi * p)});
        const Mat system = vstack({sylvester, output_rows});
        const Mat rhs = vstack({Mat(ni * p, 1), vec(c0)});

        const Mat unknowns = pseudo_inverse(system) * rhs;
        const double res = norm2(system * unknowns - rhs);
        worst = std::max(worst, res);
        if (res > 1e-6) {
            throw RegulatorInfeasibleError("regulator equations: agent " + std::to_string(i) +
                                           " residual " + std::to_string(res) + " exceeds 1e-6");
        }
        sol.X.push_back(unvec(unknowns.block(0, 0, ni * p, 1), ni, p));
        sol.U.push_back(unvec(unknowns.block(ni * p, 0, mi * p, 1), mi, p));
    }
    sol.residual = worst;
    return sol;
}

double default_coupling_gain(const ValidatedScenario& vs) {
    const Topology& t = vs.scenario.topology;
    double d_max = 0.0;
    for (std::size_t i = 1; i <= vs.follower_count(); ++i) {
        double d = 0.0;
        for (std::size_t j : t.in_neighbors(i)) d += t.weight(j, i);
        d_max = std::max(d_max, d);
    }
    return 1.0 / (2.0 * static_cast<double>(vs.follower_count()) * std::max(d_max, 1e-12));
}

Mat baseline_observer_matrix(const ValidatedScenario& vs, double mu) {
    const Mat h = grounded_laplacian(vs);
    const Mat scaled = Mat::identity(vs.follower_count()) - mu * h;
    return kron(scaled, vs.scenario.leader.A0);
}

double optimize_coupling_gain(const ValidatedScenario& vs) {
    double best_mu = 1e-3;
    double best_rho = spectral_radius(baseline_observer_matrix(vs, best_mu));
    for (int step = 1; step <= 2000; ++step) {
        const double mu = 1e-3 * step;
        const double rho = spectral_radius(baseline_observer_matrix(vs, mu));
        if (rho < best_rho) {
            best_rho = rho;
            best_mu = mu;
        }
    }
    return best_mu;
}

std::vector<Mat> baseline_feedback_gains(const ValidatedScenario& vs) {
    std::vector<Mat> gains;
    for (std::size_t i = 1; i <= vs.follower_count(); ++i) {
        const AgentModel& agent = vs.agent(i);
        const std::size_t ni = agent.A.rows();
        const Mat q_track = vs.scenario.mode == ConsensusMode::State ? vs.scenario.weights.Q
                                                                     : Mat::identity(ni);
        const SingleDare d =
            solve_single_dare(agent.A, agent.B, q_track, vs.scenario.weights.R[i - 1]);
        gains.push_back(d.k);
    }
    return gains;
}

Mat baseline_closed_loop_matrix(const ValidatedScenario& vs, const RegulatorSolution& reg,
                                const std::vector<Mat>& feedback_gains, double mu) {
    const std::size_t n = vs.follower_count();
    const std::size_t p = vs.leader_dim;
    const Topology& t = vs.scenario.topology;

    std::vector<std::size_t> xi_offsets(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        xi_offsets[i + 1] = xi_offsets[i] + vs.scenario.agents[i].A.rows();
    }
    const std::size_t xi_dim = xi_offsets[n];
    const std::size_t total = xi_dim + n * p;
    Mat cl(total, total);

    const Mat& a0 = vs.scenario.leader.A0;
    for (std::size_t i = 1; i <= n; ++i) {
        const AgentModel& agent = vs.agent(i);
        const std::size_t r0 = xi_offsets[i - 1];
        cl.set_block(r0, r0, agent.A + agent.B * feedback_gains[i - 1]);

        // xi_i(k+1) picks up -mu X_i A_0 [sum a_ji (delta_j - delta_i) - a_0i delta_i]
        const Mat coupling = mu * (reg.X[i - 1] * a0);
        double degree = 0.0;
        for (std::size_t j : t.in_neighbors(i)) {
            const double w = t.weight(j, i);
            degree += w;
            if (j >= 1) {
                cl.set_block(r0, xi_dim + (j - 1) * p, -w * coupling);
            }
        }
        cl.set_block(r0, xi_dim + (i - 1) * p, degree * coupling);

        // delta_i(k+1) = A_0 delta_i + mu A_0 [sum a_ji (delta_j - delta_i) - a_0i delta_i]
        const std::size_t dr = xi_dim + (i - 1) * p;
        cl.set_block(dr, dr, (1.0 - mu * degree) * a0);
        for (std::size_t j : t.in_neighbors(i)) {
            if (j >= 1) {
                cl.set_block(dr, xi_dim + (j - 1) * p, mu * t.weight(j, i) * a0);
            }
        }
    }
    return cl;
}

SimulationTrace run_baseline(const ValidatedScenario& vs, const RegulatorSolution& reg,
                             const LeaderObserverConfig& cfg,
                             const std::vector<Mat>& feedback_gains, const SimOptions& opts) {
    if (!(cfg.mu > 0.0)) {
        throw ContractError("run_baseline: coupling gain must be positive");
    }
    const double rho_obs = spectral_radius(baseline_observer_matrix(vs, cfg.mu));
    if (rho_obs >= 1.0) {
        throw BaselineUnstableError("baseline observer network unstable (rho = " +
                                    std::to_string(rho_obs) +
                                    "); choose a different coupling gain");
    }

    const std::size_t n = vs.follower_count();
    const std::size_t horizon =
        opts.horizon_override > 0 ? opts.horizon_override : vs.scenario.horizon;
    const Topology& t = vs.scenario.topology;
    const Mat& a0 = vs.scenario.leader.A0;

    SimulationTrace trace;
    trace.mode = vs.scenario.mode;
    trace.controller = "baseline";
    trace.horizon = horizon;
    trace.observer_kind = "leader-state";

    Mat x0 = vs.scenario.leader.x0;
    std::vector<Mat> states = vs.scenario.initial_states;
    std::vector<Mat> eta(n, Mat(vs.leader_dim, 1));
    if (cfg.eta_from_leader) {
        for (Mat& e : eta) e = x0;
    }

    auto stacked_error = [&]() {
        std::vector<Mat> blocks;
        for (std::size_t i = 1; i <= n; ++i) {
            const std::size_t parent = vs.parents.parent_of(i);
            if (vs.scenario.mode == ConsensusMode::State) {
                blocks.push_back(states[i - 1] - (parent == 0 ? x0 : states[parent - 1]));
            } else {
                const Mat yi = *vs.agent(i).C * states[i - 1];
                const Mat yp = parent == 0 ? Mat(*vs.scenario.leader.C0 * x0)
                                           : Mat(*vs.agent(parent).C * states[parent - 1]);
                blocks.push_back(yi - yp);
            }
        }
        return vstack(blocks);
    };

    for (std::size_t k = 0; k <= horizon; ++k) {
        trace.leader_states.push_back(x0);
        trace.agent_states.push_back(states);
        trace.stacked_error.push_back(stacked_error());
        trace.estimates.push_back(eta);
        if (trace.mode == ConsensusMode::Output) {
            trace.leader_outputs.push_back(*vs.scenario.leader.C0 * x0);
            std::vector<Mat> outs;
            for (std::size_t i = 1; i <= n; ++i) outs.push_back(*vs.agent(i).C * states[i - 1]);
            trace.agent_outputs.push_back(std::move(outs));
        }
        if (k == horizon) break;

        std::vector<Mat> u_ff(n), u_fb(n);
        for (std::size_t i = 1; i <= n; ++i) {
            const Mat xi = states[i - 1] - reg.X[i - 1] * eta[i - 1];
            u_fb[i - 1] = feedback_gains[i - 1] * xi;
            u_ff[i - 1] = reg.U[i - 1] * eta[i - 1];
        }
        trace.u_ff.push_back(u_ff);
        trace.u_fb.push_back(u_fb);
        {
            const Mat e = trace.stacked_error.back();
            const Mat q_cal = kron(Mat::identity(n), vs.scenario.weights.Q);
            double stage = dot(e, q_cal * e);
            for (std::size_t i = 1; i <= n; ++i) {
                stage += dot(u_fb[i - 1], vs.scenario.weights.R[i - 1] * u_fb[i - 1]);
            }
            trace.stage_costs.push_back(stage);
        }

        std::vector<Mat> eta_next(n, Mat(vs.leader_dim, 1));
        for (std::size_t i = 1; i <= n; ++i) {
            Mat innovation(vs.leader_dim, 1);
            for (std::size_t j : t.in_neighbors(i)) {
                const double w = t.weight(j, i);
                const Mat& neighbor = j == 0 ? x0 : eta[j - 1];
                innovation += w * (neighbor - eta[i - 1]);
            }
            eta_next[i - 1] = a0 * eta[i - 1] + cfg.mu * (a0 * innovation);
        }

        for (std::size_t i = 1; i <= n; ++i) {
            const AgentModel& agent = vs.agent(i);
            states[i - 1] = agent.A * states[i - 1] + agent.B * (u_ff[i - 1] + u_fb[i - 1]);
        }
        x0 = a0 * x0;
        eta = std::move(eta_next);
    }
    return trace;
}

ComparisonReport compare(const SimulationTrace& proposed, const SynthesisResult& synth,
                         const SimulationTrace& baseline, double baseline_rho,
                         double threshold) {
    if (proposed.steps() == 0 || baseline.steps() == 0) {
        throw ContractError("compare: empty trace");
    }
    if (proposed.mode != baseline.mode ||
        !(proposed.leader_states.front() == baseline.leader_states.front()) ||
        proposed.agent_states.front().size() != baseline.agent_states.front().size()) {
        throw ContractError("compare: traces come from different scenarios");
    }
    for (std::size_t i = 0; i < proposed.agent_states.front().size(); ++i) {
        if (!(proposed.agent_states.front()[i] == baseline.agent_states.front()[i])) {
            throw ContractError("compare: traces start from different initial states");
        }
    }

    ComparisonReport rep;
    rep.threshold = threshold;
    rep.rho_proposed = synth.rho_bar;
    rep.rho_baseline = baseline_rho;

    const ConvergenceMetrics mp = convergence_metrics(proposed, synth.rho_bar, threshold);
    const ConvergenceMetrics mb = convergence_metrics(baseline, baseline_rho, threshold);
    rep.consensus_step_proposed = mp.consensus_step;
    rep.consensus_step_baseline = mb.consensus_step;
    rep.proposed_reached = mp.consensus_reached;
    rep.baseline_reached = mb.consensus_reached;
    rep.proposed_errors = mp.tracking_errors;
    rep.baseline_errors = mb.tracking_errors;
    if (mp.consensus_step > 0) {
        rep.step_ratio = static_cast<double>(mb.consensus_step) /
                         static_cast<double>(mp.consensus_step);
    } else {
        rep.step_ratio = mb.consensus_step == 0 ? 1.0 : 0.0;
    }
    return rep;
}

}  // namespace macs
