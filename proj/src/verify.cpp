#include "macs/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "macs/linalg.hpp"
#include "macs/sim.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace macs {

namespace {

Mat random_mat(std::uint64_t seed, std::size_t rows, std::size_t cols, double span = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-span, span);
    Mat m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
}

double penrose_defect(const Mat& m) {
    const Mat pinv = pseudo_inverse(m);
    const Mat mp = m * pinv;
    const Mat pm = pinv * m;
    double worst = (m * pinv * m - m).max_abs();
    worst = std::max(worst, (pinv * m * pinv - pinv).max_abs());
    worst = std::max(worst, (mp.transposed() - mp).max_abs());
    worst = std::max(worst, (pm.transposed() - pm).max_abs());
    return worst;
}

}  // namespace

std::vector<CheckResult> verify_kernel(const VerifyOptions& opts) {
    std::vector<CheckResult> checks;

    {
        CheckResult c{"penrose_conditions", false, 0.0, 1e-8,
                      std::to_string(opts.penrose_samples) + " random matrices up to 6x6"};
        std::vector<double> defects(opts.penrose_samples);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (opts.parallel)
#endif
        for (int i = 0; i < opts.penrose_samples; ++i) {
            std::mt19937_64 dims(opts.seed + 7919 * i);
            const std::size_t rows = 1 + dims() % 6;
            const std::size_t cols = 1 + dims() % 6;
            try {
                defects[i] = penrose_defect(random_mat(opts.seed + i, rows, cols));
            } catch (...) {
                defects[i] = std::numeric_limits<double>::infinity();
            }
        }
        c.measured = *std::max_element(defects.begin(), defects.end());
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    {
        CheckResult c{"sigma_max_dominates_rho", false, 0.0, 1e-10,
                      "sigma_max(m) >= rho(m) on random square matrices"};
        double worst = 0.0;  // most negative sigma - rho
        for (int i = 0; i < opts.spectrum_samples; ++i) {
            std::mt19937_64 dims(opts.seed + 104729 * i);
            const std::size_t n = 1 + dims() % 6;
            const Mat m = random_mat(opts.seed + 31 * i + 1, n, n, 2.0);
            worst = std::min(worst, max_singular_value(m) - spectral_radius(m));
        }
        c.measured = -worst;
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    {
        CheckResult c{"spectral_radius_scaling", false, 0.0, 1e-8,
                      "rho(alpha m) = |alpha| rho(m)"};
        double worst = 0.0;
        std::mt19937_64 rng(opts.seed + 5);
        std::uniform_real_distribution<double> alpha_dist(-3.0, 3.0);
        for (int i = 0; i < opts.spectrum_samples; ++i) {
            const std::size_t n = 2 + i % 5;
            const Mat m = random_mat(opts.seed + 97 * i + 2, n, n, 2.0);
            const double alpha = alpha_dist(rng);
            const double lhs = spectral_radius(alpha * m);
            const double rhs = std::abs(alpha) * spectral_radius(m);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, rhs));
        }
        c.measured = worst;
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    {
        CheckResult c{"spectral_radius_oracles", false, 0.0, 1e-8,
                      "identity, diagonal, and pure-imaginary-pair cases"};
        double worst = std::abs(spectral_radius(Mat::identity(2)) - 1.0);
        worst = std::max(worst, std::abs(spectral_radius(Mat::diag({0.5, -0.25})) - 0.5));
        worst = std::max(worst, std::abs(spectral_radius(Mat{{0.0, 1.0}, {-0.25, 0.0}}) - 0.5));
        c.measured = worst;
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    {
        CheckResult c{"solve_linear_residual", false, 0.0, 1.0,
                      "residual <= 1e-10 (||a|| ||x|| + ||b||) on random systems"};
        std::vector<double> ratios(opts.solve_samples);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (opts.parallel)
#endif
        for (int i = 0; i < opts.solve_samples; ++i) {
            std::mt19937_64 dims(opts.seed + 1299709 * i);
            const std::size_t n = 2 + dims() % 7;
            Mat a = random_mat(opts.seed + 3 * i + 11, n, n);
            for (std::size_t d = 0; d < n; ++d) a(d, d) += 4.0;  // keep it well conditioned
            const Mat b = random_mat(opts.seed + 3 * i + 12, n, 1);
            try {
                const Mat x = solve_linear(a, b);
                const double res = norm2(a * x - b);
                ratios[i] = res / (1e-10 * (a.norm_fro() * norm2(x) + norm2(b)));
            } catch (...) {
                ratios[i] = std::numeric_limits<double>::infinity();
            }
        }
        c.measured = *std::max_element(ratios.begin(), ratios.end());
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    {
        CheckResult c{"scalar_dare_closed_form", false, 0.0, 1e-10,
                      "a=b=q=r=1 gives p = (1+sqrt(5))/2"};
        const SingleDare d = solve_single_dare(Mat{{1.0}}, Mat{{1.0}}, Mat{{1.0}}, Mat{{1.0}});
        c.measured = std::abs(d.p(0, 0) - (1.0 + std::sqrt(5.0)) / 2.0);
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    return checks;
}

std::vector<CheckResult> verify_scenario(const ValidatedScenario& vs,
                                         const SynthesisOptions& synth_opts) {
    std::vector<CheckResult> checks;
    const SynthesisResult synth = synthesize(vs, synth_opts);

    {
        CheckResult c{"dare_residual", false, synth.dare.residual,
                      1e-10 * (1.0 + synth.dare.p.norm_fro()), "stacked Riccati fixed point"};
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }
    {
        CheckResult c{"riccati_solution_positive_definite", false, 0.0, 0.0, ""};
        c.passed = is_positive_definite(synth.dare.p);
        c.measured = c.passed ? 1.0 : 0.0;
        c.tolerance = 1.0;
        checks.push_back(c);
    }
    {
        CheckResult c{"closed_loop_stable", false, std::max(synth.rho_closed, synth.rho_ac), 1.0,
                      "rho(A~+B~K) and rho(A_c) both below one"};
        c.passed = synth.rho_closed < 1.0 && synth.rho_ac < 1.0;
        checks.push_back(c);
    }
    {
        CheckResult c{"block_triangular_radius", false, 0.0, 1e-8,
                      "rho(A_bar_c) equals max(rho(A~+B~K), rho(A_c))"};
        const double expected = std::max(synth.rho_closed, synth.rho_ac);
        c.measured = std::abs(synth.rho_bar - expected) / std::max(1.0, expected);
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    // Feedforward exactness, on a short run so diverging open-loop states
    // cannot swamp the absolute tolerance.
    if (vs.scenario.mode == ConsensusMode::State) {
        CheckResult c{"feedforward_exactness", false, 0.0, 1e-12,
                      "e(k+1) = A_i e(k) with feedback disabled"};
        SimOptions opts;
        opts.feedback_enabled = false;
        opts.horizon_override = std::min<std::size_t>(vs.scenario.horizon, 6);
        const SimulationTrace t = run_distributed(vs, synth, opts);
        double worst = 0.0;
        const std::size_t bd = vs.block_dim;
        for (std::size_t k = 0; k + 1 < t.steps(); ++k) {
            for (std::size_t i = 0; i < vs.follower_count(); ++i) {
                const Mat e_now = t.stacked_error[k].block(i * bd, 0, bd, 1);
                const Mat e_next = t.stacked_error[k + 1].block(i * bd, 0, bd, 1);
                worst = std::max(worst, (e_next - vs.agent(i + 1).A * e_now).max_abs());
            }
        }
        c.measured = worst;
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    } else {
        CheckResult c{"output_error_recursion", false, 0.0, 1e-12,
                      "eps(k+1) = eps(k) + C_i B_i u_fb(k)"};
        const SimulationTrace t = run_distributed(vs, synth, SimOptions{});
        double worst = 0.0;
        const std::size_t bd = vs.block_dim;
        for (std::size_t k = 0; k + 1 < t.steps(); ++k) {
            for (std::size_t i = 0; i < vs.follower_count(); ++i) {
                const Mat e_now = t.stacked_error[k].block(i * bd, 0, bd, 1);
                const Mat e_next = t.stacked_error[k + 1].block(i * bd, 0, bd, 1);
                const Mat drive = synth.stack.b_blocks[i] * t.u_fb[k][i];
                worst = std::max(worst, (e_next - e_now - drive).max_abs());
            }
        }
        c.measured = worst;
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);
    }

    // Observer convergence at a horizon where the bound rho^k z0 <= 1e-8
    // holds with generous slack.
    {
        CheckResult c{"observer_convergence", false, 0.0, 1e-6,
                      "every ||E - Ehat_i|| at the decay horizon"};
        SimOptions opts;
        opts.observer_init = vs.scenario.observer_init;
        const SimulationTrace probe = run_distributed(vs, synth, opts);
        const double z0 = std::max(norm2(probe.stacked_error.front()) +
                                       norm2(probe.stacked_observer_error(0)),
                                   1e-12);
        const double rho = std::min(std::max(synth.rho_bar, 1e-6), 0.999999);
        const double k_needed = std::log(1e-8 / z0) / std::log(rho);
        opts.horizon_override =
            static_cast<std::size_t>(std::max(2.0 * std::max(k_needed, 1.0) + 10.0, 20.0));
        const SimulationTrace t = run_distributed(vs, synth, opts);
        double worst = 0.0;
        for (std::size_t i = 0; i < vs.follower_count(); ++i) {
            worst = std::max(worst, norm2(t.observer_error(t.steps() - 1, i)));
        }
        c.measured = worst;
        c.passed = c.measured <= c.tolerance;
        checks.push_back(c);

        // Cost identity and decay of the cost difference on the same run.
        std::vector<std::size_t> s_values{0};
        if (t.horizon > 5) s_values.push_back(5);
        if (t.horizon > 10) s_values.push_back(10);
        if (t.horizon > 20) s_values.push_back(20);
        const CostReport costs = compute_costs(t, synth, s_values);

        CheckResult ci{"cost_identity", false, 0.0, 0.0,
                       "J_sim(s) = E(s)'PE(s) + correction sum, all s"};
        double worst_gap = 0.0;
        double binding_tol = 0.0;
        for (const CostEntry& e : costs.entries) {
            worst_gap = std::max(worst_gap, std::abs(e.j_sim - e.j_star_distributed));
            binding_tol = 1e-6 + costs.truncation_bound;
        }
        ci.measured = worst_gap;
        ci.tolerance = binding_tol;
        ci.passed = ci.measured <= ci.tolerance;
        checks.push_back(ci);

        CheckResult cd{"cost_difference_decay", false, 0.0, 1e-2,
                       "|delta J(s)| shrinks toward zero, scaled by |delta J(0)|"};
        if (costs.entries.size() >= 3) {
            const double scale = std::max(std::abs(costs.entries[0].delta_j), 1e-300);
            // exact zeros appear as rounding noise; below this floor the
            // sequence counts as converged
            const double floor = 1e-12 * std::max(1.0, scale);
            bool monotone = true;
            for (std::size_t i = 2; i < costs.entries.size(); ++i) {
                monotone = monotone && std::abs(costs.entries[i].delta_j) <=
                                           std::abs(costs.entries[i - 1].delta_j) + floor;
            }
            cd.measured = std::abs(costs.entries.back().delta_j) / scale;
            cd.passed = monotone && cd.measured <= cd.tolerance;
        } else {
            cd.passed = true;
            cd.detail = "horizon too short, skipped";
        }
        checks.push_back(cd);
    }

    return checks;
}

bool all_passed(const std::vector<CheckResult>& checks) {
    for (const CheckResult& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

}  // namespace macs
