#include <doctest.h>

#include <cmath>
#include <random>

#include "macs/linalg.hpp"
#include "macs/synthesis.hpp"
#include "test_scenarios.hpp"

using macs::Mat;
using namespace macs::testing;

namespace {

Mat inverse_2x2(const Mat& m) {
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return Mat{{m(1, 1) / det, -m(0, 1) / det}, {-m(1, 0) / det, m(0, 0) / det}};
}

}  // namespace

TEST_CASE("error stack on the reference scenario") {
    const macs::ValidatedScenario vs = macs::validate(hetero_chain_scenario());
    const macs::ErrorStack st = macs::build_error_stack(vs);
    CHECK(st.stack_dim() == 6);
    CHECK(st.a_tilde.rows() == 6);
    CHECK(st.a_tilde.block(0, 0, 2, 2) == vs.agent(1).A);
    CHECK(st.a_tilde.block(2, 2, 2, 2) == vs.agent(2).A);
    CHECK(st.a_tilde.block(4, 4, 2, 2) == vs.agent(3).A);
    CHECK(st.a_tilde.block(0, 2, 2, 2).max_abs() == 0.0);
    CHECK(st.b_tilde.block(2, 2, 2, 2) == vs.agent(2).B);
    CHECK(st.q_cal == Mat::identity(6));
    CHECK(st.r_cal == Mat::identity(6));
    CHECK(macs::hstack(st.b_cols) == st.b_tilde);
    CHECK(st.pair_order[0] == std::pair<std::size_t, std::size_t>{1, 0});
    CHECK(st.pair_order[2] == std::pair<std::size_t, std::size_t>{3, 2});
}

TEST_CASE("error stack single follower and output mode") {
    macs::Scenario one = scalar_chain_scenario();
    one.topology = chain_topology(2);
    one.agents.pop_back();
    one.weights.R.pop_back();
    one.initial_states.pop_back();
    const macs::ValidatedScenario vs = macs::validate(one);
    const macs::ErrorStack st = macs::build_error_stack(vs);
    CHECK(st.a_tilde == vs.agent(1).A);
    CHECK(st.b_tilde == vs.agent(1).B);

    // output mode: A is the stacked identity, B collects C_i B_i
    const macs::ValidatedScenario vo = macs::validate(mixed_output_scenario());
    const macs::ErrorStack so = macs::build_error_stack(vo);
    CHECK(so.a_tilde == Mat::identity(6));
    CHECK(so.b_blocks[1] == *vo.agent(2).C * vo.agent(2).B);
}

TEST_CASE("output-mode stack with scalar products") {
    // two single-output agents with C B = 2 and 3
    macs::Scenario s{chain_topology(3),
                     {
                         {Mat{{1.0}}, Mat{{2.0}}, Mat{{1.0}}},
                         {Mat{{0.5, 0.1}, {0.0, 0.8}}, Mat{{1.0}, {1.0}}, Mat{{1.0, 2.0}}},
                     },
                     {Mat{{1.0}}, Mat{{1.0}}, Mat::col_vec({1.0})},
                     {Mat::identity(1), {Mat::identity(1), Mat::identity(1)}},
                     {Mat::col_vec({0.0}), Mat::col_vec({0.0, 0.0})},
                     10,
                     macs::ConsensusMode::Output};
    const macs::ValidatedScenario vs = macs::validate(s);
    const macs::ErrorStack st = macs::build_error_stack(vs);
    CHECK(st.a_tilde == Mat::identity(2));
    CHECK(st.b_tilde == Mat::diag({2.0, 3.0}));
}

TEST_CASE("scalar Riccati equation has the golden-ratio solution") {
    const macs::SingleDare d =
        macs::solve_single_dare(Mat{{1.0}}, Mat{{1.0}}, Mat{{1.0}}, Mat{{1.0}});
    CHECK(std::abs(d.p(0, 0) - (1.0 + std::sqrt(5.0)) / 2.0) < 1e-10);
}

TEST_CASE("zero drift collapses the Riccati equation to Q") {
    macs::Scenario s = hetero_chain_scenario();
    for (auto& a : s.agents) a.A = Mat(2, 2);
    s.leader.A0 = Mat(2, 2);
    const macs::ValidatedScenario vs = macs::validate(s);
    const macs::ErrorStack st = macs::build_error_stack(vs);
    const macs::DareSolution d = macs::solve_dare(st);
    CHECK((d.p - st.q_cal).max_abs() < 1e-12);
    CHECK(d.k.max_abs() < 1e-12);
}

TEST_CASE("stacked Riccati solution matches dense value iteration") {
    const macs::ValidatedScenario vs = macs::validate(hetero_chain_scenario());
    const macs::ErrorStack st = macs::build_error_stack(vs);
    const macs::DareSolution d = macs::solve_dare(st);
    CHECK(d.residual <= 1e-10 * (1.0 + d.p.norm_fro()));
    CHECK(macs::is_positive_definite(d.p));
    CHECK(d.rho_closed < 1.0);

    // independent oracle: iterate the dense stacked map from P0 = Q
    Mat p = st.q_cal;
    for (int it = 0; it < 400; ++it) {
        Mat next = macs::dare_step(st.a_tilde, st.b_tilde, st.q_cal, st.r_cal, p);
        p = 0.5 * (next + next.transposed());
    }
    CHECK((p - d.p).max_abs() < 1e-9);

    // gain blocks reassemble the stacked gain
    CHECK(macs::block_diag(d.k_blocks) == d.k);
    CHECK(macs::vstack(d.k_rows) == d.k);
}

TEST_CASE("feedforward cancels matched dynamics") {
    // identical agents with identity input: the parent's input passes through
    const Mat a{{0.9, 0.1}, {0.0, 0.8}};
    const Mat uj = Mat::col_vec({0.3, -0.7});
    const Mat u = macs::feedforward_state(a, Mat::identity(2), 2, 1, a, Mat::identity(2),
                                          Mat::col_vec({5.0, -2.0}), uj);
    CHECK((u - uj).max_abs() < 1e-12);
}

TEST_CASE("feedforward against the rotation leader matches direct arithmetic") {
    const macs::Scenario s = hetero_chain_scenario();
    const Mat x0 = Mat::col_vec({1.0, 0.0});
    const Mat u = macs::feedforward_state(s.agents[0].A, s.agents[0].B, 1, 0, s.leader.A0,
                                          Mat(2, 0), x0, Mat(0, 1));
    // oracle: closed-form 2x2 inverse
    const Mat expected = -1.0 * (inverse_2x2(s.agents[0].B) * ((s.agents[0].A - s.leader.A0) * x0));
    CHECK((u - expected).max_abs() < 1e-12);
}

TEST_CASE("singular input matrix takes the pseudoinverse branch") {
    const Mat b{{1.0, 0.0}, {0.0, 0.0}};
    const Mat xj = Mat::col_vec({0.7, -0.4});

    // mismatch inside range(B): exact cancellation through the pseudoinverse
    const Mat in_range{{0.3, 0.4}, {0.0, 0.0}};
    const Mat a_parent = Mat::identity(2);
    const Mat a_own = a_parent + in_range;
    const Mat u = macs::feedforward_state(a_own, b, 1, 0, a_parent, Mat(2, 0), xj, Mat(0, 1));
    CHECK((b * u + in_range * xj).max_abs() < 1e-12);

    // mismatch leaving range(B): infeasible, names the pair
    const Mat out_of_range{{0.0, 0.0}, {1.0, 0.0}};
    CHECK_THROWS_WITH_AS(macs::feedforward_state(a_parent + out_of_range, b, 1, 0, a_parent,
                                                 Mat(2, 0), xj, Mat(0, 1)),
                         doctest::Contains("pair (1, 0)"), macs::FeedforwardInfeasibleError);
}

TEST_CASE("output feedforward oracle cases") {
    // drift-free agent behind a drift-free leader: zero input
    const Mat u0 = macs::feedforward_output(Mat::identity(2), Mat::identity(2),
                                            Mat::identity(2), 1, 0, Mat::col_vec({3.0, 1.0}),
                                            Mat::identity(2), Mat(2, 0), Mat::identity(2),
                                            Mat::col_vec({-1.0, 2.0}), Mat(0, 1));
    CHECK(u0.max_abs() < 1e-12);

    // scalar chain: u = -(2-1)*0.5
    const Mat u1 = macs::feedforward_output(Mat{{2.0}}, Mat{{1.0}}, Mat{{1.0}}, 1, 0,
                                            Mat::col_vec({0.5}), Mat{{1.0}}, Mat(1, 0),
                                            Mat{{1.0}}, Mat::col_vec({0.9}), Mat(0, 1));
    CHECK(u1(0, 0) == doctest::Approx(-0.5).epsilon(1e-12));

    // homogeneous single integrators: the parent's input passes through
    const Mat c{{1.0, 0.3}, {0.0, 1.0}};
    const Mat b{{0.7, 0.1}, {0.2, 0.9}};
    const Mat uj = Mat::col_vec({0.4, -0.6});
    const Mat u2 = macs::feedforward_output(Mat::identity(2), b, c, 2, 1,
                                            Mat::col_vec({1.0, 1.0}), Mat::identity(2), b, c,
                                            Mat::col_vec({-2.0, 0.5}), uj);
    CHECK((u2 - uj).max_abs() < 1e-10);
}

TEST_CASE("closed-loop assembly") {
    const macs::ValidatedScenario vs = macs::validate(hetero_chain_scenario());
    const macs::ErrorStack st = macs::build_error_stack(vs);
    const macs::DareSolution d = macs::solve_dare(st);
    const auto selectors = macs::build_selectors(vs.parents, vs.block_dim);

    SUBCASE("zero gains leave the uncorrected stack") {
        std::vector<Mat> zero_l(3, Mat(6, 2));
        std::vector<Mat> zero_rows(3, Mat(2, 6));
        const Mat zero_k(6, 6);
        const macs::ClosedLoop loop =
            macs::assemble_closed_loop(st, zero_k, zero_rows, zero_l, selectors);
        CHECK(loop.a_c == macs::block_diag({st.a_tilde, st.a_tilde, st.a_tilde}));
        CHECK(loop.psi.max_abs() == 0.0);
    }

    SUBCASE("reference dimensions and block structure") {
        std::vector<Mat> l(3, Mat(6, 2));
        const macs::ClosedLoop loop =
            macs::assemble_closed_loop(st, d.k, d.k_rows, l, selectors);
        CHECK(loop.a_c.rows() == 18);
        CHECK(loop.a_bar_c.rows() == 24);
        // off-diagonal block (1,2) is -B~_2 K_2
        const Mat b2k2 = st.b_cols[1] * d.k_rows[1];
        CHECK((loop.a_c.block(0, 6, 6, 6) + b2k2).max_abs() < 1e-14);
        // lower-left corner of A_bar_c is zero
        CHECK(loop.a_bar_c.block(6, 0, 18, 6).max_abs() == 0.0);
        CHECK(loop.psi == macs::hstack({-1.0 * (st.b_cols[0] * d.k_rows[0]),
                                        -1.0 * (st.b_cols[1] * d.k_rows[1]),
                                        -1.0 * (st.b_cols[2] * d.k_rows[2])}));
    }

    SUBCASE("dimension mismatch is rejected") {
        std::vector<Mat> bad_l(3, Mat(5, 2));
        CHECK_THROWS_AS(macs::assemble_closed_loop(st, d.k, d.k_rows, bad_l, selectors),
                        macs::ContractError);
    }
}

TEST_CASE("single follower collapses the observer loop") {
    macs::Scenario one = scalar_chain_scenario();
    one.topology = chain_topology(2);
    one.agents.pop_back();
    one.weights.R.pop_back();
    one.initial_states.pop_back();
    const macs::ValidatedScenario vs = macs::validate(one);
    const macs::ErrorStack st = macs::build_error_stack(vs);
    const macs::DareSolution d = macs::solve_dare(st);
    const auto selectors = macs::build_selectors(vs.parents, vs.block_dim);

    // with one agent, B~K = B~_1 K_1, so A_c = A~ - L_1 H_1
    const std::vector<Mat> l{Mat{{0.25}}};
    const macs::ClosedLoop loop = macs::assemble_closed_loop(st, d.k, d.k_rows, l, selectors);
    CHECK(loop.a_c(0, 0) == doctest::Approx(st.a_tilde(0, 0) - 0.25).epsilon(1e-14));
}

TEST_CASE("cost-correction matrices") {
    const macs::ValidatedScenario vs = macs::validate(hetero_chain_scenario());
    const macs::ErrorStack st = macs::build_error_stack(vs);
    const macs::DareSolution d = macs::solve_dare(st);

    SUBCASE("zero gain gives zero corrections") {
        std::vector<Mat> zero_rows(3, Mat(2, 6));
        const Mat psi(6, 18);
        const auto [m1, m2] = macs::compute_m1_m2(st, d.p, Mat(6, 6), zero_rows, psi);
        CHECK(m1.max_abs() == 0.0);
        CHECK(m2.max_abs() == 0.0);
    }

    SUBCASE("scalar case matches hand substitution") {
        macs::Scenario one = scalar_chain_scenario();
        one.topology = chain_topology(2);
        one.agents.pop_back();
        one.weights.R.pop_back();
        one.initial_states.pop_back();
        const macs::ValidatedScenario vs1 = macs::validate(one);
        const macs::ErrorStack st1 = macs::build_error_stack(vs1);
        const macs::DareSolution d1 = macs::solve_dare(st1);
        const double p = d1.p(0, 0);
        const double k = d1.k(0, 0);
        const double b = st1.b_tilde(0, 0);
        const double a = st1.a_tilde(0, 0);
        const Mat psi{{-b * k}};
        const auto [m1, m2] = macs::compute_m1_m2(st1, d1.p, d1.k, d1.k_rows, psi);
        CHECK(m1(0, 0) == doctest::Approx((a + b * k) * p * (-b * k) - k * k).epsilon(1e-12));
        CHECK(m2(0, 0) == doctest::Approx(k * k + b * k * p * b * k).epsilon(1e-12));
    }

    SUBCASE("reference structure: M2 symmetric, M2 - Psi'P Psi block diagonal") {
        const auto selectors = macs::build_selectors(vs.parents, vs.block_dim);
        std::vector<Mat> l(3, Mat(6, 2));
        const macs::ClosedLoop loop = macs::assemble_closed_loop(st, d.k, d.k_rows, l, selectors);
        const auto [m1, m2] = macs::compute_m1_m2(st, d.p, d.k, d.k_rows, loop.psi);
        CHECK(m1.rows() == 6);
        CHECK(m1.cols() == 18);
        CHECK(m2.rows() == 18);
        CHECK((m2 - m2.transposed()).max_abs() < 1e-12);
        const Mat rest = m2 - loop.psi.transposed() * d.p * loop.psi;
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 3; ++j) {
                if (i != j) CHECK(rest.block(i * 6, j * 6, 6, 6).max_abs() < 1e-12);
            }
    }
}

TEST_CASE("full synthesis on the reference scenario") {
    const macs::ValidatedScenario vs = macs::validate(hetero_chain_scenario());
    macs::SynthesisOptions opts;
    opts.observer.sigma_phase_moves = 300;
    opts.observer.rho_phase_moves = 300;
    opts.observer.restarts = 1;
    const macs::SynthesisResult synth = macs::synthesize(vs, opts);
    CHECK(synth.dare.residual < 1e-10);
    CHECK(synth.rho_closed < 1.0);
    CHECK(synth.rho_ac < 1.0);
    CHECK(synth.sigma_max_ac >= synth.rho_ac);
    CHECK(synth.alpha == doctest::Approx(synth.sigma_max_ac * synth.sigma_max_ac));
    // block triangular structure pins the stacked radius
    CHECK(synth.rho_bar ==
          doctest::Approx(std::max(synth.rho_closed, synth.rho_ac)).epsilon(1e-8));
}
