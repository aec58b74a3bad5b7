#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "macs/baseline.hpp"
#include "macs/linalg.hpp"
#include "macs/scenario_io.hpp"
#include "macs/verify.hpp"

namespace fs = std::filesystem;

namespace {

fs::path default_out_dir() {
    if (const char* env = std::getenv("MACS_OUT_DIR")) return fs::path(env);
    return fs::path("macs-out");
}

macs::ValidatedScenario load_and_validate(const std::string& path, std::uint64_t seed_override) {
    macs::Scenario s = macs::load_scenario(path);
    if (seed_override != 0) s.optimizer_seed = seed_override;
    return macs::validate(s);
}

void print_spectral_summary(const macs::SynthesisResult& synth) {
    std::printf("dare_residual   %.3e\n", synth.dare.residual);
    std::printf("rho(A~+B~K)     %.6f\n", synth.rho_closed);
    std::printf("rho(A_c)        %.6f\n", synth.rho_ac);
    std::printf("sigma_max(A_c)  %.6f\n", synth.sigma_max_ac);
    std::printf("alpha           %.6f\n", synth.alpha);
    std::printf("rho(A_bar_c)    %.6f\n", synth.rho_bar);
}

struct RunConfig {
    std::string scenario_path;
    std::string mode = "distributed";
    std::int64_t horizon = -1;  // -1: keep the scenario's horizon
    fs::path out_dir;
    std::uint64_t seed = 0;
    double threshold_scale = 1e-2;
    double baseline_mu = 0.0;      // 0: conservative default rule
    bool baseline_mu_optimize = false;
};

double consensus_threshold(const macs::ValidatedScenario& vs, double scale) {
    return scale * std::max(1.0, macs::norm2(vs.scenario.leader.x0));
}

macs::RunArtifacts emit_run(const fs::path& out_dir, const macs::SimulationTrace& trace,
                            const macs::SynthesisResult& synth, double threshold) {
    const std::string stem = "trace_" + trace.controller;
    macs::RunArtifacts art;
    art.trace_csv_path = (out_dir / (stem + ".csv")).string();
    art.manifest_path = (out_dir / (stem + ".manifest.json")).string();
    art.report_path = (out_dir / ("report_" + trace.controller + ".json")).string();
    macs::write_trace_csv(trace, art.trace_csv_path, art.manifest_path);

    std::vector<std::size_t> s_values{0};
    for (std::size_t s : {std::size_t{5}, std::size_t{10}, std::size_t{20}}) {
        if (s < trace.horizon) s_values.push_back(s);
    }
    const macs::CostReport costs = macs::compute_costs(trace, synth, s_values);
    const macs::ConvergenceMetrics metrics =
        macs::convergence_metrics(trace, synth.rho_bar, threshold);
    macs::write_file_atomic(art.report_path,
                            macs::run_report_to_json(trace, synth, costs, metrics, art));
    std::printf("%-12s consensus_step=%zu reached=%s trace=%s\n", trace.controller.c_str(),
                metrics.consensus_step, metrics.consensus_reached ? "yes" : "no",
                art.trace_csv_path.c_str());
    return art;
}

int cmd_synthesize(const std::string& scenario_path, const fs::path& out_dir,
                   std::uint64_t seed) {
    const macs::ValidatedScenario vs = load_and_validate(scenario_path, seed);
    const macs::SynthesisResult synth = macs::synthesize(vs);
    fs::create_directories(out_dir);
    const fs::path gains_path = out_dir / "synthesis.json";
    macs::write_file_atomic(gains_path, macs::synthesis_to_json(synth));
    print_spectral_summary(synth);
    std::printf("gains           %s\n", gains_path.string().c_str());
    return 0;
}

int cmd_run(const RunConfig& cfg) {
    macs::ValidatedScenario vs = load_and_validate(cfg.scenario_path, cfg.seed);
    if (cfg.horizon >= 0) {
        vs.scenario.horizon = static_cast<std::size_t>(cfg.horizon);
        vs = macs::validate(vs.scenario);
    }
    const macs::SynthesisResult synth = macs::synthesize(vs);
    fs::create_directories(cfg.out_dir);
    macs::write_file_atomic(cfg.out_dir / "synthesis.json", macs::synthesis_to_json(synth));
    const double threshold = consensus_threshold(vs, cfg.threshold_scale);

    macs::SimOptions sim_opts;
    sim_opts.observer_init = vs.scenario.observer_init;

    const bool want_all = cfg.mode == "all";
    std::optional<macs::SimulationTrace> distributed;
    std::optional<macs::SimulationTrace> baseline_trace;
    double baseline_rho = 0.0;

    if (want_all || cfg.mode == "distributed") {
        distributed = macs::run_distributed(vs, synth, sim_opts);
        emit_run(cfg.out_dir, *distributed, synth, threshold);
    }
    if (want_all || cfg.mode == "centralized") {
        const macs::SimulationTrace t = macs::run_centralized(vs, synth, sim_opts);
        emit_run(cfg.out_dir, t, synth, threshold);
    }
    if (want_all || cfg.mode == "baseline") {
        const macs::RegulatorSolution reg = macs::solve_regulator_equations(vs);
        const std::vector<macs::Mat> gains = macs::baseline_feedback_gains(vs);
        macs::LeaderObserverConfig obs_cfg;
        if (cfg.baseline_mu > 0.0) {
            obs_cfg.mu = cfg.baseline_mu;
        } else if (cfg.baseline_mu_optimize) {
            obs_cfg.mu = macs::optimize_coupling_gain(vs);
        } else {
            obs_cfg.mu = macs::default_coupling_gain(vs);
        }
        baseline_trace = macs::run_baseline(vs, reg, obs_cfg, gains, sim_opts);
        baseline_rho =
            macs::spectral_radius(macs::baseline_closed_loop_matrix(vs, reg, gains, obs_cfg.mu));
        std::printf("baseline mu=%.4f rho=%.6f\n", obs_cfg.mu, baseline_rho);
        emit_run(cfg.out_dir, *baseline_trace, synth, threshold);
    }
    if (want_all) {
        const macs::ComparisonReport rep =
            macs::compare(*distributed, synth, *baseline_trace, baseline_rho, threshold);
        const fs::path cmp_path = cfg.out_dir / "comparison.json";
        macs::write_file_atomic(cmp_path, macs::comparison_to_json(rep));
        std::printf("comparison      proposed step %zu vs baseline step %zu (rho %.4f vs %.4f)\n",
                    rep.consensus_step_proposed, rep.consensus_step_baseline, rep.rho_proposed,
                    rep.rho_baseline);
    }
    print_spectral_summary(synth);
    return 0;
}

int cmd_verify(const std::string& scenario_path, bool quick) {
    macs::VerifyOptions vopts;
    if (quick) {
        vopts.penrose_samples = 100;
        vopts.solve_samples = 100;
        vopts.spectrum_samples = 50;
    }
    std::vector<macs::CheckResult> checks = macs::verify_kernel(vopts);
    const macs::ValidatedScenario vs = load_and_validate(scenario_path, 0);
    const std::vector<macs::CheckResult> scen = macs::verify_scenario(vs);
    checks.insert(checks.end(), scen.begin(), scen.end());

    bool ok = true;
    std::printf("%-36s %-6s %-12s %-12s\n", "check", "state", "measured", "tolerance");
    for (const macs::CheckResult& c : checks) {
        std::printf("%-36s %-6s %-12.3e %-12.3e %s\n", c.name.c_str(),
                    c.passed ? "PASS" : "FAIL", c.measured, c.tolerance, c.detail.c_str());
        ok = ok && c.passed;
    }
    std::printf("verify: %s\n", ok ? "all checks passed" : "FAILURES present");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Feedforward + LQ-optimal consensus for heterogeneous discrete-time multi-agent "
        "systems: synthesis, simulation, and verification"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::uint64_t seed = 0;
    fs::path out_dir = default_out_dir();

    auto* synth_cmd = app.add_subcommand("synthesize", "Solve gains and write synthesis.json");
    synth_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    synth_cmd->add_option("--out", out_dir, "Output directory");
    synth_cmd->add_option("--seed", seed, "Override the scenario's optimizer seed");

    RunConfig run_cfg;
    auto* run_cmd = app.add_subcommand("run", "Simulate and export traces and reports");
    run_cmd->add_option("scenario", run_cfg.scenario_path, "Scenario JSON file")->required();
    run_cmd->add_option("--mode", run_cfg.mode, "distributed|centralized|baseline|all")
        ->check(CLI::IsMember({"distributed", "centralized", "baseline", "all"}));
    run_cmd->add_option("--horizon", run_cfg.horizon, "Override the scenario horizon")
        ->check(CLI::NonNegativeNumber);
    run_cmd->add_option("--out", run_cfg.out_dir, "Output directory");
    run_cmd->add_option("--seed", run_cfg.seed, "Override the scenario's optimizer seed");
    run_cmd->add_option("--threshold-scale", run_cfg.threshold_scale,
                        "Consensus threshold as a fraction of max(1, ||x0||)");
    run_cmd->add_option("--baseline-mu", run_cfg.baseline_mu,
                        "Baseline coupling gain (default: conservative rule)");
    run_cmd->add_flag("--baseline-mu-optimize", run_cfg.baseline_mu_optimize,
                      "Tune the baseline coupling by topology-aware 1-D search");

    bool quick = false;
    auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suite on a scenario");
    verify_cmd->add_option("scenario", scenario_path, "Scenario JSON file")->required();
    verify_cmd->add_flag("--quick", quick, "Smaller random sample counts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            return cmd_synthesize(scenario_path, out_dir, seed);
        }
        if (run_cmd->parsed()) {
            if (run_cfg.out_dir.empty()) run_cfg.out_dir = default_out_dir();
            return cmd_run(run_cfg);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(scenario_path, quick);
        }
    } catch (const macs::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 1;
    }
    return 0;
}
