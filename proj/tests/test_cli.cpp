#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "macs/scenario_io.hpp"
#include "test_scenarios.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const fs::path out = fs::temp_directory_path() / "macs_cli_test_output.txt";
    const std::string cmd =
        std::string(MACS_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream in(out);
    std::ostringstream buf;
    buf << in.rdbuf();
    return {WEXITSTATUS(rc), buf.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scenario(const char* name) { return fs::path(MACS_SCENARIO_DIR) / name; }

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("synthesize emits gains and a spectral summary") {
    const fs::path out = fresh_dir("macs_cli_synth");
    const CmdResult r =
        run_cli("synthesize " + scenario("hetero_chain.json").string() + " --out " + out.string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("rho(A_c)") != std::string::npos);
    CHECK(fs::exists(out / "synthesis.json"));
    const auto j = nlohmann::json::parse(slurp(out / "synthesis.json"));
    CHECK(j.at("spectral").at("rho_Ac").get<double>() < 0.85);
    CHECK(j.at("P").size() == 6);
    fs::remove_all(out);
}

TEST_CASE("run --mode all emits traces, reports and the comparison") {
    const fs::path out = fresh_dir("macs_cli_all");
    const CmdResult r = run_cli("run " + scenario("hetero_chain.json").string() +
                                " --mode all --out " + out.string());
    CHECK(r.exit_code == 0);
    for (const char* f :
         {"trace_distributed.csv", "trace_distributed.manifest.json",
          "report_distributed.json", "trace_centralized.csv", "report_centralized.json",
          "trace_baseline.csv", "report_baseline.json", "comparison.json"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
    const auto cmp = nlohmann::json::parse(slurp(out / "comparison.json"));
    CHECK(cmp.at("consensus_step_proposed").get<std::size_t>() <
          cmp.at("consensus_step_baseline").get<std::size_t>());
    CHECK(cmp.at("rho_proposed").get<double>() < cmp.at("rho_baseline").get<double>());
    fs::remove_all(out);
}

TEST_CASE("identical scenario and seed produce bit-identical outputs") {
    const fs::path a = fresh_dir("macs_cli_det_a");
    const fs::path b = fresh_dir("macs_cli_det_b");
    const std::string base = "run " + scenario("hetero_chain.json").string() + " --mode distributed";
    CHECK(run_cli(base + " --out " + a.string()).exit_code == 0);
    CHECK(run_cli(base + " --out " + b.string()).exit_code == 0);
    CHECK(slurp(a / "trace_distributed.csv") == slurp(b / "trace_distributed.csv"));
    CHECK(slurp(a / "report_distributed.json") == slurp(b / "report_distributed.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("centralized report carries the Riccati-value cost identity") {
    const fs::path out = fresh_dir("macs_cli_central");
    const CmdResult r = run_cli("run " + scenario("hetero_chain.json").string() +
                                " --mode centralized --out " + out.string());
    CHECK(r.exit_code == 0);
    const auto rep = nlohmann::json::parse(slurp(out / "report_centralized.json"));
    const auto& e0 = rep.at("costs").at("entries")[0];
    const double gap = std::abs(e0.at("j_sim").get<double>() - e0.at("j_star").get<double>());
    CHECK(gap <= 1e-6 + rep.at("costs").at("truncation_bound").get<double>());
    fs::remove_all(out);
}

TEST_CASE("horizon override changes the trace length") {
    const fs::path out = fresh_dir("macs_cli_h0");
    const CmdResult r = run_cli("run " + scenario("hetero_chain.json").string() +
                                " --mode distributed --horizon 3 --out " + out.string());
    CHECK(r.exit_code == 0);
    const std::string csv = slurp(out / "trace_distributed.csv");
    std::size_t lines = 0;
    for (char c : csv) lines += c == '\n';
    CHECK(lines == 5);  // header + 4 rows
    fs::remove_all(out);
}

TEST_CASE("malformed JSON exits nonzero with a parse message") {
    const fs::path bad = fs::temp_directory_path() / "macs_bad.json";
    {
        std::ofstream f(bad);
        f << "{ definitely not json";
    }
    const CmdResult r = run_cli("run " + bad.string());
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("error:") != std::string::npos);
    fs::remove(bad);
}

TEST_CASE("infeasible feedforward names the agent pair") {
    // B_1 singular and the mismatch against the rotation leader leaves
    // range(B_1)
    macs::Scenario s = macs::testing::hetero_chain_scenario();
    s.agents[0].B = macs::Mat{{1.0, 0.0}, {0.0, 0.0}};
    const fs::path bad = fs::temp_directory_path() / "macs_infeasible.json";
    macs::write_file_atomic(bad, macs::scenario_to_json(s));
    const CmdResult r = run_cli("synthesize " + bad.string());
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("pair (1, 0)") != std::string::npos);
    CHECK(r.output.find("range(B)") != std::string::npos);
    fs::remove(bad);
}

TEST_CASE("verify --quick passes on the homogeneous scenario") {
    const CmdResult r = run_cli("verify " + scenario("homogeneous.json").string() + " --quick");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("all checks passed") != std::string::npos);
}

TEST_CASE("uncontrollable unstable pair fails cleanly") {
    // leader and agent share diag(2, 2); B reaches only the first state, so
    // the unstable second mode is uncontrollable and the Riccati iteration
    // diverges (the mismatch is zero, keeping the feedforward feasible)
    macs::Scenario s{macs::testing::chain_topology(2),
                     {{macs::Mat::diag({2.0, 2.0}), macs::Mat{{1.0}, {0.0}}, {}}},
                     {macs::Mat::diag({2.0, 2.0}), {}, macs::Mat::col_vec({1.0, 1.0})},
                     {macs::Mat::identity(2), {macs::Mat::identity(1)}},
                     {macs::Mat::col_vec({0.0, 1.0})},
                     10,
                     macs::ConsensusMode::State};
    const fs::path bad = fs::temp_directory_path() / "macs_uncontrollable.json";
    macs::write_file_atomic(bad, macs::scenario_to_json(s));
    const CmdResult r = run_cli("verify " + bad.string() + " --quick");
    CHECK(r.exit_code != 0);
    CHECK(r.output.find("solve_dare") != std::string::npos);
    fs::remove(bad);
}

TEST_CASE("horizon zero gives a single-row trace and zero cost") {
    const fs::path out = fresh_dir("macs_cli_hzero");
    const CmdResult r = run_cli("run " + scenario("hetero_chain.json").string() +
                                " --mode distributed --horizon 0 --out " + out.string());
    CHECK(r.exit_code == 0);
    const std::string csv = slurp(out / "trace_distributed.csv");
    std::size_t lines = 0;
    for (char c2 : csv) lines += c2 == '\n';
    CHECK(lines == 2);  // header + initial state
    const auto rep = nlohmann::json::parse(slurp(out / "report_distributed.json"));
    CHECK(rep.at("costs").at("entries")[0].at("j_sim").get<double>() == 0.0);
    fs::remove_all(out);
}
