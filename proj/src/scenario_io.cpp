#include "macs/scenario_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace macs {

namespace {

using nlohmann::json;

Mat mat_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw ParseError(what + ": expected a non-empty array of rows");
    }
    const std::size_t rows = j.size();
    const std::size_t cols = j.front().size();
    std::vector<double> entries;
    entries.reserve(rows * cols);
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != cols) {
            throw ParseError(what + ": ragged rows");
        }
        for (const auto& v : row) {
            if (!v.is_number()) throw ParseError(what + ": non-numeric entry");
            entries.push_back(v.get<double>());
        }
    }
    return Mat(rows, cols, std::move(entries));
}

Mat vec_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ParseError(what + ": expected a non-empty array");
    std::vector<double> entries;
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(what + ": non-numeric entry");
        entries.push_back(v.get<double>());
    }
    return Mat::col_vec(entries);
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vec_to_json(const Mat& v) {
    json out = json::array();
    for (std::size_t r = 0; r < v.rows(); ++r) out.push_back(v(r, 0));
    return out;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
    }
    try {
        const std::string mode_str = j.at("mode").get<std::string>();
        ConsensusMode mode;
        if (mode_str == "state" || mode_str == "state-consensus") {
            mode = ConsensusMode::State;
        } else if (mode_str == "output" || mode_str == "output-consensus") {
            mode = ConsensusMode::Output;
        } else {
            throw ParseError("scenario: unknown mode '" + mode_str + "'");
        }

        const json& jt = j.at("topology");
        const std::size_t node_count = jt.at("node_count").get<std::size_t>();
        std::vector<Topology::Edge> edges;
        for (const auto& je : jt.at("edges")) {
            if (!je.is_array() || je.size() < 2 || je.size() > 3) {
                throw ParseError("topology: each edge is [from, to] or [from, to, weight]");
            }
            Topology::Edge e{je[0].get<std::size_t>(), je[1].get<std::size_t>(),
                             je.size() == 3 ? je[2].get<double>() : 1.0};
            edges.push_back(e);
        }
        Topology topology = Topology::from_edges(node_count, edges);

        std::vector<AgentModel> agents;
        for (std::size_t i = 0; i < j.at("agents").size(); ++i) {
            const json& ja = j.at("agents")[i];
            AgentModel a;
            a.A = mat_from_json(ja.at("A"), "agent " + std::to_string(i + 1) + " A");
            a.B = mat_from_json(ja.at("B"), "agent " + std::to_string(i + 1) + " B");
            if (ja.contains("C")) {
                a.C = mat_from_json(ja.at("C"), "agent " + std::to_string(i + 1) + " C");
            }
            agents.push_back(std::move(a));
        }

        const json& jl = j.at("leader");
        LeaderModel leader;
        leader.A0 = mat_from_json(jl.at("A0"), "leader A0");
        if (jl.contains("C0")) leader.C0 = mat_from_json(jl.at("C0"), "leader C0");
        leader.x0 = vec_from_json(jl.at("x0"), "leader x0");

        Weights weights;
        weights.Q = mat_from_json(j.at("weights").at("Q"), "weights Q");
        for (std::size_t i = 0; i < j.at("weights").at("R").size(); ++i) {
            weights.R.push_back(mat_from_json(j.at("weights").at("R")[i],
                                              "weights R[" + std::to_string(i) + "]"));
        }

        std::vector<Mat> initial_states;
        for (std::size_t i = 0; i < j.at("initial_states").size(); ++i) {
            initial_states.push_back(vec_from_json(j.at("initial_states")[i],
                                                   "initial_states[" + std::to_string(i) + "]"));
        }

        Scenario s{std::move(topology), std::move(agents),    std::move(leader),
                   std::move(weights),  std::move(initial_states),
                   j.at("horizon").get<std::size_t>(),        mode};
        if (j.contains("observer_init")) {
            const std::string oi = j.at("observer_init").get<std::string>();
            if (oi == "zero") {
                s.observer_init = ObserverInit::Zero;
            } else if (oi == "true") {
                s.observer_init = ObserverInit::True;
            } else if (oi == "perturbed") {
                s.observer_init = ObserverInit::Perturbed;
            } else {
                throw ParseError("scenario: unknown observer_init '" + oi + "'");
            }
        }
        if (j.contains("optimizer_seed")) {
            s.optimizer_seed = j.at("optimizer_seed").get<std::uint64_t>();
        }
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["mode"] = s.mode == ConsensusMode::State ? "state" : "output";
    j["topology"]["node_count"] = s.topology.node_count();
    json edges = json::array();
    for (std::size_t from = 0; from < s.topology.node_count(); ++from) {
        for (std::size_t to = 0; to < s.topology.node_count(); ++to) {
            const double w = s.topology.weight(from, to);
            if (w != 0.0) edges.push_back(json::array({from, to, w}));
        }
    }
    j["topology"]["edges"] = std::move(edges);
    j["agents"] = json::array();
    for (const AgentModel& a : s.agents) {
        json ja;
        ja["A"] = mat_to_json(a.A);
        ja["B"] = mat_to_json(a.B);
        if (a.C) ja["C"] = mat_to_json(*a.C);
        j["agents"].push_back(std::move(ja));
    }
    j["leader"]["A0"] = mat_to_json(s.leader.A0);
    if (s.leader.C0) j["leader"]["C0"] = mat_to_json(*s.leader.C0);
    j["leader"]["x0"] = vec_to_json(s.leader.x0);
    j["weights"]["Q"] = mat_to_json(s.weights.Q);
    j["weights"]["R"] = json::array();
    for (const Mat& r : s.weights.R) j["weights"]["R"].push_back(mat_to_json(r));
    j["initial_states"] = json::array();
    for (const Mat& x : s.initial_states) j["initial_states"].push_back(vec_to_json(x));
    j["horizon"] = s.horizon;
    switch (s.observer_init) {
        case ObserverInit::Zero: j["observer_init"] = "zero"; break;
        case ObserverInit::True: j["observer_init"] = "true"; break;
        case ObserverInit::Perturbed: j["observer_init"] = "perturbed"; break;
    }
    j["optimizer_seed"] = s.optimizer_seed;
    return j.dump(2) + "\n";
}

std::string synthesis_to_json(const SynthesisResult& synth) {
    json j;
    j["mode"] = synth.mode == ConsensusMode::State ? "state" : "output";
    j["P"] = mat_to_json(synth.dare.p);
    j["K"] = mat_to_json(synth.dare.k);
    j["K_blocks"] = json::array();
    for (const Mat& k : synth.dare.k_blocks) j["K_blocks"].push_back(mat_to_json(k));
    j["L"] = json::array();
    for (const Mat& l : synth.l_gains) j["L"].push_back(mat_to_json(l));
    j["selectors"] = json::array();
    for (const Mat& h : synth.selectors) j["selectors"].push_back(mat_to_json(h));
    j["spectral"]["dare_residual"] = synth.dare.residual;
    j["spectral"]["rho_closed"] = synth.rho_closed;
    j["spectral"]["rho_Ac"] = synth.rho_ac;
    j["spectral"]["rho_bar"] = synth.rho_bar;
    j["spectral"]["sigma_max_Ac"] = synth.sigma_max_ac;
    j["spectral"]["alpha"] = synth.alpha;
    j["observer_objective_evals"] = synth.observer_evals;
    return j.dump(2) + "\n";
}

void write_trace_csv(const SimulationTrace& trace, const std::filesystem::path& csv_path,
                     const std::filesystem::path& manifest_path) {
    const std::size_t steps = trace.steps();
    const std::size_t n = steps == 0 ? 0 : trace.agent_states.front().size();

    std::vector<std::string> columns;
    columns.push_back("step");
    const std::size_t p = trace.leader_states.front().rows();
    for (std::size_t d = 0; d < p; ++d) columns.push_back("x0_" + std::to_string(d));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < trace.agent_states.front()[i].rows(); ++d)
            columns.push_back("x" + std::to_string(i + 1) + "_" + std::to_string(d));
    }
    if (trace.mode == ConsensusMode::Output) {
        for (std::size_t d = 0; d < trace.leader_outputs.front().rows(); ++d)
            columns.push_back("y0_" + std::to_string(d));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < trace.agent_outputs.front()[i].rows(); ++d)
                columns.push_back("y" + std::to_string(i + 1) + "_" + std::to_string(d));
        }
    }
    for (std::size_t d = 0; d < trace.stacked_error.front().rows(); ++d)
        columns.push_back("E_" + std::to_string(d));
    const bool has_controls = !trace.u_ff.empty();
    if (has_controls) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < trace.u_ff.front()[i].rows(); ++d)
                columns.push_back("u_ff" + std::to_string(i + 1) + "_" + std::to_string(d));
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < trace.u_fb.front()[i].rows(); ++d)
                columns.push_back("u_fb" + std::to_string(i + 1) + "_" + std::to_string(d));
        }
    }
    const bool has_estimates = !trace.estimates.empty();
    if (has_estimates) {
        const std::string prefix = trace.observer_kind == "leader-state" ? "eta" : "Ehat";
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t d = 0; d < trace.estimates.front()[i].rows(); ++d)
                columns.push_back(prefix + std::to_string(i + 1) + "_" + std::to_string(d));
        }
    }
    columns.push_back("stage_cost");
    columns.push_back("tracking_error");

    std::ostringstream csv;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        csv << (c == 0 ? "" : ",") << columns[c];
    }
    csv << "\n";

    auto emit_vec = [&csv](const Mat& v) {
        for (std::size_t r = 0; r < v.rows(); ++r) {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof(buf), v(r, 0));
            csv << ',' << std::string_view(buf, res.ptr - buf);
        }
    };

    for (std::size_t k = 0; k < steps; ++k) {
        csv << k;
        emit_vec(trace.leader_states[k]);
        for (std::size_t i = 0; i < n; ++i) emit_vec(trace.agent_states[k][i]);
        if (trace.mode == ConsensusMode::Output) {
            emit_vec(trace.leader_outputs[k]);
            for (std::size_t i = 0; i < n; ++i) emit_vec(trace.agent_outputs[k][i]);
        }
        emit_vec(trace.stacked_error[k]);
        if (has_controls) {
            const bool in_range = k < trace.u_ff.size();
            for (std::size_t i = 0; i < n; ++i) {
                if (in_range) {
                    emit_vec(trace.u_ff[k][i]);
                } else {
                    emit_vec(Mat(trace.u_ff.front()[i].rows(), 1));
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                if (in_range) {
                    emit_vec(trace.u_fb[k][i]);
                } else {
                    emit_vec(Mat(trace.u_fb.front()[i].rows(), 1));
                }
            }
        }
        if (has_estimates) {
            for (std::size_t i = 0; i < n; ++i) emit_vec(trace.estimates[k][i]);
        }
        csv << ',' << format_double(k < trace.stage_costs.size() ? trace.stage_costs[k] : 0.0);
        csv << ',' << format_double(trace.tracking_error(k));
        csv << "\n";
    }
    write_file_atomic(csv_path, csv.str());

    json manifest;
    manifest["controller"] = trace.controller;
    manifest["mode"] = trace.mode == ConsensusMode::State ? "state" : "output";
    manifest["horizon"] = trace.horizon;
    manifest["observer_kind"] = trace.observer_kind;
    manifest["columns"] = columns;
    manifest["notes"] = json::array(
        {"controls at step k drive the transition to k+1; the final row's control columns "
         "are zero-filled",
         "E is the stacked pairwise error against each agent's parent, in agent order"});
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
}

std::string run_report_to_json(const SimulationTrace& trace, const SynthesisResult& synth,
                               const CostReport& costs, const ConvergenceMetrics& metrics,
                               const RunArtifacts& artifacts) {
    json j;
    j["controller"] = trace.controller;
    j["horizon"] = trace.horizon;
    j["synthesis"]["dare_residual"] = synth.dare.residual;
    j["synthesis"]["rho_closed"] = synth.rho_closed;
    j["synthesis"]["rho_Ac"] = synth.rho_ac;
    j["synthesis"]["rho_bar"] = synth.rho_bar;
    j["synthesis"]["sigma_max_Ac"] = synth.sigma_max_ac;
    j["synthesis"]["alpha"] = synth.alpha;
    j["convergence"]["threshold"] = metrics.threshold;
    j["convergence"]["consensus_step"] = metrics.consensus_step;
    j["convergence"]["consensus_reached"] = metrics.consensus_reached;
    j["convergence"]["decay_rate"] = metrics.decay_rate;
    j["convergence"]["fitted_c"] = metrics.fitted_c;
    j["costs"]["truncation_bound"] = costs.truncation_bound;
    j["costs"]["boundary_term"] = costs.boundary_term;
    j["costs"]["entries"] = json::array();
    for (const CostEntry& e : costs.entries) {
        json je;
        je["s"] = e.s;
        je["j_sim"] = e.j_sim;
        je["j_star"] = e.j_star;
        je["delta_j"] = e.delta_j;
        je["j_star_distributed"] = e.j_star_distributed;
        j["costs"]["entries"].push_back(std::move(je));
    }
    // names only: the files sit beside the report, and embedding directories
    // would break the bit-identical-reports guarantee across output dirs
    j["files"]["trace_csv"] = std::filesystem::path(artifacts.trace_csv_path).filename().string();
    j["files"]["manifest"] = std::filesystem::path(artifacts.manifest_path).filename().string();
    return j.dump(2) + "\n";
}

std::string comparison_to_json(const ComparisonReport& rep) {
    json j;
    j["rho_proposed"] = rep.rho_proposed;
    j["rho_baseline"] = rep.rho_baseline;
    j["threshold"] = rep.threshold;
    j["consensus_step_proposed"] = rep.consensus_step_proposed;
    j["consensus_step_baseline"] = rep.consensus_step_baseline;
    j["proposed_reached"] = rep.proposed_reached;
    j["baseline_reached"] = rep.baseline_reached;
    j["step_ratio"] = rep.step_ratio;
    j["proposed_errors"] = rep.proposed_errors;
    j["baseline_errors"] = rep.baseline_errors;
    return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace macs
