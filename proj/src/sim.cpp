#include "macs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "macs/errors.hpp"
#include "macs/linalg.hpp"

namespace macs {

Mat SimulationTrace::observer_error(std::size_t k, std::size_t i) const {
    return stacked_error[k] - estimates[k][i];
}

Mat SimulationTrace::stacked_observer_error(std::size_t k) const {
    std::vector<Mat> parts;
    parts.reserve(estimates[k].size());
    for (std::size_t i = 0; i < estimates[k].size(); ++i) parts.push_back(observer_error(k, i));
    return vstack(parts);
}

double SimulationTrace::tracking_error(std::size_t k) const {
    double worst = 0.0;
    if (mode == ConsensusMode::State) {
        for (const Mat& x : agent_states[k]) worst = std::max(worst, norm2(x - leader_states[k]));
    } else {
        for (const Mat& y : agent_outputs[k]) worst = std::max(worst, norm2(y - leader_outputs[k]));
    }
    return worst;
}

std::vector<Mat> step_observers(const SynthesisResult& synth, const std::vector<Mat>& estimates,
                                const std::vector<Mat>& measurements,
                                const std::vector<Mat>& feedback_controls) {
    const ErrorStack& stack = synth.stack;
    const std::size_t n = stack.follower_count();
    if (estimates.size() != n || measurements.size() != n || feedback_controls.size() != n) {
        throw ContractError("step_observers: need one estimate, measurement and control per agent");
    }
    std::vector<Mat> next;
    next.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Mat e = stack.a_tilde * estimates[i];
        e += stack.b_cols[i] * feedback_controls[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            e += stack.b_cols[j] * (synth.dare.k_rows[j] * estimates[i]);
        }
        e += synth.l_gains[i] * (measurements[i] - synth.selectors[i] * estimates[i]);
        next.push_back(std::move(e));
    }
    return next;
}

namespace {

// Everything an agent's controller may read at one step. run_* builds one
// per agent; the control computation never sees the global state.
struct LocalView {
    const Mat& own_state;
    const Mat& parent_state;
    const Mat& parent_input;  // 0x1 when the parent is the leader
    const Mat& estimate;      // 0x1 when the run keeps no observers
};

struct StepRecord {
    std::vector<Mat> u_ff, u_fb, u_total;
};

class Plant {
  public:
    explicit Plant(const ValidatedScenario& vs)
        : vs_(vs), x0_(vs.scenario.leader.x0), states_(vs.scenario.initial_states) {}

    const Mat& leader_state() const { return x0_; }
    const std::vector<Mat>& states() const { return states_; }

    Mat output(std::size_t i) const {  // follower output, 1-based index
        return *vs_.agent(i).C * states_[i - 1];
    }
    Mat leader_output() const { return *vs_.scenario.leader.C0 * x0_; }

    /// Stacked pairwise error against each follower's parent.
    Mat stacked_error() const {
        std::vector<Mat> blocks;
        const std::size_t n = vs_.follower_count();
        blocks.reserve(n);
        for (std::size_t i = 1; i <= n; ++i) {
            const std::size_t parent = vs_.parents.parent_of(i);
            if (vs_.scenario.mode == ConsensusMode::State) {
                const Mat& xp = parent == 0 ? x0_ : states_[parent - 1];
                blocks.push_back(states_[i - 1] - xp);
            } else {
                const Mat yp = parent == 0 ? leader_output() : output(parent);
                blocks.push_back(output(i) - yp);
            }
        }
        return vstack(blocks);
    }

    void advance(const std::vector<Mat>& controls) {
        for (std::size_t i = 1; i <= vs_.follower_count(); ++i) {
            const AgentModel& m = vs_.agent(i);
            states_[i - 1] = m.A * states_[i - 1] + m.B * controls[i - 1];
        }
        x0_ = vs_.scenario.leader.A0 * x0_;
    }

  private:
    const ValidatedScenario& vs_;
    Mat x0_;
    std::vector<Mat> states_;
};

Mat agent_feedforward(const ValidatedScenario& vs, std::size_t i, const LocalView& view) {
    const AgentModel& own = vs.agent(i);
    const std::size_t parent = vs.parents.parent_of(i);
    const bool leader_parent = parent == 0;
    const Mat& a_parent = leader_parent ? vs.scenario.leader.A0 : vs.agent(parent).A;
    const Mat b_leader(vs.leader_dim, 0);  // B_0 = 0
    const Mat& b_parent = leader_parent ? b_leader : vs.agent(parent).B;

    if (vs.scenario.mode == ConsensusMode::State) {
        return feedforward_state(own.A, own.B, i, parent, a_parent, b_parent,
                                 view.parent_state, view.parent_input);
    }
    const Mat& c_parent = leader_parent ? *vs.scenario.leader.C0 : *vs.agent(parent).C;
    return feedforward_output(own.A, own.B, *own.C, i, parent, view.own_state, a_parent,
                              b_parent, c_parent, view.parent_state, view.parent_input);
}

std::vector<Mat> initial_estimates(const ValidatedScenario& vs, const Mat& e0,
                                   const SimOptions& opts) {
    const std::size_t n = vs.follower_count();
    std::vector<Mat> est;
    est.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (opts.observer_init) {
            case ObserverInit::Zero:
                est.push_back(Mat(e0.rows(), 1));
                break;
            case ObserverInit::True:
                est.push_back(e0);
                break;
            case ObserverInit::Perturbed: {
                std::mt19937_64 rng(opts.perturb_seed + i + 1);
                std::normal_distribution<double> g(0.0, 1.0);
                Mat d(e0.rows(), 1);
                for (std::size_t r = 0; r < e0.rows(); ++r) d(r, 0) = g(rng);
                const double dn = norm2(d);
                if (dn > 0.0) d *= (opts.perturb_scale * std::max(norm2(e0), 1.0) / dn);
                est.push_back(e0 + d);
                break;
            }
        }
    }
    return est;
}

enum class FeedbackSource { Observer, TrueError };

SimulationTrace run_loop(const ValidatedScenario& vs, const SynthesisResult& synth,
                         const SimOptions& opts, FeedbackSource source) {
    const bool observers = source == FeedbackSource::Observer;
    if (opts.feedback_enabled) {
        const double rho = observers ? synth.rho_bar : synth.rho_closed;
        if (rho >= 1.0) {
            throw StabilityError("simulation refused: closed-loop spectral radius " +
                                 std::to_string(rho) + " >= 1");
        }
    }

    const std::size_t n = vs.follower_count();
    const std::size_t horizon =
        opts.horizon_override > 0 ? opts.horizon_override : vs.scenario.horizon;
    const auto topo_order = vs.parents.topological_order();

    SimulationTrace trace;
    trace.mode = vs.scenario.mode;
    trace.controller = observers ? "distributed" : "centralized";
    trace.horizon = horizon;
    trace.observer_kind = observers ? "global-error" : "";

    Plant plant(vs);
    std::vector<Mat> estimates;
    if (observers) {
        estimates = initial_estimates(vs, plant.stacked_error(), opts);
    }
    const Mat empty_vec(0, 1);

    for (std::size_t k = 0; k <= horizon; ++k) {
        const Mat e = plant.stacked_error();
        trace.leader_states.push_back(plant.leader_state());
        trace.agent_states.push_back(plant.states());
        trace.stacked_error.push_back(e);
        if (trace.mode == ConsensusMode::Output) {
            trace.leader_outputs.push_back(plant.leader_output());
            std::vector<Mat> outs;
            for (std::size_t i = 1; i <= n; ++i) outs.push_back(plant.output(i));
            trace.agent_outputs.push_back(std::move(outs));
        }
        if (observers) trace.estimates.push_back(estimates);
        if (k == horizon) break;

        std::vector<Mat> measurements;
        measurements.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            measurements.push_back(synth.selectors[i] * e);
        }

        StepRecord rec;
        rec.u_ff.resize(n);
        rec.u_fb.resize(n);
        rec.u_total.resize(n);
        for (std::size_t i : topo_order) {
            const std::size_t parent = vs.parents.parent_of(i);
            const Mat& parent_state =
                parent == 0 ? plant.leader_state() : plant.states()[parent - 1];
            const Mat& parent_input = parent == 0 ? empty_vec : rec.u_total[parent - 1];
            const LocalView view{plant.states()[i - 1], parent_state, parent_input,
                                 observers ? estimates[i - 1] : empty_vec};

            rec.u_ff[i - 1] = agent_feedforward(vs, i, view);
            if (!opts.feedback_enabled) {
                rec.u_fb[i - 1] = Mat(synth.stack.input_dims[i - 1], 1);
            } else if (observers) {
                rec.u_fb[i - 1] = synth.dare.k_rows[i - 1] * view.estimate;
            } else {
                rec.u_fb[i - 1] = synth.dare.k_rows[i - 1] * e;
            }
            rec.u_total[i - 1] = rec.u_ff[i - 1] + rec.u_fb[i - 1];
        }

        trace.u_ff.push_back(rec.u_ff);
        trace.u_fb.push_back(rec.u_fb);
        {
            const Mat ubar = vstack(rec.u_fb);
            trace.stage_costs.push_back(dot(e, synth.stack.q_cal * e) +
                                        dot(ubar, synth.stack.r_cal * ubar));
        }
        plant.advance(rec.u_total);
        if (observers) {
            estimates = step_observers(synth, estimates, measurements, rec.u_fb);
        }
    }
    return trace;
}

}  // namespace

SimulationTrace run_distributed(const ValidatedScenario& vs, const SynthesisResult& synth,
                                const SimOptions& opts) {
    return run_loop(vs, synth, opts, FeedbackSource::Observer);
}

SimulationTrace run_centralized(const ValidatedScenario& vs, const SynthesisResult& synth,
                                const SimOptions& opts) {
    return run_loop(vs, synth, opts, FeedbackSource::TrueError);
}

CostReport compute_costs(const SimulationTrace& trace, const SynthesisResult& synth,
                         const std::vector<std::size_t>& s_values) {
    const std::size_t h = trace.horizon;
    for (std::size_t s : s_values) {
        if (s > h) {
            throw TraceRangeError("compute_costs: start index " + std::to_string(s) +
                                  " beyond horizon " + std::to_string(h));
        }
    }
    const bool observers = trace.observer_kind == "global-error" && !trace.estimates.empty();

    CostReport report;
    report.stage_costs.reserve(h);
    report.correction_terms.reserve(h);
    for (std::size_t k = 0; k < h; ++k) {
        const Mat& e = trace.stacked_error[k];
        const Mat ubar = vstack(trace.u_fb[k]);
        const double stage = dot(e, synth.stack.q_cal * e) + dot(ubar, synth.stack.r_cal * ubar);
        report.stage_costs.push_back(stage);

        double corr = 0.0;
        if (observers) {
            const Mat et = trace.stacked_observer_error(k);
            corr = 2.0 * dot(e, synth.m1 * et) + dot(et, synth.m2 * et);
        }
        report.correction_terms.push_back(corr);
    }

    for (std::size_t s : s_values) {
        CostEntry entry;
        entry.s = s;
        for (std::size_t k = s; k < h; ++k) {
            entry.j_sim += report.stage_costs[k];
            entry.delta_j += report.correction_terms[k];
        }
        const Mat& es = trace.stacked_error[s];
        entry.j_star = dot(es, synth.dare.p * es);
        entry.j_star_distributed = entry.j_star + entry.delta_j;
        if (!(entry.j_sim >= 0.0) || !std::isfinite(entry.j_sim)) {
            throw ContractError("compute_costs: simulated cost must be finite and nonnegative");
        }
        report.entries.push_back(entry);
    }

    const Mat& eh = trace.stacked_error[h];
    report.boundary_term = dot(eh, synth.dare.p * eh);

    double z2 = dot(eh, eh);
    if (observers) {
        const Mat et = trace.stacked_observer_error(h);
        z2 += dot(et, et);
    }
    const double r = std::min(std::max(synth.rho_bar, 0.0), 0.999);
    const double gain = 1.0 / (1.0 - r * r);
    const double m_scale =
        max_singular_value(synth.dare.p) + (observers ? max_singular_value(synth.m2) +
                                                            2.0 * max_singular_value(synth.m1)
                                                      : 0.0);
    report.truncation_bound = report.boundary_term + m_scale * z2 * gain;
    return report;
}

ConvergenceMetrics convergence_metrics(const SimulationTrace& trace, double rho_bar,
                                       double threshold) {
    ConvergenceMetrics m;
    m.threshold = threshold;
    const std::size_t steps = trace.steps();
    const bool observers = trace.observer_kind == "global-error" && !trace.estimates.empty();

    for (std::size_t k = 0; k < steps; ++k) {
        m.tracking_errors.push_back(trace.tracking_error(k));
        double z2 = dot(trace.stacked_error[k], trace.stacked_error[k]);
        if (observers) {
            const Mat et = trace.stacked_observer_error(k);
            z2 += dot(et, et);
        }
        m.z_norms.push_back(std::sqrt(z2));
    }

    // First step from which the tracking error stays below threshold.
    std::size_t last_above = 0;
    bool any_above = false;
    for (std::size_t k = 0; k < steps; ++k) {
        if (m.tracking_errors[k] > threshold) {
            last_above = k;
            any_above = true;
        }
    }
    if (!any_above) {
        m.consensus_step = 0;
        m.consensus_reached = true;
    } else if (last_above + 1 < steps) {
        m.consensus_step = last_above + 1;
        m.consensus_reached = true;
    } else {
        m.consensus_step = steps;
        m.consensus_reached = false;
    }

    // Geometric decay fitted after the transient peak, stopping before the
    // trajectory hits round-off level.
    const double z0 = m.z_norms.empty() ? 0.0 : m.z_norms.front();
    std::size_t peak = 0;
    for (std::size_t k = 0; k < steps; ++k) {
        if (m.z_norms[k] > m.z_norms[peak]) peak = k;
    }
    const double floor = std::max(m.z_norms[peak] * 1e-12, 1e-290);
    std::size_t last = peak;
    for (std::size_t k = peak; k < steps; ++k) {
        if (m.z_norms[k] >= floor) last = k;
    }
    if (last > peak && m.z_norms[peak] > 0.0) {
        m.decay_rate = std::pow(m.z_norms[last] / m.z_norms[peak],
                                1.0 / static_cast<double>(last - peak));
    }
    if (z0 > 0.0 && rho_bar > 0.0) {
        double c = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            c = std::max(c, m.z_norms[k] / (std::pow(rho_bar, static_cast<double>(k)) * z0));
        }
        m.fitted_c = c;
    }
    return m;
}

}  // namespace macs
