#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "macs/errors.hpp"
#include "macs/linalg.hpp"
#include "macs/synthesis.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace macs {

namespace {

// The gains only enter A_c through the diagonal blocks: L_i H_i subtracts
// L_i from column block i of Theta_i. Everything else is fixed by K, so the
// search works on a cached base matrix plus 36-ish entry updates.
struct AcTemplate {
    Mat base;               // A_c with all L_i = 0
    std::size_t n = 0;      // follower count
    std::size_t dim = 0;    // stacked-error dimension
    std::size_t bd = 0;     // measurement block dimension

    Mat assemble(const std::vector<double>& params) const {
        Mat a_c = base;
        std::size_t idx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t r0 = i * dim;
            const std::size_t c0 = i * dim + i * bd;
            for (std::size_t r = 0; r < dim; ++r)
                for (std::size_t c = 0; c < bd; ++c)
                    a_c(r0 + r, c0 + c) -= params[idx++];
        }
        return a_c;
    }
};

AcTemplate make_template(const ErrorStack& stack, const Mat& k,
                         const std::vector<Mat>& k_rows, const std::vector<Mat>& selectors) {
    AcTemplate t;
    t.n = stack.follower_count();
    t.dim = stack.stack_dim();
    t.bd = selectors.front().rows();
    std::vector<Mat> zero_gains;
    for (std::size_t i = 0; i < t.n; ++i) zero_gains.push_back(Mat(t.dim, t.bd));
    t.base = assemble_closed_loop(stack, k, k_rows, zero_gains, selectors).a_c;
    return t;
}

std::vector<double> flatten(const std::vector<Mat>& gains) {
    std::vector<double> x;
    for (const Mat& l : gains) x.insert(x.end(), l.entries().begin(), l.entries().end());
    return x;
}

std::vector<Mat> unflatten(const std::vector<double>& x, std::size_t n, std::size_t dim,
                           std::size_t bd) {
    std::vector<Mat> gains;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Mat l(dim, bd);
        for (std::size_t r = 0; r < dim; ++r)
            for (std::size_t c = 0; c < bd; ++c) l(r, c) = x[idx++];
        gains.push_back(std::move(l));
    }
    return gains;
}

enum class Objective { SigmaMax, SpectralRadius };

// Never lets an exception escape: poll batches run inside OpenMP regions.
// A candidate whose spectrum cannot be computed simply scores +inf.
double evaluate(const AcTemplate& t, const std::vector<double>& params, Objective obj) noexcept {
    try {
        const Mat a_c = t.assemble(params);
        if (obj == Objective::SigmaMax) return max_singular_value(a_c);
        return spectral_radius(a_c);
    } catch (...) {
        return std::numeric_limits<double>::infinity();
    }
}

struct SearchState {
    std::vector<double> x;
    double f = 0.0;
    long evals = 0;
};

// Batch pattern search: poll +/- step along every coordinate, accept the
// single best improvement, halve the step when the whole poll fails. The
// poll batch is embarrassingly parallel and the accept rule (lowest index
// wins ties) keeps results identical for any thread count.
SearchState pattern_search(const AcTemplate& t, std::vector<double> x0, Objective obj,
                           int max_moves, double step0, double min_step, bool parallel) {
    SearchState st;
    st.x = std::move(x0);
    st.f = evaluate(t, st.x, obj);
    st.evals = 1;

    const std::ptrdiff_t n_params = static_cast<std::ptrdiff_t>(st.x.size());
    const std::ptrdiff_t n_cand = 2 * n_params;
    std::vector<double> scores(n_cand);
    double step = step0;
    int moves = 0;

    while (moves < max_moves && step >= min_step && st.f > 1e-13) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
        for (std::ptrdiff_t c = 0; c < n_cand; ++c) {
            std::vector<double> cand = st.x;
            cand[c / 2] += (c % 2 == 0) ? step : -step;
            scores[c] = evaluate(t, cand, obj);
        }
        st.evals += n_cand;

        std::ptrdiff_t best = -1;
        double best_f = st.f;
        for (std::ptrdiff_t c = 0; c < n_cand; ++c) {
            if (scores[c] < best_f - 1e-15) {
                best_f = scores[c];
                best = c;
            }
        }
        if (best < 0) {
            step *= 0.5;
            continue;
        }
        st.x[best / 2] += (best % 2 == 0) ? step : -step;
        st.f = best_f;
        ++moves;
    }
    return st;
}

}  // namespace

ObserverGainResult synthesize_observer_gains(const ErrorStack& stack, const Mat& k,
                                             const std::vector<Mat>& k_rows,
                                             const std::vector<Mat>& selectors,
                                             const ObserverGainOptions& opts) {
    const std::size_t n = stack.follower_count();
    const std::size_t dim = stack.stack_dim();
    const std::size_t bd = selectors.front().rows();
    const AcTemplate t = make_template(stack, k, k_rows, selectors);

    // Seed gains zero the measured column block of each Theta_i.
    const Mat a_closed = stack.a_tilde + stack.b_tilde * k;
    std::vector<Mat> seed_gains;
    for (std::size_t i = 0; i < n; ++i) {
        seed_gains.push_back((a_closed - stack.b_cols[i] * k_rows[i]) *
                             selectors[i].transposed());
    }

    long evals = 0;
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    std::vector<std::vector<double>> starts;
    starts.push_back(flatten(seed_gains));
    for (int r = 0; r < opts.restarts; ++r) {
        std::vector<double> perturbed = starts.front();
        for (double& v : perturbed) v += 0.25 * (1.0 + std::abs(v)) * noise(rng);
        starts.push_back(std::move(perturbed));
    }

    // Phase 1: singular-value objective from every start.
    SearchState best_sigma;
    bool have = false;
    for (const auto& s : starts) {
        SearchState st = pattern_search(t, s, Objective::SigmaMax, opts.sigma_phase_moves,
                                        opts.initial_step, opts.min_step, opts.parallel);
        evals += st.evals;
        if (!have || st.f < best_sigma.f) {
            best_sigma = std::move(st);
            have = true;
        }
    }

    std::vector<double> best_x = best_sigma.x;
    double best_rho = spectral_radius(t.assemble(best_x));
    ++evals;

    // Phase 2: search on the radius itself, both as the stall fallback and
    // as the default polish.
    if (opts.polish_spectral_radius || best_rho >= 1.0) {
        SearchState st = pattern_search(t, best_x, Objective::SpectralRadius,
                                        opts.rho_phase_moves, opts.initial_step, opts.min_step,
                                        opts.parallel);
        evals += st.evals;
        if (st.f < best_rho) {
            best_rho = st.f;
            best_x = std::move(st.x);
        }
    }

    if (best_rho >= 1.0) {
        throw ObserverSynthesisError(
            "observer-gain search: spectral radius " + std::to_string(best_rho) +
                " still >= 1 after the fallback phase",
            best_rho);
    }

    ObserverGainResult out;
    out.l_gains = unflatten(best_x, n, dim, bd);
    const Mat a_c = t.assemble(best_x);
    out.sigma_max = max_singular_value(a_c);
    out.alpha = out.sigma_max * out.sigma_max;
    out.rho = best_rho;
    out.objective_evals = evals;
    return out;
}

}  // namespace macs
