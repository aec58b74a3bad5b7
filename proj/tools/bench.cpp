// Serial-vs-OpenMP timing for the two data-parallel hot paths: the dense
// product kernel and the observer-gain poll batch.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "macs/linalg.hpp"
#include "macs/mat.hpp"
#include "macs/model.hpp"
#include "macs/scenario_io.hpp"
#include "macs/synthesis.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

macs::Mat random_mat(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    macs::Mat m(n, n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) m(r, c) = u(rng);
    return m;
}

void bench_matmul() {
    std::printf("\nmatmul (reps adjusted per size)\n");
    std::printf("%8s %6s %12s %12s %8s\n", "size", "reps", "serial[s]", "openmp[s]", "speedup");
    for (std::size_t n : {16u, 32u, 64u, 128u, 256u}) {
        const int reps = n <= 32 ? 2000 : (n <= 64 ? 400 : (n <= 128 ? 60 : 10));
        const macs::Mat a = random_mat(n, 1);
        const macs::Mat b = random_mat(n, 2);

        double sink = 0.0;
        auto t0 = Clock::now();
        for (int r = 0; r < reps; ++r) sink += macs::kernels::mul_serial(a, b)(0, 0);
        const double ts = seconds_since(t0);

        t0 = Clock::now();
        for (int r = 0; r < reps; ++r) sink += macs::kernels::mul_parallel(a, b)(0, 0);
        const double tp = seconds_since(t0);

        std::printf("%8zu %6d %12.4f %12.4f %7.2fx   (checksum %.3f)\n", n, reps, ts, tp,
                    ts / tp, sink);
    }
}

void bench_observer_search(const char* scenario_path) {
    const macs::Scenario s = macs::load_scenario(scenario_path);
    const macs::ValidatedScenario vs = macs::validate(s);
    const macs::ErrorStack stack = macs::build_error_stack(vs);
    const macs::DareSolution dare = macs::solve_dare(stack);
    const auto selectors = macs::build_selectors(vs.parents, vs.block_dim);

    std::printf("\nobserver-gain search on %s\n", scenario_path);
    std::printf("%8s %12s %12s %10s %10s\n", "threads", "time[s]", "evals", "rho(A_c)",
                "sigma");
    for (int parallel = 0; parallel <= 1; ++parallel) {
        macs::ObserverGainOptions opts;
        opts.parallel = parallel != 0;
        const auto t0 = Clock::now();
        const macs::ObserverGainResult res =
            macs::synthesize_observer_gains(stack, dare.k, dare.k_rows, selectors, opts);
        const double dt = seconds_since(t0);
#ifdef _OPENMP
        const int threads = parallel ? omp_get_max_threads() : 1;
#else
        const int threads = 1;
#endif
        std::printf("%8d %12.3f %12ld %10.6f %10.6f\n", threads, dt, res.objective_evals,
                    res.rho, res.sigma_max);
    }
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled; both paths run serially\n");
#endif
    bench_matmul();
    if (argc > 1) {
        bench_observer_search(argv[1]);
    } else {
        std::printf("\npass a scenario file to also time the observer-gain search\n");
    }
    return 0;
}
