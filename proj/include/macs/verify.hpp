#pragma once

#include <string>
#include <vector>

#include "macs/model.hpp"
#include "macs/synthesis.hpp"

namespace macs {

struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;   // worst observed value
    double tolerance = 0.0;  // limit it was held against
    std::string detail;
};

struct VerifyOptions {
    std::uint64_t seed = 20240601;
    int penrose_samples = 1000;
    int solve_samples = 1000;
    int spectrum_samples = 200;
    bool parallel = true;
};

/// Scenario-independent kernel checks: Penrose conditions on random
/// matrices, sigma_max >= rho, spectral-radius oracle cases, scaling
/// homogeneity, solver residual bounds, and the scalar Riccati closed form.
std::vector<CheckResult> verify_kernel(const VerifyOptions& opts = {});

/// Scenario-level invariants: Riccati residual, definiteness, spectral
/// structure of the assembled closed loop, feedforward exactness, observer
/// convergence, the cost identity, and the decay of the cost difference.
std::vector<CheckResult> verify_scenario(const ValidatedScenario& vs,
                                         const SynthesisOptions& synth_opts = {});

bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace macs
