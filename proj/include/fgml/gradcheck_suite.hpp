#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fgml {

struct ComponentCheck {
    std::string component;
    size_t instances = 0;
    size_t coords_checked = 0;
    double max_rel_error = 0.0;
};

// Finite-difference validation of every analytic gradient in the engine:
// cross-entropy, arcface, center, dual loss, the MLP head, and the small CNN,
// each over `trials` seeded random toy instances (N <= 8, D <= 16, C <= 6,
// h = 1e-5 central differences). Instances falling within 1e-3 of the margin
// fallback switch or with pre-activations inside the ReLU kink guard band are
// resampled. The CNN checks a deterministic random subset of coordinates per
// instance; all other components check every coordinate.
//
// `perturb`, when nonzero, is added to one analytic gradient coordinate of
// every instance; it exists so the harness's sensitivity is itself testable.
std::vector<ComponentCheck> run_gradcheck_suite(uint64_t seed, size_t trials,
                                                double h = 1e-5, double perturb = 0.0);

}  // namespace fgml
