#pragma once

#include "tdid/config.hpp"

namespace tdid {

/// Built-in configuration of the two-state benchmark system with delays
/// {0, 1, 1.7, 2.3}, cube-root/square nonlinearities, the five-sine-plus-pulse
/// input and gradient gains 400 I on every slot.
ExperimentConfig example_config();

/// True parameter values of the benchmark, keyed by estimate column name
/// (e.g. "A0_1_hat" -> -2). Entries absent from the map are fictitious (0).
std::vector<std::pair<std::string, double>> example_true_parameters();

/// Bounded companion of example_config(): identical matrices, delays, input
/// and gains, but phi = tanh (globally Lipschitz, L = 1) and psi = 0.  The
/// benchmark as printed has a finite-time escape driven by the -2 y^2 output
/// feedback; this variant removes that term so long-horizon properties
/// (Lyapunov monotonicity, frozen equilibrium, grid equivalence) can be
/// exercised over the horizons they call for.
ExperimentConfig bounded_variant_config();

}  // namespace tdid
