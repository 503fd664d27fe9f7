#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace detlab {

/// Time series produced by one absorbing-boundary run. Sample k covers the step
/// [t_k, t_{k+1}] and is assigned to the midpoint t_{k+1/2}.
struct DetectionRecord {
    double dt = 0.0;
    std::vector<double> times;       // t_{k+1/2}
    std::vector<double> increments;  // ||psi_k||^2 - ||psi_{k+1}||^2
    std::vector<double> density;     // increments / dt
    // Per detector node, densities from the current route and the kappa|psi|^2 route.
    std::vector<std::vector<double>> current_density;
    std::vector<std::vector<double>> kappa_density;
    std::vector<double> norm_sq;  // ||psi_{k+1}||^2
    std::vector<int> boundary_outward;
    double initial_norm_sq = 1.0;
    double residual_norm_sq = 1.0;
    double t_max = 0.0;
    double validity_window = std::numeric_limits<double>::infinity();
    bool bounded = true;

    std::size_t steps() const { return increments.size(); }
    std::size_t boundary_count() const { return boundary_outward.size(); }
};

}  // namespace detlab
