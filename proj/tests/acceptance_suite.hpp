#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "detlab/config.hpp"

namespace detlab::suite {

inline ExperimentConfig make(std::string name, Geometry g, double kappa, StateSpec s, PotentialSpec v = NoPotential{}) {
    ExperimentConfig c;
    c.name = std::move(name);
    c.geometry = g;
    c.n_interior = 2048;
    c.kappa = kappa;
    c.state = std::move(s);
    c.potential = v;
    c.t_max = 1000.0;
    return c;
}

inline const Interval unit_interval{1.0, BoundaryKind::Absorbing, BoundaryKind::Absorbing};
inline const Ball unit_ball{1.0};

/// Bounded regions at N = 2048, dt = dx.
inline std::vector<ExperimentConfig> bounded_suite() {
    using M = std::complex<double>;
    // sum_n n c_n = 0 over odd and over even n: no kink at either wall
    const double a = 1.0 / std::sqrt(15.0), b = 1.0 / std::sqrt(10.0), c = 1.0 / std::sqrt(126.0);
    const ModeState four_mode{{M{3 * a, 0}, M{2 * a, 0}, M{-a, 0}, M{-a, 0}}};
    const ModeState odd_modes{{M{3 * b, 0}, M{0, 0}, M{-b, 0}}};
    const ModeState five_mode{{M{10 * c, 0}, M{0, 0}, M{-5 * c, 0}, M{0, 0}, M{c, 0}}};
    const ModeState phased_modes{{M{3 * a, 0}, M{0, 2 * a}, M{-a, 0}, M{0, -a}}};
    return {
        make("iv_gauss_k1", unit_interval, 1.0, GaussianState{0.5, 0.0, 0.05}),
        make("iv_gauss_k0.1", unit_interval, 0.1, GaussianState{0.5, 0.0, 0.05}),
        make("iv_gauss_k10", unit_interval, 10.0, GaussianState{0.5, 0.0, 0.05}),
        make("iv_gauss_moving_k1", unit_interval, 1.0, GaussianState{0.45, 10.0, 0.05}),
        make("iv_gauss_moving_k10", unit_interval, 10.0, GaussianState{0.4, -15.0, 0.04}),
        make("iv_gauss_const_k1", unit_interval, 1.0, GaussianState{0.5, 0.0, 0.05}, ConstantPotential{50.0}),
        make("iv_gauss_vbump_k1", unit_interval, 1.0, GaussianState{0.4, 5.0, 0.05}, BumpPotential{200.0, 0.7, 0.05}),
        make("iv_gauss_vbump_k10", unit_interval, 10.0, GaussianState{0.5, 0.0, 0.06}, BumpPotential{100.0, 0.5, 0.1}),
        make("iv_bump_k1", unit_interval, 1.0, BumpState{0.5, 0.2, 0.0}),
        make("iv_bump_wide_k0.1", unit_interval, 0.1, BumpState{0.5, 0.45, 0.0}),
        make("iv_bump_moving_k10", unit_interval, 10.0, BumpState{0.5, 0.25, 20.0}),
        make("iv_bump_const_k1", unit_interval, 1.0, BumpState{0.5, 0.2, 0.0}, ConstantPotential{-30.0}),
        make("iv_bump_vbump_k1", unit_interval, 1.0, BumpState{0.4, 0.2, 0.0}, BumpPotential{50.0, 0.6, 0.1}),
        make("iv_modes_k1", unit_interval, 1.0, four_mode),
        make("iv_modes_k0.1", unit_interval, 0.1, odd_modes),
        make("iv_modes_k10", unit_interval, 10.0, five_mode),
        make("iv_modes_phased_const_k1", unit_interval, 1.0, phased_modes, ConstantPotential{10.0}),
        make("ball_gauss_k1", unit_ball, 1.0, GaussianState{0.5, 0.0, 0.05}),
        make("ball_gauss_k10", unit_ball, 10.0, GaussianState{0.5, 0.0, 0.05}),
        make("ball_gauss_moving_k1", unit_ball, 1.0, GaussianState{0.4, 10.0, 0.05}),
        make("ball_bump_k1", unit_ball, 1.0, BumpState{0.5, 0.2, 0.0}),
        make("ball_gauss_const_k10", unit_ball, 10.0, GaussianState{0.5, 0.0, 0.05}, ConstantPotential{25.0}),
        make("ball_gauss_vbump_k1", unit_ball, 1.0, GaussianState{0.5, 0.0, 0.05}, BumpPotential{30.0, 0.7, 0.08}),
    };
}

/// Packets near the detector of a truncated half-line, from incoming to outgoing.
inline std::vector<ExperimentConfig> halfline_suite() {
    std::vector<ExperimentConfig> out;
    // (p0, kappa): a detector matched to |p0| absorbs the incoming part almost fully
    const double cases[][2] = {{-6.0, 6.0}, {-3.0, 3.0}, {-1.0, 2.0}, {1.0, 2.0}, {2.6, 2.0}};
    for (const auto& [p0, kappa] : cases) {
        auto c = make("hl_gauss_p" + std::to_string(p0).substr(0, 4), HalfLine{100.0}, kappa,
                      GaussianState{2.0, p0, 0.3});
        c.n_interior = 16383;
        out.push_back(c);
    }
    return out;
}

}  // namespace detlab::suite
