#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "detlab/config.hpp"
#include "detlab/detection.hpp"
#include "detlab/dilation.hpp"
#include "detlab/energy.hpp"
#include "detlab/operator_lab.hpp"

namespace detlab {

struct OperatorCheckOptions {
    std::size_t dense_n = 128;
    double povm_time = 1.0;
    std::vector<std::size_t> semigroup_steps{0, 1, 2, 5, 10, 50, 100, 500, 1000};
    std::size_t dilation_n = 1024;  // capped by the config resolution
    double dilation_dt_factor = 0.125;  // dt = factor * dx for the dilation run
    std::size_t intertwine_shift = 10;
    std::size_t intertwine_window = 2000;
    bool dilation_convergence = true;  // paired (2n+1, dt/2) run for the Kennard slack
};

struct OperatorCheckResult {
    std::vector<CheckResult> checks;
    SpectrumReport spectrum;
    SemigroupReport semigroup;
    double skew_residual = 0.0;
    double povm_residual = 0.0;
    double povm_trapezoid_ratio = 0.0;  // residual(dt) / residual(dt/2) for the endpoint rule
    double undetected_norm = 0.0;       // ||W_T* W_T|| at large T (bounded regions)
    std::optional<DilationStats> dilation;
    std::optional<ConditionalChain> chain;
    double dilation_sigma_E = 0.0;
    double dilation_delta = 0.0;

    bool all_pass() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }
};

/// Dense operator identities on a small grid of the config's geometry.
inline void dense_checks(const ExperimentConfig& cfg, const OperatorCheckOptions& opt, OperatorCheckResult& out) {
    const Grid grid = build_grid(cfg.geometry, opt.dense_n);
    const auto potential = make_potential(cfg.potential, grid);
    const auto h = assemble_hamiltonian(grid, cfg.constants, DetectorSpec(cfg.kappa), potential);
    const double dt = grid.dx();
    const auto ops = build_dense(h, dt);

    out.skew_residual = skew_identity_residual(ops);
    out.checks.push_back(check_below("skew_identity_residual", out.skew_residual, 1e-13));
    const auto rank = boundary_rank(ops);
    out.checks.push_back(check_below("boundary_rank_mismatch",
                                     std::abs(static_cast<double>(rank) -
                                              static_cast<double>(grid.absorbing_nodes().size())),
                                     0.0));

    out.semigroup = semigroup_contraction_check(ops, opt.semigroup_steps);
    out.checks.push_back(check_below("contraction_max_norm", out.semigroup.max_norm, 1.0 + 1e-10));
    out.checks.push_back(check_below("semigroup_defect", out.semigroup.semigroup_defect, 1e-10));
    out.checks.push_back(check_below("norm_not_monotone", out.semigroup.monotone ? 0.0 : 1.0, 0.0));

    const auto K = static_cast<std::size_t>(std::llround(opt.povm_time / dt));
    out.povm_residual = povm_completeness(ops, K);
    out.checks.push_back(check_below("povm_completeness_residual", out.povm_residual, 1e-6));

    try {
        const auto psi = make_state(cfg.state, grid, cfg.constants);
        const auto v = ops.embed(psi.values());
        const auto ops_half = build_dense(h, 0.5 * dt);
        const double r1 = povm_completeness_state(ops, v, K, QuadratureRule::EndpointTrapezoid);
        const double r2 = povm_completeness_state(ops_half, v, 2 * K, QuadratureRule::EndpointTrapezoid);
        out.povm_trapezoid_ratio = r2 > 0.0 ? r1 / r2 : 0.0;
        out.checks.push_back(check_above("povm_trapezoid_order_ratio", out.povm_trapezoid_ratio, 3.0));
    } catch (const HypothesisError&) {
        // the state does not fit on the small grid; the order check is skipped
    }

    out.spectrum = spectrum_check(ops);
    out.checks.push_back(check_below("max_imag_eigenvalue", out.spectrum.max_imag, 1e-10));
    if (cfg.kappa > 0.0) out.checks.push_back(check_above("non_normality", out.spectrum.non_normality, 1e-12));

    if (is_bounded(cfg.geometry) && out.spectrum.slowest_decay_rate > 0.0) {
        out.undetected_norm = undetected_operator_norm(ops, decay_steps(ops, 1e-12));
        out.checks.push_back(check_below("undetected_operator_norm", out.undetected_norm, 1e-8));
    }
}

struct DilationRun {
    DilationField field;
    DilationStats stats;
    EnergyStats energy;
    DetectionStats detection;
};

inline DilationRun dilation_run(const ExperimentConfig& cfg, std::size_t n, double dt_factor,
                                double max_tail_fraction = 1e-6) {
    const Grid grid = build_grid(cfg.geometry, n);
    const auto psi = make_state(cfg.state, grid, cfg.constants);
    const auto potential = make_potential(cfg.potential, grid);
    const auto h = assemble_hamiltonian(grid, cfg.constants, DetectorSpec(cfg.kappa), potential);
    const Propagator prop(h, dt_factor * grid.dx());
    DilationOptions dopt;
    dopt.t_max = cfg.t_max;
    if (const auto* hl = std::get_if<HalfLine>(&cfg.geometry)) {
        const auto mom = momentum_moments(psi);
        dopt.t_max = std::min(cfg.t_max, halfline_validity_window(hl->x_truncate, support_right_edge(psi), mom.mean_p,
                                                                  mom.sigma_p, cfg.constants.mass));
    } else {
        dopt.stop_below_residual = cfg.residual_target;
    }
    DilationRun run{build_dilation_field(prop, psi, dopt), {}, sigmaE_operator(psi, potential), {}};
    DilationStatsOptions sopt;
    sopt.max_tail_fraction = max_tail_fraction;
    run.stats = dilation_stats(run.field, sopt);
    run.detection = conditional_time_moments(run.field.record);
    return run;
}

/// Dilation identities on the propagator: isometry, intertwining, and the
/// uncertainty chain in the dilation space.
inline void dilation_checks(const ExperimentConfig& cfg, const OperatorCheckOptions& opt, OperatorCheckResult& out) {
    const std::size_t n = std::min(opt.dilation_n, cfg.n_interior);
    const bool bounded = is_bounded(cfg.geometry);
    const auto run = dilation_run(cfg, n, opt.dilation_dt_factor, bounded ? 1e-6 : 1.0);
    const auto& f = run.field;
    const auto& st = run.stats;
    out.dilation = st;
    out.dilation_sigma_E = run.energy.sigma_E;

    const double p_hat = detection_probability(f.record);
    out.checks.push_back(check_below("dilation_norm_vs_p_hat", std::abs(f.norm_sq - p_hat), 1e-6));
    out.checks.push_back(check_below("dilation_norm_at_most_one", f.norm_sq, 1.0 + 1e-12));
    double dens = 0.0, peak = 0.0;
    for (std::size_t k = 0; k < f.samples(); ++k) {
        dens = std::max(dens, std::abs(f.density(k) - f.record.density[k]));
        peak = std::max(peak, f.record.density[k]);
    }
    out.checks.push_back(check_below("dilation_density_vs_record", dens / peak, 1e-9));

    if (!std::holds_alternative<ModeState>(cfg.state)) {
        double z = 0.0, phi_peak = 0.0;
        for (std::size_t b = 0; b < f.phi.size(); ++b) {
            z = std::max({z, std::abs(f.phi_at_zero[b]), std::abs(f.dphi_dt_at_zero[b]) * f.dt});
            for (const auto& v : f.phi[b]) phi_peak = std::max(phi_peak, std::abs(v));
        }
        out.checks.push_back(check_below("dilation_start_values", z / phi_peak, 1e-12));
    }

    {
        const Grid grid = build_grid(cfg.geometry, n);
        const auto psi = make_state(cfg.state, grid, cfg.constants);
        const auto h = assemble_hamiltonian(grid, cfg.constants, DetectorSpec(cfg.kappa),
                                            make_potential(cfg.potential, grid));
        const Propagator prop(h, opt.dilation_dt_factor * grid.dx());
        const std::size_t window = std::min(opt.intertwine_window, f.samples() - opt.intertwine_shift);
        out.checks.push_back(check_below("intertwining_defect",
                                         intertwine_check(prop, psi, opt.intertwine_shift, window), 1e-8));
    }

    if (bounded) {
        out.checks.push_back(check_below("sigma_T_tilde_vs_detection",
                                         std::abs(st.sigma_T_tilde - run.detection.sigma_T), 1e-8));
        out.checks.push_back(check_below("sigma_H_tilde_vs_sigma_E",
                                         std::abs(st.sigma_H_tilde - run.energy.sigma_E) / run.energy.sigma_E, 0.01));
    } else {
        out.chain = conditional_chain(st, run.energy.mean_E, run.energy.sigma_E, cfg.constants.hbar);
        out.checks.push_back(check_below("conditional_chain_unordered", out.chain->ordered(1e-3) ? 0.0 : 1.0, 0.0));
    }

    if (opt.dilation_convergence) {
        const auto fine = dilation_run(cfg, 2 * n + 1, 0.5 * opt.dilation_dt_factor, bounded ? 1e-6 : 1.0);
        out.dilation_delta = std::abs(st.kennard_product - fine.stats.kennard_product) / fine.stats.kennard_product;
    }
    out.checks.push_back(
        check_above("kennard_margin", st.kennard_product - 0.5 * cfg.constants.hbar * (1.0 - out.dilation_delta), 0.0));
}

inline OperatorCheckResult operator_check(const ExperimentConfig& cfg, const OperatorCheckOptions& opt = {}) {
    OperatorCheckResult out;
    dense_checks(cfg, opt, out);
    dilation_checks(cfg, opt, out);
    return out;
}

}  // namespace detlab
