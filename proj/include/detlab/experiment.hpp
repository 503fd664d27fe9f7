#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "detlab/config.hpp"
#include "detlab/detection.hpp"
#include "detlab/energy.hpp"
#include "detlab/propagator.hpp"

namespace detlab {

/// A module error tagged with the pipeline stage that raised it.
class ExperimentError : public std::runtime_error {
public:
    ExperimentError(std::string stage, const std::string& what, bool hypothesis)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), hypothesis_(hypothesis) {}
    const std::string& stage() const { return stage_; }
    bool hypothesis_violation() const { return hypothesis_; }

private:
    std::string stage_;
    bool hypothesis_;
};

namespace detail {

template <typename F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ExperimentError&) {
        throw;
    } catch (const HypothesisError& e) {
        throw ExperimentError(stage, e.what(), true);
    } catch (const std::exception& e) {
        throw ExperimentError(stage, e.what(), false);
    }
}

}  // namespace detail

/// Relative L2-in-time difference between the current-based and the
/// kappa-based boundary densities, summed over boundary elements.
inline double flux_route_difference(const DetectionRecord& rec) {
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < rec.boundary_count(); ++b)
        for (std::size_t k = 0; k < rec.steps(); ++k) {
            const double d = rec.current_density[b][k] - rec.kappa_density[b][k];
            num += d * d;
            den += rec.kappa_density[b][k] * rec.kappa_density[b][k];
        }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

/// |initial norm - final norm - sum of increments|.
inline double norm_balance_defect(const DetectionRecord& rec) {
    return std::abs(rec.initial_norm_sq - rec.residual_norm_sq - detected_mass(rec));
}

/// Everything computed at one resolution.
struct SingleRun {
    std::size_t n_interior = 0;
    double dt = 0.0;
    DetectionRecord record;
    DetectionStats stats;
    EnergyStats energy;  // operator route, including V
    std::vector<EnergyStats> routes;
    double flux_difference = 0.0;
    double validity_window = std::numeric_limits<double>::infinity();

    double product() const { return stats.sigma_T * energy.sigma_E; }
};

inline bool potential_is_uniform(const PotentialSpec& p) { return !std::holds_alternative<BumpPotential>(p); }

inline SingleRun run_single(const ExperimentConfig& cfg, std::size_t n_interior, double dt_override = 0.0) {
    SingleRun run;
    run.n_interior = n_interior;
    const Grid grid = detail::staged("grid", [&] { return build_grid(cfg.geometry, n_interior); });
    run.dt = dt_override > 0.0 ? dt_override : resolved_dt(cfg, grid);
    const auto psi0 = detail::staged("state", [&] { return make_state(cfg.state, grid, cfg.constants); });
    const auto potential = detail::staged("potential", [&] { return make_potential(cfg.potential, grid); });

    run.energy = detail::staged("energy", [&] { return sigmaE_operator(psi0, potential); });
    run.routes.push_back(run.energy);
    if (potential_is_uniform(cfg.potential)) {
        if (edge_slope(psi0) < 1e-4)
            run.routes.push_back(detail::staged("energy", [&] { return sigmaE_spectral(psi0); }));
        if (std::holds_alternative<Interval>(cfg.geometry))
            run.routes.push_back(detail::staged("energy", [&] { return sigmaE_dirichlet(psi0, grid.n_interior()); }));
    }

    const auto h = detail::staged("hamiltonian", [&] {
        return assemble_hamiltonian(grid, cfg.constants, DetectorSpec(cfg.kappa), potential);
    });
    try {
        run.routes.push_back(sigmaE_non_self_adjoint(psi0, h));
    } catch (const HypothesisError&) {
        // H psi does not vanish on the detector: this route is not applicable.
    }

    double horizon = cfg.t_max;
    if (const auto* hl = std::get_if<HalfLine>(&cfg.geometry)) {
        run.validity_window = detail::staged("validity window", [&] {
            const auto mom = momentum_moments(psi0);
            return halfline_validity_window(hl->x_truncate, support_right_edge(psi0), mom.mean_p, mom.sigma_p,
                                            cfg.constants.mass);
        });
        horizon = std::min(horizon, run.validity_window);
    }

    run.record = detail::staged("evolve", [&] {
        const Propagator prop(h, run.dt);
        EvolveOptions opt;
        opt.t_max = horizon;
        opt.stop_below_residual = is_bounded(cfg.geometry) ? cfg.residual_target : 0.0;
        return evolve(prop, psi0, opt);
    });
    run.record.validity_window = run.validity_window;
    run.stats = detail::staged("detection", [&] { return conditional_time_moments(run.record); });
    run.flux_difference = flux_route_difference(run.record);
    return run;
}

struct ExperimentResult {
    ExperimentConfig config;
    UncertaintyReport report;
    SingleRun coarse;
    std::optional<SingleRun> fine;  // n' = 2n + 1 (dx/2) and dt/2
    double seconds = 0.0;           // wall time; not part of the serialized report
};

inline double max_route_spread(const std::vector<EnergyStats>& routes) {
    double worst = 0.0;
    for (std::size_t i = 0; i < routes.size(); ++i)
        for (std::size_t j = i + 1; j < routes.size(); ++j) {
            const double ref = std::max(routes[i].sigma_E, routes[j].sigma_E);
            if (ref > 0.0) worst = std::max(worst, std::abs(routes[i].sigma_E - routes[j].sigma_E) / ref);
        }
    return worst;
}

/// state -> evolve -> detection statistics -> energy statistics -> report.
/// Deterministic for a fixed config.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    validate(cfg);
    ExperimentResult res;
    res.config = cfg;
    res.coarse = run_single(cfg, cfg.n_interior);
    double delta = 0.0;
    if (cfg.convergence_check) {
        res.fine = run_single(cfg, 2 * cfg.n_interior + 1, 0.5 * res.coarse.dt);
        const double pf = res.fine->product();
        delta = std::abs(res.coarse.product() - pf) / pf;
    }
    auto& r = res.report;
    r = uncertainty_product_report(res.coarse.stats, res.coarse.energy.sigma_E, cfg.constants, delta);
    r.undetected = undetected_estimate(res.coarse.record);
    for (const auto& e : res.coarse.routes) r.energy_routes.push_back({to_string(e.route), e.sigma_E});
    r.config_hash = config_hash(cfg);

    const auto& tol = cfg.tolerances;
    r.checks.push_back(check_below("norm_balance", norm_balance_defect(res.coarse.record), tol.norm_balance));
    r.checks.push_back(check_below("flux_route_difference", res.coarse.flux_difference, tol.flux_agreement));
    if (res.coarse.routes.size() > 1)
        r.checks.push_back(check_below("energy_route_spread", max_route_spread(res.coarse.routes), tol.route_agreement));
    r.checks.push_back(check_below("energy_imag_defect", res.coarse.energy.imag_defect, tol.imag_defect));
    if (cfg.convergence_check) r.checks.push_back(check_below("delta_num", delta, tol.delta_num));
    r.checks.push_back(check_above("bound_margin_scaled", r.product - r.bound * (1.0 - delta), 0.0));
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace detlab
