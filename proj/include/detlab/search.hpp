#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "detlab/config.hpp"
#include "detlab/experiment.hpp"

namespace detlab {

struct SearchPoint {
    double x0 = 0.0, p0 = 0.0, sigma_x = 0.0, kappa = 0.0;
};

struct SearchEvaluation {
    std::size_t index = 0;
    std::size_t restart = 0;
    SearchPoint point;
    double product = 0.0;  // +inf when the run failed
    std::string error;
};

struct SearchResult {
    SearchPoint best;
    double best_product = std::numeric_limits<double>::infinity();
    double delta_num = 0.0;  // from a paired run at the best point
    double floor = 0.0;      // (hbar/2)(1 - delta_num)
    bool converged = false;  // the simplex that produced the best point shrank below tolerance
    bool budget_exhausted = false;
    std::vector<SearchEvaluation> trajectory;
    std::optional<UncertaintyReport> best_report;

    bool floor_holds() const { return best_product >= floor; }
};

namespace detail {

// Folds R onto [0, 1] by reflection, so the simplex moves freely.
inline double fold_unit(double u) {
    const double m = std::fmod(std::fmod(u, 2.0) + 2.0, 2.0);
    return 1.0 - std::abs(1.0 - m);
}

inline double lerp(const std::array<double, 2>& r, double u) { return r[0] + (r[1] - r[0]) * u; }

// 53 random bits -> [0, 1); the same on every standard library.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Maps a point of the unit cube into the search box. x0 is confined to the part
/// of its range where the 6 sigma support stays inside the interval.
inline SearchPoint map_search_point(const ExperimentConfig& base, const std::array<double, 4>& u) {
    const auto* iv = std::get_if<Interval>(&base.geometry);
    if (!iv) throw std::invalid_argument("the product search runs on an interval geometry");
    const auto& s = base.search;
    SearchPoint p;
    p.sigma_x = detail::lerp(s.sigma_x, detail::fold_unit(u[2]));
    p.p0 = detail::lerp(s.p0, detail::fold_unit(u[1]));
    p.kappa = detail::lerp(s.kappa, detail::fold_unit(u[3]));
    const double margin = 6.0 * p.sigma_x + 4.0 * iv->length / static_cast<double>(s.n_interior + 1);
    const double lo = std::max(s.x0[0], margin), hi = std::min(s.x0[1], iv->length - margin);
    p.x0 = lo <= hi ? detail::lerp({lo, hi}, detail::fold_unit(u[0])) : 0.5 * iv->length;
    return p;
}

inline ExperimentConfig search_config(const ExperimentConfig& base, const SearchPoint& p) {
    ExperimentConfig c = base;
    c.n_interior = base.search.n_interior;
    c.dt.reset();
    c.kappa = p.kappa;
    c.state = GaussianState{p.x0, p.p0, p.sigma_x};
    c.potential = NoPotential{};
    return c;
}

namespace detail {

struct SearchState {
    const ExperimentConfig* base;
    std::size_t budget;
    std::size_t restart = 0;
    std::vector<SearchEvaluation>* trajectory;
    bool exhausted = false;
};

inline double search_objective(const gsl_vector* v, void* params) {
    auto& st = *static_cast<SearchState*>(params);
    if (st.trajectory->size() >= st.budget) {
        st.exhausted = true;
        return 1e300;
    }
    std::array<double, 4> u{};
    for (std::size_t i = 0; i < 4; ++i) u[i] = gsl_vector_get(v, i);
    SearchEvaluation e;
    e.index = st.trajectory->size();
    e.restart = st.restart;
    e.point = map_search_point(*st.base, u);
    try {
        ExperimentConfig c = search_config(*st.base, e.point);
        c.convergence_check = false;
        e.product = run_single(c, c.n_interior).product();
    } catch (const std::exception& ex) {
        e.product = std::numeric_limits<double>::infinity();
        e.error = ex.what();
    }
    st.trajectory->push_back(e);
    return std::isfinite(e.product) ? e.product : 1e300;
}

}  // namespace detail

/// Derivative-free search for the smallest sigma_T sigma_E over Gaussian packets
/// (x0, p0, sigma_x, kappa): Nelder-Mead restarted from points drawn with the
/// config seed. `budget` counts simulations; budget = 1 evaluates only the seed point.
inline SearchResult minimize_product(const ExperimentConfig& base, std::size_t budget) {
    if (budget == 0) throw std::invalid_argument("search budget must be positive");
    validate(base);
    map_search_point(base, {0.5, 0.5, 0.5, 0.5});  // rejects a non-interval geometry up front
    SearchResult res;
    std::mt19937_64 rng(base.seed);
    detail::SearchState st{&base, budget, 0, &res.trajectory};

    gsl_set_error_handler_off();
    gsl_multimin_function fn{&detail::search_objective, 4, &st};
    gsl_vector* x = gsl_vector_alloc(4);
    gsl_vector* step = gsl_vector_alloc(4);
    gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4);
    gsl_vector_set_all(step, 0.2);

    bool best_converged = false;
    const std::size_t restarts = std::max<std::size_t>(1, base.search.restarts);
    for (std::size_t r = 0; r < restarts && res.trajectory.size() < budget; ++r) {
        st.restart = r;
        for (std::size_t i = 0; i < 4; ++i) gsl_vector_set(x, i, detail::unit_draw(rng));
        gsl_multimin_fminimizer_set(nm, &fn, x, step);
        bool converged = false;
        while (!st.exhausted && res.trajectory.size() < budget) {
            if (gsl_multimin_fminimizer_iterate(nm) != GSL_SUCCESS) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(nm), 1e-3) == GSL_SUCCESS) {
                converged = true;
                break;
            }
        }
        if (st.exhausted || res.trajectory.size() >= budget) res.budget_exhausted = !converged;
        for (const auto& e : res.trajectory)
            if (e.restart == r && e.product < res.best_product) {
                res.best_product = e.product;
                res.best = e.point;
                best_converged = converged;
            }
    }
    gsl_multimin_fminimizer_free(nm);
    gsl_vector_free(step);
    gsl_vector_free(x);
    res.converged = best_converged;

    res.floor = 0.5 * base.constants.hbar;
    if (std::isfinite(res.best_product)) {
        ExperimentConfig c = search_config(base, res.best);
        c.convergence_check = true;
        const auto ex = run_experiment(c);
        res.delta_num = ex.report.delta_num;
        res.best_report = ex.report;
        res.floor = 0.5 * base.constants.hbar * (1.0 - res.delta_num);
    }
    return res;
}

}  // namespace detlab
