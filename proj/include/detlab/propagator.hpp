#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "detlab/hamiltonian.hpp"
#include "detlab/record.hpp"
#include "detlab/tridiagonal.hpp"
#include "detlab/wavefunction.hpp"

namespace detlab {

/// Crank-Nicolson step psi' = (I + i dt H/2hbar)^{-1} (I - i dt H/2hbar) psi.
/// This is the Cayley transform of a dissipative H, hence a contraction; the
/// uniform part of V is split off and applied as an exact phase.
class Propagator {
public:
    Propagator(DiscreteHamiltonian hamiltonian, double dt)
        : hamiltonian_(std::move(hamiltonian)), dt_(checked(dt)),
          phase_(std::polar(1.0, -hamiltonian_.energy_offset() * dt / hamiltonian_.constants().hbar)),
          implicit_(factor(+1.0)), explicit_(factor(-1.0)) {}

    const DiscreteHamiltonian& hamiltonian() const { return hamiltonian_; }
    const Grid& grid() const { return hamiltonian_.grid(); }
    double dt() const { return dt_; }

    /// out = W_dt in on full-grid values; in and out must be distinct buffers
    /// that agree on the pinned (Dirichlet) nodes.
    void step(std::span<const cplx> in, std::span<cplx> out) const {
        const std::size_t b = hamiltonian_.active_begin(), n = hamiltonian_.active_size();
        auto active = out.subspan(b, n);
        implicit_.solve_product(explicit_, in.subspan(b, n), active);
        if (hamiltonian_.energy_offset() != 0.0)
            for (auto& x : active) x *= phase_;
    }

    std::size_t size() const { return grid().size(); }

private:
    static double checked(double dt) {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
        return dt;
    }

    Tridiagonal<cplx> factor(double sign) const {
        const auto& h = hamiltonian_.matrix();
        const cplx a{0.0, sign * dt_ / (2.0 * hamiltonian_.constants().hbar)};
        Tridiagonal<cplx> m{h.sub, h.diag, h.sup};
        for (std::size_t i = 0; i < m.size(); ++i) {
            m.sub[i] *= a;
            m.sup[i] *= a;
            m.diag[i] = 1.0 + a * (m.diag[i] - hamiltonian_.energy_offset());
        }
        return m;
    }

    DiscreteHamiltonian hamiltonian_;
    double dt_;
    cplx phase_;
    TridiagonalSolver<cplx> implicit_;
    Tridiagonal<cplx> explicit_;
};

inline WaveFunction cn_step(const Propagator& prop, const WaveFunction& psi) {
    if (!(psi.grid() == prop.grid())) throw std::invalid_argument("state is not on the propagator's grid");
    std::vector<cplx> v(psi.values().begin(), psi.values().end());
    prop.step(psi.values(), v);
    return {psi.grid(), psi.constants(), std::move(v)};
}

/// W_t psi for t = steps*dt.
inline WaveFunction evolve_state(const Propagator& prop, const WaveFunction& psi, std::size_t steps) {
    std::vector<cplx> v(psi.values().begin(), psi.values().end());
    std::vector<cplx> w = v;
    for (std::size_t s = 0; s < steps; ++s) {
        prop.step(v, w);
        v.swap(w);
    }
    return {psi.grid(), psi.constants(), std::move(v)};
}

struct FluxSample {
    double t = 0.0;
    std::vector<double> current_density;  // n . j  (one-sided second-order gradient)
    std::vector<double> kappa_density;    // (hbar kappa/m) |psi_b|^2
    double norm_sq = 0.0;
};

namespace detail {

inline void flux_at(const Grid& grid, const PhysicalConstants& c, double kappa, std::span<const cplx> v,
                    std::vector<double>& current, std::vector<double>& dens) {
    const auto nodes = grid.absorbing_nodes();
    current.resize(nodes.size());
    dens.resize(nodes.size());
    const double dx = grid.dx();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto b = static_cast<std::ptrdiff_t>(nodes[i].index);
        const std::ptrdiff_t s = nodes[i].outward;
        const cplx vb = v[b], v1 = v[b - s], v2 = v[b - 2 * s];
        const cplx normal_grad = (3.0 * vb - 4.0 * v1 + v2) / (2.0 * dx);
        current[i] = c.hbar / c.mass * std::imag(std::conj(vb) * normal_grad);
        dens[i] = c.hbar * kappa / c.mass * std::norm(vb);
    }
}

}  // namespace detail

inline FluxSample boundary_flux_densities(const WaveFunction& psi, const DetectorSpec& detector) {
    FluxSample f;
    detail::flux_at(psi.grid(), psi.constants(), detector.kappa(), psi.values(), f.current_density, f.kappa_density);
    f.norm_sq = norm_sq(psi);
    return f;
}

/// Read-only view of one step handed to evolve() observers.
struct StepView {
    std::size_t step;
    double t_begin;
    double dt;
    std::span<const cplx> before;
    std::span<const cplx> after;
};

struct EvolveOptions {
    double t_max = 0.0;
    double stop_below_residual = 0.0;  // > 0: stop once ||psi_t||^2 drops below this
    std::function<void(const StepView&)> observer;
};

/// Steps psi0 from t = 0 to t_max and records the detection statistics.
/// Detection mass per step is the norm decrement, so
///   ||psi_0||^2 = ||psi_t||^2 + sum_k increments[k]
/// holds by construction. Boundary densities are evaluated on the averaged state
/// (psi_k + psi_{k+1})/2, for which kappa_density equals increments/dt exactly.
inline DetectionRecord evolve(const Propagator& prop, const WaveFunction& psi0, const EvolveOptions& opt) {
    if (!(psi0.grid() == prop.grid())) throw std::invalid_argument("state is not on the propagator's grid");
    if (!(opt.t_max >= 0.0)) throw std::invalid_argument("t_max must be non-negative");
    const double n0 = norm_sq(psi0);
    if (std::abs(n0 - 1.0) > 1e-10) throw std::invalid_argument("initial state must have unit norm");

    const Grid& grid = prop.grid();
    const double dt = prop.dt();
    const double raw_steps = opt.t_max / dt;
    const double nearest = std::round(raw_steps);
    const auto max_steps =
        static_cast<std::size_t>(std::abs(raw_steps - nearest) < 1e-9 ? nearest : std::ceil(raw_steps));
    DetectionRecord rec;
    rec.dt = dt;
    rec.bounded = is_bounded(grid.geometry());
    for (const auto& b : grid.absorbing_nodes()) rec.boundary_outward.push_back(b.outward);
    const std::size_t nb = rec.boundary_outward.size();
    rec.current_density.assign(nb, {});
    rec.kappa_density.assign(nb, {});
    rec.initial_norm_sq = n0;
    rec.times.reserve(max_steps);
    rec.increments.reserve(max_steps);
    rec.density.reserve(max_steps);
    rec.norm_sq.reserve(max_steps);

    std::vector<cplx> cur(psi0.values().begin(), psi0.values().end());
    std::vector<cplx> prev = cur;
    std::vector<cplx> mid(cur.size());
    std::vector<double> cd, kd;
    const double kappa = prop.hamiltonian().detector().kappa();
    const auto nodes = grid.absorbing_nodes();

    double n_prev = n0;
    std::size_t k = 0;
    for (; k < max_steps; ++k) {
        if (opt.stop_below_residual > 0.0 && n_prev < opt.stop_below_residual) break;
        prev.swap(cur);
        prop.step(prev, cur);
        const double n_next = norm_sq(grid, cur);
        const double inc = n_prev - n_next;
        rec.times.push_back((static_cast<double>(k) + 0.5) * dt);
        rec.increments.push_back(inc);
        rec.density.push_back(inc / dt);
        rec.norm_sq.push_back(n_next);

        for (const auto& b : nodes)
            for (int j = 0; j < 3; ++j) {
                const auto idx = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(b.index) - j * b.outward);
                mid[idx] = 0.5 * (prev[idx] + cur[idx]);
            }
        detail::flux_at(grid, psi0.constants(), kappa, mid, cd, kd);
        for (std::size_t i = 0; i < nb; ++i) {
            rec.current_density[i].push_back(cd[i]);
            rec.kappa_density[i].push_back(kd[i]);
        }
        if (opt.observer) opt.observer(StepView{k, static_cast<double>(k) * dt, dt, prev, cur});
        n_prev = n_next;
    }
    rec.residual_norm_sq = n_prev;
    rec.t_max = static_cast<double>(k) * dt;
    return rec;
}

inline DetectionRecord evolve(const Propagator& prop, const WaveFunction& psi0, double t_max,
                              std::function<void(const StepView&)> observer = {}) {
    return evolve(prop, psi0, EvolveOptions{t_max, 0.0, std::move(observer)});
}

}  // namespace detlab
