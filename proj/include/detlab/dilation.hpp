#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "detlab/detection.hpp"
#include "detlab/propagator.hpp"

namespace detlab {

/// The image phi(t, b) = sqrt(hbar kappa/m) psi_t(b) of the initial state under
/// the dilation J, sampled at step midpoints on the averaged state and taken to
/// be zero for t < 0. With this sampling sum_b sum_k |phi|^2 dt equals the
/// detected probability of the same run.
struct DilationField {
    double dt = 0.0;
    double hbar = 1.0;
    std::vector<double> times;             // t_{k+1/2}
    std::vector<std::vector<cplx>> phi;    // [boundary][k]
    std::vector<cplx> phi_at_zero;         // phi(0, b)
    std::vector<cplx> dphi_dt_at_zero;     // d/dt phi(0, b) = -(i/hbar) sqrt(hbar kappa/m) (H psi0)(b)
    double norm_sq = 0.0;
    DetectionRecord record;

    std::size_t samples() const { return times.size(); }
    double density(std::size_t k) const {
        double s = 0.0;
        for (const auto& ch : phi) s += std::norm(ch[k]);
        return s;
    }
};

struct DilationOptions {
    double t_max = 0.0;
    double stop_below_residual = 0.0;
    double max_residual_bounded = 1e-6;  // p = 1 regions must be (nearly) emptied by t_max
};

inline DilationField build_dilation_field(const Propagator& prop, const WaveFunction& psi0,
                                          const DilationOptions& opt) {
    const auto& h = prop.hamiltonian();
    const auto& c = h.constants();
    const double amp = std::sqrt(c.hbar * h.detector().kappa() / c.mass);
    const auto nodes = prop.grid().absorbing_nodes();

    DilationField f;
    f.dt = prop.dt();
    f.hbar = c.hbar;
    f.phi.assign(nodes.size(), {});
    const auto hpsi = h.apply(psi0);
    for (const auto& b : nodes) {
        f.phi_at_zero.push_back(amp * psi0[b.index]);
        f.dphi_dt_at_zero.push_back(cplx{0.0, -1.0 / c.hbar} * amp * hpsi[b.index]);
    }
    EvolveOptions eo;
    eo.t_max = opt.t_max;
    eo.stop_below_residual = opt.stop_below_residual;
    eo.observer = [&](const StepView& s) {
        f.times.push_back(s.t_begin + 0.5 * s.dt);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto j = nodes[i].index;
            f.phi[i].push_back(amp * 0.5 * (s.before[j] + s.after[j]));
        }
    };
    f.record = evolve(prop, psi0, eo);
    if (f.record.bounded && f.record.residual_norm_sq > opt.max_residual_bounded)
        throw std::domain_error("dilation field: residual probability " + std::to_string(f.record.residual_norm_sq) +
                                " left at t_max; J psi is not captured");
    detail::CompensatedSum s;
    for (std::size_t k = 0; k < f.samples(); ++k) s.add(f.density(k) * f.dt);
    f.norm_sq = s.value();
    return f;
}

/// max_k,b |J(W_s psi)(t_k, b) - (J psi)(t_k + s, b)| relative to max |J psi|.
inline double intertwine_check(const Propagator& prop, const WaveFunction& psi0, std::size_t shift_steps,
                               std::size_t window_steps) {
    if (window_steps == 0) throw std::invalid_argument("intertwining window is empty");
    const double dt = prop.dt();
    DilationOptions full{static_cast<double>(shift_steps + window_steps) * dt, 0.0, 1.0};
    const auto a = build_dilation_field(prop, psi0, full);
    const auto shifted_state = evolve_state(prop, psi0, shift_steps);
    // W_s psi is not a unit vector; rescale, then undo the rescaling in phi.
    const double n = std::sqrt(norm_sq(shifted_state));
    if (!(n > 0.0)) return 0.0;
    DilationOptions win{static_cast<double>(window_steps) * dt, 0.0, 1.0};
    const auto b = build_dilation_field(prop, shifted_state.scaled(1.0 / n), win);
    double peak = 0.0, defect = 0.0;
    for (std::size_t ch = 0; ch < a.phi.size(); ++ch)
        for (std::size_t k = 0; k < window_steps; ++k) {
            peak = std::max(peak, std::abs(a.phi[ch][k + shift_steps]));
            defect = std::max(defect, std::abs(n * b.phi[ch][k] - a.phi[ch][k + shift_steps]));
        }
    return peak > 0.0 ? defect / peak : defect;
}

struct DilationStats {
    double norm_sq = 0.0;
    double mean_T_tilde = 0.0;
    double sigma_T_tilde = 0.0;
    double mean_H_tilde = 0.0;
    double second_H_tilde = 0.0;  // ||H~ phi||^2 / ||phi||^2
    double sigma_H_tilde = 0.0;
    double sigma_H_tilde_raw = 0.0;  // symbol -hbar omega, no step correction
    double sigma_H_tilde_fd = 0.0;   // central differences in t
    double kennard_product = 0.0;
    double tail_fraction = 0.0;     // share of |phi|^2 inside the taper region

    /// <(E - c)^2> over the normalized frequency distribution of phi.
    double shifted_second_moment(double c) const {
        return second_H_tilde - 2.0 * c * mean_H_tilde + c * c;
    }
};

struct DilationStatsOptions {
    std::size_t padding = 4;
    double taper_fraction = 0.05;     // trailing share of samples rolled off smoothly before the DFT
    double max_tail_fraction = 1e-6;  // allowed share of |phi|^2 in the taper region
};

/// sigma of T~ (multiplication by t) and H~ = i hbar d/dt on the dilation field.
/// H~ is diagonal after a Fourier transform in t. On samples produced by the
/// Crank-Nicolson step the matching derivative is the bilinear one, with symbol
/// E(omega) = -(2 hbar/dt) tan(omega dt/2); with it H~ J psi = J H psi holds on the
/// grid. The plain symbol -hbar omega and central differences are kept as the
/// cross-checks sigma_H_tilde_raw and sigma_H_tilde_fd.
inline DilationStats dilation_stats(const DilationField& f, const DilationStatsOptions& opt = {}) {
    const std::size_t n = f.samples();
    if (n < 4) throw std::invalid_argument("dilation field too short");
    DilationStats st;

    detail::CompensatedSum s0, s1;
    for (std::size_t k = 0; k < n; ++k) {
        s0.add(f.density(k));
        s1.add(f.times[k] * f.density(k));
    }
    st.norm_sq = s0.value() * f.dt;
    st.mean_T_tilde = s1.value() / s0.value();
    detail::CompensatedSum s2;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = f.times[k] - st.mean_T_tilde;
        s2.add(d * d * f.density(k));
    }
    st.sigma_T_tilde = std::sqrt(s2.value() / s0.value());

    const auto taper_start = static_cast<std::size_t>(static_cast<double>(n) * (1.0 - opt.taper_fraction));
    double tail = 0.0;
    for (std::size_t k = taper_start; k < n; ++k) tail += f.density(k);
    st.tail_fraction = tail / s0.value();
    if (st.tail_fraction > opt.max_tail_fraction)
        throw std::domain_error("dilation field has not decayed inside the sampled window");

    const std::size_t m = std::bit_ceil(opt.padding * n);
    const double domega = 2.0 * std::numbers::pi / (static_cast<double>(m) * f.dt);
    Eigen::FFT<double> fft;
    double w_total = 0.0, e1 = 0.0, e2 = 0.0, r1 = 0.0, r2 = 0.0;
    double fd_norm = 0.0, fd1 = 0.0, fd2 = 0.0;
    std::vector<cplx> in(m), out(m);
    for (const auto& ch : f.phi) {
        std::fill(in.begin(), in.end(), cplx{});
        for (std::size_t k = 0; k < n; ++k) {
            const double u = k < taper_start ? 0.0
                                             : static_cast<double>(k - taper_start) /
                                                   static_cast<double>(std::max<std::size_t>(1, n - taper_start));
            in[k] = ch[k] * detail::smooth_cutoff(u);
        }
        fft.fwd(out, in);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == m / 2) continue;  // tan pole at the Nyquist bin
            const double js = j < m / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(m);
            const double omega = js * domega;
            const double e = -2.0 * f.hbar / f.dt * std::tan(0.5 * omega * f.dt);
            const double er = -f.hbar * omega;
            const double w = std::norm(out[j]);
            w_total += w;
            e1 += e * w;
            e2 += e * e * w;
            r1 += er * w;
            r2 += er * er * w;
        }
        // central differences with phi = 0 before the first sample
        for (std::size_t k = 0; k < n; ++k) {
            const cplx prev = k > 0 ? in[k - 1] : cplx{};
            const cplx next = k + 1 < n ? in[k + 1] : cplx{};
            const cplx d = (next - prev) / (2.0 * f.dt);
            const cplx hphi = cplx{0.0, f.hbar} * d;
            fd_norm += std::norm(in[k]);
            fd1 += std::real(std::conj(in[k]) * hphi);
            fd2 += std::norm(hphi);
        }
    }
    st.mean_H_tilde = e1 / w_total;
    st.second_H_tilde = e2 / w_total;
    st.sigma_H_tilde = std::sqrt(std::max(0.0, st.second_H_tilde - st.mean_H_tilde * st.mean_H_tilde));
    st.sigma_H_tilde_raw = std::sqrt(std::max(0.0, r2 / w_total - (r1 / w_total) * (r1 / w_total)));
    const double fm = fd1 / fd_norm;
    st.sigma_H_tilde_fd = std::sqrt(std::max(0.0, fd2 / fd_norm - fm * fm));
    st.kennard_product = st.sigma_T_tilde * st.sigma_H_tilde;
    return st;
}

/// The inequality chain behind the conditional bound, evaluated link by link:
///   hbar^2 / (4 sigma_T^2)  <=  sigma^2_{H~, J psi/sqrt p}
///                           <=  (1/p) ||(H~ - c) J psi||^2
///                           <=  (1/p) ||(H - c) psi||^2 = (sigma_E^2 + (<H> - c)^2) / p
/// with c = <H>_psi, so the last link is sigma_E^2 / p.
struct ConditionalChain {
    double p = 0.0;
    double kennard_lhs = 0.0;
    double var_H_tilde = 0.0;
    double shifted_second_moment = 0.0;
    double operator_bound = 0.0;

    bool ordered(double rel_tol) const {
        return kennard_lhs <= var_H_tilde * (1.0 + rel_tol) && var_H_tilde <= shifted_second_moment * (1.0 + rel_tol) &&
               shifted_second_moment <= operator_bound * (1.0 + rel_tol);
    }
};

inline ConditionalChain conditional_chain(const DilationStats& st, double mean_E, double sigma_E, double hbar) {
    ConditionalChain ch;
    ch.p = st.norm_sq;
    ch.kennard_lhs = hbar * hbar / (4.0 * st.sigma_T_tilde * st.sigma_T_tilde);
    ch.var_H_tilde = st.sigma_H_tilde * st.sigma_H_tilde;
    ch.shifted_second_moment = st.shifted_second_moment(mean_E);
    ch.operator_bound = sigma_E * sigma_E / ch.p;
    return ch;
}

}  // namespace detlab
