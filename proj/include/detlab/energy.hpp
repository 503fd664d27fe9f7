#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "detlab/geometry.hpp"
#include "detlab/hamiltonian.hpp"
#include "detlab/wavefunction.hpp"

namespace detlab {

enum class EnergyRoute { FreeSpectral, OperatorMoments, DirichletExpansion, NonSelfAdjoint };

inline std::string to_string(EnergyRoute r) {
    switch (r) {
        case EnergyRoute::FreeSpectral: return "free_spectral";
        case EnergyRoute::OperatorMoments: return "operator_moments";
        case EnergyRoute::DirichletExpansion: return "dirichlet_expansion";
        default: return "non_self_adjoint";
    }
}

struct EnergyStats {
    double mean_E = 0.0;
    double var_E = 0.0;
    double sigma_E = 0.0;
    EnergyRoute route = EnergyRoute::FreeSpectral;
    double imag_defect = 0.0;       // non-self-adjoint route: |Im| of the moment formulas, relative
    double truncation_defect = 0.0;  // Dirichlet route: 1 - sum |c_n|^2

    static EnergyStats from_moments(double m1, double m2, EnergyRoute route) {
        EnergyStats s;
        s.mean_E = m1;
        s.var_E = std::max(0.0, m2 - m1 * m1);
        s.sigma_E = std::sqrt(s.var_E);
        s.route = route;
        return s;
    }
};

namespace detail {

inline std::vector<std::size_t> boundary_indices(const Grid& grid) {
    return {0, grid.size() - 1};
}

inline void require_boundary_vanishing(const WaveFunction& psi, const char* what) {
    const auto idx = boundary_indices(psi.grid());
    if (relative_amplitude_at(psi, idx) > 1e-12)
        throw HypothesisError(std::string(what) +
                              ": state does not vanish on the boundary; zero extension beyond the region is invalid");
}

/// Power spectrum of the zero-extended state on a periodic box of at least
/// `padding` times the grid length. Ball states are odd-extended (sine transform).
struct PowerSpectrum {
    std::vector<double> k;
    std::vector<double> weight;  // |psi_hat|^2 normalized to sum 1
};

inline PowerSpectrum power_spectrum(const WaveFunction& psi, std::size_t padding) {
    const std::size_t n = psi.size();
    const bool ball = std::holds_alternative<Ball>(psi.grid().geometry());
    const std::size_t m = std::bit_ceil((ball ? 2 : 1) * padding * n);
    std::vector<cplx> in(m), out(m);
    if (ball) {
        for (std::size_t j = 1; j < n; ++j) {
            in[j] = psi[j];
            in[m - j] = -psi[j];
        }
    } else {
        for (std::size_t j = 0; j < n; ++j) in[j] = psi[j];
    }
    Eigen::FFT<double> fft;
    fft.fwd(out, in);
    PowerSpectrum ps;
    ps.k.resize(m);
    ps.weight.resize(m);
    const double dk = 2.0 * std::numbers::pi / (static_cast<double>(m) * psi.grid().dx());
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double js = j < m / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(m);
        ps.k[j] = js * dk;
        ps.weight[j] = std::norm(out[j]);
        total += ps.weight[j];
    }
    for (auto& w : ps.weight) w /= total;
    return ps;
}

}  // namespace detail

/// Largest one-sided slope at the region's edges relative to the largest slope
/// inside. A kink in the zero extension makes the free <H^2> diverge. The ball
/// centre is skipped: u = r psi is odd-extended there.
inline double edge_slope(const WaveFunction& psi) {
    const auto& grid = psi.grid();
    const std::size_t last = grid.size() - 1;
    double peak = 0.0;
    for (std::size_t k = 0; k < last; ++k) peak = std::max(peak, std::abs(psi[k + 1] - psi[k]));
    if (peak == 0.0) return 0.0;
    double edge = std::abs(psi[last] - psi[last - 1]);
    if (!std::holds_alternative<Ball>(grid.geometry())) edge = std::max(edge, std::abs(psi[1] - psi[0]));
    return edge / peak;
}

/// sigma_E of the free Hamiltonian from the Fourier transform of the zero-extended state.
inline EnergyStats sigmaE_spectral(const WaveFunction& psi, std::size_t padding_factor = 8) {
    if (padding_factor < 8) throw std::invalid_argument("padding_factor must be at least 8");
    detail::require_boundary_vanishing(psi, "free spectral energy");
    const auto ps = detail::power_spectrum(psi, padding_factor);
    const auto& c = psi.constants();
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < ps.k.size(); ++j) {
        const double e = c.hbar * c.hbar * ps.k[j] * ps.k[j] / (2.0 * c.mass);
        m1 += e * ps.weight[j];
        m2 += e * e * ps.weight[j];
    }
    return EnergyStats::from_moments(m1, m2, EnergyRoute::FreeSpectral);
}

struct MomentumStats {
    double mean_p = 0.0;
    double sigma_p = 0.0;
};

inline MomentumStats momentum_moments(const WaveFunction& psi, std::size_t padding_factor = 8) {
    const auto ps = detail::power_spectrum(psi, padding_factor);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t j = 0; j < ps.k.size(); ++j) {
        const double p = psi.constants().hbar * ps.k[j];
        m1 += p * ps.weight[j];
        m2 += p * p * ps.weight[j];
    }
    return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

namespace detail {

// Interior stencil of -(hbar^2/2m) d^2 + V, closed by psi = 0 at the end nodes.
inline std::vector<cplx> apply_dirichlet_stencil(const WaveFunction& psi, std::span<const cplx> v,
                                                 const Potential& potential) {
    const auto& c = psi.constants();
    const double dx = psi.grid().dx();
    const double c0 = c.hbar * c.hbar / (2.0 * c.mass * dx * dx);
    std::vector<cplx> out(v.size());
    for (std::size_t k = 1; k + 1 < v.size(); ++k)
        out[k] = -c0 * (v[k - 1] - 2.0 * v[k] + v[k + 1]) + potential.at(k) * v[k];
    return out;
}

}  // namespace detail

/// <H> and <H^2> - <H>^2 with H the discrete -(hbar^2/2m) d^2 + V on boundary-vanishing states.
inline EnergyStats sigmaE_operator(const WaveFunction& psi, const Potential& potential = {}) {
    potential.validate(psi.size());
    detail::require_boundary_vanishing(psi, "operator moments");
    const auto h1 = detail::apply_dirichlet_stencil(psi, psi.values(), potential);
    const auto h2 = detail::apply_dirichlet_stencil(psi, h1, potential);
    const auto& grid = psi.grid();
    cplx m1{}, m2{};
    for (std::size_t k = 0; k < psi.size(); ++k) {
        m1 += grid.weight(k) * std::conj(psi[k]) * h1[k];
        m2 += grid.weight(k) * std::conj(psi[k]) * h2[k];
    }
    auto s = EnergyStats::from_moments(m1.real(), m2.real(), EnergyRoute::OperatorMoments);
    s.imag_defect = std::max(std::abs(m1.imag()), std::abs(m2.imag()) / std::max(1.0, std::abs(m2.real())));
    return s;
}

/// The moment formulas evaluated with the non-self-adjoint absorbing H itself.
/// Requires psi and H psi to vanish at the detector nodes; the imaginary parts
/// of <psi,H psi> and <psi,H^2 psi> are reported as imag_defect.
inline EnergyStats sigmaE_non_self_adjoint(const WaveFunction& psi, const DiscreteHamiltonian& h) {
    if (!(psi.grid() == h.grid())) throw std::invalid_argument("state and Hamiltonian on different grids");
    detail::require_boundary_vanishing(psi, "non-self-adjoint moments");
    std::vector<cplx> h1(psi.size()), h2(psi.size());
    h.apply(psi.values(), h1);
    double peak = 0.0;
    for (const auto& x : h1) peak = std::max(peak, std::abs(x));
    for (const auto& b : psi.grid().absorbing_nodes())
        if (std::abs(h1[b.index]) > 1e-10 * peak)
            throw HypothesisError("non-self-adjoint moments: H psi does not vanish on the boundary");
    h.apply(h1, h2);
    const auto& grid = psi.grid();
    cplx m1{}, m2{};
    for (std::size_t k = 0; k < psi.size(); ++k) {
        m1 += grid.weight(k) * std::conj(psi[k]) * h1[k];
        m2 += grid.weight(k) * std::conj(psi[k]) * h2[k];
    }
    auto s = EnergyStats::from_moments(m1.real(), m2.real(), EnergyRoute::NonSelfAdjoint);
    s.imag_defect = std::max(std::abs(m1.imag()) / std::max(1.0, std::abs(m1.real())),
                             std::abs(m2.imag()) / std::max(1.0, std::abs(m2.real())));
    return s;
}

enum class DirichletSpectrum { Continuum, Discrete };

/// Expansion in the Dirichlet modes sqrt(2/L) sin(n pi x/L):
/// moments sum_n |c_n|^2 E_n^j with E_n = n^2 pi^2 hbar^2/2mL^2 (Continuum) or the
/// eigenvalues of the discrete stencil (Discrete).
inline EnergyStats sigmaE_dirichlet(const WaveFunction& psi, std::size_t n_modes,
                                    DirichletSpectrum spectrum = DirichletSpectrum::Continuum) {
    const auto* iv = std::get_if<Interval>(&psi.grid().geometry());
    if (!iv) throw std::invalid_argument("Dirichlet expansion requires an interval geometry");
    detail::require_boundary_vanishing(psi, "Dirichlet expansion");
    const auto& grid = psi.grid();
    const std::size_t cells = grid.n_interior() + 1;
    n_modes = std::min(n_modes, grid.n_interior());
    if (n_modes == 0) throw std::invalid_argument("n_modes must be positive");

    // sin(pi j / cells) for j in [0, 2 cells)
    std::vector<double> table(2 * cells);
    for (std::size_t j = 0; j < table.size(); ++j)
        table[j] = std::sin(std::numbers::pi * static_cast<double>(j) / static_cast<double>(cells));

    const double L = iv->length;
    const double scale = std::sqrt(2.0 / L) * grid.dx();
    const auto& c = psi.constants();
    const double c0 = c.hbar * c.hbar / (2.0 * c.mass * grid.dx() * grid.dx());
    double total = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t n = 1; n <= n_modes; ++n) {
        cplx coef{};
        for (std::size_t k = 1; k < cells; ++k) coef += psi[k] * table[(n * k) % (2 * cells)];
        const double p = std::norm(coef * scale);
        const double e = spectrum == DirichletSpectrum::Continuum
                             ? std::pow(static_cast<double>(n) * std::numbers::pi * c.hbar / L, 2) / (2.0 * c.mass)
                             : 4.0 * c0 * std::pow(std::sin(std::numbers::pi * static_cast<double>(n) /
                                                            (2.0 * static_cast<double>(cells))), 2);
        total += p;
        m1 += p * e;
        m2 += p * e * e;
    }
    const double defect = norm_sq(psi) - total;
    if (defect > 1e-6)
        throw std::domain_error("Dirichlet expansion truncated: missing probability " + std::to_string(defect));
    auto s = EnergyStats::from_moments(m1 / total, m2 / total, EnergyRoute::DirichletExpansion);
    s.truncation_defect = defect;
    return s;
}

/// Density of the free-energy distribution, sampled at Gauss-Legendre nodes
/// of panels uniform in k = sqrt(2mE)/hbar.
struct EnergyDensity {
    std::vector<double> energies;
    std::vector<double> rho;
    std::vector<double> weights;  // quadrature weights in E on `energies`
    double normalization_defect = 0.0;

    double moment(int j) const {
        double s = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) s += weights[i] * rho[i] * std::pow(energies[i], j);
        return s;
    }
};

struct EnergyDensityOptions {
    double panels_per_inverse_length = 2.0;  // k panels per unit 1/(support length)
    std::size_t min_panels = 2000;
    double tail_fraction = 1e-12;  // share of <E^2> beyond the last panel
};

namespace detail {

// 4-point Gauss-Legendre on [-1, 1].
inline constexpr double gl_nodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                       0.8611363115940526};
inline constexpr double gl_weights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                         0.3478548451374538};

// sum_j w_j v_j exp(-i k x_j) over the support [lo, hi)
inline cplx dtft(const WaveFunction& psi, double k, std::size_t lo, std::size_t hi) {
    const auto& grid = psi.grid();
    const cplx step = std::polar(1.0, -k * grid.dx());
    cplx phase = std::polar(1.0, -k * grid.position(lo));
    cplx s{};
    for (std::size_t j = lo; j < hi; ++j) {
        s += grid.weight(j) * psi[j] * phase;
        phase *= step;
        if ((j - lo) % 256 == 255) phase = std::polar(1.0, -k * grid.position(j + 1));
    }
    return s;
}

}  // namespace detail

/// rho(E) of the free Hamiltonian. On the line:
///   rho(E) = (1/hbar) sqrt(m/2E) (|psi_hat(k)|^2 + |psi_hat(-k)|^2),  k = sqrt(2mE)/hbar.
/// On the ball (spherically symmetric psi = u/(sqrt(4 pi) r)):
///   rho(E) = (sqrt(2 m^3 E)/hbar^3) 4 pi |psi_hat(k)|^2 with the 3D transform.
inline EnergyDensity energy_density(const WaveFunction& psi, const EnergyDensityOptions& opt = {}) {
    const auto spectral = sigmaE_spectral(psi);
    const auto& c = psi.constants();
    const bool ball = std::holds_alternative<Ball>(psi.grid().geometry());

    std::size_t lo = 0, hi = psi.size();
    while (lo < hi && psi[lo] == cplx{}) ++lo;
    while (hi > lo && psi[hi - 1] == cplx{}) --hi;
    const double dx = psi.grid().dx();
    const double support = std::max(static_cast<double>(hi - lo) * dx, 4.0 * dx);

    // k range: drop the part of the discrete spectrum that carries a negligible share of <E^2>
    const auto ps = detail::power_spectrum(psi, 8);
    std::vector<std::size_t> order(ps.k.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return std::abs(ps.k[x]) > std::abs(ps.k[y]); });
    const double second = spectral.var_E + spectral.mean_E * spectral.mean_E;
    double tail = 0.0, k_top = std::abs(ps.k[order.back()]);
    for (auto j : order) {
        const double e = c.hbar * c.hbar * ps.k[j] * ps.k[j] / (2.0 * c.mass);
        tail += e * e * ps.weight[j];
        if (tail > opt.tail_fraction * second) {
            k_top = std::abs(ps.k[j]);
            break;
        }
    }
    k_top = std::min(1.05 * k_top, std::numbers::pi / dx);

    const auto panels = std::max(opt.min_panels, static_cast<std::size_t>(std::ceil(
                                                     opt.panels_per_inverse_length * k_top * support)));
    const double h = k_top / static_cast<double>(panels);
    EnergyDensity d;
    std::vector<double> ks;
    for (std::size_t i = 0; i < panels; ++i)
        for (int q = 0; q < 4; ++q) {
            const double k = h * (static_cast<double>(i) + 0.5 * (detail::gl_nodes[q] + 1.0));
            ks.push_back(k);
            d.energies.push_back(c.hbar * c.hbar * k * k / (2.0 * c.mass));
            d.weights.push_back(0.5 * detail::gl_weights[q] * h * c.hbar * c.hbar * k / c.mass);  // dE = (hbar^2 k/m) dk
        }

    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    d.rho.resize(d.energies.size());
    for (std::size_t i = 0; i < d.energies.size(); ++i) {
        const double e = d.energies[i];
        const double k = ks[i];
        if (ball) {
            // S(k) = sum_j w_j u_j sin(k r_j); psi_hat_3d = (2 pi)^{-3/2} sqrt(4 pi) S / k
            const cplx plus = detail::dtft(psi, -k, lo, hi), minus = detail::dtft(psi, k, lo, hi);
            const cplx sine = (plus - minus) / cplx{0.0, 2.0};
            const double hat3 = std::pow(2.0 * std::numbers::pi, -1.5) * std::sqrt(4.0 * std::numbers::pi) / k;
            const double amp = std::norm(hat3 * sine);
            d.rho[i] = std::sqrt(2.0 * c.mass * c.mass * c.mass * e) / (c.hbar * c.hbar * c.hbar) * 4.0 *
                       std::numbers::pi * amp;
        } else {
            const double a = std::norm(inv_sqrt_2pi * detail::dtft(psi, k, lo, hi));
            const double b = std::norm(inv_sqrt_2pi * detail::dtft(psi, -k, lo, hi));
            d.rho[i] = std::sqrt(c.mass / (2.0 * e)) / c.hbar * (a + b);
        }
    }
    d.normalization_defect = d.moment(0) - 1.0;
    return d;
}

}  // namespace detlab
