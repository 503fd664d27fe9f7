#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "detlab/geometry.hpp"

namespace detlab {

using cplx = std::complex<double>;

/// Complex amplitudes on a grid. For Ball geometries the stored values are the
/// reduced radial function u(r) = r*psi(r), normalized in the 1D measure dr.
class WaveFunction {
public:
    WaveFunction(Grid grid, PhysicalConstants constants, std::vector<cplx> values)
        : grid_(std::move(grid)), constants_(constants), values_(std::move(values)) {
        constants_.validate();
        if (values_.size() != grid_.size()) throw std::invalid_argument("wave function size does not match grid");
        for (const auto& v : values_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw std::invalid_argument("wave function has non-finite entries");
    }

    const Grid& grid() const { return grid_; }
    const PhysicalConstants& constants() const { return constants_; }
    std::span<const cplx> values() const { return values_; }
    cplx operator[](std::size_t k) const { return values_[k]; }
    std::size_t size() const { return values_.size(); }

    WaveFunction scaled(cplx factor) const {
        auto v = values_;
        for (auto& x : v) x *= factor;
        return {grid_, constants_, std::move(v)};
    }

private:
    Grid grid_;
    PhysicalConstants constants_;
    std::vector<cplx> values_;
};

inline double norm_sq(const Grid& grid, std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    s -= 0.5 * (std::norm(v.front()) + std::norm(v.back()));
    return s * grid.dx();
}

inline double norm_sq(const WaveFunction& psi) { return norm_sq(psi.grid(), psi.values()); }

/// Trapezoidal L2 inner product, conjugate-linear in the first argument.
inline cplx inner_product(const WaveFunction& f, const WaveFunction& g) {
    if (!(f.grid() == g.grid())) throw std::invalid_argument("inner product of states on different grids");
    cplx s{0.0, 0.0};
    const auto& grid = f.grid();
    for (std::size_t k = 0; k < f.size(); ++k) s += grid.weight(k) * std::conj(f[k]) * g[k];
    return s;
}

namespace detail {

// C-infinity step: 1 for t <= 0, 0 for t >= 1.
inline double smooth_cutoff(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    auto f = [](double z) { return z > 0.0 ? std::exp(-1.0 / z) : 0.0; };
    const double a = f(1.0 - t);
    return a / (a + f(t));
}

inline WaveFunction normalized(const Grid& grid, const PhysicalConstants& c, std::vector<cplx> v) {
    const double n2 = norm_sq(grid, v);
    if (!(n2 > 0.0)) throw std::invalid_argument("state has zero norm on this grid");
    const double s = 1.0 / std::sqrt(n2);
    for (auto& x : v) x *= s;
    return {grid, c, std::move(v)};
}

inline void require_interior_window(const Grid& grid, double lo, double hi, const std::string& what) {
    if (!(lo > 0.0 && hi < grid.extent()))
        throw HypothesisError(what + ": support [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] touches the boundary; the state must vanish on the detector surface");
}

}  // namespace detail

/// Gaussian packet exp(-(x-x0)^2/4 sigma^2) exp(i p0 x/hbar) with compact support
/// |x - x0| < 6 sigma. The envelope is rolled off smoothly between 5 and 6 sigma
/// so the state and all its differences vanish at the support edge.
inline WaveFunction make_gaussian(const Grid& grid, const PhysicalConstants& c, double x0, double p0, double sigma_x) {
    c.validate();
    if (!(sigma_x > 0.0)) throw std::invalid_argument("sigma_x must be positive");
    detail::require_interior_window(grid, x0 - 6.0 * sigma_x, x0 + 6.0 * sigma_x, "gaussian");
    std::vector<cplx> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double x = grid.position(k);
        const double u = std::abs(x - x0) / sigma_x;
        if (u >= 6.0) continue;
        const double env = std::exp(-0.25 * u * u) * detail::smooth_cutoff(u - 5.0);
        v[k] = env * std::polar(1.0, p0 * x / c.hbar);
    }
    return detail::normalized(grid, c, std::move(v));
}

/// Standard C-infinity bump exp(-1/(1-s^2)), s = (x-center)/half_width.
inline WaveFunction make_bump(const Grid& grid, const PhysicalConstants& c, double center, double half_width, double p0) {
    c.validate();
    if (!(half_width > 0.0)) throw std::invalid_argument("half_width must be positive");
    detail::require_interior_window(grid, center - half_width, center + half_width, "bump");
    std::vector<cplx> v(grid.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double x = grid.position(k);
        const double s = (x - center) / half_width;
        if (std::abs(s) >= 1.0) continue;
        v[k] = std::exp(-1.0 / (1.0 - s * s)) * std::polar(1.0, p0 * x / c.hbar);
    }
    return detail::normalized(grid, c, std::move(v));
}

/// sqrt(2/L) sin(n pi x/L) sampled on the grid (n >= 1).
inline double dirichlet_mode(double length, int n, double x) {
    return std::sqrt(2.0 / length) * std::sin(n * std::numbers::pi * x / length);
}

/// psi = sum_n c_n sqrt(2/L) sin(n pi x/L), coefficients indexed from n = 1.
inline WaveFunction make_mode_superposition(const Grid& grid, const PhysicalConstants& c,
                                           std::span<const cplx> coefficients) {
    c.validate();
    const auto* iv = std::get_if<Interval>(&grid.geometry());
    if (!iv) throw std::invalid_argument("mode superpositions require an interval geometry");
    if (coefficients.empty()) throw std::invalid_argument("no mode coefficients");
    double total = 0.0;
    for (const auto& a : coefficients) total += std::norm(a);
    if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("mode coefficients are not normalized");
    if (coefficients.size() > grid.n_interior())
        throw std::invalid_argument("more modes than the grid resolves");
    std::vector<cplx> v(grid.size());
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        const double x = grid.position(k);
        for (std::size_t n = 0; n < coefficients.size(); ++n)
            v[k] += coefficients[n] * dirichlet_mode(iv->length, static_cast<int>(n + 1), x);
    }
    return detail::normalized(grid, c, std::move(v));
}

/// Largest |psi| at the listed node indices, relative to max |psi|.
inline double relative_amplitude_at(const WaveFunction& psi, std::span<const std::size_t> nodes) {
    double peak = 0.0;
    for (const auto& v : psi.values()) peak = std::max(peak, std::abs(v));
    double worst = 0.0;
    for (auto k : nodes) worst = std::max(worst, std::abs(psi[k]));
    return peak > 0.0 ? worst / peak : 0.0;
}

/// Position of the right-most node with nonzero amplitude.
inline double support_right_edge(const WaveFunction& psi) {
    for (std::size_t k = psi.size(); k-- > 0;)
        if (psi[k] != cplx{0.0, 0.0}) return psi.grid().position(k);
    return 0.0;
}

}  // namespace detlab
