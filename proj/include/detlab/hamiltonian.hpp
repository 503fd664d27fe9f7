#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "detlab/geometry.hpp"
#include "detlab/tridiagonal.hpp"
#include "detlab/wavefunction.hpp"

namespace detlab {

/// Real potential on the grid: V_k = field[k] + offset. An empty field means
/// V is the uniform offset alone. The offset is kept separate so propagation
/// can treat it as an exact global phase.
struct Potential {
    std::vector<double> field;
    double offset = 0.0;

    static Potential none() { return {}; }
    static Potential constant(double c) { return {{}, c}; }
    static Potential gaussian_bump(const Grid& grid, double height, double center, double width) {
        if (!(width > 0.0)) throw std::invalid_argument("potential width must be positive");
        Potential p;
        p.field.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double z = (grid.position(k) - center) / width;
            p.field[k] = height * std::exp(-0.5 * z * z);
        }
        return p;
    }

    double at(std::size_t k) const { return (field.empty() ? 0.0 : field[k]) + offset; }
    bool is_zero() const {
        if (offset != 0.0) return false;
        for (double v : field)
            if (v != 0.0) return false;
        return true;
    }
    void validate(std::size_t n) const {
        if (!std::isfinite(offset)) throw std::invalid_argument("potential offset is not finite");
        if (!field.empty() && field.size() != n) throw std::invalid_argument("potential size does not match grid");
        for (double v : field)
            if (!std::isfinite(v)) throw std::invalid_argument("potential has non-finite entries");
    }
};

/// Tridiagonal -(hbar^2/2m) d^2/dx^2 + V with the absorbing Robin rows
/// n.grad psi = i kappa psi eliminated through a centered ghost node. The matrix
/// acts on the active nodes only; Dirichlet nodes are pinned to zero.
///
/// With the trapezoidal inner product the skew part is exactly
///   -(i/hbar)(H* - H) = (hbar kappa/m) B,   B = sum_b |b><b| / w_b,
/// so <psi, B psi> = sum_b |psi_b|^2 is the boundary concentration.
class DiscreteHamiltonian {
public:
    DiscreteHamiltonian(Grid grid, PhysicalConstants constants, DetectorSpec detector, Potential potential)
        : grid_(std::move(grid)), constants_(constants), detector_(detector), potential_(std::move(potential)) {
        constants_.validate();
        potential_.validate(grid_.size());
        begin_ = grid_.active_begin();
        end_ = grid_.active_end();
        const std::size_t n = end_ - begin_;
        matrix_.sub.assign(n, cplx{});
        matrix_.diag.assign(n, cplx{});
        matrix_.sup.assign(n, cplx{});

        const double dx = grid_.dx();
        const double c0 = constants_.hbar * constants_.hbar / (2.0 * constants_.mass * dx * dx);
        const double kappa = detector_.kappa();
        const std::size_t last = grid_.size() - 1;
        const bool ball = std::holds_alternative<Ball>(grid_.geometry());

        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = begin_ + i;
            matrix_.sub[i] = -c0;
            matrix_.sup[i] = -c0;
            matrix_.diag[i] = 2.0 * c0 + potential_.at(k);
            if (k == 0) {
                // ghost psi_{-1} = psi_1 + 2 i kappa dx psi_0
                matrix_.sup[i] = -2.0 * c0;
                matrix_.diag[i] -= c0 * cplx{0.0, 2.0 * kappa * dx};
            } else if (k == last) {
                // ghost psi_{N+1} = psi_{N-1} + 2 dx (g + i kappa) psi_N, g = 1/R for the radial line
                const double g = ball ? 1.0 / grid_.extent() : 0.0;
                matrix_.sub[i] = -2.0 * c0;
                matrix_.diag[i] -= c0 * cplx{2.0 * g * dx, 2.0 * kappa * dx};
            }
        }
        matrix_.sub[0] = 0.0;
        matrix_.sup[n - 1] = 0.0;
    }

    const Grid& grid() const { return grid_; }
    const PhysicalConstants& constants() const { return constants_; }
    const DetectorSpec& detector() const { return detector_; }
    const Potential& potential() const { return potential_; }
    double energy_offset() const { return potential_.offset; }

    std::size_t active_begin() const { return begin_; }
    std::size_t active_end() const { return end_; }
    std::size_t active_size() const { return end_ - begin_; }
    const Tridiagonal<cplx>& matrix() const { return matrix_; }

    /// out = H in on the full grid; pinned nodes map to zero.
    void apply(std::span<const cplx> in, std::span<cplx> out) const {
        std::fill(out.begin(), out.end(), cplx{});
        matrix_.multiply(in.subspan(begin_, active_size()), out.subspan(begin_, active_size()));
    }

    WaveFunction apply(const WaveFunction& psi) const {
        std::vector<cplx> out(psi.size());
        apply(psi.values(), out);
        return {psi.grid(), psi.constants(), std::move(out)};
    }

    /// Matrix element H(i, j) in node indices (zero outside the band or the active set).
    cplx element(std::size_t i, std::size_t j) const {
        if (i < begin_ || i >= end_ || j < begin_ || j >= end_) return {};
        const std::size_t a = i - begin_;
        if (i == j) return matrix_.diag[a];
        if (j + 1 == i) return matrix_.sub[a];
        if (i + 1 == j) return matrix_.sup[a];
        return {};
    }

private:
    Grid grid_;
    PhysicalConstants constants_;
    DetectorSpec detector_;
    Potential potential_;
    std::size_t begin_ = 0, end_ = 0;
    Tridiagonal<cplx> matrix_;
};

inline DiscreteHamiltonian assemble_hamiltonian(const Grid& grid, const PhysicalConstants& constants,
                                                const DetectorSpec& detector, Potential potential = {}) {
    return {grid, constants, detector, std::move(potential)};
}

/// Discrete boundary concentration <psi, B psi> = sum over detector nodes of |psi_b|^2.
inline double boundary_concentration(const Grid& grid, std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& b : grid.absorbing_nodes()) s += std::norm(v[b.index]);
    return s;
}

}  // namespace detlab
