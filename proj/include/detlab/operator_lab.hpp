#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "detlab/hamiltonian.hpp"

namespace detlab {

/// Dense realization of the absorbing dynamics on a small grid, expressed in the
/// basis that is orthonormal for the trapezoidal inner product (psi -> D^{1/2} psi),
/// so that adjoints are conjugate transposes and norms are Euclidean.
struct DenseOperators {
    Eigen::MatrixXcd H;
    Eigen::MatrixXcd W;  // one Crank-Nicolson step
    Eigen::MatrixXcd B;  // boundary concentration, <psi,B psi> = sum_b |psi_b|^2
    Eigen::VectorXd sqrt_weights;
    std::size_t active_begin = 0;
    double dt = 0.0;
    double kappa = 0.0;
    PhysicalConstants constants;

    Eigen::Index size() const { return H.rows(); }
    double flux_scale() const { return constants.hbar * kappa / constants.mass; }

    /// Full-grid values to the orthonormal active basis.
    Eigen::VectorXcd embed(std::span<const cplx> values) const {
        Eigen::VectorXcd v(size());
        for (Eigen::Index i = 0; i < size(); ++i)
            v[i] = sqrt_weights[i] * values[active_begin + static_cast<std::size_t>(i)];
        return v;
    }
};

inline constexpr std::size_t max_dense_size = 512;

inline DenseOperators build_dense(const DiscreteHamiltonian& h, double dt) {
    const std::size_t n = h.active_size();
    if (n > max_dense_size) throw std::invalid_argument("dense operator lab is limited to 512 active nodes");
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    DenseOperators ops;
    ops.active_begin = h.active_begin();
    ops.dt = dt;
    ops.kappa = h.detector().kappa();
    ops.constants = h.constants();
    const auto N = static_cast<Eigen::Index>(n);
    ops.sqrt_weights.resize(N);
    for (Eigen::Index i = 0; i < N; ++i)
        ops.sqrt_weights[i] = std::sqrt(h.grid().weight(ops.active_begin + static_cast<std::size_t>(i)));

    ops.H = Eigen::MatrixXcd::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = std::max<Eigen::Index>(0, i - 1); j <= std::min<Eigen::Index>(N - 1, i + 1); ++j) {
            const auto gi = ops.active_begin + static_cast<std::size_t>(i);
            const auto gj = ops.active_begin + static_cast<std::size_t>(j);
            ops.H(i, j) = ops.sqrt_weights[i] * h.element(gi, gj) / ops.sqrt_weights[j];
        }

    ops.B = Eigen::MatrixXcd::Zero(N, N);
    for (const auto& b : h.grid().absorbing_nodes()) {
        const auto i = static_cast<Eigen::Index>(b.index - ops.active_begin);
        ops.B(i, i) = 1.0 / h.grid().weight(b.index);
    }

    const cplx a{0.0, dt / (2.0 * h.constants().hbar)};
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
    const Eigen::MatrixXcd shifted = ops.H - h.energy_offset() * I;
    ops.W = (I + a * shifted).partialPivLu().solve(I - a * shifted);
    ops.W *= std::polar(1.0, -h.energy_offset() * dt / h.constants().hbar);
    return ops;
}

inline double spectral_norm(const Eigen::MatrixXcd& a) {
    if (a.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

/// max |(-(i/hbar)(H* - H) - (hbar kappa/m) B)_{ij}| relative to max |H_{ij}|.
inline double skew_identity_residual(const DenseOperators& ops) {
    const cplx f{0.0, -1.0 / ops.constants.hbar};
    const Eigen::MatrixXcd r = f * (ops.H.adjoint() - ops.H) - ops.flux_scale() * ops.B;
    return r.cwiseAbs().maxCoeff() / std::max(1.0, ops.H.cwiseAbs().maxCoeff());
}

/// Number of eigenvalues of B above a relative threshold.
inline std::size_t boundary_rank(const DenseOperators& ops) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(ops.B, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (std::abs(es.eigenvalues()[i]) > 1e-12 * std::max(1.0, top)) ++r;
    return r;
}

/// W_t for t = steps*dt by binary powering.
inline Eigen::MatrixXcd step_power(const DenseOperators& ops, std::size_t steps) {
    Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(ops.size(), ops.size());
    Eigen::MatrixXcd base = ops.W;
    while (steps > 0) {
        if (steps & 1U) result = result * base;
        steps >>= 1U;
        if (steps > 0) base = base * base;
    }
    return result;
}

struct SemigroupReport {
    std::vector<std::size_t> steps;
    std::vector<double> norms;        // ||W_t|| per sampled t
    double max_norm = 0.0;
    double semigroup_defect = 0.0;    // max ||W_{t+s} - W_t W_s|| over sampled pairs
    bool monotone = true;             // norms non-increasing in t (to 1e-12)
};

inline SemigroupReport semigroup_contraction_check(const DenseOperators& ops, std::vector<std::size_t> steps) {
    std::sort(steps.begin(), steps.end());
    SemigroupReport rep;
    rep.steps = steps;
    std::vector<Eigen::MatrixXcd> powers;
    for (auto s : steps) {
        powers.push_back(step_power(ops, s));
        rep.norms.push_back(spectral_norm(powers.back()));
    }
    for (std::size_t i = 0; i < rep.norms.size(); ++i) {
        rep.max_norm = std::max(rep.max_norm, rep.norms[i]);
        if (i > 0 && rep.norms[i] > rep.norms[i - 1] * (1.0 + 1e-12)) rep.monotone = false;
    }
    for (std::size_t i = 0; i < steps.size(); ++i)
        for (std::size_t j = i; j < steps.size(); ++j) {
            const double d = (step_power(ops, steps[i] + steps[j]) - powers[i] * powers[j]).cwiseAbs().maxCoeff();
            rep.semigroup_defect = std::max(rep.semigroup_defect, d);
        }
    return rep;
}

/// || sum_k dt (hbar kappa/m) M_k* B M_k + W_T* W_T - I ||, M_k = (W_{t_k} + W_{t_{k+1}})/2.
/// For the Crank-Nicolson step this midpoint rule makes the identity exact.
inline double povm_completeness(const DenseOperators& ops, std::size_t steps) {
    const auto N = ops.size();
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(N, N);
    Eigen::MatrixXcd cur = Eigen::MatrixXcd::Identity(N, N);
    std::vector<Eigen::Index> boundary;
    for (Eigen::Index i = 0; i < N; ++i)
        if (ops.B(i, i) != cplx{}) boundary.push_back(i);
    for (std::size_t k = 0; k < steps; ++k) {
        Eigen::MatrixXcd next = ops.W * cur;
        for (auto b : boundary) {
            const Eigen::RowVectorXcd row = 0.5 * (cur.row(b) + next.row(b));
            acc.noalias() += (ops.dt * ops.flux_scale() * ops.B(b, b).real()) * (row.adjoint() * row);
        }
        cur = std::move(next);
    }
    acc += cur.adjoint() * cur;
    acc -= Eigen::MatrixXcd::Identity(N, N);
    return spectral_norm(acc);
}

enum class QuadratureRule { AveragedMidpoint, EndpointTrapezoid };

/// |<psi| sum_k dt F_k + W_T*W_T |psi> - <psi|psi>| for a single state.
inline double povm_completeness_state(const DenseOperators& ops, const Eigen::VectorXcd& psi, std::size_t steps,
                                      QuadratureRule rule) {
    Eigen::VectorXcd cur = psi, next;
    double acc = 0.0;
    auto conc = [&](const Eigen::VectorXcd& v) { return (v.adjoint() * ops.B * v)(0, 0).real(); };
    for (std::size_t k = 0; k < steps; ++k) {
        next = ops.W * cur;
        if (rule == QuadratureRule::AveragedMidpoint)
            acc += ops.dt * ops.flux_scale() * conc(0.5 * (cur + next));
        else
            acc += ops.dt * ops.flux_scale() * 0.5 * (conc(cur) + conc(next));
        cur = next;
    }
    return std::abs(acc + cur.squaredNorm() - psi.squaredNorm());
}

/// Largest |eigenvalue| of one step. Grid-scale modes of a Crank-Nicolson step
/// decay far slower than the eigenvalues of H suggest, so horizons come from here.
inline double step_spectral_radius(const DenseOperators& ops) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(ops.W, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Steps after which rho(W)^steps <= target.
inline std::size_t decay_steps(const DenseOperators& ops, double target) {
    const double rho = step_spectral_radius(ops);
    if (!(rho < 1.0)) throw std::domain_error("the step does not decay (spectral radius " + std::to_string(rho) + ")");
    const double steps = std::ceil(std::log(target) / std::log(rho));
    if (!(steps < 0x1.0p62)) throw std::domain_error("decay horizon too long for binary powering");
    return static_cast<std::size_t>(std::max(1.0, steps));
}

/// ||W_T* W_T|| = ||W_T||^2, the operator F({infinity}) truncated at T.
inline double undetected_operator_norm(const DenseOperators& ops, std::size_t steps) {
    const double n = spectral_norm(step_power(ops, steps));
    return n * n;
}

struct SpectrumReport {
    std::vector<cplx> eigenvalues;   // sorted by real part
    double max_imag = 0.0;
    double slowest_decay_rate = 0.0;  // -2 max Im / hbar
    double non_normality = 0.0;       // ||[H + H*, H - H*]|| relative to ||H||^2
};

inline SpectrumReport spectrum_check(const DenseOperators& ops) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(ops.H, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
    SpectrumReport rep;
    rep.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
              [](const cplx& a, const cplx& b) { return a.real() < b.real(); });
    rep.max_imag = -std::numeric_limits<double>::infinity();
    for (const auto& e : rep.eigenvalues) rep.max_imag = std::max(rep.max_imag, e.imag());
    rep.slowest_decay_rate = -2.0 * rep.max_imag / ops.constants.hbar;
    const Eigen::MatrixXcd herm = ops.H + ops.H.adjoint();
    const Eigen::MatrixXcd skew = ops.H - ops.H.adjoint();
    const double hn = ops.H.cwiseAbs().maxCoeff();
    rep.non_normality = (herm * skew - skew * herm).cwiseAbs().maxCoeff() / std::max(1.0, hn * hn);
    return rep;
}

}  // namespace detlab
