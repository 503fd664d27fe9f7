#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace detlab {

/// Raised when an input violates a hypothesis the detection-time theorems rely
/// on (for example a state whose support reaches the detector surface).
class HypothesisError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct PhysicalConstants {
    double hbar = 1.0;
    double mass = 1.0;

    void validate() const {
        if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be positive");
        if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be positive");
    }
    friend bool operator==(const PhysicalConstants&, const PhysicalConstants&) = default;
};

enum class BoundaryKind { Absorbing, DirichletWall };

// Geometry variants. Ball is reduced to the radial line: values are u(r) = r*psi(r).
struct Interval {
    double length = 1.0;
    BoundaryKind left = BoundaryKind::Absorbing;
    BoundaryKind right = BoundaryKind::Absorbing;
    friend bool operator==(const Interval&, const Interval&) = default;
};

struct HalfLine {
    double x_truncate = 100.0;  // artificial far wall; the detector sits at x = 0
    friend bool operator==(const HalfLine&, const HalfLine&) = default;
};

struct Ball {
    double radius = 1.0;
    friend bool operator==(const Ball&, const Ball&) = default;
};

using Geometry = std::variant<Interval, HalfLine, Ball>;

inline double extent(const Geometry& g) {
    return std::visit([](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Interval>) return v.length;
        else if constexpr (std::is_same_v<T, HalfLine>) return v.x_truncate;
        else return v.radius;
    }, g);
}

inline BoundaryKind left_kind(const Geometry& g) {
    if (const auto* iv = std::get_if<Interval>(&g)) return iv->left;
    if (std::holds_alternative<HalfLine>(g)) return BoundaryKind::Absorbing;
    return BoundaryKind::DirichletWall;  // regularity u(0) = 0
}

inline BoundaryKind right_kind(const Geometry& g) {
    if (const auto* iv = std::get_if<Interval>(&g)) return iv->right;
    if (std::holds_alternative<HalfLine>(g)) return BoundaryKind::DirichletWall;
    return BoundaryKind::Absorbing;
}

/// True when Prob(T < infinity) = 1 for every state (bounded region with a detector).
inline bool is_bounded(const Geometry& g) { return !std::holds_alternative<HalfLine>(g); }

inline std::string geometry_name(const Geometry& g) {
    switch (g.index()) {
        case 0: return "interval";
        case 1: return "half_line";
        default: return "ball";
    }
}

inline void validate(const Geometry& g) {
    const double e = extent(g);
    if (!(e > 0.0) || !std::isfinite(e)) throw std::invalid_argument("geometry extent must be positive");
    if (const auto* iv = std::get_if<Interval>(&g)) {
        if (iv->left != BoundaryKind::Absorbing && iv->right != BoundaryKind::Absorbing)
            throw std::invalid_argument("interval needs at least one absorbing boundary");
    }
}

/// Detector sensitivity kappa (inverse length). kappa = 0 is only reachable
/// through reflecting(), a diagnostic mode without detection.
class DetectorSpec {
public:
    explicit DetectorSpec(double kappa) : kappa_(kappa) {
        if (!(kappa > 0.0) || !std::isfinite(kappa))
            throw std::invalid_argument("detector kappa must be positive");
    }
    static DetectorSpec reflecting() {
        DetectorSpec d(1.0);
        d.kappa_ = 0.0;
        return d;
    }
    double kappa() const { return kappa_; }
    bool is_reflecting() const { return kappa_ == 0.0; }

private:
    double kappa_;
};

/// A boundary node that carries a detector, with the sign of its outward normal.
struct BoundaryNode {
    std::size_t index;
    int outward;  // +1 at the right end, -1 at the left end
};

/// Uniform grid including both end nodes: x_k = k*dx, k = 0..n_interior+1.
class Grid {
public:
    Grid(Geometry geometry, std::size_t n_interior)
        : geometry_(std::move(geometry)), n_interior_(n_interior) {
        validate(geometry_);
        if (n_interior_ < 16) throw std::invalid_argument("n_interior must be at least 16");
        dx_ = detlab::extent(geometry_) / static_cast<double>(n_interior_ + 1);
    }

    const Geometry& geometry() const { return geometry_; }
    std::size_t n_interior() const { return n_interior_; }
    std::size_t size() const { return n_interior_ + 2; }
    double dx() const { return dx_; }
    double extent() const { return detlab::extent(geometry_); }

    double position(std::size_t k) const {
        return k == n_interior_ + 1 ? extent() : static_cast<double>(k) * dx_;
    }
    std::vector<double> node_positions() const {
        std::vector<double> x(size());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = position(k);
        return x;
    }

    /// Trapezoidal quadrature weight of node k.
    double weight(std::size_t k) const {
        return (k == 0 || k == n_interior_ + 1) ? 0.5 * dx_ : dx_;
    }

    std::vector<BoundaryNode> absorbing_nodes() const {
        std::vector<BoundaryNode> nodes;
        if (left_kind(geometry_) == BoundaryKind::Absorbing) nodes.push_back({0, -1});
        if (right_kind(geometry_) == BoundaryKind::Absorbing) nodes.push_back({n_interior_ + 1, +1});
        return nodes;
    }

    /// First and one-past-last node that evolves (Dirichlet nodes are pinned to zero).
    std::size_t active_begin() const { return left_kind(geometry_) == BoundaryKind::DirichletWall ? 1 : 0; }
    std::size_t active_end() const {
        return right_kind(geometry_) == BoundaryKind::DirichletWall ? n_interior_ + 1 : n_interior_ + 2;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.geometry_ == b.geometry_ && a.n_interior_ == b.n_interior_;
    }

private:
    Geometry geometry_;
    std::size_t n_interior_;
    double dx_ = 0.0;
};

inline Grid build_grid(const Geometry& geometry, std::size_t n_interior) {
    return Grid(geometry, n_interior);
}

}  // namespace detlab
