#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace detlab {

/// Tridiagonal matrix with row i = sub[i]*x[i-1] + diag[i]*x[i] + sup[i]*x[i+1].
/// sub[0] and sup[n-1] are ignored.
template <typename T>
struct Tridiagonal {
    std::vector<T> sub, diag, sup;

    std::size_t size() const { return diag.size(); }

    void multiply(std::span<const T> x, std::span<T> out) const {
        const std::size_t n = size();
        if (n == 1) {
            out[0] = diag[0] * x[0];
            return;
        }
        out[0] = diag[0] * x[0] + sup[0] * x[1];
        for (std::size_t i = 1; i + 1 < n; ++i) out[i] = sub[i] * x[i - 1] + diag[i] * x[i] + sup[i] * x[i + 1];
        out[n - 1] = sub[n - 1] * x[n - 2] + diag[n - 1] * x[n - 1];
    }
};

/// Prefactored twisted elimination (no pivoting): rows [0, m) are eliminated
/// downwards and rows [m, n) upwards, so every sweep runs two independent
/// recurrences. Suitable for the diagonally dominant Crank-Nicolson factors; a
/// vanishing pivot is reported, not hidden.
template <typename T>
class TridiagonalSolver {
public:
    explicit TridiagonalSolver(const Tridiagonal<T>& m)
        : n_(m.size()), mid_(m.size() / 2), inv_pivot_(m.size()), carry_(m.size()), couple_(m.size()) {
        if (n_ == 0) throw std::invalid_argument("empty tridiagonal system");
        if (m.sub.size() != n_ || m.sup.size() != n_) throw std::invalid_argument("tridiagonal band sizes differ");
        auto invert = [](T pivot, std::size_t row) {
            if (std::abs(pivot) < 1e-300)
                throw std::runtime_error("singular tridiagonal system (zero pivot at row " + std::to_string(row) + ")");
            return T(1) / pivot;
        };
        if (n_ == 1) {
            inv_pivot_[0] = invert(m.diag[0], 0);
            return;
        }
        // top: x_i + couple_i x_{i+1} = y_i, y_i = r_i inv_pivot_i - carry_i y_{i-1}
        for (std::size_t i = 0; i < mid_; ++i) {
            const T pivot = i == 0 ? m.diag[0] : m.diag[i] - m.sub[i] * couple_[i - 1];
            inv_pivot_[i] = invert(pivot, i);
            carry_[i] = i == 0 ? T(0) : m.sub[i] * inv_pivot_[i];
            couple_[i] = m.sup[i] * inv_pivot_[i];
        }
        // bottom: x_i + couple_i x_{i-1} = z_i, z_i = r_i inv_pivot_i - carry_i z_{i+1}
        for (std::size_t i = n_; i-- > mid_;) {
            const T pivot = i + 1 == n_ ? m.diag[i] : m.diag[i] - m.sup[i] * couple_[i + 1];
            inv_pivot_[i] = invert(pivot, i);
            carry_[i] = i + 1 == n_ ? T(0) : m.sup[i] * inv_pivot_[i];
            couple_[i] = m.sub[i] * inv_pivot_[i];
        }
        inv_junction_ = invert(T(1) - couple_[mid_] * couple_[mid_ - 1], mid_);
    }

    void solve_in_place(std::span<T> rhs) const {
        if (rhs.size() != n_) throw std::invalid_argument("right-hand side has the wrong size");
        auto r = [&](std::size_t i) { return rhs[i]; };
        sweep(r, r, rhs);
    }

    /// out = M^{-1} (a x); x and out must not alias.
    void solve_product(const Tridiagonal<T>& a, std::span<const T> x, std::span<T> out) const {
        if (n_ == 1) {
            out[0] = a.diag[0] * x[0] * inv_pivot_[0];
            return;
        }
        const T* as = a.sub.data();
        const T* ad = a.diag.data();
        const T* au = a.sup.data();
        const T* xv = x.data();
        const std::size_t last = n_ - 1;
        sweep([=](std::size_t i) { return as[i] * xv[i - 1] + ad[i] * xv[i] + au[i] * xv[i + 1]; },
              [=](std::size_t i) {
                  return i == 0 ? ad[0] * xv[0] + au[0] * xv[1] : as[last] * xv[last - 1] + ad[last] * xv[last];
              },
              out);
    }

    std::size_t size() const { return n_; }

private:
    // rhs(i) for interior rows, edge(i) for rows 0 and n-1. Both may read entry i
    // of out just before it is overwritten, never after.
    template <typename Rhs, typename Edge>
    void sweep(Rhs rhs, Edge edge, std::span<T> out) const {
        if (n_ == 1) {
            out[0] = edge(0) * inv_pivot_[0];
            return;
        }
        const T* ip = inv_pivot_.data();
        const T* cr = carry_.data();
        const T* cp = couple_.data();
        T* o = out.data();
        const std::size_t n = n_, m = mid_;
        T y = edge(0) * ip[0];
        T z = edge(n - 1) * ip[n - 1];
        o[0] = y;
        o[n - 1] = z;
        for (std::size_t k = 1; k < m; ++k) {
            const std::size_t j = n - 1 - k;
            y = rhs(k) * ip[k] - cr[k] * y;
            z = rhs(j) * ip[j] - cr[j] * z;
            o[k] = y;
            o[j] = z;
        }
        if (n - m > m) {  // odd n: the bottom half has one more row
            z = rhs(m) * ip[m] - cr[m] * z;
            o[m] = z;
        }
        const T xm = (o[m] - cp[m] * o[m - 1]) * inv_junction_;
        o[m] = xm;
        T up = o[m - 1] - cp[m - 1] * xm, down = xm;
        o[m - 1] = up;
        for (std::size_t k = 1; k < m; ++k) {
            up = o[m - 1 - k] - cp[m - 1 - k] * up;
            down = o[m + k] - cp[m + k] * down;
            o[m - 1 - k] = up;
            o[m + k] = down;
        }
        if (n - m > m) o[n - 1] -= cp[n - 1] * down;
    }

    std::size_t n_;
    std::size_t mid_;
    std::vector<T> inv_pivot_;
    std::vector<T> carry_;   // couples the eliminated right-hand side to its predecessor
    std::vector<T> couple_;  // couples x_i to the unknown still ahead of the sweep
    T inv_junction_{};
};

}  // namespace detlab
