#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fkpp {

/// Thomas algorithm for lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored. Overwrites diag and rhs; the
/// solution is returned in rhs. No pivoting: intended for the diagonally
/// dominant systems produced by the time stepper.
inline void solve_tridiagonal(std::span<const double> lower, std::span<double> diag, std::span<const double> upper,
                              std::span<double> rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return;
    if (lower.size() != n || upper.size() != n || rhs.size() != n)
        throw std::invalid_argument("solve_tridiagonal: size mismatch");
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

/// LU factors of a tridiagonal matrix, kept so several right-hand sides can
/// be solved against one factorization.
class TridiagonalLU {
public:
    void factor(std::span<const double> lower, std::span<const double> diag, std::span<const double> upper) {
        const std::size_t n = diag.size();
        if (lower.size() != n || upper.size() != n) throw std::invalid_argument("TridiagonalLU: size mismatch");
        mult_.resize(n);
        inv_.resize(n);
        upper_.assign(upper.begin(), upper.end());
        if (n == 0) return;
        mult_[0] = 0.0;
        inv_[0] = 1.0 / diag[0];
        for (std::size_t i = 1; i < n; ++i) {
            mult_[i] = lower[i] * inv_[i - 1];
            inv_[i] = 1.0 / (diag[i] - mult_[i] * upper_[i - 1]);
        }
    }

    /// Solves in place.
    void solve(std::span<double> rhs) const {
        const std::size_t n = inv_.size();
        if (rhs.size() != n) throw std::invalid_argument("TridiagonalLU: rhs size mismatch");
        if (n == 0) return;
        for (std::size_t i = 1; i < n; ++i) rhs[i] -= mult_[i] * rhs[i - 1];
        rhs[n - 1] *= inv_[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper_[i] * rhs[i + 1]) * inv_[i];
    }

    std::size_t size() const noexcept { return inv_.size(); }

private:
    std::vector<double> mult_, inv_, upper_;
};

} // namespace fkpp
