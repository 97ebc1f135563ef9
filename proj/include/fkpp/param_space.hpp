#pragma once

/// \file param_space.hpp
/// Growth-rate fields mu(x): a finite space spanned by dilated mollifier
/// bumps on [0,1], and plain nodal samples on an arbitrary interval.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

namespace fkpp {

/// Smooth compactly supported bump exp(4x^2/(x^2-4)) on (-2,2), 0 elsewhere.
inline double bump_j(double x) noexcept {
    const double x2 = x * x;
    if (!(x2 < 4.0)) return 0.0;
    const double exponent = 4.0 * x2 / (x2 - 4.0);
    // exp underflows to a subnormal/zero below this anyway
    if (exponent < -745.0) return 0.0;
    return std::exp(exponent);
}

/// n+1 bumps j((n-2)(x - c_i)) with centers c_i = (i-1)/(n-2), i = 0..n.
/// Centers c_1 = 0 and c_{n-1} = 1; c_0 and c_n sit outside [0,1].
class BumpBasis {
public:
    explicit BumpBasis(int n = 10) : n_(n) {
        if (n < 3) throw std::invalid_argument("BumpBasis: n must be >= 3");
    }

    int n() const noexcept { return n_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_) + 1; }
    double scale() const noexcept { return static_cast<double>(n_ - 2); }
    double center(int i) const noexcept {
        return static_cast<double>(i - 1) / static_cast<double>(n_ - 2);
    }

    /// Value of the i-th basis function at x.
    double phi(int i, double x) const noexcept { return bump_j(scale() * (x - center(i))); }

    /// Open support of the i-th basis function.
    std::pair<double, double> support(int i) const noexcept {
        const double half = 2.0 / scale();
        return {center(i) - half, center(i) + half};
    }

    friend bool operator==(const BumpBasis&, const BumpBasis&) = default;

private:
    int n_;
};

struct BumpCoefficients {
    BumpBasis basis;
    std::vector<double> h;
};

/// Nodal values on a uniform grid over [a,b]; evaluated by linear interpolation.
struct GridSamples {
    double a = 0.0;
    double b = 1.0;
    std::vector<double> values;
};

class GrowthField {
public:
    using Repr = std::variant<BumpCoefficients, GridSamples>;

    GrowthField() : repr_(GridSamples{0.0, 1.0, {0.0, 0.0}}) {}
    explicit GrowthField(BumpCoefficients c) : repr_(std::move(c)) {
        const auto& bc = std::get<BumpCoefficients>(repr_);
        if (bc.h.size() != bc.basis.size())
            throw std::invalid_argument("GrowthField: expected n+1 bump coefficients");
    }
    explicit GrowthField(GridSamples g) : repr_(std::move(g)) {
        const auto& gs = std::get<GridSamples>(repr_);
        if (gs.values.size() < 2) throw std::invalid_argument("GrowthField: need >= 2 grid samples");
        if (!(gs.a < gs.b)) throw std::invalid_argument("GrowthField: grid requires a < b");
    }

    static GrowthField bump(std::vector<double> h, int n = 10) {
        return GrowthField(BumpCoefficients{BumpBasis(n), std::move(h)});
    }
    static GrowthField constant(double value, double a = 0.0, double b = 1.0) {
        return GrowthField(GridSamples{a, b, {value, value}});
    }

    bool is_bump() const noexcept { return std::holds_alternative<BumpCoefficients>(repr_); }
    const BumpCoefficients& bump_coefficients() const { return std::get<BumpCoefficients>(repr_); }
    const GridSamples& grid_samples() const { return std::get<GridSamples>(repr_); }
    const Repr& repr() const noexcept { return repr_; }

    /// Interval on which the field is defined.
    std::pair<double, double> support_interval() const noexcept {
        if (is_bump()) return {0.0, 1.0};
        const auto& g = grid_samples();
        return {g.a, g.b};
    }

private:
    Repr repr_;
};

namespace detail {
// Absolute slack for the domain test; grid nodes computed in floating point
// may land an ulp outside the closed interval.
inline constexpr double kDomainSlack = 1e-12;
} // namespace detail

/// mu(x). Throws std::out_of_range outside the field's interval.
inline double eval_mu(const GrowthField& field, double x) {
    const auto [a, b] = field.support_interval();
    const double slack = detail::kDomainSlack * std::max(1.0, b - a);
    if (!(x >= a - slack && x <= b + slack)) throw std::out_of_range("evaluation outside domain");

    if (field.is_bump()) {
        const auto& c = field.bump_coefficients();
        const double s = c.basis.scale();
        double sum = 0.0;
        for (int i = 0; i <= c.basis.n(); ++i) {
            const double hi = c.h[static_cast<std::size_t>(i)];
            if (hi != 0.0) sum += hi * bump_j(s * (x - c.basis.center(i)));
        }
        return sum;
    }

    const auto& g = field.grid_samples();
    const std::size_t cells = g.values.size() - 1;
    const double pos = std::clamp((x - a) / (b - a), 0.0, 1.0) * static_cast<double>(cells);
    const std::size_t j = std::min(static_cast<std::size_t>(pos), cells - 1);
    const double w = pos - static_cast<double>(j);
    if (w == 0.0) return g.values[j];
    return (1.0 - w) * g.values[j] + w * g.values[j + 1];
}

/// mu(b - (x - a)). Bump fields stay in the bump space because the centers
/// are symmetric about 1/2 (c_{n-i} = 1 - c_i): the coefficients reverse.
inline GrowthField reflect(const GrowthField& field) {
    if (field.is_bump()) {
        auto c = field.bump_coefficients();
        std::reverse(c.h.begin(), c.h.end());
        return GrowthField(std::move(c));
    }
    auto g = field.grid_samples();
    std::reverse(g.values.begin(), g.values.end());
    return GrowthField(std::move(g));
}

/// Draws h_i i.i.d. uniform on (lo, hi) from a std::mt19937_64 seeded with
/// `seed`. Each coefficient consumes one 64-bit output u and maps it to
/// lo + (hi-lo) * ((u >> 11) * 2^-53); a zero draw is rejected so the
/// interval stays open. The mapping is spelled out here rather than using
/// std::uniform_real_distribution, whose output is implementation-defined.
inline GrowthField sample_random_mu(const BumpBasis& basis, std::uint64_t seed,
                                    double lo = -5.0, double hi = 5.0) {
    std::mt19937_64 engine(seed);
    std::vector<double> h(basis.size());
    for (auto& v : h) {
        std::uint64_t bits = 0;
        do {
            bits = engine() >> 11;
        } while (bits == 0);
        v = lo + (hi - lo) * (static_cast<double>(bits) * 0x1.0p-53);
    }
    return GrowthField(BumpCoefficients{basis, std::move(h)});
}

} // namespace fkpp
