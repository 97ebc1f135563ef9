#pragma once

/// \file inverse.hpp
/// Misfit functionals between point traces and the quasi-Newton search
/// that reconstructs bump coefficients of mu from them.

#include "fkpp/error.hpp"
#include "fkpp/param_space.hpp"
#include "fkpp/pde_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fkpp {

/// Where and for how long the trace is observed. use_derivative selects
/// the u + u_x misfit (G); otherwise only u is compared (H).
struct ObservationConfig {
    double x0 = 2.0 / 3.0;
    double eps = 0.3;
    bool use_derivative = true;

    void validate(const ProblemSpec& spec) const {
        const auto& d = spec.domain;
        if (!(eps > 0)) throw std::invalid_argument("ObservationConfig: eps must be positive");
        if (!(x0 >= d.a && x0 <= d.b)) throw std::invalid_argument("ObservationConfig: x0 outside [a,b]");
        if (x0 == d.a && !(spec.bc.beta1 > 0))
            throw std::invalid_argument("ObservationConfig: x0 = a requires beta1 > 0");
        if (x0 == d.b && !(spec.bc.beta2 > 0))
            throw std::invalid_argument("ObservationConfig: x0 = b requires beta2 > 0");
    }
};

struct CostValue {
    double total = 0.0;
    double u_part = 0.0;
    double ux_part = 0.0;
};

struct InversionResult {
    std::vector<double> h0;
    std::vector<double> h_star;
    double final_cost = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    double rel_l2_error = std::numeric_limits<double>::quiet_NaN();
    std::string stop_reason;
    /// (evaluation count, cost) at every accepted iterate.
    std::vector<std::pair<std::size_t, double>> trace_of_iterates;
};

/// sqrt of the trapezoid integral of series^2 over [0, times.back()].
/// The panel [0, times[0]] uses value_at_zero at t = 0 when given, and
/// series[0] held constant otherwise.
inline double l2_time_norm(std::span<const double> series, std::span<const double> times,
                           std::optional<double> value_at_zero = std::nullopt) {
    if (series.empty()) throw std::invalid_argument("empty trace");
    if (series.size() != times.size()) throw std::invalid_argument("l2_time_norm: length mismatch");
    const double f0 = value_at_zero.value_or(series[0]);
    double integral = 0.5 * times[0] * (f0 * f0 + series[0] * series[0]);
    for (std::size_t k = 1; k < series.size(); ++k) {
        const double dt = times[k] - times[k - 1];
        if (!(dt > 0)) throw std::invalid_argument("l2_time_norm: times must be increasing");
        integral += 0.5 * dt * (series[k - 1] * series[k - 1] + series[k] * series[k]);
    }
    return std::sqrt(integral);
}

namespace detail {
inline double trace_distance(std::span<const double> a, std::span<const double> b, std::span<const double> times) {
    std::vector<double> diff(a.size());
    std::transform(a.begin(), a.end(), b.begin(), diff.begin(), std::minus<>{});
    // both traces start from the same u_i, so the difference vanishes at t = 0
    return l2_time_norm(diff, times, 0.0);
}
} // namespace detail

/// Misfit of a candidate's trace against a reference trace computed on the
/// same grid, dt and scheme.
inline CostValue trace_misfit(const PointTrace& reference, const PointTrace& candidate, bool use_derivative) {
    if (reference.size() != candidate.size() || reference.times != candidate.times)
        throw std::invalid_argument("incompatible discretization");
    CostValue c;
    c.u_part = detail::trace_distance(candidate.u, reference.u, reference.times);
    if (use_derivative) c.ux_part = detail::trace_distance(candidate.ux, reference.ux, reference.times);
    c.total = c.u_part + c.ux_part;
    return c;
}

/// Solves the forward problem for `candidate` (all other data from `fixed`)
/// and compares its trace with `reference`.
inline CostValue cost(const PointTrace& reference, const GrowthField& candidate, const ProblemSpec& fixed,
                      const ObservationConfig& obs, double dt, SolverOptions options = {}) {
    ProblemSpec spec = fixed;
    spec.mu = candidate;
    const PointTrace trial = solve_trace(spec, obs.eps, dt, obs.x0, false, options);
    return trace_misfit(reference, trial, obs.use_derivative);
}

/// Cost closure over bump coefficients with everything but mu frozen.
class TraceMisfit {
public:
    TraceMisfit(ProblemSpec fixed, PointTrace reference, ObservationConfig obs, double dt, BumpBasis basis = BumpBasis(10))
        : fixed_(std::move(fixed)), reference_(std::move(reference)), obs_(obs), dt_(dt), basis_(basis) {
        obs_.validate(fixed_);
    }

    CostValue operator()(const GrowthField& candidate) const { return cost(reference_, candidate, fixed_, obs_, dt_); }
    CostValue operator()(std::span<const double> h) const {
        return (*this)(GrowthField(BumpCoefficients{basis_, std::vector<double>(h.begin(), h.end())}));
    }

    const BumpBasis& basis() const noexcept { return basis_; }
    const ObservationConfig& observation() const noexcept { return obs_; }

private:
    ProblemSpec fixed_;
    PointTrace reference_;
    ObservationConfig obs_;
    double dt_;
    BumpBasis basis_;
};

using Objective = std::function<double(std::span<const double>)>;

/// Forward differences with per-coordinate step rel_step (1 + |x_i|);
/// costs x.size() evaluations of f. fx must be f(x).
inline std::vector<double> fd_gradient(std::span<const double> x, double fx, const Objective& f,
                                       double rel_step = 1e-6) {
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = rel_step * (1.0 + std::abs(x[i]));
        probe[i] = x[i] + step;
        // the step actually taken, after rounding
        const double taken = probe[i] - x[i];
        g[i] = (f(probe) - fx) / taken;
        probe[i] = x[i];
    }
    return g;
}

struct MinimizeOptions {
    double grad_tol = 1e-8;
    /// Relative step of the forward-difference gradient.
    double fd_step = 1e-6;
    double step_tol = 1e-12;
    /// Stop as soon as the cost reaches this value. The misfits are norms,
    /// so 0 is attained only at an exact match.
    std::optional<double> cost_floor = 0.0;
    double armijo = 1e-4;
    double curvature = 0.9;
    int max_line_search = 30;
};

namespace detail {

struct CapReached {};

/// Wraps an objective with the evaluation cap and best-so-far bookkeeping.
/// Non-finite values are reported as +inf.
class CountedObjective {
public:
    CountedObjective(const Objective& f, std::size_t cap) : f_(f), cap_(cap) {}

    double operator()(std::span<const double> x) {
        if (count_ >= cap_) throw CapReached{};
        ++count_;
        double v = f_(x);
        if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
        if (v < best_) {
            best_ = v;
            best_x_.assign(x.begin(), x.end());
        }
        return v;
    }

    std::size_t count() const noexcept { return count_; }
    double best() const noexcept { return best_; }
    const std::vector<double>& best_x() const noexcept { return best_x_; }

private:
    const Objective& f_;
    std::size_t cap_;
    std::size_t count_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
    std::vector<double> best_x_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double inf_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

/// Minimizer of the cubic matching (a, fa, da) and (b, fb, db), if any.
inline std::optional<double> cubic_min(double a, double fa, double da, double b, double fb, double db) {
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    if (!(disc >= 0)) return std::nullopt;
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2.0 * d2;
    if (denom == 0.0) return std::nullopt;
    const double t = b - (b - a) * (db + d2 - d1) / denom;
    if (!std::isfinite(t)) return std::nullopt;
    return t;
}

/// Minimizer of the quadratic through (a, fa) with slope da and (b, fb).
inline std::optional<double> quadratic_min(double a, double fa, double da, double b, double fb) {
    const double w = b - a;
    const double curv = fb - fa - da * w;
    if (!(curv > 0) || !std::isfinite(fb)) return std::nullopt;
    return a - da * w * w / (2.0 * curv);
}

} // namespace detail

/// BFGS on the inverse Hessian with forward-difference gradients and a
/// bracketing line search for the weak Wolfe conditions (quadratic
/// interpolation on sufficient-decrease failures, cubic extrapolation
/// while the slope stays steep). Every objective call, including gradient
/// probes, counts against `cap`. Returns the best point evaluated.
inline InversionResult minimize(const Objective& objective, std::span<const double> h0, std::size_t cap,
                                MinimizeOptions opt = {}) {
    const std::size_t dim = h0.size();
    if (dim == 0) throw std::invalid_argument("minimize: empty parameter vector");
    if (cap < dim + 1) throw std::invalid_argument("minimize: cap must be >= dim + 1");

    detail::CountedObjective f(objective, cap);
    InversionResult result;
    result.h0.assign(h0.begin(), h0.end());

    std::vector<double> x(h0.begin(), h0.end());
    std::vector<double> g(dim), d(dim), xt(dim), s(dim), y(dim), hy(dim);
    std::vector<double> hinv(dim * dim, 0.0);
    auto reset_hessian = [&](double scale) {
        std::fill(hinv.begin(), hinv.end(), 0.0);
        for (std::size_t i = 0; i < dim; ++i) hinv[i * dim + i] = scale;
    };
    reset_hessian(1.0);
    bool scaled = false;
    bool restarted = false;
    double last_scale = 1.0;

    auto finish = [&](std::string reason) {
        result.stop_reason = std::move(reason);
        result.evaluations = f.count();
        result.final_cost = f.best();
        result.h_star = f.best_x().empty() ? x : f.best_x();
        return result;
    };

    try {
        double fx = f(x);
        result.trace_of_iterates.emplace_back(f.count(), fx);
        if (opt.cost_floor && fx <= *opt.cost_floor) return finish("cost floor reached");
        if (!std::isfinite(fx)) return finish("objective not finite at h0");
        g = fd_gradient(x, fx, std::ref(f), opt.fd_step);

        for (std::size_t iteration = 0;; ++iteration) {
            if (detail::inf_norm(g) < opt.grad_tol) return finish("gradient tolerance");

            for (std::size_t i = 0; i < dim; ++i) {
                double acc = 0.0;
                for (std::size_t k = 0; k < dim; ++k) acc -= hinv[i * dim + k] * g[k];
                d[i] = acc;
            }
            double slope0 = detail::dot(g, d);
            if (!(slope0 < 0)) {
                reset_hessian(1.0);
                scaled = false;
                for (std::size_t i = 0; i < dim; ++i) d[i] = -g[i];
                slope0 = -detail::dot(g, g);
            }

            // First trial: unit step in parameter space before any curvature is known.
            double alpha = scaled ? 1.0 : 1.0 / std::sqrt(detail::dot(d, d));

            double lo = 0.0, f_lo = fx, d_lo = slope0;
            double hi = std::numeric_limits<double>::infinity(), f_hi = 0.0;
            std::vector<double> g_lo;
            bool accepted = false;
            double f_new = fx;
            std::vector<double> g_new;

            for (int trial = 0; trial < opt.max_line_search; ++trial) {
                for (std::size_t i = 0; i < dim; ++i) xt[i] = x[i] + alpha * d[i];
                const double ft = f(xt);
                if (!(ft <= fx + opt.armijo * alpha * slope0) || (lo > 0 && ft >= f_lo)) {
                    hi = alpha;
                    f_hi = ft;
                    const double width = hi - lo;
                    double next = lo + 0.5 * width;
                    if (auto q = detail::quadratic_min(lo, f_lo, d_lo, hi, f_hi))
                        next = std::clamp(*q, lo + 0.1 * width, lo + 0.5 * width);
                    alpha = next;
                } else {
                    auto gt = fd_gradient(xt, ft, std::ref(f), opt.fd_step);
                    const double dt = detail::dot(gt, d);
                    if (dt >= opt.curvature * slope0) {
                        accepted = true;
                        f_new = ft;
                        g_new = std::move(gt);
                        break;
                    }
                    const double prev = lo, f_prev = f_lo, d_prev = d_lo;
                    lo = alpha;
                    f_lo = ft;
                    d_lo = dt;
                    g_lo = std::move(gt);
                    if (std::isinf(hi)) {
                        double next = 2.0 * alpha;
                        if (auto c = detail::cubic_min(prev, f_prev, d_prev, lo, f_lo, d_lo))
                            if (*c > lo) next = std::clamp(*c, 1.1 * lo, 4.0 * lo);
                        alpha = next;
                    } else {
                        const double width = hi - lo;
                        double next = lo + 0.5 * width;
                        if (auto q = detail::quadratic_min(lo, f_lo, d_lo, hi, f_hi))
                            next = std::clamp(*q, lo + 0.1 * width, hi - 0.1 * width);
                        alpha = next;
                    }
                }
                if (std::abs(hi - lo) * std::sqrt(detail::dot(d, d)) < opt.step_tol) break;
            }

            if (!accepted) {
                if (lo > 0 && !g_lo.empty()) {
                    // curvature never satisfied; take the best Armijo point
                    alpha = lo;
                    f_new = f_lo;
                    g_new = std::move(g_lo);
                } else if (restarted) {
                    return finish("line search failed");
                } else {
                    // The quasi-Newton model is stale: restart from a scaled
                    // identity and retry along steepest descent.
                    reset_hessian(last_scale);
                    scaled = last_scale != 1.0;
                    restarted = true;
                    continue;
                }
            }
            restarted = false;

            for (std::size_t i = 0; i < dim; ++i) {
                s[i] = alpha * d[i];
                y[i] = g_new[i] - g[i];
                x[i] += s[i];
            }
            fx = f_new;
            g = std::move(g_new);
            result.trace_of_iterates.emplace_back(f.count(), fx);

            if (opt.cost_floor && fx <= *opt.cost_floor) return finish("cost floor reached");
            if (detail::inf_norm(s) < opt.step_tol) return finish("step tolerance");

            const double sy = detail::dot(s, y);
            if (sy > 1e-12 * std::sqrt(detail::dot(s, s) * detail::dot(y, y))) {
                last_scale = sy / detail::dot(y, y);
                if (!scaled) {
                    reset_hessian(last_scale);
                    scaled = true;
                }
                // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
                const double rho = 1.0 / sy;
                for (std::size_t i = 0; i < dim; ++i) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < dim; ++k) acc += hinv[i * dim + k] * y[k];
                    hy[i] = acc;
                }
                const double yhy = detail::dot(y, hy);
                for (std::size_t i = 0; i < dim; ++i)
                    for (std::size_t k = 0; k < dim; ++k)
                        hinv[i * dim + k] += rho * ((1.0 + rho * yhy) * s[i] * s[k] - hy[i] * s[k] - s[i] * hy[k]);
            }
            (void)iteration;
        }
    } catch (const detail::CapReached&) {
        return finish("evaluation cap");
    }
}

/// ||mu_true - mu_rec|| / ||mu_true|| in L2 over the true field's interval,
/// composite trapezoid on a uniform grid of `points` samples.
inline double relative_l2_error(const GrowthField& mu_true, const GrowthField& mu_rec, int points = 2001) {
    const auto [a, b] = mu_true.support_interval();
    const double h = (b - a) / static_cast<double>(points - 1);
    double num = 0.0, den = 0.0;
    for (int k = 0; k < points; ++k) {
        const double x = a + (b - a) * (static_cast<double>(k) / static_cast<double>(points - 1));
        const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        const double t = eval_mu(mu_true, x);
        const double r = eval_mu(mu_rec, x);
        num += w * (t - r) * (t - r);
        den += w * t * t;
    }
    num *= h;
    den *= h;
    if (std::sqrt(den) < 1e-12) throw std::invalid_argument("degenerate ground truth");
    return std::sqrt(num / den);
}

} // namespace fkpp
