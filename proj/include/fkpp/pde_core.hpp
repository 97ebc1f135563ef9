#pragma once

/// \file pde_core.hpp
/// Finite-difference solver for the heterogeneous Fisher-KPP problem
///
///     u_t - D u_xx = u (mu(x) - gamma u)        on (a,b), t > 0
///     alpha1 u - beta1 u_x = 0                  at x = a
///     alpha2 u + beta2 u_x = 0                  at x = b
///     u(0,x) = u_i(x)
///
/// Crank-Nicolson in time, central differences in space, full Newton on
/// the reaction term each step. The Robin rows use three-point one-sided
/// differences so the whole scheme is second order without ghost nodes.

#include "fkpp/error.hpp"
#include "fkpp/param_space.hpp"
#include "fkpp/tridiagonal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fkpp {

/// Uniform grid x_j = a + j (b-a)/n_cells, j = 0..n_cells.
struct Domain {
    double a = 0.0;
    double b = 1.0;
    int n_cells = 960;

    void validate() const {
        if (!(a < b)) throw std::invalid_argument("Domain: requires a < b");
        if (n_cells < 4) throw std::invalid_argument("Domain: requires n_cells >= 4");
    }
    int nodes() const noexcept { return n_cells + 1; }
    double h() const noexcept { return (b - a) / static_cast<double>(n_cells); }
    double node(int j) const noexcept {
        return a + (b - a) * (static_cast<double>(j) / static_cast<double>(n_cells));
    }
    double midpoint() const noexcept { return 0.5 * (a + b); }

    /// Index of the grid node at x, if x lies within rel_tol*h of one.
    std::optional<int> node_index(double x, double rel_tol = 1e-6) const {
        const double pos = (x - a) / h();
        const double j = std::round(pos);
        if (j < 0.0 || j > static_cast<double>(n_cells)) return std::nullopt;
        if (std::abs(pos - j) > rel_tol) return std::nullopt;
        return static_cast<int>(j);
    }

    friend bool operator==(const Domain&, const Domain&) = default;
};

struct BoundaryCoefficients {
    double alpha1 = 0.0;
    double beta1 = 1.0;
    double alpha2 = 0.0;
    double beta2 = 1.0;

    static BoundaryCoefficients neumann() { return {0.0, 1.0, 0.0, 1.0}; }
    static BoundaryCoefficients dirichlet() { return {1.0, 0.0, 1.0, 0.0}; }

    void validate() const {
        if (alpha1 < 0 || beta1 < 0 || alpha2 < 0 || beta2 < 0)
            throw std::invalid_argument("BoundaryCoefficients: coefficients must be nonnegative");
        if (!(alpha1 + beta1 > 0) || !(alpha2 + beta2 > 0))
            throw std::invalid_argument("BoundaryCoefficients: need alpha+beta > 0 at both ends");
    }
    bool symmetric() const noexcept { return alpha1 == alpha2 && beta1 == beta2; }

    friend bool operator==(const BoundaryCoefficients&, const BoundaryCoefficients&) = default;
};

/// Initial density sampled on the grid nodes.
struct InitialCondition {
    std::vector<double> values;

    static InitialCondition constant(const Domain& d, double v) {
        return {std::vector<double>(static_cast<std::size_t>(d.nodes()), v)};
    }
    static InitialCondition from_function(const Domain& d, const std::function<double(double)>& f) {
        InitialCondition ic;
        ic.values.resize(static_cast<std::size_t>(d.nodes()));
        for (int j = 0; j < d.nodes(); ++j) ic.values[static_cast<std::size_t>(j)] = f(d.node(j));
        return ic;
    }
    /// 0.2-style plateau with a smooth dip to exactly zero at x0:
    /// level * (1 - j(2 (x - x0) / width)). The dip is flat to all orders at
    /// the edges of its support, so any Robin condition holding for the
    /// constant level also holds here when the support stays inside (a,b).
    static InitialCondition dip(const Domain& d, double level, double x0, double width) {
        return from_function(d, [=](double x) { return level * (1.0 - bump_j(2.0 * (x - x0) / width)); });
    }
};

struct ProblemSpec {
    Domain domain{};
    double D = 0.1;
    double gamma = 1.0;
    GrowthField mu{};
    BoundaryCoefficients bc{};
    InitialCondition u_init{};
};

/// Solution samples: row k holds u(times[k], x_j) for all nodes.
class SpaceTimeField {
public:
    SpaceTimeField() = default;
    explicit SpaceTimeField(std::size_t nodes) : nodes_(nodes) {}

    void push_back(double t, std::span<const double> row) {
        if (row.size() != nodes_) throw std::invalid_argument("SpaceTimeField: row size mismatch");
        times_.push_back(t);
        values_.insert(values_.end(), row.begin(), row.end());
    }

    std::size_t steps() const noexcept { return times_.size(); }
    std::size_t nodes() const noexcept { return nodes_; }
    const std::vector<double>& times() const noexcept { return times_; }
    std::span<const double> row(std::size_t k) const { return {values_.data() + k * nodes_, nodes_}; }
    double operator()(std::size_t k, std::size_t j) const { return values_[k * nodes_ + j]; }
    double& operator()(std::size_t k, std::size_t j) { return values_[k * nodes_ + j]; }

private:
    std::size_t nodes_ = 0;
    std::vector<double> times_;
    std::vector<double> values_;
};

/// u, u_x, u_xx at x0 for the stored times in (0, eps].
struct PointTrace {
    double x0 = 0.0;
    std::vector<double> times;
    std::vector<double> u;
    std::vector<double> ux;
    std::vector<double> uxx;  // empty unless requested

    std::size_t size() const noexcept { return times.size(); }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
};

struct SolverOptions {
    double newton_tol = 1e-10;
    int max_newton = 50;
    double undershoot = 1e-8;
};

// --- finite differences on a node vector ---------------------------------

namespace fd {

/// First derivative at node j: central inside, three-point one-sided at ends.
inline double first(std::span<const double> u, std::size_t j, double h) {
    const std::size_t n = u.size() - 1;
    if (j == 0) return (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    if (j == n) return (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
    return (u[j + 1] - u[j - 1]) / (2.0 * h);
}

/// Second derivative at node j: three-point inside, four-point one-sided at ends.
inline double second(std::span<const double> u, std::size_t j, double h) {
    const std::size_t n = u.size() - 1;
    const double h2 = h * h;
    if (j == 0) return (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / h2;
    if (j == n) return (2.0 * u[n] - 5.0 * u[n - 1] + 4.0 * u[n - 2] - u[n - 3]) / h2;
    return (u[j - 1] - 2.0 * u[j] + u[j + 1]) / h2;
}

} // namespace fd

// --- validation -----------------------------------------------------------

/// Checks nonnegativity, u_i != 0, isolated zeros, and the compatibility
/// conditions alpha1 u(a) - beta1 u'(a) = 0, alpha2 u(b) + beta2 u'(b) = 0,
/// plus u''(a) = 0 when beta1 = 0 and u''(b) = 0 when beta2 = 0.
inline ValidationReport validate_initial_condition(const InitialCondition& u_init,
                                                   const BoundaryCoefficients& bc,
                                                   const Domain& domain) {
    ValidationReport report;
    const auto& u = u_init.values;
    if (u.size() != static_cast<std::size_t>(domain.nodes())) {
        report.violations.push_back("u_i has " + std::to_string(u.size()) + " values, grid has " +
                                    std::to_string(domain.nodes()) + " nodes");
        return report;
    }

    double umax = 0.0;
    bool negative = false;
    bool any_positive = false;
    bool adjacent_zeros = false;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (!std::isfinite(u[j]) || u[j] < 0.0) negative = true;
        if (u[j] > 0.0) any_positive = true;
        if (j > 0 && u[j] == 0.0 && u[j - 1] == 0.0) adjacent_zeros = true;
        umax = std::max(umax, std::abs(u[j]));
    }
    if (negative) report.violations.push_back("u_i >= 0 fails");
    if (!any_positive) {
        report.violations.push_back("u_i \xe2\x89\xa2 0 fails");
        return report;
    }
    if (adjacent_zeros) report.violations.push_back("zero set of u_i is not isolated");

    const double tol = 1e-8 * (1.0 + umax);
    const double h = domain.h();
    const std::span<const double> s(u);
    const std::size_t n = u.size() - 1;

    const double left = bc.alpha1 * u[0] - bc.beta1 * fd::first(s, 0, h);
    if (std::abs(left) > tol) report.violations.push_back("alpha1 u_i(a) - beta1 u_i'(a) = 0 fails");
    const double right = bc.alpha2 * u[n] + bc.beta2 * fd::first(s, n, h);
    if (std::abs(right) > tol) report.violations.push_back("alpha2 u_i(b) + beta2 u_i'(b) = 0 fails");
    if (bc.beta1 == 0.0 && std::abs(fd::second(s, 0, h)) > tol)
        report.violations.push_back("u_i''(a) = 0 fails (beta1 = 0)");
    if (bc.beta2 == 0.0 && std::abs(fd::second(s, n, h)) > tol)
        report.violations.push_back("u_i''(b) = 0 fails (beta2 = 0)");
    return report;
}

/// Throws std::invalid_argument listing every violated precondition.
inline void validate(const ProblemSpec& spec) {
    spec.domain.validate();
    spec.bc.validate();
    if (!(spec.D > 0)) throw std::invalid_argument("ProblemSpec: D must be positive");
    if (!(spec.gamma > 0)) throw std::invalid_argument("ProblemSpec: gamma must be positive");
    const auto report = validate_initial_condition(spec.u_init, spec.bc, spec.domain);
    if (!report.ok()) {
        std::string msg = "initial condition:";
        for (const auto& v : report.violations) msg += " [" + v + "]";
        throw std::invalid_argument(msg);
    }
}

/// mu evaluated at every grid node. Grid fields already laid out on this
/// grid are copied verbatim.
inline std::vector<double> sample_on_grid(const GrowthField& mu, const Domain& domain) {
    if (!mu.is_bump()) {
        const auto& g = mu.grid_samples();
        if (g.a == domain.a && g.b == domain.b && g.values.size() == static_cast<std::size_t>(domain.nodes()))
            return g.values;
    }
    std::vector<double> out(static_cast<std::size_t>(domain.nodes()));
    for (int j = 0; j < domain.nodes(); ++j) out[static_cast<std::size_t>(j)] = eval_mu(mu, domain.node(j));
    return out;
}

// --- time stepping --------------------------------------------------------

/// One Crank-Nicolson step at a time. Keeps its own workspace and the
/// previous state for the Newton predictor; not shareable across threads.
///
/// The Newton Jacobian is assembled and factored at the predictor and
/// reused for later iterations of the same step; it is refreshed at the
/// current iterate if three reuses have not converged.
class CrankNicolsonStepper {
public:
    CrankNicolsonStepper(const ProblemSpec& spec, SolverOptions options = {})
        : D_(spec.D), gamma_(spec.gamma), h_(spec.domain.h()), bc_(spec.bc), options_(options),
          mu_(sample_on_grid(spec.mu, spec.domain)) {
        const std::size_t m = mu_.size();
        explicit_.resize(m);
        residual_.resize(m);
        lower_.resize(m);
        diag_.resize(m);
        upper_.resize(m);
        next_.resize(m);
        // Boundary rows scaled by h: (alpha h + 1.5 beta) u0 - 2 beta u1 + 0.5 beta u2.
        left_ = {bc_.alpha1 * h_ + 1.5 * bc_.beta1, -2.0 * bc_.beta1, 0.5 * bc_.beta1};
        right_ = {bc_.alpha2 * h_ + 1.5 * bc_.beta2, -2.0 * bc_.beta2, 0.5 * bc_.beta2};
    }

    std::span<const double> mu_nodes() const noexcept { return mu_; }

    /// Advances u in place by tau. step_index only labels errors.
    /// Returns the number of Newton iterations used.
    int step(std::vector<double>& u, double tau, std::size_t step_index) {
        const std::size_t n = u.size() - 1;
        const double lap = D_ / (h_ * h_);
        const double half = 0.5 * tau;

        for (std::size_t j = 1; j < n; ++j) {
            const double diffusion = lap * (u[j - 1] - 2.0 * u[j] + u[j + 1]);
            explicit_[j] = u[j] + half * (diffusion + u[j] * (mu_[j] - gamma_ * u[j]));
        }

        // predictor: linear extrapolation from the previous step
        if (have_prev_ && prev_tau_ > 0) {
            const double r = tau / prev_tau_;
            for (std::size_t j = 0; j <= n; ++j) next_[j] = u[j] + r * (u[j] - prev_[j]);
        } else {
            std::copy(u.begin(), u.end(), next_.begin());
        }

        const double kappa = half * lap;
        // Eliminating the third entry of each Robin row against its
        // neighbouring interior row uses the constant off-diagonal -kappa.
        const double m_left = left_[2] / -kappa;
        const double m_right = right_[2] / -kappa;
        int iter = 0;
        int since_refresh = 0;
        bool converged = false;
        while (iter < options_.max_newton) {
            ++iter;
            const auto& v = next_;
            const bool refresh = iter == 1 || since_refresh >= 3;
            for (std::size_t j = 1; j < n; ++j) {
                const double diffusion = lap * (v[j - 1] - 2.0 * v[j] + v[j + 1]);
                residual_[j] = v[j] - half * (diffusion + v[j] * (mu_[j] - gamma_ * v[j])) - explicit_[j];
            }
            residual_[0] = left_[0] * v[0] + left_[1] * v[1] + left_[2] * v[2] - m_left * residual_[1];
            residual_[n] = right_[0] * v[n] + right_[1] * v[n - 1] + right_[2] * v[n - 2] - m_right * residual_[n - 1];

            if (refresh) {
                for (std::size_t j = 1; j < n; ++j) {
                    lower_[j] = -kappa;
                    upper_[j] = -kappa;
                    diag_[j] = 1.0 + 2.0 * kappa - half * (mu_[j] - 2.0 * gamma_ * v[j]);
                }
                lower_[0] = 0.0;
                diag_[0] = left_[0] - m_left * lower_[1];
                upper_[0] = left_[1] - m_left * diag_[1];
                lower_[n] = right_[1] - m_right * diag_[n - 1];
                diag_[n] = right_[0] - m_right * upper_[n - 1];
                upper_[n] = 0.0;
                lu_.factor(lower_, diag_, upper_);
                since_refresh = 0;
            }
            ++since_refresh;
            lu_.solve(residual_);

            double dmax = 0.0;
            double vmax = 0.0;
            for (std::size_t j = 0; j <= n; ++j) {
                next_[j] -= residual_[j];
                dmax = std::max(dmax, std::abs(residual_[j]));
                vmax = std::max(vmax, std::abs(next_[j]));
            }
            if (!std::isfinite(dmax)) break;
            if (dmax <= options_.newton_tol * (1.0 + vmax)) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NumericalError("nonlinear step failed at step " + std::to_string(step_index));

        double vmin = next_[0];
        for (std::size_t j = 1; j <= n; ++j) vmin = std::min(vmin, next_[j]);
        if (vmin < -options_.undershoot)
            throw NumericalError("positivity violated at step " + std::to_string(step_index));

        prev_.assign(u.begin(), u.end());
        prev_tau_ = tau;
        have_prev_ = true;
        std::swap(u, next_);
        return iter;
    }

private:
    double D_;
    double gamma_;
    double h_;
    BoundaryCoefficients bc_;
    SolverOptions options_;
    std::vector<double> mu_;
    std::vector<double> explicit_, residual_, lower_, diag_, upper_, next_, prev_;
    TridiagonalLU lu_;
    double prev_tau_ = 0.0;
    bool have_prev_ = false;
    std::array<double, 3> left_{};
    std::array<double, 3> right_{};
};

/// Step times 0 = t_0 < dt < 2dt < ... < t_end. A trailing fractional step
/// is shortened so the last time is exactly t_end.
inline std::vector<double> time_grid(double t_end, double dt) {
    if (!(dt > 0) || !(t_end > 0)) throw std::invalid_argument("time grid: t_end and dt must be positive");
    if (dt > t_end * (1.0 + 1e-12)) throw std::invalid_argument("time grid: dt must not exceed t_end");
    const double ratio = t_end / dt;
    auto steps = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
        steps = static_cast<std::size_t>(std::ceil(ratio));
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k < steps; ++k) t[k] = static_cast<double>(k) * dt;
    t[steps] = t_end;
    return t;
}

/// Runs the scheme and hands every state (including t = 0) to
/// observer(step, t, span<const double> u).
template <class Observer>
void march(const ProblemSpec& spec, double t_end, double dt, Observer&& observer, SolverOptions options = {}) {
    validate(spec);
    const auto times = time_grid(t_end, dt);
    CrankNicolsonStepper stepper(spec, options);
    std::vector<double> u = spec.u_init.values;
    observer(std::size_t{0}, times[0], std::span<const double>(u));
    for (std::size_t k = 1; k < times.size(); ++k) {
        stepper.step(u, times[k] - times[k - 1], k);
        observer(k, times[k], std::span<const double>(u));
    }
}

inline SpaceTimeField solve_kpp(const ProblemSpec& spec, double t_end, double dt, SolverOptions options = {}) {
    SpaceTimeField field(static_cast<std::size_t>(spec.domain.nodes()));
    march(spec, t_end, dt, [&](std::size_t, double t, std::span<const double> u) { field.push_back(t, u); }, options);
    return field;
}

// --- point traces ---------------------------------------------------------

/// Node index of an observation point; rejects points not on a node.
inline std::size_t observation_node(const Domain& domain, double x0) {
    if (!(x0 >= domain.a - 1e-12 && x0 <= domain.b + 1e-12))
        throw std::invalid_argument("observation point outside domain");
    const auto j = domain.node_index(x0);
    if (!j) throw std::invalid_argument("observation point off-grid");
    return static_cast<std::size_t>(*j);
}

namespace detail {
inline bool within_horizon(double t, double eps) { return t > 0.0 && t <= eps * (1.0 + 1e-12); }

inline void append_sample(PointTrace& trace, double t, std::span<const double> u, std::size_t j, double h,
                          bool with_uxx) {
    trace.times.push_back(t);
    trace.u.push_back(u[j]);
    trace.ux.push_back(fd::first(u, j, h));
    if (with_uxx) trace.uxx.push_back(fd::second(u, j, h));
}
} // namespace detail

inline PointTrace extract_trace(const SpaceTimeField& field, const Domain& domain, double x0, double eps,
                                bool with_uxx) {
    if (!(eps > 0)) throw std::invalid_argument("extract_trace: eps must be positive");
    if (field.steps() == 0 || eps > field.times().back() * (1.0 + 1e-12))
        throw std::invalid_argument("extract_trace: eps exceeds the final time of the field");
    if (field.nodes() != static_cast<std::size_t>(domain.nodes()))
        throw std::invalid_argument("extract_trace: field does not match the domain grid");
    const std::size_t j = observation_node(domain, x0);
    PointTrace trace;
    trace.x0 = x0;
    for (std::size_t k = 0; k < field.steps(); ++k) {
        const double t = field.times()[k];
        if (detail::within_horizon(t, eps)) detail::append_sample(trace, t, field.row(k), j, domain.h(), with_uxx);
    }
    return trace;
}

/// Solves up to eps and records only the trace at x0; the result is
/// bit-identical to extract_trace(solve_kpp(spec, eps, dt), ...).
inline PointTrace solve_trace(const ProblemSpec& spec, double eps, double dt, double x0, bool with_uxx,
                              SolverOptions options = {}) {
    const std::size_t j = observation_node(spec.domain, x0);
    const double h = spec.domain.h();
    PointTrace trace;
    trace.x0 = x0;
    march(
        spec, eps, dt,
        [&](std::size_t, double t, std::span<const double> u) {
            if (detail::within_horizon(t, eps)) detail::append_sample(trace, t, u, j, h, with_uxx);
        },
        options);
    return trace;
}

/// Closed-form solution of the logistic ODE u' = u (mu - gamma u), u(0) = u0.
inline double logistic_reference(double mu, double gamma, double u0, double t) {
    if (mu == 0.0) return u0 / (1.0 + gamma * u0 * t);
    const double growth = std::expm1(mu * t);
    return mu * u0 * (growth + 1.0) / (mu + gamma * u0 * growth);
}

} // namespace fkpp
