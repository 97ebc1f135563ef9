#pragma once

/// \file verify.hpp
/// Executable consequences of the uniqueness results: distinct parameters
/// must give distinguishable point traces, the reflection counterexample
/// must give indistinguishable u-traces at the midpoint, and the
/// stationary equation alone cannot separate (mu, gamma).

#include "fkpp/error.hpp"
#include "fkpp/param_space.hpp"
#include "fkpp/pde_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fkpp {

/// Sup-norm differences of two point traces over (0, eps].
struct TraceComparison {
    double sup_diff_u = 0.0;
    double sup_diff_ux = 0.0;
    double sup_diff_uxx = 0.0;

    double max() const noexcept { return std::max({sup_diff_u, sup_diff_ux, sup_diff_uxx}); }
};

inline TraceComparison compare_traces(const PointTrace& a, const PointTrace& b) {
    if (a.times != b.times) throw std::invalid_argument("compare_traces: time samples differ");
    TraceComparison c;
    for (std::size_t k = 0; k < a.size(); ++k) {
        c.sup_diff_u = std::max(c.sup_diff_u, std::abs(a.u[k] - b.u[k]));
        c.sup_diff_ux = std::max(c.sup_diff_ux, std::abs(a.ux[k] - b.ux[k]));
        if (!a.uxx.empty() && !b.uxx.empty())
            c.sup_diff_uxx = std::max(c.sup_diff_uxx, std::abs(a.uxx[k] - b.uxx[k]));
    }
    return c;
}

/// Observation window shared by the checks below.
struct TraceWindow {
    double eps = 0.3;
    double dt = 0.3 / 600.0;
};

// --- reflection counterexample -------------------------------------------

struct CounterexampleReport {
    TraceComparison midpoint;            // u vs reflected-problem u at (a+b)/2
    double reflection_residual = 0.0;    // max |u(t,x) - u~(t, b-(x-a))| over stored (t, node)
    double antisymmetry_residual = 0.0;  // max |u_x(t,mid) + u~_x(t,mid)|
};

/// Solves the problem for mu and for its mirror image mu(b - (x - a)) and
/// compares them at the midpoint. Requires identical Robin data at both
/// ends, a symmetric u_i and a node at the midpoint.
inline CounterexampleReport counterexample_check(const GrowthField& mu, const ProblemSpec& spec,
                                                 const TraceWindow& window = {}) {
    const auto& d = spec.domain;
    const auto& u0 = spec.u_init.values;
    bool symmetric = spec.bc.symmetric() && d.n_cells % 2 == 0 && u0.size() == static_cast<std::size_t>(d.nodes());
    if (symmetric) {
        double scale = 1.0;
        for (double v : u0) scale = std::max(scale, std::abs(v));
        for (std::size_t j = 0, n = u0.size() - 1; j <= n; ++j)
            if (std::abs(u0[j] - u0[n - j]) > 1e-14 * scale) symmetric = false;
    }
    if (!symmetric) throw std::invalid_argument("reflection hypotheses violated");

    ProblemSpec original = spec;
    original.mu = mu;
    ProblemSpec mirrored = spec;
    mirrored.mu = reflect(mu);

    const auto f = solve_kpp(original, window.eps, window.dt);
    const auto g = solve_kpp(mirrored, window.eps, window.dt);

    CounterexampleReport report;
    const double mid = d.midpoint();
    const auto tf = extract_trace(f, d, mid, window.eps, true);
    const auto tg = extract_trace(g, d, mid, window.eps, true);
    report.midpoint = compare_traces(tf, tg);
    for (std::size_t k = 0; k < tf.size(); ++k)
        report.antisymmetry_residual = std::max(report.antisymmetry_residual, std::abs(tf.ux[k] + tg.ux[k]));
    const std::size_t n = f.nodes() - 1;
    for (std::size_t k = 0; k < f.steps(); ++k)
        for (std::size_t j = 0; j <= n; ++j)
            report.reflection_residual = std::max(report.reflection_residual, std::abs(f(k, j) - g(k, n - j)));
    return report;
}

/// True when mu(b - (x - a)) == mu(x) at every grid node (to tol).
inline bool is_reflection_symmetric(const GrowthField& mu, const Domain& d, double tol = 1e-12) {
    const auto v = sample_on_grid(mu, d);
    for (std::size_t j = 0, n = v.size() - 1; j <= n; ++j)
        if (std::abs(v[j] - v[n - j]) > tol) return false;
    return true;
}

// --- distinguishability ---------------------------------------------------

/// Traces (u, u_x, u_xx) at x0 for mu1 and mu2 with everything else equal.
inline TraceComparison distinguishability_check(const GrowthField& mu1, const GrowthField& mu2,
                                                const ProblemSpec& spec, double x0,
                                                const TraceWindow& window = {}) {
    ProblemSpec p1 = spec;
    p1.mu = mu1;
    ProblemSpec p2 = spec;
    p2.mu = mu2;
    return compare_traces(solve_trace(p1, window.eps, window.dt, x0, true),
                          solve_trace(p2, window.eps, window.dt, x0, true));
}

/// Same mu, two values of gamma, observed at a node where u_i vanishes.
inline TraceComparison gamma_identifiability_check(const GrowthField& mu, double gamma1, double gamma2,
                                                   const ProblemSpec& spec, double x0,
                                                   const TraceWindow& window = {}) {
    const std::size_t j = observation_node(spec.domain, x0);
    if (spec.u_init.values.size() != static_cast<std::size_t>(spec.domain.nodes()) || spec.u_init.values[j] != 0.0)
        throw std::invalid_argument("hypothesis violated: u_i(x0) must vanish");
    if (!(gamma1 > 0) || !(gamma2 > 0)) throw std::invalid_argument("gamma values must be positive");
    ProblemSpec p1 = spec;
    p1.mu = mu;
    p1.gamma = gamma1;
    ProblemSpec p2 = p1;
    p2.gamma = gamma2;
    return compare_traces(solve_trace(p1, window.eps, window.dt, x0, true),
                          solve_trace(p2, window.eps, window.dt, x0, true));
}

// --- stationary states ----------------------------------------------------

struct StationaryState {
    std::vector<double> values;
    double residual = 0.0;  // max-norm residual of the discrete stationary equation
    double time = 0.0;      // marching time at convergence
};

/// Max-norm residual of -D p'' - p (mu - gamma p) = 0 at interior nodes and
/// of the Robin conditions at the ends, with the same stencils as the
/// time stepper.
inline double stationary_residual(std::span<const double> p, std::span<const double> mu_nodes, double D,
                                  double gamma, const BoundaryCoefficients& bc, const Domain& d) {
    const std::size_t n = p.size() - 1;
    const double h = d.h();
    double r = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        const double lap = (p[j - 1] - 2.0 * p[j] + p[j + 1]) / (h * h);
        r = std::max(r, std::abs(-D * lap - p[j] * (mu_nodes[j] - gamma * p[j])));
    }
    r = std::max(r, std::abs(bc.alpha1 * p[0] - bc.beta1 * fd::first(p, 0, h)));
    r = std::max(r, std::abs(bc.alpha2 * p[n] + bc.beta2 * fd::first(p, n, h)));
    return r;
}

struct StationaryOptions {
    double dt = 0.05;
    double t_max = 1000.0;
    double tol = 1e-10;
    /// A limit whose maximum is below this counts as extinction.
    double extinction = 1e-6;
};

/// Marches the parabolic problem until successive states differ by less
/// than tol in max norm. Throws NumericalError when the march does not
/// settle by t_max or settles on the zero state.
inline StationaryState stationary_solve(const ProblemSpec& spec, StationaryOptions opt = {}) {
    validate(spec);
    CrankNicolsonStepper stepper(spec);
    std::vector<double> u = spec.u_init.values;
    std::vector<double> prev;
    double t = 0.0;
    std::size_t step = 0;
    for (;;) {
        if (t >= opt.t_max) throw NumericalError("no positive equilibrium reached");
        prev = u;
        stepper.step(u, opt.dt, ++step);
        t += opt.dt;
        double change = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) change = std::max(change, std::abs(u[j] - prev[j]));
        if (change < opt.tol) break;
    }
    const double umax = *std::max_element(u.begin(), u.end());
    const double umin = *std::min_element(u.begin(), u.end());
    if (umax < opt.extinction || !(umin > 0.0))
        throw NumericalError("no positive equilibrium reached: limit is not positive (max " + std::to_string(umax) + ")");
    StationaryState state;
    state.values = std::move(u);
    state.time = t;
    state.residual = stationary_residual(state.values, stepper.mu_nodes(), spec.D, spec.gamma, spec.bc, spec.domain);
    return state;
}

struct NonuniquenessReport {
    double tau = 0.0;
    double residual_original = 0.0;     // (mu, gamma) on p
    double residual_transformed = 0.0;  // (mu - tau gamma p, (1 - tau) gamma) on p
    double mu_change = 0.0;             // max |mu~ - mu| over nodes
    double gamma_transformed = 0.0;
};

/// Builds mu~ = mu - tau gamma p and gamma~ = (1 - tau) gamma and evaluates
/// the stationary residual of both pairs on the same p.
inline NonuniquenessReport stationary_nonuniqueness_check(const ProblemSpec& spec, const StationaryState& p, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
    const auto mu = sample_on_grid(spec.mu, spec.domain);
    std::vector<double> mu_t(mu.size());
    NonuniquenessReport r;
    r.tau = tau;
    for (std::size_t j = 0; j < mu.size(); ++j) {
        mu_t[j] = mu[j] - tau * spec.gamma * p.values[j];
        r.mu_change = std::max(r.mu_change, std::abs(mu_t[j] - mu[j]));
    }
    r.gamma_transformed = (1.0 - tau) * spec.gamma;
    r.residual_original = stationary_residual(p.values, mu, spec.D, spec.gamma, spec.bc, spec.domain);
    r.residual_transformed = stationary_residual(p.values, mu_t, spec.D, r.gamma_transformed, spec.bc, spec.domain);
    return r;
}

// --- positivity -----------------------------------------------------------

struct PositivityViolation {
    double t = 0.0;
    double x = 0.0;
    double value = 0.0;
};

struct PositivityReport {
    bool passed = true;
    double min_interior = std::numeric_limits<double>::infinity();  // t >= first step, interior nodes
    double min_global = std::numeric_limits<double>::infinity();    // all stored entries
    std::vector<PositivityViolation> violations;
};

/// Strict positivity at interior nodes after the first step, and no
/// undershoot below -undershoot anywhere.
inline PositivityReport positivity_check(const SpaceTimeField& field, const Domain& d, double undershoot = 1e-8) {
    PositivityReport r;
    const std::size_t n = field.nodes() - 1;
    for (std::size_t k = 0; k < field.steps(); ++k) {
        for (std::size_t j = 0; j <= n; ++j) {
            const double v = field(k, j);
            r.min_global = std::min(r.min_global, v);
            const bool interior = k > 0 && j > 0 && j < n;
            if (interior) r.min_interior = std::min(r.min_interior, v);
            if (v < -undershoot || (interior && !(v > 0.0))) {
                r.passed = false;
                if (r.violations.size() < 16)
                    r.violations.push_back({field.times()[k], d.node(static_cast<int>(j)), v});
            }
        }
    }
    return r;
}

// --- verdicts -------------------------------------------------------------

struct Verdict {
    std::string check;
    bool passed = false;
    std::map<std::string, double> metrics;
    std::string note;
};

struct VerifySettings {
    int n_cells = 960;
    TraceWindow window{};
    int samples = 10;
    int positivity_samples = 50;
    std::uint64_t seed = 1;
    int stationary_cells = 200;
    /// Two solves of one problem agree to this; used as the noise floor.
    double noise_floor = 1e-8;
};

namespace detail {
inline ProblemSpec reference_problem(int n_cells, GrowthField mu = GrowthField::constant(1.0)) {
    ProblemSpec spec;
    spec.domain = Domain{0.0, 1.0, n_cells};
    spec.D = 0.1;
    spec.gamma = 1.0;
    spec.bc = BoundaryCoefficients::neumann();
    spec.mu = std::move(mu);
    spec.u_init = InitialCondition::constant(spec.domain, 0.2);
    return spec;
}

inline GrowthField shifted(const GrowthField& mu, const Domain& d, double shift) {
    auto v = sample_on_grid(mu, d);
    for (auto& x : v) x += shift;
    return GrowthField(GridSamples{d.a, d.b, std::move(v)});
}
} // namespace detail

inline Verdict verify_counterexample(const VerifySettings& s) {
    Verdict v{"counterexample", true, {}, {}};
    const auto spec = detail::reference_problem(s.n_cells);
    double worst_u = 0.0, worst_reflection = 0.0, worst_antisym = 0.0;
    double weakest_ux = std::numeric_limits<double>::infinity();
    for (int k = 0; k < s.samples; ++k) {
        const auto mu = sample_random_mu(BumpBasis(10), s.seed + static_cast<std::uint64_t>(k));
        const auto r = counterexample_check(mu, spec, s.window);
        worst_u = std::max(worst_u, r.midpoint.sup_diff_u);
        worst_reflection = std::max(worst_reflection, r.reflection_residual);
        worst_antisym = std::max(worst_antisym, r.antisymmetry_residual);
        if (!is_reflection_symmetric(mu, spec.domain)) weakest_ux = std::min(weakest_ux, r.midpoint.sup_diff_ux);
    }
    v.metrics = {{"max_sup_diff_u", worst_u},
                 {"min_sup_diff_ux", weakest_ux},
                 {"max_reflection_residual", worst_reflection},
                 {"max_antisymmetry_residual", worst_antisym},
                 {"samples", static_cast<double>(s.samples)}};
    v.passed = worst_u <= 1e-8 && weakest_ux > 1e-4 && worst_reflection <= 1e-8 && worst_antisym <= 1e-6;
    return v;
}

inline Verdict verify_distinguishability(const VerifySettings& s) {
    Verdict v{"distinguishability", true, {}, {}};
    const auto spec = detail::reference_problem(s.n_cells);
    const auto mu = sample_random_mu(BumpBasis(10), s.seed);
    const double x0 = 2.0 / 3.0;
    const auto same = distinguishability_check(mu, mu, spec, x0, s.window);
    const auto shifted = distinguishability_check(mu, detail::shifted(mu, spec.domain, 1.0), spec, x0, s.window);
    const auto mirrored = distinguishability_check(mu, reflect(mu), spec, spec.domain.midpoint(), s.window);
    v.metrics = {{"identical_max_diff", same.max()},
                 {"shift_sup_diff_u", shifted.sup_diff_u},
                 {"mirror_mid_sup_diff_u", mirrored.sup_diff_u},
                 {"mirror_mid_sup_diff_ux", mirrored.sup_diff_ux}};
    v.passed = same.max() <= 1e-12 && shifted.sup_diff_u > 1e-3 && mirrored.sup_diff_u <= s.noise_floor &&
               mirrored.sup_diff_ux > s.noise_floor;
    return v;
}

inline Verdict verify_gamma(const VerifySettings& s) {
    Verdict v{"gamma", true, {}, {}};
    auto spec = detail::reference_problem(s.n_cells, sample_random_mu(BumpBasis(10), s.seed));
    const double x0 = spec.domain.midpoint();
    spec.u_init = InitialCondition::dip(spec.domain, 0.2, x0, 0.25);
    const auto same = gamma_identifiability_check(spec.mu, 1.0, 1.0, spec, x0, s.window);
    const auto differ = gamma_identifiability_check(spec.mu, 1.0, 2.0, spec, x0, s.window);
    v.metrics = {{"equal_gamma_max_diff", same.max()},
                 {"sup_diff_u", differ.sup_diff_u},
                 {"sup_diff_ux", differ.sup_diff_ux},
                 {"sup_diff_uxx", differ.sup_diff_uxx}};
    v.passed = same.max() <= 1e-12 && differ.max() > 1e-6;
    return v;
}

namespace detail {
/// Persistent heterogeneous growth field for stationary checks: 1 plus a
/// bounded random bump perturbation.
inline GrowthField persistent_mu(const Domain& d, std::uint64_t seed) {
    const auto bumps = sample_random_mu(BumpBasis(10), seed, -0.5, 0.5);
    return shifted(bumps, d, 1.0);
}
} // namespace detail

inline Verdict verify_stationary(const VerifySettings& s) {
    Verdict v{"stationary", true, {}, {}};
    const auto flat = stationary_solve(detail::reference_problem(s.stationary_cells));
    double flat_err = 0.0;
    for (double p : flat.values) flat_err = std::max(flat_err, std::abs(p - 1.0));

    auto spec = detail::reference_problem(s.stationary_cells);
    spec.mu = detail::persistent_mu(spec.domain, s.seed);
    const auto hetero = stationary_solve(spec);

    bool extinction_reported = false;
    try {
        stationary_solve(detail::reference_problem(s.stationary_cells, GrowthField::constant(-1.0)));
    } catch (const NumericalError&) {
        extinction_reported = true;
    }
    v.metrics = {{"constant_mu_max_error", flat_err},
                 {"constant_mu_residual", flat.residual},
                 {"heterogeneous_residual", hetero.residual},
                 {"negative_mu_rejected", extinction_reported ? 1.0 : 0.0}};
    v.passed = flat_err <= 1e-8 && flat.residual <= 1e-6 && hetero.residual <= 1e-6 && extinction_reported;
    return v;
}

inline Verdict verify_nonuniqueness(const VerifySettings& s) {
    Verdict v{"nonuniqueness", true, {}, {}};
    auto spec = detail::reference_problem(s.stationary_cells);
    spec.mu = detail::persistent_mu(spec.domain, s.seed);
    const auto p = stationary_solve(spec);
    double worst = 0.0, smallest_change = std::numeric_limits<double>::infinity();
    for (double tau : {0.25, 0.5, 0.75}) {
        const auto r = stationary_nonuniqueness_check(spec, p, tau);
        worst = std::max({worst, r.residual_transformed, r.residual_original});
        smallest_change = std::min(smallest_change, r.mu_change);
    }
    v.metrics = {{"max_residual", worst}, {"min_mu_change", smallest_change}};
    v.passed = worst <= 1e-6 && smallest_change > 1e-3;
    return v;
}

inline Verdict verify_positivity(const VerifySettings& s) {
    Verdict v{"positivity", true, {}, {}};
    auto spec = detail::reference_problem(s.n_cells);
    double min_interior = std::numeric_limits<double>::infinity();
    double min_global = std::numeric_limits<double>::infinity();
    bool ok = true;
    auto run = [&](const GrowthField& mu) {
        spec.mu = mu;
        const auto field = solve_kpp(spec, s.window.eps, s.window.dt);
        const auto r = positivity_check(field, spec.domain);
        ok = ok && r.passed;
        min_interior = std::min(min_interior, r.min_interior);
        min_global = std::min(min_global, r.min_global);
    };
    run(GrowthField::bump(std::vector<double>(11, -5.0)));
    for (int k = 0; k < s.positivity_samples; ++k)
        run(sample_random_mu(BumpBasis(10), s.seed + 1000 + static_cast<std::uint64_t>(k)));
    v.metrics = {{"min_interior", min_interior},
                 {"min_global", min_global},
                 {"fields", static_cast<double>(s.positivity_samples + 1)}};
    v.passed = ok && min_interior > 0.0 && min_global >= -1e-8;
    return v;
}

inline const std::vector<std::string>& verify_suite_names() {
    static const std::vector<std::string> names{"counterexample", "distinguishability", "gamma",
                                                "stationary",     "nonuniqueness",      "positivity"};
    return names;
}

/// Runs one named check or "all". Exceptions inside a check become a
/// failed verdict carrying the message.
inline std::vector<Verdict> run_verify(const std::string& suite, const VerifySettings& s = {}) {
    const auto& names = verify_suite_names();
    if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
        throw std::invalid_argument("unknown verify suite '" + suite + "'");
    std::vector<Verdict> out;
    for (const auto& name : names) {
        if (suite != "all" && suite != name) continue;
        try {
            if (name == "counterexample") out.push_back(verify_counterexample(s));
            else if (name == "distinguishability") out.push_back(verify_distinguishability(s));
            else if (name == "gamma") out.push_back(verify_gamma(s));
            else if (name == "stationary") out.push_back(verify_stationary(s));
            else if (name == "nonuniqueness") out.push_back(verify_nonuniqueness(s));
            else if (name == "positivity") out.push_back(verify_positivity(s));
        } catch (const std::exception& e) {
            out.push_back(Verdict{name, false, {}, e.what()});
        }
    }
    return out;
}

} // namespace fkpp
