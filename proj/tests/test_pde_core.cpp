#include "fkpp/pde_core.hpp"
#include "fkpp/tridiagonal.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace fkpp;

namespace {

ProblemSpec homogeneous(int cells, double mu = 1.0, double u0 = 0.2) {
    ProblemSpec spec;
    spec.domain = Domain{0.0, 1.0, cells};
    spec.D = 0.1;
    spec.gamma = 1.0;
    spec.mu = GrowthField::constant(mu);
    spec.bc = BoundaryCoefficients::neumann();
    spec.u_init = InitialCondition::constant(spec.domain, u0);
    return spec;
}

// Independent oracle: classical RK4 on u' = u (mu - gamma u) with tiny steps.
double rk4_logistic(double mu, double gamma, double u0, double t_end, int steps = 20000) {
    auto f = [&](double u) { return u * (mu - gamma * u); };
    double u = u0;
    const double h = t_end / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(u), k2 = f(u + 0.5 * h * k1), k3 = f(u + 0.5 * h * k2), k4 = f(u + h * k3);
        u += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return u;
}

double max_error_vs_logistic(int cells, int steps) {
    const auto spec = homogeneous(cells);
    double err = 0.0;
    march(spec, 0.3, 0.3 / steps, [&](std::size_t, double t, std::span<const double> u) {
        const double exact = logistic_reference(1.0, 1.0, 0.2, t);
        for (double v : u) err = std::max(err, std::abs(v - exact));
    });
    return err;
}

} // namespace

TEST(Tridiagonal, MatchesDenseSolve) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const std::size_t n = 12;
    std::vector<double> lo(n), di(n), up(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        lo[i] = i ? U(rng) : 0.0;
        up[i] = i + 1 < n ? U(rng) : 0.0;
        di[i] = 4.0 + U(rng);
        rhs[i] = U(rng);
    }
    std::vector<double> x = rhs, work = di;
    solve_tridiagonal(lo, work, up, x);
    for (std::size_t i = 0; i < n; ++i) {
        double r = di[i] * x[i] - rhs[i];
        if (i) r += lo[i] * x[i - 1];
        if (i + 1 < n) r += up[i] * x[i + 1];
        EXPECT_NEAR(r, 0.0, 1e-13);
    }
    TridiagonalLU lu;
    lu.factor(lo, di, up);
    std::vector<double> y = rhs;
    lu.solve(y);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], x[i], 1e-14);
}

TEST(LogisticReference, Examples) {
    EXPECT_NEAR(logistic_reference(1.0, 1.0, 0.2, 0.3), 0.25232, 5e-6);
    EXPECT_NEAR(logistic_reference(1.0, 1.0, 0.2, 0.3), rk4_logistic(1.0, 1.0, 0.2, 0.3), 1e-13);
    EXPECT_DOUBLE_EQ(logistic_reference(0.0, 1.0, 0.2, 5.0), 0.1);
    EXPECT_NEAR(logistic_reference(2.0, 0.5, 4.0, 7.3), 4.0, 1e-14);
    EXPECT_NEAR(logistic_reference(-1.0, 1.0, 0.2, 2.0), rk4_logistic(-1.0, 1.0, 0.2, 2.0), 1e-12);
}

TEST(Domain, NodeIndex) {
    const Domain d{0.0, 1.0, 960};
    ASSERT_TRUE(d.node_index(2.0 / 3.0));
    EXPECT_EQ(*d.node_index(2.0 / 3.0), 640);
    EXPECT_EQ(*d.node_index(0.5), 480);
    EXPECT_FALSE(d.node_index(0.5 + 0.25 / 960.0));
    EXPECT_THROW(observation_node(d, 0.5 + 0.5 / 960.0), std::invalid_argument);
    EXPECT_THROW(observation_node(d, 1.5), std::invalid_argument);
}

TEST(ValidateInitialCondition, StandardConfigurationIsAccepted) {
    const Domain d{0.0, 1.0, 960};
    EXPECT_TRUE(validate_initial_condition(InitialCondition::constant(d, 0.2), BoundaryCoefficients::neumann(), d).ok());
}

TEST(ValidateInitialCondition, IdenticallyZeroRejected) {
    const Domain d{0.0, 1.0, 100};
    const auto r = validate_initial_condition(InitialCondition::constant(d, 0.0), BoundaryCoefficients::neumann(), d);
    ASSERT_FALSE(r.ok());
    EXPECT_NE(std::find(r.violations.begin(), r.violations.end(), "u_i \xe2\x89\xa2 0 fails"), r.violations.end());
}

TEST(ValidateInitialCondition, NegativeRejected) {
    const Domain d{0.0, 1.0, 100};
    auto u = InitialCondition::constant(d, 0.2);
    u.values[50] = -0.1;
    const auto r = validate_initial_condition(u, BoundaryCoefficients::neumann(), d);
    EXPECT_NE(std::find(r.violations.begin(), r.violations.end(), "u_i >= 0 fails"), r.violations.end());
}

TEST(ValidateInitialCondition, DirichletCompatibility) {
    const Domain d{0.0, 1.0, 200};
    const BoundaryCoefficients bc{1.0, 0.0, 0.0, 1.0};  // Dirichlet left, Neumann right
    auto left_violations = [&](const InitialCondition& u) {
        std::vector<std::string> out;
        for (const auto& v : validate_initial_condition(u, bc, d).violations)
            if (v.find("(a)") != std::string::npos) out.push_back(v);
        return out;
    };
    // x - a: value and curvature vanish at a (the right end is not at issue here)
    EXPECT_TRUE(left_violations(InitialCondition::from_function(d, [](double x) { return x; })).empty());
    const auto quad = left_violations(InitialCondition::from_function(d, [](double x) { return x * x; }));
    ASSERT_EQ(quad.size(), 1u);
    EXPECT_NE(quad.front().find("u_i''(a)"), std::string::npos);
}

TEST(ValidateInitialCondition, CompatibleOnBothEnds) {
    const Domain d{0.0, 1.0, 200};
    // Robin at both ends: u - u' = 0 at 0, u + u' = 0 at 1; 1 + x - x^2 is exact under the stencils
    const BoundaryCoefficients bc{1.0, 1.0, 1.0, 1.0};
    EXPECT_TRUE(validate_initial_condition(InitialCondition::from_function(d, [](double x) { return 1.0 + x - x * x; }), bc, d).ok());
}

TEST(ValidateInitialCondition, NeumannSlopeMismatch) {
    const Domain d{0.0, 1.0, 200};
    const auto ramp = InitialCondition::from_function(d, [](double x) { return 0.2 + 0.1 * x; });
    EXPECT_FALSE(validate_initial_condition(ramp, BoundaryCoefficients::neumann(), d).ok());
}

TEST(Validate, RejectsBadCoefficients) {
    auto spec = homogeneous(100);
    spec.D = 0.0;
    EXPECT_THROW(validate(spec), std::invalid_argument);
    spec = homogeneous(100);
    spec.gamma = -1.0;
    EXPECT_THROW(validate(spec), std::invalid_argument);
    spec = homogeneous(100);
    spec.bc = {0.0, 0.0, 0.0, 1.0};
    EXPECT_THROW(validate(spec), std::invalid_argument);
}

TEST(TimeGrid, UniformAndShortenedLastStep) {
    const auto t = time_grid(0.3, 0.3 / 600.0);
    ASSERT_EQ(t.size(), 601u);
    EXPECT_EQ(t.front(), 0.0);
    EXPECT_DOUBLE_EQ(t.back(), 0.3);
    const auto s = time_grid(1.0, 0.3);
    ASSERT_EQ(s.size(), 5u);
    EXPECT_DOUBLE_EQ(s[3], 0.9);
    EXPECT_DOUBLE_EQ(s[4], 1.0);
}

TEST(SolveKpp, HomogeneousMatchesLogistic) {
    const auto field = solve_kpp(homogeneous(960), 0.3, 0.3 / 600.0);
    const double oracle = rk4_logistic(1.0, 1.0, 0.2, 0.3);
    for (double v : field.row(field.steps() - 1)) EXPECT_LE(std::abs(v - oracle) / oracle, 1e-5);
}

TEST(SolveKpp, ZeroGrowthDecaysLikeInverse) {
    const auto field = solve_kpp(homogeneous(200, 0.0), 2.0, 0.01);
    for (std::size_t k = 0; k < field.steps(); ++k) {
        const double t = field.times()[k];
        const double exact = 0.2 / (1.0 + 0.2 * t);
        for (double v : field.row(k)) EXPECT_NEAR(v, exact, 1e-7);
        if (k > 0) EXPECT_LT(field(k, 100), field(k - 1, 100));
    }
}

TEST(SolveKpp, SpatiallyConstantStaysConstant) {
    const auto field = solve_kpp(homogeneous(960, 1.7, 0.35), 0.3, 0.3 / 600.0);
    for (std::size_t k = 0; k < field.steps(); ++k) {
        const auto r = field.row(k);
        const auto [lo, hi] = std::minmax_element(r.begin(), r.end());
        EXPECT_LE(*hi - *lo, 1e-12);
    }
}

TEST(SolveKpp, ConvergenceOrder) {
    const double e1 = max_error_vs_logistic(240, 2000);
    const double e2 = max_error_vs_logistic(480, 4000);
    EXPECT_GE(e1 / e2, 3.6) << e1 << " " << e2;
}

TEST(SolveKpp, ConvergenceOrderInSpaceForHeterogeneousField) {
    // Reference solution on a fine grid; errors compared at shared nodes.
    auto spec_for = [](int cells) {
        ProblemSpec s;
        s.domain = Domain{0.0, 1.0, cells};
        s.mu = GrowthField::bump({0.5, -2.0, 3.0, 1.0, -1.5, 4.0, 2.0, -3.0, 0.5, 1.0, -0.5});
        s.u_init = InitialCondition::constant(s.domain, 0.2);
        return s;
    };
    const double dt = 0.3 / 4000.0;
    const auto fine = solve_kpp(spec_for(1920), 0.3, dt);
    auto err = [&](int cells) {
        const auto f = solve_kpp(spec_for(cells), 0.3, dt);
        const int stride = 1920 / cells;
        double e = 0.0;
        for (int j = 0; j <= cells; ++j)
            e = std::max(e, std::abs(f(f.steps() - 1, j) - fine(fine.steps() - 1, static_cast<std::size_t>(j * stride))));
        return e;
    };
    const double e1 = err(60), e2 = err(120);
    EXPECT_GE(e1 / e2, 3.6) << e1 << " " << e2;
}

TEST(SolveKpp, RobinRowsAreSatisfiedDiscretely) {
    ProblemSpec s;
    s.domain = Domain{0.0, 1.0, 400};
    s.bc = {1.0, 1.0, 1.0, 1.0};
    s.mu = GrowthField::constant(1.0);
    // u = 1 + x - x^2 * k chosen so u(0) - u'(0) = 0 and u(1) + u'(1) = 0:
    // u(0)=1, u'(0)=1 ok; u(1) + u'(1) = 2 - k + 1 - 2k = 0 -> k = 1
    s.u_init = InitialCondition::from_function(s.domain, [](double x) { return 1.0 + x - x * x; });
    ASSERT_TRUE(validate_initial_condition(s.u_init, s.bc, s.domain).ok());
    const auto f = solve_kpp(s, 0.1, 0.001);
    const double h = s.domain.h();
    for (std::size_t k = 1; k < f.steps(); ++k) {
        const auto u = f.row(k);
        EXPECT_NEAR(u[0] - fd::first(u, 0, h), 0.0, 1e-9);
        EXPECT_NEAR(u[400] + fd::first(u, 400, h), 0.0, 1e-9);
    }
}

TEST(SolveKpp, PositivityForStronglyNegativeGrowth) {
    ProblemSpec s;
    s.domain = Domain{0.0, 1.0, 960};
    s.mu = GrowthField::bump(std::vector<double>(11, -5.0));
    s.u_init = InitialCondition::constant(s.domain, 0.2);
    const auto f = solve_kpp(s, 0.3, 0.3 / 600.0);
    for (std::size_t k = 1; k < f.steps(); ++k)
        for (double v : f.row(k)) EXPECT_GT(v, 0.0);
    EXPECT_EQ(f(0, 17), 0.2);
}

// Property: positivity and the constant supersolution barrier over random fields.
TEST(SolveKpp, PositivityAndComparisonProperty) {
    for (std::uint64_t seed = 100; seed < 115; ++seed) {
        ProblemSpec s;
        s.domain = Domain{0.0, 1.0, 240};
        s.mu = sample_random_mu(BumpBasis(10), seed);
        s.u_init = InitialCondition::constant(s.domain, 0.2);
        const auto mu = sample_on_grid(s.mu, s.domain);
        const double K = std::max(*std::max_element(mu.begin(), mu.end()) / s.gamma, 0.2);
        const auto f = solve_kpp(s, 0.3, 0.3 / 600.0);
        for (std::size_t k = 1; k < f.steps(); ++k)
            for (std::size_t j = 0; j < f.nodes(); ++j) {
                EXPECT_GT(f(k, j), 0.0) << seed;
                EXPECT_LE(f(k, j), K + 1e-6) << seed;
            }
    }
}

TEST(SolveKpp, DeterministicBitForBit) {
    ProblemSpec s;
    s.domain = Domain{0.0, 1.0, 480};
    s.mu = sample_random_mu(BumpBasis(10), 3);
    s.u_init = InitialCondition::constant(s.domain, 0.2);
    const auto a = solve_kpp(s, 0.3, 0.001);
    const auto b = solve_kpp(s, 0.3, 0.001);
    for (std::size_t k = 0; k < a.steps(); ++k)
        for (std::size_t j = 0; j < a.nodes(); ++j) ASSERT_EQ(a(k, j), b(k, j));
}

TEST(SolveKpp, NewtonFailureIsReported) {
    SolverOptions opts;
    opts.max_newton = 1;
    opts.newton_tol = 0.0;
    ProblemSpec s = homogeneous(50);
    try {
        solve_kpp(s, 0.1, 0.01, opts);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("nonlinear step failed at step 1"), std::string::npos);
    }
}

TEST(ExtractTrace, ConstantFieldHasZeroDerivatives) {
    const auto f = solve_kpp(homogeneous(960), 0.3, 0.3 / 600.0);
    const auto tr = extract_trace(f, Domain{0.0, 1.0, 960}, 2.0 / 3.0, 0.3, true);
    EXPECT_EQ(tr.size(), 600u);
    for (std::size_t k = 0; k < tr.size(); ++k) {
        EXPECT_NEAR(tr.ux[k], 0.0, 1e-9);
        EXPECT_NEAR(tr.uxx[k], 0.0, 1e-5);
    }
}

TEST(ExtractTrace, QuadraticFieldDerivatives) {
    const Domain d{0.0, 1.0, 96};
    SpaceTimeField f(97);
    std::vector<double> row(97);
    for (int j = 0; j <= 96; ++j) row[static_cast<std::size_t>(j)] = d.node(j) * d.node(j);
    f.push_back(0.0, row);
    f.push_back(0.1, row);
    for (double x0 : {0.0, 0.25, 2.0 / 3.0, 1.0}) {
        const auto tr = extract_trace(f, d, x0, 0.1, true);
        ASSERT_EQ(tr.size(), 1u);
        EXPECT_NEAR(tr.u[0], x0 * x0, 1e-14);
        EXPECT_NEAR(tr.ux[0], 2.0 * x0, 1e-10);
        EXPECT_NEAR(tr.uxx[0], 2.0, 1e-8);
    }
}

TEST(ExtractTrace, LengthFollowsWindow) {
    const auto f = solve_kpp(homogeneous(960), 0.3, 0.3 / 600.0);
    EXPECT_EQ(extract_trace(f, Domain{}, 2.0 / 3.0, 0.15, false).size(), 300u);
    EXPECT_THROW(extract_trace(f, Domain{}, 0.5001, 0.3, false), std::invalid_argument);
}

TEST(SolveTrace, BitIdenticalToFullSolve) {
    ProblemSpec s;
    s.mu = sample_random_mu(BumpBasis(10), 9);
    s.u_init = InitialCondition::constant(s.domain, 0.2);
    const auto full = extract_trace(solve_kpp(s, 0.3, 0.3 / 600.0), s.domain, 2.0 / 3.0, 0.3, true);
    const auto direct = solve_trace(s, 0.3, 0.3 / 600.0, 2.0 / 3.0, true);
    EXPECT_EQ(full.times, direct.times);
    EXPECT_EQ(full.u, direct.u);
    EXPECT_EQ(full.ux, direct.ux);
    EXPECT_EQ(full.uxx, direct.uxx);
    const auto again = extract_trace(solve_kpp(s, 0.3, 0.3 / 600.0), s.domain, 2.0 / 3.0, 0.3, true);
    EXPECT_EQ(full.u, again.u);
}
