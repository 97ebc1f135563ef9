#include "fkpp/verify.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace fkpp;

namespace {

ProblemSpec symmetric_spec(int cells = 960) {
    ProblemSpec s;
    s.domain = Domain{0.0, 1.0, cells};
    s.u_init = InitialCondition::constant(s.domain, 0.2);
    return s;
}

} // namespace

TEST(Counterexample, MidpointTracesAgreeDerivativesFlip) {
    const auto spec = symmetric_spec();
    const auto mu = sample_random_mu(BumpBasis(10), 77);
    const auto r = counterexample_check(mu, spec);
    EXPECT_LE(r.midpoint.sup_diff_u, 1e-8);
    EXPECT_GT(r.midpoint.sup_diff_ux, 1e-4);
    EXPECT_LE(r.reflection_residual, 1e-8);
    EXPECT_LE(r.antisymmetry_residual, 1e-6);
}

TEST(Counterexample, SymmetricFieldIsFixedByReflection) {
    const auto spec = symmetric_spec(240);
    const auto mu = GrowthField::bump({1.0, -2.0, 3.0, 0.5, 4.0, -1.0, 4.0, 0.5, 3.0, -2.0, 1.0});
    ASSERT_TRUE(is_reflection_symmetric(mu, spec.domain));
    const auto r = counterexample_check(mu, spec);
    EXPECT_LE(r.midpoint.max(), 1e-12);
}

TEST(Counterexample, AsymmetricSpecRejected) {
    auto spec = symmetric_spec(240);
    spec.bc = {0.5, 1.0, 0.0, 1.0};
    const auto mu = GrowthField::constant(1.0);
    EXPECT_THROW(counterexample_check(mu, spec), std::invalid_argument);
    auto odd = symmetric_spec(241);
    EXPECT_THROW(counterexample_check(mu, odd), std::invalid_argument);
    auto ramp = symmetric_spec(240);
    ramp.u_init = InitialCondition::from_function(ramp.domain, [](double x) { return 0.2 + x * x * (1 - x) * (1 - x); });
    ramp.u_init.values[3] += 0.01;
    EXPECT_THROW(counterexample_check(mu, ramp), std::invalid_argument);
}

TEST(Distinguishability, Examples) {
    const auto spec = symmetric_spec(480);
    const auto mu = sample_random_mu(BumpBasis(10), 5);
    EXPECT_LE(distinguishability_check(mu, mu, spec, 2.0 / 3.0).max(), 1e-12);
    auto shifted = sample_on_grid(mu, spec.domain);
    for (auto& v : shifted) v += 1.0;
    EXPECT_GT(distinguishability_check(mu, GrowthField(GridSamples{0.0, 1.0, shifted}), spec, 2.0 / 3.0).sup_diff_u, 1e-3);
    const auto mirror = distinguishability_check(mu, reflect(mu), spec, 0.5);
    EXPECT_LE(mirror.sup_diff_u, 1e-8);
    EXPECT_GT(mirror.sup_diff_ux, 1e-8);
}

// Property: distinct fields are separated above the noise floor of two identical solves.
TEST(Distinguishability, DistinctFieldsSeparateProperty) {
    const auto spec = symmetric_spec(240);
    for (std::uint64_t seed = 200; seed < 206; ++seed) {
        const auto a = sample_random_mu(BumpBasis(10), seed);
        const auto b = sample_random_mu(BumpBasis(10), seed + 50);
        const double noise = distinguishability_check(a, a, spec, 2.0 / 3.0).max();
        EXPECT_GT(distinguishability_check(a, b, spec, 2.0 / 3.0).max(), std::max(noise, 1e-8));
    }
}

TEST(Gamma, DifferentGammaIsVisible) {
    auto spec = symmetric_spec(480);
    spec.u_init = InitialCondition::dip(spec.domain, 0.2, 0.5, 0.25);
    ASSERT_EQ(spec.u_init.values[240], 0.0);
    ASSERT_TRUE(validate_initial_condition(spec.u_init, spec.bc, spec.domain).ok());
    const auto mu = sample_random_mu(BumpBasis(10), 3);
    EXPECT_LE(gamma_identifiability_check(mu, 1.0, 1.0, spec, 0.5).max(), 1e-12);
    EXPECT_GT(gamma_identifiability_check(mu, 1.0, 2.0, spec, 0.5).max(), 1e-6);
}

TEST(Gamma, NonvanishingInitialDataRejected) {
    const auto spec = symmetric_spec(240);
    EXPECT_THROW(gamma_identifiability_check(GrowthField::constant(1.0), 1.0, 2.0, spec, 0.5), std::invalid_argument);
}

TEST(Stationary, ConstantGrowthGivesCarryingCapacity) {
    auto spec = symmetric_spec(100);
    spec.mu = GrowthField::constant(1.0);
    const auto p = stationary_solve(spec);
    for (double v : p.values) EXPECT_NEAR(v, 1.0, 1e-8);
    EXPECT_LE(p.residual, 1e-6);
}

TEST(Stationary, NegativeGrowthIsNotAPositiveEquilibrium) {
    auto spec = symmetric_spec(100);
    spec.mu = GrowthField::constant(-1.0);
    EXPECT_THROW(stationary_solve(spec), NumericalError);
}

TEST(Stationary, NonuniquenessForSeveralTau) {
    auto spec = symmetric_spec(200);
    spec.mu = GrowthField::bump({1.0, 1.5, 0.5, 2.0, 1.0, 0.7, 1.2, 1.8, 0.9, 1.1, 1.3});
    const auto p = stationary_solve(spec);
    EXPECT_LE(p.residual, 1e-6);
    for (double v : p.values) EXPECT_GT(v, 0.0);
    for (double tau : {0.25, 0.5, 0.75}) {
        const auto r = stationary_nonuniqueness_check(spec, p, tau);
        EXPECT_LE(r.residual_transformed, 1e-6);
        EXPECT_DOUBLE_EQ(r.gamma_transformed, (1.0 - tau) * spec.gamma);
        EXPECT_GT(r.mu_change, 1e-3);
    }
    EXPECT_THROW(stationary_nonuniqueness_check(spec, p, 1.0), std::invalid_argument);
}

TEST(Stationary, ResidualOracleForExactProfile) {
    // p = cos(pi x) with mu chosen to make -D p'' = p (mu - gamma p) exact for the continuous problem
    const Domain d{0.0, 1.0, 400};
    std::vector<double> p(401), mu(401);
    const double D = 0.1, gamma = 1.0;
    for (int j = 0; j <= 400; ++j) {
        const double x = d.node(j);
        p[static_cast<std::size_t>(j)] = 2.0 + std::cos(M_PI * x);
        mu[static_cast<std::size_t>(j)] = D * M_PI * M_PI * std::cos(M_PI * x) / p[static_cast<std::size_t>(j)] + gamma * p[static_cast<std::size_t>(j)];
    }
    EXPECT_LE(stationary_residual(p, mu, D, gamma, BoundaryCoefficients::neumann(), d), 1e-4);
}

TEST(Positivity, Detector) {
    const Domain d{0.0, 1.0, 4};
    SpaceTimeField f(5);
    f.push_back(0.0, std::vector<double>{0.2, 0.2, 0.2, 0.2, 0.2});
    f.push_back(0.1, std::vector<double>{0.1, 0.3, -1.0, 0.3, 0.1});
    const auto r = positivity_check(f, d);
    EXPECT_FALSE(r.passed);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_DOUBLE_EQ(r.violations[0].t, 0.1);
    EXPECT_DOUBLE_EQ(r.violations[0].x, 0.5);
    EXPECT_EQ(r.min_global, -1.0);
}

TEST(Positivity, InitialMinimumIsExact) {
    auto spec = symmetric_spec(240);
    spec.mu = GrowthField::bump(std::vector<double>(11, -5.0));
    const auto f = solve_kpp(spec, 0.3, 0.3 / 600.0);
    const auto r = positivity_check(f, spec.domain);
    EXPECT_TRUE(r.passed);
    EXPECT_GT(r.min_interior, 0.0);
    double min0 = INFINITY;
    for (double v : f.row(0)) min0 = std::min(min0, v);
    EXPECT_EQ(min0, 0.2);
}

TEST(RunVerify, AllChecksPassOnCoarseGrid) {
    VerifySettings s;
    s.n_cells = 240;
    s.positivity_samples = 5;
    s.samples = 3;
    const auto verdicts = run_verify("all", s);
    ASSERT_EQ(verdicts.size(), verify_suite_names().size());
    for (const auto& v : verdicts) EXPECT_TRUE(v.passed) << v.check << " " << v.note;
    EXPECT_THROW(run_verify("nope", s), std::invalid_argument);
    EXPECT_EQ(run_verify("gamma", s).size(), 1u);
}
