#include <jacobi/accessory.hpp>
#include <jacobi/catenary.hpp>
#include <jacobi/oracle.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace jacobi;
using catenary::CatenaryProblem;
using catenary::Variant;

namespace {

FunctionField constant_field(double P, double Q, double T, RegimeKind regime, double a, double b, bool iso)
{
    return FunctionField({a, b}, regime, iso, [=](double) { return Coefficients{P, Q, 0.0, T, 0.0}; });
}

/// m(x) = int_0^x u T, n(x) = int_0^x v T for the w = 1 chain, by Simpson.
std::pair<double, double> chain_moments(double x)
{
    auto T = [](double s) { return -1.0 / (std::cosh(s) * std::cosh(s)); };
    double m = oracle::simpson([&](double s) { return oracle::cat_u(s) * T(s); }, 0.0, x, 4000);
    double n = oracle::simpson([&](double s) { return oracle::cat_v(s) * T(s); }, 0.0, x, 4000);
    return {m, n};
}

} // namespace

TEST(Integrate, CatenaryUMatchesClosedForm)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_height);
    auto traj = integrate(cat, cat.initial_conditions(), 2000);
    double worst = 0.0;
    for (auto const& s : traj.samples()) {
        worst = std::max(worst, std::abs(s.u - oracle::cat_u(s.x)));
    }
    EXPECT_LT(worst, 1e-7);
    EXPECT_FALSE(traj.isoperimetric());
    for (auto const& s : traj.samples()) {
        EXPECT_EQ(s.v, 0.0);
        EXPECT_EQ(s.zv, 0.0);
        EXPECT_EQ(s.m, 0.0);
        EXPECT_EQ(s.n, 0.0);
    }
}

TEST(Integrate, CatenaryThroughExpressionPipeline)
{
    auto cat      = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto [vp, ex] = cat.as_expression_problem();
    ExpressionField field(vp, ex);
    auto traj = integrate(field, cat.initial_conditions(), 1000);
    double wu = 0.0, wv = 0.0;
    for (auto const& s : traj.samples()) {
        wu = std::max(wu, std::abs(s.u - oracle::cat_u(s.x)));
        wv = std::max(wv, std::abs(s.v - oracle::cat_v(s.x)));
    }
    EXPECT_LT(wu, 1e-7);
    EXPECT_LT(wv, 1e-7);
}

TEST(Integrate, StraightLineForFreeProblem)
{
    auto f    = constant_field(1.0, 0.0, 0.0, RegimeKind::dirichlet, 0.5, 2.5, false);
    auto ics  = default_initial_conditions(RegimeKind::dirichlet, 1.0);
    auto traj = integrate(f, ics, 500);
    for (auto const& s : traj.samples()) {
        EXPECT_NEAR(s.u, s.x - 0.5, 1e-11);
        EXPECT_NEAR(s.uprime(), 1.0, 1e-11);
    }
}

TEST(Integrate, IsoperimetricCatenaryV)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto traj = integrate(cat, cat.initial_conditions(), 1000);
    ASSERT_TRUE(traj.isoperimetric());
    double worst = 0.0;
    for (auto const& s : traj.samples()) {
        worst = std::max(worst, std::abs(s.v - oracle::cat_v(s.x)));
    }
    EXPECT_LT(worst, 1e-7);
}

TEST(Integrate, TrajectoryShape)
{
    auto cat = CatenaryProblem::from_omega(1.0, 2.5, 0.7, Variant::fixed_length);
    for (int n_out : {10, 1000, 2500}) {
        auto traj    = integrate(cat, cat.initial_conditions(), n_out);
        auto samples = traj.samples();
        EXPECT_EQ(samples.size(), static_cast<std::size_t>(std::max(n_out, 1000)));
        EXPECT_EQ(samples.front().x, 1.0);
        EXPECT_EQ(samples.back().x, 2.5);
        EXPECT_EQ(samples.front().m, 0.0);
        EXPECT_EQ(samples.front().n, 0.0);
        for (std::size_t i = 1; i < samples.size(); ++i) {
            EXPECT_GT(samples[i].x, samples[i - 1].x);
        }
    }
}

TEST(Integrate, HermiteInterpolationBetweenRows)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto traj = integrate(cat, cat.initial_conditions(), 1000);
    oracle::Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        double x = rng.uniform(0.0, 2.0);
        auto s   = traj.at(x);
        EXPECT_NEAR(s.u, oracle::cat_u(x), 1e-7);
        EXPECT_NEAR(s.v, oracle::cat_v(x), 1e-7);
    }
    EXPECT_EQ(traj.at(-1.0).x, 0.0);
    EXPECT_EQ(traj.at(5.0).x, 2.0);
}

TEST(Integrate, FailsWhenPLosesPositivity)
{
    FunctionField f({0.0, 2.0}, RegimeKind::dirichlet, false,
                    [](double x) { return Coefficients{1.0 - x, 0.0, 0.0, 0.0, 0.0}; });
    try {
        integrate(f, default_initial_conditions(RegimeKind::dirichlet, 1.0));
        FAIL() << "expected an integration error";
    } catch (IntegrationError const& e) {
        EXPECT_GT(e.x(), 0.9);
        EXPECT_LE(e.x(), 1.1);
    }
}

TEST(Integrate, RejectsTrivialInitialConditions)
{
    auto f = constant_field(1.0, 0.0, 0.0, RegimeKind::dirichlet, 0.0, 1.0, false);
    EXPECT_THROW(integrate(f, InitialConditions{0.0, 0.0, 1.0, 1.0}), std::invalid_argument);
}

TEST(Integrate, DefaultInitialConditions)
{
    auto d = default_initial_conditions(RegimeKind::dirichlet, 2.5);
    EXPECT_EQ(d.u0, 0.0);
    EXPECT_EQ(d.zu0, 2.5);
    EXPECT_EQ(d.v0, 0.0);
    EXPECT_EQ(d.zv0, 0.0);
    for (auto k : {RegimeKind::mixed_left_free, RegimeKind::mixed_right_free}) {
        auto m = default_initial_conditions(k, 2.5);
        EXPECT_EQ(m.u0, 1.0);
        EXPECT_EQ(m.zu0, 0.0);
        EXPECT_EQ(m.v0, 0.0);
        EXPECT_EQ(m.zv0, 0.0);
    }
}

TEST(Integrate, LinearInInitialConditions)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 0.8, Variant::fixed_length);
    auto base = integrate(cat, cat.initial_conditions());
    for (double c : {-2.0, 0.5, 3.0}) {
        auto ics = cat.initial_conditions();
        ics.u0 *= c;
        ics.zu0 *= c;
        auto scaled = integrate(cat, ics);
        auto s0     = base.samples();
        auto s1     = scaled.samples();
        ASSERT_EQ(s0.size(), s1.size());
        for (std::size_t i = 0; i < s0.size(); i += 37) {
            EXPECT_NEAR(s1[i].u, c * s0[i].u, 1e-8 * std::max(1.0, std::abs(c * s0[i].u)));
            EXPECT_NEAR(s1[i].zu, c * s0[i].zu, 1e-8 * std::max(1.0, std::abs(c * s0[i].zu)));
            EXPECT_NEAR(s1[i].m, c * s0[i].m, 1e-8 * std::max(1.0, std::abs(c * s0[i].m)));
            // v does not depend on u
            EXPECT_NEAR(s1[i].v, s0[i].v, 1e-9 * std::max(1.0, std::abs(s0[i].v)));
        }
    }
}

TEST(Delta, VanishesAtA)
{
    auto cat    = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto traj   = integrate(cat, cat.initial_conditions());
    auto series = delta_series(traj);
    ASSERT_EQ(series.size(), traj.samples().size());
    EXPECT_EQ(series.front().x, 0.0);
    EXPECT_EQ(series.front().value, 0.0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        auto const& s = traj.samples()[i];
        EXPECT_EQ(series[i].value, s.m * s.v - s.n * s.u);
    }
}

TEST(Delta, MatchesIndependentQuadratureAtZetaOne)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto traj = integrate(cat, cat.initial_conditions());
    auto [m, n] = chain_moments(1.0);
    double ref  = m * oracle::cat_v(1.0) - n * oracle::cat_u(1.0);
    auto s      = traj.at(1.0);
    EXPECT_NEAR(s.m, m, 1e-7);
    EXPECT_NEAR(s.n, n, 1e-7);
    EXPECT_NEAR(s.delta(), ref, 1e-6);
}

TEST(Delta, ClosedFormAgreesWithQuadrature)
{
    // candidate closed form zeta cosh zeta - sinh zeta, checked against quadrature
    for (double z : {0.1, 0.5, 1.0, 1.5, 2.0}) {
        auto [m, n] = chain_moments(z);
        double quad = m * oracle::cat_v(z) - n * oracle::cat_u(z);
        EXPECT_NEAR(quad, z * std::cosh(z) - std::sinh(z), 1e-9) << z;
        EXPECT_NEAR(m, z / std::cosh(z), 1e-9);
        EXPECT_NEAR(n, z / std::cosh(z) - std::tanh(z), 1e-9);
    }
}

TEST(Delta, ScalesWithU)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto base = delta_series(integrate(cat, cat.initial_conditions()));
    auto ics  = cat.initial_conditions();
    ics.u0 *= 3.0;
    auto tripled = delta_series(integrate(cat, ics));
    for (std::size_t i = 0; i < base.size(); i += 50) {
        EXPECT_NEAR(tripled[i].value, 3.0 * base[i].value, 1e-9 * std::max(1.0, std::abs(base[i].value)));
    }
}

TEST(Delta, RequiresIsoperimetricRun)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_height);
    auto traj = integrate(cat, cat.initial_conditions());
    EXPECT_THROW(delta_series(traj), std::invalid_argument);
    EXPECT_THROW(wronskian_residual(traj), std::invalid_argument);
}

TEST(Wronskian, HoldsAlongCatenary)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto traj = integrate(cat, cat.initial_conditions());
    EXPECT_LT(wronskian_residual(traj), 1e-7);
    EXPECT_EQ(wronskian_residual_at(traj.samples().front(), traj.initial_conditions()), 0.0);
}

TEST(Wronskian, CarriesNonzeroBoundaryValue)
{
    // Dirichlet starts with zu0 != 0, so P(u'v - uv') - m is constant, not zero
    auto f    = constant_field(1.0, -1.0, 1.0, RegimeKind::dirichlet, 0.0, 3.0, true);
    auto ics  = InitialConditions{0.0, 1.0, 0.3, 0.0};
    auto traj = integrate(f, ics);
    EXPECT_LT(wronskian_residual(traj), 1e-8);
}

TEST(Wronskian, CorruptedMomentsAreDetected)
{
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto traj = integrate(cat, cat.initial_conditions());
    std::vector<AccessorySample> rows(traj.samples().begin(), traj.samples().end());
    double mmax = 0.0;
    for (auto& r : rows) {
        mmax = std::max(mmax, std::abs(r.m));
        r.m  = 0.0;
    }
    AccessoryTrajectory bad(rows, true, traj.initial_conditions());
    EXPECT_GT(wronskian_residual(bad), 0.5 * mmax);
}

TEST(Identities, JacobiTransformation)
{
    // int P (pu)'^2 + Q (pu)^2 = [P p^2 u u']_a^b + int P p'^2 u^2 for any smooth p
    auto cat  = CatenaryProblem::from_omega(0.0, 1.0, 1.0, Variant::fixed_height);
    auto traj = integrate(cat, cat.initial_conditions());
    oracle::Rng rng(17);
    for (int trial = 0; trial < 5; ++trial) {
        double c1 = rng.uniform(-0.5, 0.5), k = rng.uniform(0.5, 4.0), ph = rng.uniform(0, 3);
        auto p  = [&](double x) { return 1.0 + c1 * std::sin(k * x + ph); };
        auto dp = [&](double x) { return c1 * k * std::cos(k * x + ph); };
        auto lhs_integrand = [&](double x) {
            auto s    = traj.at(x);
            auto c    = cat(x);
            double up = s.zu / c.P;
            double hp = dp(x) * s.u + p(x) * up;
            double h  = p(x) * s.u;
            return c.P * hp * hp + c.Q * h * h;
        };
        auto rhs_integrand = [&](double x) {
            auto s = traj.at(x);
            return cat(x).P * dp(x) * dp(x) * s.u * s.u;
        };
        auto boundary = [&](double x) {
            auto s = traj.at(x);
            return p(x) * p(x) * s.u * s.zu;
        };
        double lhs = oracle::simpson(lhs_integrand, 0.0, 1.0, 2000);
        double rhs = boundary(1.0) - boundary(0.0) + oracle::simpson(rhs_integrand, 0.0, 1.0, 2000);
        EXPECT_NEAR(lhs, rhs, 1e-5 * std::max(1.0, std::abs(lhs)));
    }
}

TEST(Identities, CutoffAtConjugatePointDegenerates)
{
    // unstable chain: u vanishes inside (a, b]
    double const zs = oracle::zeta_star();
    auto cat        = CatenaryProblem::from_omega(0.0, 1.0, 0.47, Variant::fixed_height);
    auto traj       = integrate(cat, cat.initial_conditions());
    auto h          = cutoff_variation(traj, zs * 0.47);
    auto val        = second_variation_of(h, cat);
    EXPECT_LT(std::abs(val.value), 1e-4 * val.norm_squared);
    EXPECT_TRUE(val.warnings.empty());
}

TEST(Identities, MomentDecreasesWhileUPositive)
{
    // default mixed u(a) = 1 > 0 with T < 0: m' = u T < 0 until the first zero
    auto cat  = CatenaryProblem::from_omega(0.0, 2.0, 1.0, Variant::fixed_length);
    auto traj = integrate(cat, default_initial_conditions(RegimeKind::mixed_left_free, 1.0));
    auto rows = traj.samples();
    for (std::size_t i = 1; i < rows.size() && rows[i].u > 0.0; ++i) {
        EXPECT_LE(rows[i].m, rows[i - 1].m);
    }
}

TEST(Basis, HyperbolicPair)
{
    BasisFunction zero{[](double) { return 0.0; }, [](double) { return 0.0; }};
    BasisFunction ch{[](double x) { return std::cosh(x); }, [](double x) { return std::sinh(x); }};
    BasisFunction sh{[](double x) { return std::sinh(x); }, [](double x) { return std::cosh(x); }};
    auto uv = construct_from_basis(zero, ch, sh, 0.0);
    for (double x : {0.0, 0.3, 1.0, 2.0}) {
        EXPECT_DOUBLE_EQ(uv.u.value(x), std::cosh(x));
    }
    EXPECT_EQ(uv.u.derivative(0.0), 0.0);
}

TEST(Basis, CatenaryBasisGivesClosedFormUpToScale)
{
    // homogeneous solutions of the w = 1 chain: sinh z and cosh z - z sinh z
    auto s  = [](double z) { return std::sinh(z); };
    auto ds = [](double z) { return std::cosh(z); };
    auto c  = [](double z) { return std::cosh(z) - z * std::sinh(z); };
    auto dc = [](double z) { return -z * std::cosh(z); };
    BasisFunction t1{[=](double z) { return s(z) + 2 * c(z); }, [=](double z) { return ds(z) + 2 * dc(z); }};
    BasisFunction t2{[=](double z) { return c(z) - 3 * s(z); }, [=](double z) { return dc(z) - 3 * ds(z); }};
    BasisFunction t0{[](double) { return 1.0; }, [](double) { return 0.0; }};
    auto uv = construct_from_basis(t0, t1, t2, 0.0);

    double const pts[5] = {0.2, 0.7, 1.1, 1.6, 2.3};
    double num = 0.0, den = 0.0;
    for (double z : pts) {
        num += uv.u.value(z) * oracle::cat_u(z);
        den += oracle::cat_u(z) * oracle::cat_u(z);
    }
    double scale = num / den;
    EXPECT_GT(std::abs(scale), 0.1);
    for (double z : pts) {
        EXPECT_NEAR(uv.u.value(z), scale * oracle::cat_u(z), 1e-8);
    }
    EXPECT_NEAR(uv.u.derivative(0.0), 0.0, 1e-15);
    // theta0' (a) = 0, so v = theta0
    EXPECT_EQ(uv.C1, 0.0);
    EXPECT_EQ(uv.C2, 0.0);
    EXPECT_EQ(uv.v.value(1.3), 1.0);
}

TEST(Basis, TieBreakAndDerivativeCondition)
{
    BasisFunction t0{[](double z) { return 1.0 + 2.0 * std::sinh(z); }, [](double z) { return 2.0 * std::cosh(z); }};
    BasisFunction sh{[](double z) { return std::sinh(z); }, [](double z) { return std::cosh(z); }};
    BasisFunction ch{[](double z) { return std::cosh(z); }, [](double z) { return std::sinh(z); }};

    auto a = construct_from_basis(t0, sh, ch, 0.0); // theta1'(0) = 1 != 0: C2 = 0
    EXPECT_DOUBLE_EQ(a.C1, -2.0);
    EXPECT_EQ(a.C2, 0.0);
    EXPECT_NEAR(a.v.derivative(0.0), 0.0, 1e-15);

    auto b = construct_from_basis(t0, ch, sh, 0.0); // theta1'(0) = 0: C1 = 0
    EXPECT_EQ(b.C1, 0.0);
    EXPECT_DOUBLE_EQ(b.C2, -2.0);
    EXPECT_NEAR(b.v.derivative(0.0), 0.0, 1e-15);
}

TEST(Basis, DegenerateBasisThrows)
{
    BasisFunction ch{[](double z) { return std::cosh(z); }, [](double z) { return std::sinh(z); }};
    BasisFunction t0{[](double) { return 1.0; }, [](double) { return 0.0; }};
    EXPECT_THROW(construct_from_basis(t0, ch, ch, 0.0), DegenerateBasis);
}
