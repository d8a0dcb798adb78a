#include <jacobi/expression.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <string>

using namespace jacobi;

TEST(Parse, CatenaryIntegrand)
{
    Expr e = parse("y*sqrt(1+yp^2)");
    EXPECT_TRUE(e.uses(Var::y));
    EXPECT_TRUE(e.uses(Var::yp));
    EXPECT_FALSE(e.uses(Var::x));
    EXPECT_DOUBLE_EQ(e.evaluate(0.0, 1.0, 0.0), 1.0);
    EXPECT_NEAR(e.evaluate(0.0, 2.0, 1.0), 2.8284271247, 1e-10);
    EXPECT_DOUBLE_EQ(evaluate(e, 0.0, 2.0, 1.0), 2.0 * std::sqrt(2.0));
}

TEST(Parse, SingleVariable)
{
    Expr e = parse("x");
    EXPECT_TRUE(e.uses(Var::x));
    EXPECT_FALSE(e.uses(Var::y));
    EXPECT_EQ(e.evaluate(3.0, 0.0, 0.0), 3.0);
}

TEST(Parse, UnbalancedParenthesisReportsOffset)
{
    try {
        parse("y*(1+");
        FAIL() << "expected a syntax error";
    } catch (ParseError const& e) {
        EXPECT_EQ(e.position(), 5u);
    }
}

TEST(Parse, UnknownIdentifierIsNamed)
{
    try {
        parse("y + foo*2");
        FAIL() << "expected an unknown identifier error";
    } catch (UnknownIdentifier const& e) {
        EXPECT_EQ(e.name(), "foo");
        EXPECT_EQ(e.position(), 4u);
        EXPECT_NE(std::string(e.what()).find("foo"), std::string::npos);
    }
}

TEST(Parse, SyntaxErrors)
{
    for (auto const* bad : {"", "1 +", "(x", "x)", "sin x", "2 3", "x ^", "sqrt()", "1..2", "*x", "sin(x,y)"}) {
        EXPECT_THROW(parse(bad), ParseError) << bad;
    }
}

TEST(Parse, UnknownFunction)
{
    EXPECT_THROW(parse("foo(x)"), ParseError);
}

TEST(Parse, ParametersAndConstants)
{
    Params p{{"w", 1.5}, {"k2", -4.0}};
    EXPECT_DOUBLE_EQ(parse("w*cosh(x/w)", p).evaluate(0.0, 0.0, 0.0), 1.5);
    EXPECT_DOUBLE_EQ(parse("k2", p).evaluate(0.0, 0.0, 0.0), -4.0);
    EXPECT_DOUBLE_EQ(parse("pi").evaluate(0.0, 0.0, 0.0), M_PI);
    EXPECT_DOUBLE_EQ(parse("e").evaluate(0.0, 0.0, 0.0), M_E);
    EXPECT_THROW(parse("w"), UnknownIdentifier);
}

TEST(Parse, PowerIsRightAssociative)
{
    EXPECT_DOUBLE_EQ(parse("2^3^2").evaluate(0, 0, 0), 512.0);
    EXPECT_DOUBLE_EQ(parse("0^0").evaluate(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(parse("4^0.5").evaluate(0, 0, 0), 2.0);
    EXPECT_DOUBLE_EQ(parse("2^-1").evaluate(0, 0, 0), 0.5);
}

TEST(Parse, UnaryMinusBindsTighterThanPower)
{
    // unary := '-'? primary, so -x^2 is (-x)^2
    EXPECT_DOUBLE_EQ(parse("-x^2").evaluate(3.0, 0, 0), 9.0);
    EXPECT_DOUBLE_EQ(parse("-(x^2)").evaluate(3.0, 0, 0), -9.0);
    EXPECT_DOUBLE_EQ(parse("0-x^2").evaluate(3.0, 0, 0), -9.0);
}

TEST(Parse, Precedence)
{
    EXPECT_DOUBLE_EQ(parse("1+2*3").evaluate(0, 0, 0), 7.0);
    EXPECT_DOUBLE_EQ(parse("8/4/2").evaluate(0, 0, 0), 1.0);
    EXPECT_DOUBLE_EQ(parse("8-4-2").evaluate(0, 0, 0), 2.0);
    EXPECT_DOUBLE_EQ(parse("2*3^2").evaluate(0, 0, 0), 18.0);
    EXPECT_DOUBLE_EQ(parse("1e-3*1E3").evaluate(0, 0, 0), 1.0);
}

TEST(Parse, Functions)
{
    double x = 0.37;
    EXPECT_DOUBLE_EQ(parse("sin(x)").evaluate(x, 0, 0), std::sin(x));
    EXPECT_DOUBLE_EQ(parse("cos(x)").evaluate(x, 0, 0), std::cos(x));
    EXPECT_DOUBLE_EQ(parse("tan(x)").evaluate(x, 0, 0), std::tan(x));
    EXPECT_DOUBLE_EQ(parse("sinh(x)").evaluate(x, 0, 0), std::sinh(x));
    EXPECT_DOUBLE_EQ(parse("cosh(x)").evaluate(x, 0, 0), std::cosh(x));
    EXPECT_DOUBLE_EQ(parse("tanh(x)").evaluate(x, 0, 0), std::tanh(x));
    EXPECT_DOUBLE_EQ(parse("exp(x)").evaluate(x, 0, 0), std::exp(x));
    EXPECT_DOUBLE_EQ(parse("log(x)").evaluate(x, 0, 0), std::log(x));
    EXPECT_DOUBLE_EQ(parse("sqrt(x)").evaluate(x, 0, 0), std::sqrt(x));
    EXPECT_DOUBLE_EQ(parse("abs(-x)").evaluate(x, 0, 0), x);
}

TEST(Evaluate, DomainErrorsNameTheSubterm)
{
    try {
        parse("1 + log(y - 2)").evaluate(0.0, 1.0, 0.0);
        FAIL();
    } catch (DomainError const& e) {
        EXPECT_NE(e.subterm().find("log"), std::string::npos);
    }
    try {
        parse("sqrt(x)").evaluate(-1.0, 0.0, 0.0);
        FAIL();
    } catch (DomainError const& e) {
        EXPECT_NE(e.subterm().find("sqrt"), std::string::npos);
    }
    try {
        parse("y/x").evaluate(0.0, 1.0, 0.0);
        FAIL();
    } catch (DomainError const& e) {
        EXPECT_NE(e.subterm().find("/"), std::string::npos);
    }
    EXPECT_THROW(parse("log(0)").evaluate(0, 0, 0), DomainError);
    EXPECT_THROW(parse("(-8)^(1/3)").evaluate(0, 0, 0), DomainError);
    EXPECT_THROW(parse("0^(-1)").evaluate(0, 0, 0), DomainError);
}

TEST(Evaluate, PureAndBitIdentical)
{
    Expr e = parse("y*sqrt(1+yp^2) + sin(x)*exp(-x*y)");
    oracle::Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        double x = rng.uniform(-3, 3), y = rng.uniform(-3, 3), yp = rng.uniform(-3, 3);
        double first  = e.evaluate(x, y, yp);
        double second = e.evaluate(x, y, yp);
        EXPECT_EQ(std::memcmp(&first, &second, sizeof(double)), 0);
    }
}

TEST(Evaluate, PrintReparseRoundTrip)
{
    Params p{{"w", 0.8}};
    oracle::Rng rng(11);
    for (auto const* src : {"y*sqrt(1+yp^2)", "-x^2 + 3*y - yp/2", "2^3^x", "w*cosh((x-1)/w)", "-(-x)",
                            "exp(-x)*sin(2*pi*x)", "1e-3*x + 4.25e2", "abs(x - y)^1.5", "tanh(x)/(1+y^2)"}) {
        Expr e  = parse(src, p);
        Expr e2 = parse(e.to_string(), p);
        EXPECT_EQ(e2.to_string(), e.to_string()) << src;
        for (int i = 0; i < 20; ++i) {
            double x = rng.uniform(0.1, 2), y = rng.uniform(0.1, 2), yp = rng.uniform(-2, 2);
            EXPECT_EQ(e.evaluate(x, y, yp), e2.evaluate(x, y, yp)) << src;
        }
    }
}

TEST(Partial, CatenaryIntegrandExamples)
{
    Expr F = parse("y*sqrt(1+yp^2)");
    EXPECT_NEAR(partial(F, {Var::yp, Var::yp}, 0.0, 2.0, 0.0), 2.0, 1e-6);
    EXPECT_NEAR(partial(F, {Var::y, Var::yp}, 0.0, 2.0, 0.0), 0.0, 1e-6);
    EXPECT_NEAR(partial(parse("y"), {Var::y}, 0.3, -4.0, 7.0), 1.0, 1e-12);

    oracle::Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        double y = rng.uniform(0.2, 3.0), yp = rng.uniform(-2.0, 2.0);
        double s = std::sqrt(1 + yp * yp);
        EXPECT_NEAR(partial(F, {Var::yp, Var::yp}, 0.0, y, yp), y / (s * s * s), 1e-6);
        EXPECT_NEAR(partial(F, {Var::y, Var::yp}, 0.0, y, yp), yp / s, 1e-6);
        EXPECT_NEAR(partial(F, {Var::yp}, 0.0, y, yp), y * yp / s, 1e-8);
        EXPECT_NEAR(partial(F, {Var::y, Var::y}, 0.0, y, yp), 0.0, 1e-6);
    }
}

TEST(Partial, QuadraticPolynomialsAreExact)
{
    oracle::Rng rng(2024);
    std::array<Var, 3> const vars{Var::x, Var::y, Var::yp};
    for (int trial = 0; trial < 200; ++trial) {
        // f = sum c_ij v_i v_j + sum d_i v_i + c, coefficients in [-5, 5]
        double c[3][3], d[3];
        std::string src = std::to_string(rng.uniform(-5, 5));
        char const* names[3] = {"x", "y", "yp"};
        for (int i = 0; i < 3; ++i) {
            d[i] = rng.uniform(-5, 5);
            src += " + (" + std::to_string(d[i]) + ")*" + names[i];
            for (int j = i; j < 3; ++j) {
                c[i][j] = rng.uniform(-5, 5);
                src += " + (" + std::to_string(c[i][j]) + ")*" + names[i] + "*" + names[j];
            }
        }
        // the text round-trips the printed coefficients exactly
        for (int i = 0; i < 3; ++i) {
            d[i] = std::stod(std::to_string(d[i]));
            for (int j = i; j < 3; ++j) {
                c[i][j] = std::stod(std::to_string(c[i][j]));
            }
        }
        Expr f = parse(src);
        Point p{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)};
        for (int i = 0; i < 3; ++i) {
            double exact1 = d[i];
            for (int j = 0; j < 3; ++j) {
                double cij = i <= j ? c[i][j] : c[j][i];
                exact1 += (i == j ? 2.0 : 1.0) * cij * p[j];
            }
            Var wrt1[1] = {vars[i]};
            double got1 = partial(f, std::span<Var const>(wrt1), p);
            EXPECT_NEAR(got1, exact1, 1e-8 * std::max(1.0, std::abs(exact1))) << src;
            for (int j = 0; j < 3; ++j) {
                double cij    = i <= j ? c[i][j] : c[j][i];
                double exact2 = i == j ? 2.0 * cij : cij;
                Var wrt2[2]   = {vars[i], vars[j]};
                double got2   = partial(f, std::span<Var const>(wrt2), p);
                EXPECT_NEAR(got2, exact2, 1e-8 * std::max(1.0, std::abs(exact2))) << src;
            }
        }
    }
}

TEST(Partial, MixedPartialsCommute)
{
    oracle::Rng rng(99);
    for (auto const* src : {"y*sqrt(1+yp^2)", "exp(x*y)*cos(yp)", "sin(x+y*yp)", "x^2*y^3 + yp*log(1+y^2)",
                            "sqrt(1+yp^2)/y"}) {
        Expr f = parse(src);
        for (int i = 0; i < 20; ++i) {
            Point p{rng.uniform(0.1, 1.5), rng.uniform(0.5, 1.5), rng.uniform(-1, 1)};
            for (auto [u, v] : {std::pair{Var::x, Var::y}, std::pair{Var::x, Var::yp}, std::pair{Var::y, Var::yp}}) {
                Var uv[2] = {u, v}, vu[2] = {v, u};
                double a = partial(f, std::span<Var const>(uv), p);
                double b = partial(f, std::span<Var const>(vu), p);
                EXPECT_NEAR(a, b, 1e-6 * std::max(1.0, std::abs(a))) << src;
            }
        }
    }
}

TEST(Partial, StencilLeavingDomainIsDomainError)
{
    Expr f = parse("sqrt(y)");
    EXPECT_THROW(partial(f, {Var::y}, 0.0, 0.0, 0.0), DomainError);
}

TEST(Partial, RejectsBadVariableLists)
{
    Expr f = parse("x*y");
    EXPECT_THROW(partial(f, std::initializer_list<Var>{}, 0, 0, 0), std::invalid_argument);
    EXPECT_THROW(partial(f, {Var::x, Var::y, Var::yp}, 0, 0, 0), std::invalid_argument);
}
