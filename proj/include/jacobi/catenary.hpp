/** \file catenary.hpp
 *
 *  \brief Hanging-chain reference problems with closed forms.
 *
 *  Potential energy int y sqrt(1 + y'^2) dx with y'(a) = 0 (apex at a) and
 *  y(b) = y_b. With zeta = (x - a)/w:
 *
 *    fixed height:  y = w cosh(zeta),                    y_b = w cosh((b-a)/w)
 *    fixed length:  y = y_b - w (cosh((b-a)/w) - cosh(zeta)),  ell = w sinh((b-a)/w)
 *
 *    P = w / cosh^2(zeta),  Q = -1 / (w cosh^2(zeta)),  R = tanh(zeta)
 *    T = -1 / (w cosh^2(zeta)),  dG/dy' = tanh(zeta)
 *    u = zeta sinh(zeta) - cosh(zeta),  v = 1 + u
 */

#pragma once

#include <jacobi/accessory.hpp>
#include <jacobi/expression.hpp>
#include <jacobi/problem.hpp>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace jacobi::catenary {

class InfeasibleLength : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

/// Bisection to adjacent doubles on a bracket where g changes sign.
template <class G>
double bisect(G g, double lo, double hi)
{
    auto tol = [](double l, double h) { return std::nextafter(l, h) >= h; };
    auto r   = boost::math::tools::bisect(g, lo, hi, tol);
    return 0.5 * (r.first + r.second);
}

inline double height(double L, double w)
{
    return w * std::cosh(L / w);
}

} // namespace detail

/// Minimiser of w cosh(L / w) over w > 0, by Brent's method on [L/50, 50 L].
inline std::pair<double, double> min_height(double a, double b)
{
    double const L = b - a;
    auto f         = [L](double w) { return detail::height(L, w); };
    auto r         = boost::math::tools::brent_find_minima(f, L / 50.0, 50.0 * L, std::numeric_limits<double>::digits);
    return r;
}

/// All positive roots of y_b = w cosh((b - a)/w), ascending. Empty when y_b is below
/// the minimum of the right-hand side; a repeated root at tangency.
inline std::vector<double> solve_omega_fixed_height(double a, double b, double yb)
{
    if (!(b > a)) {
        throw std::invalid_argument("solve_omega_fixed_height: requires a < b");
    }
    if (!(yb > 0.0)) {
        throw std::invalid_argument("solve_omega_fixed_height: requires y_b > 0");
    }
    double const L          = b - a;
    auto const [wmin, hmin] = min_height(a, b);
    if (yb < hmin * (1.0 - 1e-12)) {
        return {};
    }
    if (yb <= hmin * (1.0 + 1e-12)) {
        return {wmin, wmin};
    }
    auto g = [&](double w) { return detail::height(L, w) - yb; };

    double lo = wmin;
    while (g(lo) <= 0.0) {
        lo *= 0.5;
    }
    double hi = wmin;
    while (g(hi) <= 0.0) {
        hi *= 2.0;
    }
    return {detail::bisect(g, lo, wmin), detail::bisect(g, wmin, hi)};
}

/// Unique positive root of ell = w sinh((b - a)/w). Requires ell > b - a.
inline double solve_omega_fixed_length(double a, double b, double ell)
{
    if (!(b > a)) {
        throw std::invalid_argument("solve_omega_fixed_length: requires a < b");
    }
    double const L = b - a;
    if (!(ell > L)) {
        throw InfeasibleLength("solve_omega_fixed_length: length " + std::to_string(ell) +
                               " must exceed the span " + std::to_string(L));
    }
    auto g    = [&](double w) { return w * std::sinh(L / w) - ell; };
    double lo = L;
    while (!(g(lo) > 0.0)) {
        lo *= 0.5;
    }
    double hi = L;
    while (g(hi) >= 0.0) {
        hi *= 2.0;
    }
    return detail::bisect(g, lo, hi);
}

/// Root of zeta tanh(zeta) = 1, the first zero of zeta sinh(zeta) - cosh(zeta).
inline double conjugate_zeta()
{
    return detail::bisect([](double z) { return z * std::tanh(z) - 1.0; }, 1.0, 1.5);
}

enum class Variant
{
    fixed_height,
    fixed_length
};

enum class Branch
{
    high, ///< larger w, higher apex
    low
};

struct ClosedForm
{
    double y{0.0};
    double P{0.0}, Q{0.0}, R{0.0}, T{0.0}, Gyp{0.0};
    double u{0.0};
    double v{0.0};
};

class CatenaryProblem
{
  public:
    /// Chain through y(b) = y_b with its apex at a; throws if y_b is unreachable.
    static CatenaryProblem fixed_height(double a, double b, double yb, Branch branch)
    {
        auto roots = solve_omega_fixed_height(a, b, yb);
        if (roots.empty()) {
            throw std::invalid_argument("no catenary with apex at a reaches y_b = " + std::to_string(yb));
        }
        CatenaryProblem p(a, b, Variant::fixed_height, branch == Branch::high ? roots.back() : roots.front());
        p.yb_ = yb;
        return p;
    }

    /// Chain of length ell; y_b only shifts the curve and sets the multiplier.
    static CatenaryProblem fixed_length(double a, double b, double ell, double yb = 0.0)
    {
        CatenaryProblem p(a, b, Variant::fixed_length, solve_omega_fixed_length(a, b, ell));
        p.ell_ = ell;
        p.yb_  = yb;
        return p;
    }

    /// Problem with a prescribed w (sweeps, unit tests); y_b and ell follow from w.
    static CatenaryProblem from_omega(double a, double b, double omega, Variant variant)
    {
        CatenaryProblem p(a, b, variant, omega);
        double L = b - a;
        p.ell_   = omega * std::sinh(L / omega);
        p.yb_    = variant == Variant::fixed_height ? omega * std::cosh(L / omega) : 0.0;
        return p;
    }

    double a() const
    {
        return a_;
    }
    double b() const
    {
        return b_;
    }
    double omega() const
    {
        return omega_;
    }
    double yb() const
    {
        return yb_;
    }
    double ell() const
    {
        return ell_;
    }
    Variant variant() const
    {
        return variant_;
    }

    /// Multiplier making H = F + lambda G reproduce P = w / cosh^2(zeta): y + lambda = w cosh(zeta).
    double lambda() const
    {
        if (variant_ != Variant::fixed_length) {
            return 0.0;
        }
        return omega_ * std::cosh((b_ - a_) / omega_) - yb_;
    }

    ClosedForm closed_forms(double zeta) const
    {
        double const w  = omega_;
        double const ch = std::cosh(zeta);
        double const sh = std::sinh(zeta);
        ClosedForm c;
        c.y = variant_ == Variant::fixed_height ? w * ch : yb_ - w * (std::cosh((b_ - a_) / w) - ch);
        c.P = w / (ch * ch);
        c.Q = -1.0 / (w * ch * ch);
        c.R = std::tanh(zeta);
        if (variant_ == Variant::fixed_length) {
            c.T   = -1.0 / (w * ch * ch);
            c.Gyp = std::tanh(zeta);
        }
        c.u = zeta * sh - ch;
        c.v = 1.0 + c.u;
        return c;
    }

    double zeta(double x) const
    {
        return (x - a_) / omega_;
    }

    /// u(a) = -1, v(a) = 0, u'(a) = v'(a) = 0: the normalisation of the closed forms.
    InitialConditions initial_conditions() const
    {
        return {-1.0, 0.0, 0.0, 0.0};
    }

    // CoefficientField
    Interval interval() const
    {
        return {a_, b_};
    }
    RegimeKind regime() const
    {
        return RegimeKind::mixed_left_free;
    }
    bool isoperimetric() const
    {
        return variant_ == Variant::fixed_length;
    }
    Coefficients operator()(double x) const
    {
        ClosedForm c = closed_forms(zeta(x));
        return {c.P, c.Q, c.R, c.T, c.Gyp};
    }

    /// The same problem written as expressions, for the generic pipeline.
    std::pair<VariationalProblem, Extremal> as_expression_problem() const
    {
        Params params{{"w", omega_}, {"a0", a_}, {"yb", yb_}, {"L", b_ - a_}};
        VariationalProblem vp;
        vp.F        = parse("y*sqrt(1+yp^2)", params);
        vp.interval = {a_, b_};
        vp.regime   = {RegimeKind::mixed_left_free, 0.0, yb_};
        std::string y;
        if (variant_ == Variant::fixed_height) {
            y = "w*cosh((x-a0)/w)";
        } else {
            y        = "yb - w*(cosh(L/w) - cosh((x-a0)/w))";
            vp.constraint = IsoperimetricConstraint{parse("sqrt(1+yp^2)", params), ell_, lambda()};
        }
        return {std::move(vp), Extremal(parse(y, params))};
    }

  private:
    CatenaryProblem(double a, double b, Variant variant, double omega)
        : a_(a)
        , b_(b)
        , variant_(variant)
        , omega_(omega)
    {
        if (!(b > a)) {
            throw std::invalid_argument("catenary: requires a < b");
        }
        if (!(omega > 0.0)) {
            throw std::invalid_argument("catenary: requires w > 0");
        }
        ell_ = omega * std::sinh((b - a) / omega);
    }

    double a_;
    double b_;
    Variant variant_;
    double omega_;
    double yb_{0.0};
    double ell_{0.0};
};

inline constexpr std::string_view fixed_height_name = "catenary-fixed-height";
inline constexpr std::string_view fixed_length_name = "catenary-fixed-length";

inline constexpr std::array<std::string_view, 2> builtin_names{fixed_height_name, fixed_length_name};

} // namespace jacobi::catenary
