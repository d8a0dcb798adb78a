/** \file problem.hpp
 *
 *  \brief Variational problem, extremal, and the coefficient fields
 *  P, Q, R, T, dG/dy' of the second variation along the extremal.
 *
 *  The second variation is
 *
 *      d2J[h] = R h^2 |_a^b + int_a^b (P h'^2 + Q h^2) dx,
 *
 *  with P = H_{y'y'}, R = H_{yy'}, Q = H_{yy} - dR/dx and H = F + lambda G
 *  (H = F when there is no integral constraint). For the isoperimetric case
 *  admissible h also satisfy  G_{y'} h |_a^b + int_a^b h T dx = 0 with
 *  T = G_y - d/dx G_{y'}.
 */

#pragma once

#include <jacobi/expression.hpp>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace jacobi {

enum class RegimeKind
{
    dirichlet,        ///< y(a) = A, y(b) = B
    mixed_left_free,  ///< y'(a) = 0, y(b) = B
    mixed_right_free, ///< y(a) = A, y'(b) = 0; analysed on the reflected interval
};

inline std::string to_string(RegimeKind k)
{
    switch (k) {
        case RegimeKind::dirichlet:
            return "dirichlet";
        case RegimeKind::mixed_left_free:
            return "mixed-left-free";
        case RegimeKind::mixed_right_free:
            return "mixed-right-free";
    }
    return "?";
}

inline bool is_mixed(RegimeKind k)
{
    return k != RegimeKind::dirichlet;
}

struct BoundaryRegime
{
    RegimeKind kind{RegimeKind::dirichlet};
    double A{0.0}; ///< y(a), unused when the left end is free
    double B{0.0}; ///< y(b), unused when the right end is free
};

struct Interval
{
    double a{0.0};
    double b{1.0};

    double length() const
    {
        return b - a;
    }
};

/// Coefficient value is NaN or infinite.
class SingularCoefficient : public std::runtime_error
{
  public:
    SingularCoefficient(std::string const& what, double x)
        : std::runtime_error("singular coefficient " + what + " at x = " + std::to_string(x))
        , x_(x)
    {
    }

    double x() const noexcept
    {
        return x_;
    }

  private:
    double x_;
};

struct IsoperimetricConstraint
{
    Expr G;
    double ell{0.0};
    double lambda{0.0};
};

struct VariationalProblem
{
    Expr F;
    Interval interval;
    BoundaryRegime regime;
    std::optional<IsoperimetricConstraint> constraint;

    bool isoperimetric() const
    {
        return constraint.has_value();
    }

    void validate() const
    {
        if (!(interval.a < interval.b)) {
            throw std::invalid_argument("interval requires a < b");
        }
        if (F.empty()) {
            throw std::invalid_argument("integrand F is missing");
        }
        if (constraint && constraint->G.empty()) {
            throw std::invalid_argument("constraint integrand G is missing");
        }
    }
};

/// Candidate curve y(x), given as an expression in x only.
class Extremal
{
  public:
    explicit Extremal(Expr y)
        : y_(std::move(y))
    {
        if (y_.uses(Var::y) || y_.uses(Var::yp)) {
            throw std::invalid_argument("extremal must depend on x only");
        }
    }

    double value(double x) const
    {
        return y_.evaluate(x, 0.0, 0.0);
    }

    double slope(double x) const
    {
        return partial(y_, {Var::x}, x, 0.0, 0.0);
    }

    double curvature(double x) const
    {
        return partial(y_, {Var::x, Var::x}, x, 0.0, 0.0);
    }

    Expr const& expr() const
    {
        return y_;
    }

  private:
    Expr y_;
};

/// Values of the second-variation coefficients at one abscissa.
struct Coefficients
{
    double P{0.0};
    double Q{0.0};
    double R{0.0};
    double T{0.0};   ///< zero for unconstrained problems
    double Gyp{0.0}; ///< dG/dy', zero for unconstrained problems
};

/// Anything that supplies the second-variation coefficients along an extremal.
template <class F>
concept CoefficientField = requires(F const& f, double x) {
    { f.interval() } -> std::convertible_to<Interval>;
    { f.regime() } -> std::convertible_to<RegimeKind>;
    { f.isoperimetric() } -> std::convertible_to<bool>;
    { f(x) } -> std::convertible_to<Coefficients>;
};

namespace detail {

inline void require_finite(Coefficients const& c, double x)
{
    if (!std::isfinite(c.P)) {
        throw SingularCoefficient("P", x);
    }
    if (!std::isfinite(c.Q)) {
        throw SingularCoefficient("Q", x);
    }
    if (!std::isfinite(c.R)) {
        throw SingularCoefficient("R", x);
    }
    if (!std::isfinite(c.T)) {
        throw SingularCoefficient("T", x);
    }
    if (!std::isfinite(c.Gyp)) {
        throw SingularCoefficient("dG/dy'", x);
    }
}

} // namespace detail

/// Coefficients of a problem along an extremal at x.
///
/// P, R are second partials of H at (x, y(x), y'(x)); dR/dx is the chain rule
/// R_x + R_y y' + R_{y'} y'' with y'' taken from the extremal expression.
inline Coefficients coefficients_at(VariationalProblem const& problem, Extremal const& extremal, double x)
{
    double const y   = extremal.value(x);
    double const yp  = extremal.slope(x);
    double const ypp = extremal.curvature(x);
    Point const pt{x, y, yp};

    double const lambda = problem.constraint ? problem.constraint->lambda : 0.0;
    auto H              = [&](Point const& p) {
        long double v = problem.F.evaluate_extended(p);
        if (problem.constraint) {
            v += lambda * problem.constraint->G.evaluate_extended(p);
        }
        return v;
    };

    static constexpr Var ypyp[] = {Var::yp, Var::yp};
    static constexpr Var yy[]   = {Var::y, Var::y};
    static constexpr Var yyp[]  = {Var::y, Var::yp};
    static constexpr Var xyp[]  = {Var::x, Var::yp};
    static constexpr Var y_[]   = {Var::y};
    static constexpr Var yp_[]  = {Var::yp};

    Coefficients c;
    c.P = fd::partial(H, ypyp, pt);
    c.R = fd::partial(H, yyp, pt);

    double const dRdx = fd::partial3(H, {Var::y, Var::yp, Var::x}, pt) +
                        fd::partial3(H, {Var::y, Var::yp, Var::y}, pt) * yp +
                        fd::partial3(H, {Var::y, Var::yp, Var::yp}, pt) * ypp;
    c.Q = fd::partial(H, yy, pt) - dRdx;

    if (problem.constraint) {
        auto G = [&](Point const& p) { return problem.constraint->G.evaluate_extended(p); };
        c.Gyp  = fd::partial(G, yp_, pt);
        double const dGypdx =
            fd::partial(G, xyp, pt) + fd::partial(G, yyp, pt) * yp + fd::partial(G, ypyp, pt) * ypp;
        c.T = fd::partial(G, y_, pt) - dGypdx;
    }
    detail::require_finite(c, x);
    return c;
}

/// Relative discrepancy between y'' of the extremal and y'' implied by the
/// Euler-Lagrange equation H_y - d/dx H_{y'} = 0, maximised over a uniform grid.
inline double euler_lagrange_discrepancy(VariationalProblem const& problem, Extremal const& extremal,
                                         int n_grid)
{
    double const lambda = problem.constraint ? problem.constraint->lambda : 0.0;
    auto H              = [&](Point const& p) {
        long double v = problem.F.evaluate_extended(p);
        if (problem.constraint) {
            v += lambda * problem.constraint->G.evaluate_extended(p);
        }
        return v;
    };
    static constexpr Var ypyp[] = {Var::yp, Var::yp};
    static constexpr Var yyp[]  = {Var::y, Var::yp};
    static constexpr Var xyp[]  = {Var::x, Var::yp};
    static constexpr Var y_[]   = {Var::y};

    double worst = 0.0;
    auto const [a, b] = problem.interval;
    for (int i = 0; i <= n_grid; ++i) {
        double x   = a + (b - a) * i / n_grid;
        double yp  = extremal.slope(x);
        double ypp = extremal.curvature(x);
        Point pt{x, extremal.value(x), yp};
        double Hpp = fd::partial(H, ypyp, pt);
        if (Hpp == 0.0) {
            continue;
        }
        double ypp_el = (fd::partial(H, y_, pt) - fd::partial(H, xyp, pt) - fd::partial(H, yyp, pt) * yp) / Hpp;
        double scale  = std::max({1.0, std::abs(ypp), std::abs(ypp_el)});
        worst         = std::max(worst, std::abs(ypp - ypp_el) / scale);
    }
    return worst;
}

/// Largest violation of the extremal's boundary data for the problem's regime:
/// |y(a) - A| or |y'(a)| at the left end, |y(b) - B| or |y'(b)| at the right end.
inline double boundary_residual(VariationalProblem const& problem, Extremal const& extremal)
{
    auto const [a, b] = problem.interval;
    auto const& reg   = problem.regime;
    double left  = reg.kind == RegimeKind::mixed_left_free ? std::abs(extremal.slope(a))
                                                           : std::abs(extremal.value(a) - reg.A);
    double right = reg.kind == RegimeKind::mixed_right_free ? std::abs(extremal.slope(b))
                                                            : std::abs(extremal.value(b) - reg.B);
    return std::max(left, right);
}

/// Coefficient field of a user problem evaluated through its expressions.
class ExpressionField
{
  public:
    ExpressionField(VariationalProblem problem, Extremal extremal)
        : problem_(std::move(problem))
        , extremal_(std::move(extremal))
    {
        problem_.validate();
    }

    Interval interval() const
    {
        return problem_.interval;
    }
    RegimeKind regime() const
    {
        return problem_.regime.kind;
    }
    bool isoperimetric() const
    {
        return problem_.isoperimetric();
    }
    Coefficients operator()(double x) const
    {
        return coefficients_at(problem_, extremal_, x);
    }

    VariationalProblem const& problem() const
    {
        return problem_;
    }
    Extremal const& extremal() const
    {
        return extremal_;
    }

  private:
    VariationalProblem problem_;
    Extremal extremal_;
};

/// Coefficient field given directly by a callable; used for synthetic problems.
class FunctionField
{
  public:
    FunctionField(Interval iv, RegimeKind regime, bool isoperimetric,
                  std::function<Coefficients(double)> coefficients)
        : interval_(iv)
        , regime_(regime)
        , isoperimetric_(isoperimetric)
        , coefficients_(std::move(coefficients))
    {
        if (!(iv.a < iv.b)) {
            throw std::invalid_argument("interval requires a < b");
        }
    }

    Interval interval() const
    {
        return interval_;
    }
    RegimeKind regime() const
    {
        return regime_;
    }
    bool isoperimetric() const
    {
        return isoperimetric_;
    }
    Coefficients operator()(double x) const
    {
        Coefficients c = coefficients_(x);
        if (!isoperimetric_) {
            c.T   = 0.0;
            c.Gyp = 0.0;
        }
        detail::require_finite(c, x);
        return c;
    }

  private:
    Interval interval_;
    RegimeKind regime_;
    bool isoperimetric_;
    std::function<Coefficients(double)> coefficients_;
};

/// View of a field under x -> a + b - x. A free right end becomes a free left end.
///
/// P, Q and T are even under the reflection; R and dG/dy' flip sign since y' does.
template <CoefficientField F>
class Reflected
{
  public:
    explicit Reflected(F inner)
        : inner_(std::move(inner))
    {
    }

    Interval interval() const
    {
        return inner_.interval();
    }
    RegimeKind regime() const
    {
        switch (inner_.regime()) {
            case RegimeKind::mixed_right_free:
                return RegimeKind::mixed_left_free;
            case RegimeKind::mixed_left_free:
                return RegimeKind::mixed_right_free;
            default:
                return RegimeKind::dirichlet;
        }
    }
    bool isoperimetric() const
    {
        return inner_.isoperimetric();
    }
    Coefficients operator()(double x) const
    {
        auto const iv  = inner_.interval();
        Coefficients c = inner_(iv.a + iv.b - x);
        c.R            = -c.R;
        c.Gyp          = -c.Gyp;
        return c;
    }

    double map(double x) const
    {
        auto const iv = inner_.interval();
        return iv.a + iv.b - x;
    }

  private:
    F inner_;
};

struct Tolerances
{
    double P{1e-10}; ///< strict positivity margin for P
    double R{1e-8};  ///< |R(a)| and |dG/dy'(a)| structural-zero threshold
    double T{1e-10}; ///< min |T| margin

    Tolerances scaled(double s) const
    {
        return {P * s, R * s, T * s};
    }
};

struct PreconditionReport
{
    bool legendre_ok{false};
    double min_P{0.0};

    double r_at_a{0.0}; ///< R at the free end (reflected frame for mixed-right-free)
    bool r_enforced{false};
    bool r_ok{true};

    double gyp_at_a{0.0};
    bool gyp_enforced{false};
    bool gyp_ok{true};

    double min_abs_T{0.0};
    double max_abs_T{0.0};
    bool t_enforced{false};
    bool t_nonzero_ok{true};       ///< pointwise T(x) != 0 on the grid
    bool t_not_identically_zero{true}; ///< weaker form: T is not identically zero

    std::vector<double> grid;

    bool all_ok() const
    {
        return legendre_ok && r_ok && gyp_ok && t_nonzero_ok;
    }

    std::vector<std::string> failures() const
    {
        std::vector<std::string> out;
        if (!legendre_ok) {
            out.push_back("strengthened Legendre condition fails: min P = " + std::to_string(min_P));
        }
        if (!r_ok) {
            out.push_back("R at the free end is not zero: R = " + std::to_string(r_at_a));
        }
        if (!gyp_ok) {
            out.push_back("dG/dy' at the free end is not zero: " + std::to_string(gyp_at_a));
        }
        if (!t_not_identically_zero) {
            out.push_back("T vanishes identically on the grid");
        } else if (!t_nonzero_ok) {
            out.push_back("T has a zero on the grid (pointwise T != 0 enforced; T not identically zero holds)");
        }
        return out;
    }
};

/// Samples the field on n_grid+1 uniform points and checks P > 0, the free-end
/// conditions R(a) = 0 and dG/dy'(a) = 0 (mixed only), and T != 0 (isoperimetric).
///
/// For a free right end the checks are made at b, which is a in the reflected frame.
template <CoefficientField F>
PreconditionReport check_preconditions(F const& field, int n_grid, Tolerances tol = {})
{
    if (n_grid < 16) {
        throw std::invalid_argument("check_preconditions: n_grid must be at least 16");
    }
    auto const [a, b] = field.interval();
    PreconditionReport rep;
    rep.grid.reserve(n_grid + 1);
    rep.min_P     = std::numeric_limits<double>::infinity();
    rep.min_abs_T = std::numeric_limits<double>::infinity();

    for (int i = 0; i <= n_grid; ++i) {
        double x = i == n_grid ? b : a + (b - a) * i / n_grid;
        rep.grid.push_back(x);
        Coefficients c = field(x);
        rep.min_P      = std::min(rep.min_P, c.P);
        rep.min_abs_T  = std::min(rep.min_abs_T, std::abs(c.T));
        rep.max_abs_T  = std::max(rep.max_abs_T, std::abs(c.T));
    }
    rep.legendre_ok = rep.min_P > tol.P;

    RegimeKind const regime = field.regime();
    if (is_mixed(regime)) {
        double free_end  = regime == RegimeKind::mixed_left_free ? a : b;
        double sign      = regime == RegimeKind::mixed_left_free ? 1.0 : -1.0;
        Coefficients c   = field(free_end);
        rep.r_at_a       = sign * c.R + 0.0; // no negative zero
        rep.r_enforced   = true;
        rep.r_ok         = std::abs(c.R) <= tol.R;
        if (field.isoperimetric()) {
            rep.gyp_at_a     = sign * c.Gyp + 0.0;
            rep.gyp_enforced = true;
            rep.gyp_ok       = std::abs(c.Gyp) <= tol.R;
        }
    }
    if (field.isoperimetric()) {
        rep.t_enforced             = true;
        rep.t_nonzero_ok           = rep.min_abs_T > tol.T;
        rep.t_not_identically_zero = rep.max_abs_T > tol.T;
    } else {
        rep.min_abs_T = 0.0;
    }
    return rep;
}

inline PreconditionReport check_preconditions(VariationalProblem const& problem, Extremal const& extremal,
                                              int n_grid, Tolerances tol = {})
{
    return check_preconditions(ExpressionField(problem, extremal), n_grid, tol);
}

} // namespace jacobi
