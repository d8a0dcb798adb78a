/** \file conjugate.hpp
 *
 *  \brief Conjugate-point search and the definiteness verdict.
 *
 *  The second variation is positive definite iff P > 0, the free-end
 *  conditions hold (mixed problems), and the test function has no zero on
 *  (a, b]. The test function is u for unconstrained problems and
 *  D = m v - n u for isoperimetric ones. D has a structural zero at a:
 *  cubic when u(a) != 0 (mixed), quartic when u(a) = 0 (Dirichlet).
 */

#pragma once

#include <jacobi/accessory.hpp>
#include <jacobi/problem.hpp>

#include <algorithm>
#include <concepts>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jacobi {

/// Relative floor below which a sample counts as a (possibly touching) zero.
inline constexpr double zero_floor_fraction = 1e-9;

/// First zero of the sampled function at x > exclude_below, refined by bisection
/// on `interp` to a bracket narrower than 1e-10 (b - a).
template <class Interp>
std::optional<double> first_zero(std::span<SamplePoint const> samples, double exclude_below, Interp&& interp)
{
    if (samples.size() < 2) {
        return std::nullopt;
    }
    double max_abs = 0.0;
    for (auto const& s : samples) {
        max_abs = std::max(max_abs, std::abs(s.value));
    }
    double const floor = zero_floor_fraction * max_abs;
    double const width = 1e-10 * (samples.back().x - samples.front().x);

    auto refine = [&](double lo, double flo, double hi) {
        while (hi - lo > width) {
            double mid = 0.5 * (lo + hi);
            double fm  = interp(mid);
            if (fm == 0.0) {
                return mid;
            }
            if ((fm < 0.0) == (flo < 0.0)) {
                lo  = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    };

    std::size_t k = 0;
    while (k < samples.size() && !(samples[k].x > exclude_below)) {
        ++k;
    }
    if (k == samples.size()) {
        return std::nullopt;
    }

    // bracket straddling the exclusion boundary
    if (k > 0 && exclude_below > samples.front().x) {
        double f0 = interp(exclude_below);
        if (std::abs(f0) > floor && std::abs(samples[k].value) > floor &&
            (f0 < 0.0) != (samples[k].value < 0.0)) {
            return refine(exclude_below, f0, samples[k].x);
        }
    }

    for (std::size_t i = k; i < samples.size(); ++i) {
        if (std::abs(samples[i].value) <= floor) {
            return samples[i].x;
        }
        if (i + 1 < samples.size() && std::abs(samples[i + 1].value) > floor &&
            (samples[i].value < 0.0) != (samples[i + 1].value < 0.0)) {
            return refine(samples[i].x, samples[i].value, samples[i + 1].x);
        }
    }
    return std::nullopt;
}

/// Same, with linear interpolation between samples.
inline std::optional<double> first_zero(std::span<SamplePoint const> samples, double exclude_below)
{
    auto lerp = [samples](double x) {
        auto it = std::upper_bound(samples.begin(), samples.end(), x,
                                   [](double v, SamplePoint const& s) { return v < s.x; });
        if (it == samples.begin()) {
            return samples.front().value;
        }
        if (it == samples.end()) {
            return samples.back().value;
        }
        auto const& hi = *it;
        auto const& lo = *(it - 1);
        double t       = (x - lo.x) / (hi.x - lo.x);
        return lo.value + t * (hi.value - lo.value);
    };
    return first_zero(samples, exclude_below, lerp);
}

struct TripleDerivative
{
    double value{0.0};
    bool degenerate{false}; ///< u(a) = 0 or T(a) = 0: the cubic term vanishes
};

/// D'''(a, a) = -2 u(a) T(a)^2 / P(a) for u'(a) = v'(a) = 0.
template <CoefficientField F>
TripleDerivative delta_triple_derivative(F const& field, InitialConditions const& ics)
{
    if (!field.isoperimetric()) {
        throw std::invalid_argument("delta_triple_derivative requires an isoperimetric problem");
    }
    Coefficients c = field(field.interval().a);
    if (!(c.P > 0.0)) {
        throw std::invalid_argument("delta_triple_derivative requires P(a) > 0");
    }
    TripleDerivative d;
    d.value      = -2.0 * ics.u0 * c.T * c.T / c.P;
    d.degenerate = ics.u0 == 0.0 || c.T == 0.0;
    return d;
}

enum class Classification
{
    positive_definite,
    indefinite,
    degenerate_at_b,
    precondition_failed
};

inline std::string to_string(Classification c)
{
    switch (c) {
        case Classification::positive_definite:
            return "PositiveDefinite";
        case Classification::indefinite:
            return "Indefinite";
        case Classification::degenerate_at_b:
            return "DegenerateAtB";
        case Classification::precondition_failed:
            return "PreconditionFailed";
    }
    return "?";
}

enum class TestFunction
{
    u,
    delta
};

struct ConjugateResult
{
    bool found{false};
    std::optional<double> location;
    TestFunction test_function{TestFunction::u};
    double near_a_window{0.0};
    std::optional<double> triple_derivative_at_a; ///< isoperimetric only
};

struct Verdict
{
    Classification classification{Classification::precondition_failed};
    PreconditionReport preconditions;
    ConjugateResult conjugate;
    std::vector<std::string> notes;
    bool reflected{false}; ///< analysed as x -> a + b - x (free right end)
};

struct VerdictOptions
{
    int grid{1000};
    double tol_scale{1.0};
    std::optional<InitialConditions> initial_conditions;
    double u_scale{1.0}; ///< multiplies (u0, zu0); the verdict must not depend on it
    IntegratorOptions integrator{};
};

namespace detail {

/// Half-width of the exclusion zone for the structural zero of D at a.
template <CoefficientField F>
double delta_window(F const& field, InitialConditions const& ics, AccessoryTrajectory const& traj,
                    double threshold, ConjugateResult& res, std::vector<std::string>& notes)
{
    double const a     = field.interval().a;
    double const floor = 2.0 * traj.step();
    Coefficients c     = field(a);

    if (field.regime() == RegimeKind::dirichlet) {
        if (ics.u0 != 0.0 || ics.v0 != 0.0) {
            notes.push_back("initial conditions do not satisfy u(a) = v(a) = 0; near-a window is two grid steps");
            return floor;
        }
        // D ~ -(u'(a) T(a)^2 / (12 P(a))) (x - a)^4
        double coef = std::abs(ics.zu0 / c.P * c.T * c.T / (12.0 * c.P));
        if (coef == 0.0) {
            notes.push_back("T(a) = 0: near-a growth model unavailable; window is two grid steps");
            return floor;
        }
        return std::max(floor, std::pow(threshold / coef, 0.25));
    }

    TripleDerivative d3         = delta_triple_derivative(field, ics);
    res.triple_derivative_at_a = d3.value;
    if (d3.degenerate) {
        notes.push_back("inconclusive near a: D'''(a,a) vanishes (u(a) = 0 or T(a) = 0); window is two grid steps");
        return floor;
    }
    if (ics.zu0 != 0.0 || ics.zv0 != 0.0) {
        notes.push_back("initial conditions do not satisfy u'(a) = v'(a) = 0; near-a window is two grid steps");
        return floor;
    }
    return std::max(floor, std::cbrt(6.0 * threshold / std::abs(d3.value)));
}

/// The field's own normalisation if it has one, else the regime default.
template <CoefficientField F>
InitialConditions preferred_initial_conditions(F const& field)
{
    if constexpr (requires { { field.initial_conditions() } -> std::convertible_to<InitialConditions>; }) {
        return field.initial_conditions();
    } else {
        return default_initial_conditions(field.regime(), field(field.interval().a).P);
    }
}

template <CoefficientField F>
Verdict verdict_left(F const& field, VerdictOptions const& opts)
{
    Verdict out;
    out.preconditions = check_preconditions(field, std::max(opts.grid, 16), Tolerances{}.scaled(opts.tol_scale));
    if (!out.preconditions.all_ok()) {
        out.classification = Classification::precondition_failed;
        out.notes          = out.preconditions.failures();
        return out;
    }

    auto const [a, b]       = field.interval();
    InitialConditions ics   = opts.initial_conditions.value_or(preferred_initial_conditions(field));
    ics.u0 *= opts.u_scale;
    ics.zu0 *= opts.u_scale;

    IntegratorOptions integ = opts.integrator;
    integ.rtol *= opts.tol_scale;
    integ.atol *= opts.tol_scale;

    std::optional<AccessoryTrajectory> traj;
    try {
        traj.emplace(integrate(field, ics, opts.grid, integ));
    } catch (IntegrationError const& e) {
        out.classification = Classification::precondition_failed;
        out.notes.push_back(std::string("accessory integration failed: ") + e.what());
        return out;
    }

    auto& res = out.conjugate;
    std::optional<double> zero;
    if (!field.isoperimetric()) {
        res.test_function = TestFunction::u;
        auto series       = u_series(*traj);
        zero              = first_zero(series, a, [&](double x) { return traj->at(x).u; });
    } else {
        res.test_function = TestFunction::delta;
        auto series       = delta_series(*traj);
        double max_abs    = 0.0;
        for (auto const& s : series) {
            max_abs = std::max(max_abs, std::abs(s.value));
        }
        double threshold  = std::max(10.0 * integ.atol, 10.0 * zero_floor_fraction * max_abs);
        res.near_a_window = delta_window(field, ics, *traj, threshold, res, out.notes);
        zero = first_zero(series, a + res.near_a_window, [&](double x) { return traj->at(x).delta(); });
    }

    res.found    = zero.has_value();
    res.location = zero;
    if (!zero) {
        out.classification = Classification::positive_definite;
    } else if (std::abs(*zero - b) <= 1e-8 * (b - a) * opts.tol_scale) {
        out.classification = Classification::degenerate_at_b;
    } else {
        out.classification = Classification::indefinite;
    }
    return out;
}

} // namespace detail

/// Runs the precondition checks, integrates the accessory equations with the
/// regime's initial conditions and classifies the second variation.
///
/// A free right end is analysed on the reflected interval; the reported
/// location is mapped back to the original abscissa.
template <CoefficientField F>
Verdict verdict(F const& field, VerdictOptions const& opts = {})
{
    if (field.regime() != RegimeKind::mixed_right_free) {
        return detail::verdict_left(field, opts);
    }
    Reflected<F> mirror(field);
    Verdict out   = detail::verdict_left(mirror, opts);
    out.reflected = true;
    if (out.conjugate.location) {
        out.conjugate.location = mirror.map(*out.conjugate.location);
    }
    out.notes.push_back("free right end: analysed on the reflected interval x -> a + b - x");
    return out;
}

/// Verdict for an expression-defined problem. Adds a note when the curve is
/// not an extremal to 1e-4 relative (y'' against the Euler-Lagrange value).
inline Verdict verdict(VariationalProblem const& problem, Extremal const& extremal, VerdictOptions const& opts = {})
{
    ExpressionField field(problem, extremal);
    Verdict out = verdict(field, opts);
    try {
        double el = euler_lagrange_discrepancy(problem, extremal, 64);
        if (el > 1e-4) {
            out.notes.push_back("y'' differs from the Euler-Lagrange value by " + std::to_string(el) +
                                " (relative); the curve may not be an extremal");
        }
    } catch (std::exception const&) {
        out.notes.push_back("Euler-Lagrange diagnostic could not be evaluated");
    }
    try {
        double br = boundary_residual(problem, extremal);
        if (br > 1e-6) {
            out.notes.push_back("extremal misses the boundary data by " + std::to_string(br));
        }
    } catch (std::exception const&) {
        out.notes.push_back("boundary data could not be checked");
    }
    return out;
}

} // namespace jacobi
