/** \file accessory.hpp
 *
 *  \brief Jacobi accessory equations and the moment integrals m, n.
 *
 *  With zu = P u' and zv = P v' the accessory equations L(u) = 0 and
 *  L(v) = T, L(w) = -(P w')' + Q w, become the first-order system
 *
 *      u'  = zu / P,   zu' = Q u,
 *      v'  = zv / P,   zv' = Q v - T,
 *      m'  = u T,      n'  = v T,      m(a) = n(a) = 0,
 *
 *  which never needs P'. The isoperimetric test function is D = m v - n u.
 */

#pragma once

#include <jacobi/problem.hpp>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jacobi {

/// Initial values at x = a. zu0 = P(a) u'(a), zv0 = P(a) v'(a).
struct InitialConditions
{
    double u0{0.0};
    double zu0{1.0};
    double v0{0.0};
    double zv0{0.0};

    void validate() const
    {
        if (u0 == 0.0 && zu0 == 0.0) {
            throw std::invalid_argument("initial conditions give the trivial solution u = 0");
        }
    }
};

/// Dirichlet: u(a) = 0, u'(a) = 1. Mixed: u(a) = 1, u'(a) = 0. v(a) = v'(a) = 0 in both.
inline InitialConditions default_initial_conditions(RegimeKind regime, double P_at_a)
{
    if (regime == RegimeKind::dirichlet) {
        return {0.0, P_at_a, 0.0, 0.0};
    }
    return {1.0, 0.0, 0.0, 0.0};
}

class IntegrationError : public std::runtime_error
{
  public:
    IntegrationError(std::string const& what, double x)
        : std::runtime_error(what + " at x = " + std::to_string(x))
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

struct AccessorySample
{
    double x{0.0};
    double P{0.0}, Q{0.0}, R{0.0}, T{0.0}, Gyp{0.0};
    double u{0.0}, zu{0.0}, v{0.0}, zv{0.0}, m{0.0}, n{0.0};

    double uprime() const
    {
        return zu / P;
    }
    double vprime() const
    {
        return zv / P;
    }
    double delta() const
    {
        return m * v - n * u;
    }
};

struct SamplePoint
{
    double x{0.0};
    double value{0.0};
};

/// Dense samples of (u, Pu', v, Pv', m, n) over [a, b] with Hermite interpolation.
class AccessoryTrajectory
{
  public:
    AccessoryTrajectory(std::vector<AccessorySample> samples, bool isoperimetric, InitialConditions ics)
        : samples_(std::move(samples))
        , isoperimetric_(isoperimetric)
        , ics_(ics)
    {
    }

    std::span<AccessorySample const> samples() const
    {
        return samples_;
    }
    bool isoperimetric() const
    {
        return isoperimetric_;
    }
    InitialConditions const& initial_conditions() const
    {
        return ics_;
    }
    double a() const
    {
        return samples_.front().x;
    }
    double b() const
    {
        return samples_.back().x;
    }
    double step() const
    {
        return (b() - a()) / static_cast<double>(samples_.size() - 1);
    }

    /// State at arbitrary x in [a, b]. Solution components use cubic Hermite
    /// interpolation with derivatives from the right-hand side; coefficients
    /// are interpolated linearly.
    AccessorySample at(double x) const
    {
        x      = std::clamp(x, a(), b());
        auto it = std::upper_bound(samples_.begin(), samples_.end(), x,
                                   [](double v, AccessorySample const& s) { return v < s.x; });
        std::size_t i = it == samples_.begin() ? 0 : static_cast<std::size_t>(it - samples_.begin()) - 1;
        if (i + 1 >= samples_.size()) {
            return samples_.back();
        }
        auto const& s0 = samples_[i];
        auto const& s1 = samples_[i + 1];
        double h       = s1.x - s0.x;
        double t       = (x - s0.x) / h;

        double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
        double h10 = t * (1 - t) * (1 - t);
        double h01 = t * t * (3 - 2 * t);
        double h11 = t * t * (t - 1);
        auto herm  = [&](double y0, double d0, double y1, double d1) {
            return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
        };
        auto d0 = derivative(s0);
        auto d1 = derivative(s1);

        AccessorySample r;
        r.x   = x;
        r.P   = s0.P + t * (s1.P - s0.P);
        r.Q   = s0.Q + t * (s1.Q - s0.Q);
        r.R   = s0.R + t * (s1.R - s0.R);
        r.T   = s0.T + t * (s1.T - s0.T);
        r.Gyp = s0.Gyp + t * (s1.Gyp - s0.Gyp);
        r.u   = herm(s0.u, d0[0], s1.u, d1[0]);
        r.zu  = herm(s0.zu, d0[1], s1.zu, d1[1]);
        r.v   = herm(s0.v, d0[2], s1.v, d1[2]);
        r.zv  = herm(s0.zv, d0[3], s1.zv, d1[3]);
        r.m   = herm(s0.m, d0[4], s1.m, d1[4]);
        r.n   = herm(s0.n, d0[5], s1.n, d1[5]);
        return r;
    }

    static std::array<double, 6> derivative(AccessorySample const& s)
    {
        return {s.zu / s.P, s.Q * s.u, s.zv / s.P, s.Q * s.v - s.T, s.u * s.T, s.v * s.T};
    }

  private:
    std::vector<AccessorySample> samples_;
    bool isoperimetric_;
    InitialConditions ics_;
};

/// Adaptive steps allowed between two output rows before integration is abandoned.
inline constexpr int max_steps_per_row = 100000;

struct IntegratorOptions
{
    double rtol{1e-10};
    double atol{1e-12};
};

/// Integrates the accessory system from a to b with an adaptive Dormand-Prince 5(4)
/// pair and records max(n_out, 1000) uniformly spaced rows.
///
/// Unconstrained runs carry v, zv, m, n as zeros.
template <CoefficientField F>
AccessoryTrajectory integrate(F const& field, InitialConditions const& ics, int n_out = 1000,
                              IntegratorOptions opts = {})
{
    namespace odeint = boost::numeric::odeint;
    using State      = std::array<double, 6>;

    ics.validate();
    auto const [a, b]  = field.interval();
    bool const iso     = field.isoperimetric();
    int const rows     = std::max(n_out, 1000);
    double last_x      = a;

    auto rhs = [&](State const& s, State& ds, double x) {
        last_x         = x;
        Coefficients c = field(x);
        if (!(c.P > 0.0)) {
            throw IntegrationError("P is not positive", x);
        }
        double T = iso ? c.T : 0.0;
        ds[0]    = s[1] / c.P;
        ds[1]    = c.Q * s[0];
        ds[2]    = s[3] / c.P;
        ds[3]    = c.Q * s[2] - T;
        ds[4]    = s[0] * T;
        ds[5]    = s[2] * T;
    };

    std::vector<double> times(rows);
    for (int i = 0; i < rows; ++i) {
        times[i] = i == rows - 1 ? b : a + (b - a) * i / (rows - 1);
    }

    std::vector<AccessorySample> samples;
    samples.reserve(rows);
    auto observe = [&](State const& s, double x) {
        for (double c : s) {
            if (!std::isfinite(c)) {
                throw IntegrationError("non-finite accessory state", x);
            }
        }
        Coefficients c = field(x);
        AccessorySample row;
        row.x   = x;
        row.P   = c.P;
        row.Q   = c.Q;
        row.R   = c.R;
        row.T   = iso ? c.T : 0.0;
        row.Gyp = iso ? c.Gyp : 0.0;
        row.u   = s[0];
        row.zu  = s[1];
        row.v   = s[2];
        row.zv  = s[3];
        row.m   = s[4];
        row.n   = s[5];
        samples.push_back(row);
    };

    State s0{ics.u0, ics.zu0, iso ? ics.v0 : 0.0, iso ? ics.zv0 : 0.0, 0.0, 0.0};
    auto stepper = odeint::make_dense_output(opts.atol, opts.rtol, odeint::runge_kutta_dopri5<State>());
    try {
        // a singular coefficient drives the step below one ulp; cap the steps between rows
        odeint::integrate_times(stepper, rhs, s0, times.begin(), times.end(), (b - a) * 1e-4, observe,
                                odeint::max_step_checker(max_steps_per_row));
    } catch (odeint::odeint_error const& e) {
        throw IntegrationError(std::string("step-size collapse: ") + e.what(), last_x);
    }
    if (static_cast<int>(samples.size()) != rows) {
        throw IntegrationError("integration stopped early", last_x);
    }
    samples.front().m = 0.0;
    samples.front().n = 0.0;
    return AccessoryTrajectory(std::move(samples), iso, ics);
}

/// (x_i, m_i v_i - n_i u_i) for every sample.
inline std::vector<SamplePoint> delta_series(AccessoryTrajectory const& traj)
{
    if (!traj.isoperimetric()) {
        throw std::invalid_argument("delta_series requires an isoperimetric trajectory");
    }
    std::vector<SamplePoint> out;
    out.reserve(traj.samples().size());
    for (auto const& s : traj.samples()) {
        out.push_back({s.x, s.delta()});
    }
    return out;
}

inline std::vector<SamplePoint> u_series(AccessoryTrajectory const& traj)
{
    std::vector<SamplePoint> out;
    out.reserve(traj.samples().size());
    for (auto const& s : traj.samples()) {
        out.push_back({s.x, s.u});
    }
    return out;
}

/// |P (u'v - u v') - m - [P (u'v - u v')](a)| at one sample.
inline double wronskian_residual_at(AccessorySample const& s, InitialConditions const& ics)
{
    double const at_a = ics.zu0 * ics.v0 - ics.u0 * ics.zv0;
    return std::abs((s.zu * s.v - s.u * s.zv) - at_a - s.m);
}

/// Max over samples of the residual of P (u'v - u v') = m. The boundary value at a
/// vanishes for mixed initial conditions; it is carried along otherwise.
inline double wronskian_residual(AccessoryTrajectory const& traj)
{
    if (!traj.isoperimetric()) {
        throw std::invalid_argument("wronskian_residual requires an isoperimetric trajectory");
    }
    double worst = 0.0;
    for (auto const& s : traj.samples()) {
        worst = std::max(worst, wronskian_residual_at(s, traj.initial_conditions()));
    }
    return worst;
}

/// A scalar function with its derivative.
struct BasisFunction
{
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};

class DegenerateBasis : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

struct BasisSolutions
{
    BasisFunction u;
    BasisFunction v;
    double C1{0.0};
    double C2{0.0};
};

/// Builds u, v with u'(a) = v'(a) = 0 from a particular solution theta0 of
/// L(theta0) = T and two independent homogeneous solutions theta1, theta2:
///
///     u = theta2'(a) theta1 - theta1'(a) theta2
///     v = theta0 + C1 theta1 + C2 theta2,  C1 theta1'(a) + C2 theta2'(a) + theta0'(a) = 0.
///
/// C2 = 0 when theta1'(a) != 0, else C1 = 0. Other choices differ by a multiple
/// of u and leave mv - nu unchanged.
inline BasisSolutions construct_from_basis(BasisFunction theta0, BasisFunction theta1, BasisFunction theta2,
                                           double a)
{
    double const d0 = theta0.derivative(a);
    double const d1 = theta1.derivative(a);
    double const d2 = theta2.derivative(a);
    if (d1 == 0.0 && d2 == 0.0) {
        throw DegenerateBasis("construct_from_basis: theta1'(a) and theta2'(a) both vanish");
    }

    BasisSolutions out;
    if (d1 != 0.0) {
        out.C1 = -d0 / d1;
    } else {
        out.C2 = -d0 / d2;
    }
    double const C1 = out.C1;
    double const C2 = out.C2;

    out.u.value      = [=](double x) { return d2 * theta1.value(x) - d1 * theta2.value(x); };
    out.u.derivative = [=](double x) { return d2 * theta1.derivative(x) - d1 * theta2.derivative(x); };
    out.v.value      = [=](double x) { return theta0.value(x) + C1 * theta1.value(x) + C2 * theta2.value(x); };
    out.v.derivative = [=](double x) {
        return theta0.derivative(x) + C1 * theta1.derivative(x) + C2 * theta2.derivative(x);
    };
    return out;
}

} // namespace jacobi
