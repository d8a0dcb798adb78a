/** \file problem_file.hpp
 *
 *  \brief INI-style problem documents.
 *
 *      [params]            ; optional, evaluated in order
 *      w = 1.5
 *      [problem]
 *      F = y*sqrt(1+yp^2)
 *      a = 0
 *      b = 1
 *      regime = mixed-left-free   ; dirichlet | mixed-left-free | mixed-right-free
 *      B = w*cosh(1/w)            ; A needed unless the left end is free, B unless the right is
 *      [isoperimetric]     ; optional
 *      G = sqrt(1+yp^2)
 *      ell = 2
 *      lambda = 0
 *      [extremal]
 *      y = w*cosh(x/w)
 *      [accessory]         ; optional overrides of u0, zu0, v0, zv0
 */

#pragma once

#include <jacobi/accessory.hpp>
#include <jacobi/expression.hpp>
#include <jacobi/problem.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>

namespace jacobi {

class ProblemFileError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct ProblemFile
{
    VariationalProblem problem;
    Extremal extremal{parse("0")};
    Params params;
    std::optional<double> u0, zu0, v0, zv0;

    /// Regime defaults with any [accessory] overrides applied.
    InitialConditions initial_conditions(double P_at_a) const
    {
        InitialConditions ics = default_initial_conditions(problem.regime.kind, P_at_a);
        ics.u0                = u0.value_or(ics.u0);
        ics.zu0               = zu0.value_or(ics.zu0);
        ics.v0                = v0.value_or(ics.v0);
        ics.zv0               = zv0.value_or(ics.zv0);
        return ics;
    }

    bool overrides_initial_conditions() const
    {
        return u0 || zu0 || v0 || zv0;
    }
};

namespace detail {

namespace pt = boost::property_tree;

inline pt::ptree const& section(pt::ptree const& root, std::string const& name)
{
    auto it = root.find(name);
    if (it == root.not_found()) {
        throw ProblemFileError("missing [" + name + "] section");
    }
    return it->second;
}

inline std::string key(pt::ptree const& sec, std::string const& section_name, std::string const& name)
{
    auto v = sec.get_optional<std::string>(name);
    if (!v) {
        throw ProblemFileError("missing key '" + name + "' in [" + section_name + "]");
    }
    return *v;
}

/// A constant expression: numbers, parameters and functions, no variables.
inline double constant(std::string const& text, Params const& params, std::string const& what)
{
    Expr e;
    try {
        e = parse(text, params);
    } catch (ParseError const& err) {
        throw ProblemFileError(what + ": " + err.what());
    }
    if (e.uses(Var::x) || e.uses(Var::y) || e.uses(Var::yp)) {
        throw ProblemFileError(what + ": must be a constant");
    }
    return e.evaluate(0.0, 0.0, 0.0);
}

inline Expr expression(std::string const& text, Params const& params, std::string const& what)
{
    try {
        return parse(text, params);
    } catch (ParseError const& err) {
        throw ProblemFileError(what + ": " + err.what());
    }
}

inline RegimeKind regime_from(std::string const& s)
{
    if (s == "dirichlet") {
        return RegimeKind::dirichlet;
    }
    if (s == "mixed-left-free") {
        return RegimeKind::mixed_left_free;
    }
    if (s == "mixed-right-free") {
        return RegimeKind::mixed_right_free;
    }
    throw ProblemFileError("unknown regime '" + s + "' (dirichlet, mixed-left-free, mixed-right-free)");
}

} // namespace detail

inline ProblemFile read_problem_file(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree root;
    try {
        pt::read_ini(in, root);
    } catch (pt::ini_parser_error const& e) {
        throw ProblemFileError(std::string("malformed problem file: ") + e.what());
    }

    ProblemFile pf;
    if (auto it = root.find("params"); it != root.not_found()) {
        for (auto const& [name, value] : it->second) {
            pf.params[name] = detail::constant(value.data(), pf.params, "[params] " + name);
        }
    }

    auto const& prob = detail::section(root, "problem");
    auto const& ext  = detail::section(root, "extremal");
    auto get_const   = [&](pt::ptree const& sec, std::string const& sname, std::string const& k) {
        return detail::constant(detail::key(sec, sname, k), pf.params, "[" + sname + "] " + k);
    };

    auto& p        = pf.problem;
    p.F            = detail::expression(detail::key(prob, "problem", "F"), pf.params, "[problem] F");
    p.interval.a   = get_const(prob, "problem", "a");
    p.interval.b   = get_const(prob, "problem", "b");
    p.regime.kind  = detail::regime_from(detail::key(prob, "problem", "regime"));
    if (p.regime.kind != RegimeKind::mixed_left_free) {
        p.regime.A = get_const(prob, "problem", "A");
    }
    if (p.regime.kind != RegimeKind::mixed_right_free) {
        p.regime.B = get_const(prob, "problem", "B");
    }
    if (!(p.interval.a < p.interval.b)) {
        throw ProblemFileError("[problem] requires a < b");
    }

    if (auto it = root.find("isoperimetric"); it != root.not_found()) {
        auto const& iso = it->second;
        IsoperimetricConstraint c;
        c.G          = detail::expression(detail::key(iso, "isoperimetric", "G"), pf.params, "[isoperimetric] G");
        c.ell        = get_const(iso, "isoperimetric", "ell");
        c.lambda     = get_const(iso, "isoperimetric", "lambda");
        p.constraint = c;
    }

    Expr y = detail::expression(detail::key(ext, "extremal", "y"), pf.params, "[extremal] y");
    if (y.uses(Var::y) || y.uses(Var::yp)) {
        throw ProblemFileError("[extremal] y must depend on x only");
    }
    pf.extremal = Extremal(y);

    if (auto it = root.find("accessory"); it != root.not_found()) {
        auto const& acc = it->second;
        auto opt        = [&](char const* k) -> std::optional<double> {
            if (auto v = acc.get_optional<std::string>(k)) {
                return detail::constant(*v, pf.params, std::string("[accessory] ") + k);
            }
            return std::nullopt;
        };
        pf.u0  = opt("u0");
        pf.zu0 = opt("zu0");
        pf.v0  = opt("v0");
        pf.zv0 = opt("zv0");
    }
    return pf;
}

} // namespace jacobi
