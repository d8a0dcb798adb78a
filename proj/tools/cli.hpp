// Command-line front end: check, trace, oracle and examples.

#pragma once

#include <jacobi/jacobi.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace jacobi::cli {

enum ExitCode : int
{
    exit_positive   = 0,
    exit_usage      = 1,
    exit_indefinite = 2,
    exit_precond    = 3,
    exit_disagree   = 4,
};

inline int exit_code(Classification c)
{
    switch (c) {
        case Classification::positive_definite:
            return exit_positive;
        case Classification::indefinite:
        case Classification::degenerate_at_b:
            return exit_indefinite;
        case Classification::precondition_failed:
            return exit_precond;
    }
    return exit_usage;
}

struct BuiltinFlags
{
    double a{0.0};
    double b{1.0};
    double yb{2.0};
    std::optional<double> yb_given;
    double ell{2.0};
    std::string branch{"high"};
    std::optional<double> omega;
};

struct GlobalFlags
{
    bool json{false};
    int grid{1000};
    double tol_scale{1.0};
};

class UsageError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// A builtin catenary or a problem loaded from file.
struct Target
{
    std::string name;
    std::optional<catenary::CatenaryProblem> builtin;
    std::optional<ProblemFile> file;
};

inline bool is_builtin(std::string const& name)
{
    for (auto n : catenary::builtin_names) {
        if (n == name) {
            return true;
        }
    }
    return false;
}

inline Target load_target(std::string const& name, BuiltinFlags const& bf)
{
    Target t;
    t.name = name;
    if (bf.omega && is_builtin(name)) {
        auto variant = name == catenary::fixed_height_name ? catenary::Variant::fixed_height
                                                           : catenary::Variant::fixed_length;
        t.builtin    = catenary::CatenaryProblem::from_omega(bf.a, bf.b, *bf.omega, variant);
        return t;
    }
    if (name == catenary::fixed_height_name) {
        if (bf.branch != "high" && bf.branch != "low") {
            throw UsageError("--branch must be high or low");
        }
        t.builtin = catenary::CatenaryProblem::fixed_height(
            bf.a, bf.b, bf.yb, bf.branch == "high" ? catenary::Branch::high : catenary::Branch::low);
        return t;
    }
    if (name == catenary::fixed_length_name) {
        t.builtin = catenary::CatenaryProblem::fixed_length(bf.a, bf.b, bf.ell, bf.yb_given.value_or(0.0));
        return t;
    }
    std::ifstream in(name);
    if (!in) {
        throw std::runtime_error("cannot open '" + name + "' (and it is not a builtin name)");
    }
    t.file = read_problem_file(in);
    return t;
}

/// Calls fn(field, initial_conditions) with the target's coefficient field.
/// initial_conditions is empty when the regime defaults apply.
template <class Fn>
decltype(auto) with_field(Target const& t, Fn&& fn)
{
    if (t.builtin) {
        std::optional<InitialConditions> ics = t.builtin->initial_conditions();
        return fn(*t.builtin, ics);
    }
    ExpressionField field(t.file->problem, t.file->extremal);
    std::optional<InitialConditions> ics;
    if (t.file->overrides_initial_conditions()) {
        auto iv    = field.interval();
        double x0  = field.regime() == RegimeKind::mixed_right_free ? iv.b : iv.a;
        ics        = t.file->initial_conditions(field(x0).P);
    }
    return fn(field, ics);
}

inline std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline nlohmann::json opt_json(std::optional<double> v)
{
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline Verdict run_verdict(Target const& t, GlobalFlags const& g)
{
    return with_field(t, [&](auto const& field, std::optional<InitialConditions> const& ics) {
        VerdictOptions opts;
        opts.grid               = g.grid;
        opts.tol_scale          = g.tol_scale;
        opts.initial_conditions = ics;
        if (t.file) {
            return verdict(t.file->problem, t.file->extremal, opts);
        }
        return verdict(field, opts);
    });
}

inline nlohmann::json summary_json(Target const& t, Verdict const& v)
{
    nlohmann::json j;
    j["target"]             = t.name;
    j["classification"]     = to_string(v.classification);
    j["conjugate_x"]        = opt_json(v.conjugate.location);
    j["min_P"]              = v.preconditions.min_P;
    j["R_at_a"]             = v.preconditions.r_at_a;
    j["Gyp_at_a"]           = v.preconditions.gyp_at_a;
    j["min_abs_T"]          = v.preconditions.min_abs_T;
    j["delta_triple_deriv"] = opt_json(v.conjugate.triple_derivative_at_a);
    if (t.builtin) {
        j["omega"] = t.builtin->omega();
    }
    return j;
}

inline void print_verdict(std::ostream& out, Target const& t, Verdict const& v)
{
    out << "target:          " << t.name << "\n";
    if (t.builtin) {
        out << "omega:           " << fmt17(t.builtin->omega()) << "\n";
        if (t.builtin->isoperimetric()) {
            out << "lambda:          " << fmt17(t.builtin->lambda()) << "\n";
        }
    }
    auto const& p = v.preconditions;
    out << "classification:  " << to_string(v.classification) << "\n";
    out << "min P:           " << fmt17(p.min_P) << (p.legendre_ok ? "" : "  (fails)") << "\n";
    if (p.r_enforced) {
        out << "R at free end:   " << fmt17(p.r_at_a) << (p.r_ok ? "" : "  (fails)") << "\n";
    }
    if (p.gyp_enforced) {
        out << "dG/dy' free end: " << fmt17(p.gyp_at_a) << (p.gyp_ok ? "" : "  (fails)") << "\n";
    }
    if (p.t_enforced) {
        out << "min |T|:         " << fmt17(p.min_abs_T) << (p.t_nonzero_ok ? "" : "  (fails)") << "\n";
    }
    if (v.conjugate.triple_derivative_at_a) {
        out << "D'''(a,a):       " << fmt17(*v.conjugate.triple_derivative_at_a) << "\n";
    }
    if (v.classification != Classification::precondition_failed) {
        out << "test function:   " << (v.conjugate.test_function == TestFunction::u ? "u" : "D = m v - n u") << "\n";
        if (v.conjugate.location) {
            out << "conjugate point: " << fmt17(*v.conjugate.location) << "\n";
        } else {
            out << "conjugate point: none in (a, b]\n";
        }
    }
    for (auto const& n : v.notes) {
        out << "note: " << n << "\n";
    }
}

struct Sweep
{
    double lo{0.0};
    double hi{0.0};
    int n{0};
};

inline Sweep parse_sweep(std::string const& s)
{
    std::string const prefix = "omega=";
    if (s.rfind(prefix, 0) != 0) {
        throw UsageError("--sweep expects omega=lo:hi:n");
    }
    Sweep sw;
    char c1 = 0, c2 = 0;
    std::istringstream in(s.substr(prefix.size()));
    if (!(in >> sw.lo >> c1 >> sw.hi >> c2 >> sw.n) || c1 != ':' || c2 != ':' || sw.n < 1 || !(sw.lo > 0.0) ||
        sw.hi < sw.lo) {
        throw UsageError("--sweep expects omega=lo:hi:n with 0 < lo <= hi and n >= 1");
    }
    return sw;
}

inline int cmd_check(std::string const& target, BuiltinFlags const& bf, GlobalFlags const& g,
                     std::string const& sweep, std::ostream& out)
{
    if (!sweep.empty()) {
        if (!is_builtin(target)) {
            throw UsageError("--sweep is only available for builtin problems");
        }
        Sweep sw     = parse_sweep(sweep);
        auto variant = target == catenary::fixed_height_name ? catenary::Variant::fixed_height
                                                             : catenary::Variant::fixed_length;
        for (int i = 0; i < sw.n; ++i) {
            double w = sw.n == 1 ? sw.lo : sw.lo + (sw.hi - sw.lo) * i / (sw.n - 1);
            Target t;
            t.name    = target;
            t.builtin = catenary::CatenaryProblem::from_omega(bf.a, bf.b, w, variant);
            Verdict v = run_verdict(t, g);
            if (g.json) {
                out << summary_json(t, v).dump() << "\n";
            } else {
                out << "omega=" << fmt17(w) << " classification=" << to_string(v.classification)
                    << " conjugate_x=" << (v.conjugate.location ? fmt17(*v.conjugate.location) : "none") << "\n";
            }
        }
        return exit_positive;
    }

    Target t  = load_target(target, bf);
    Verdict v = run_verdict(t, g);
    if (g.json) {
        out << summary_json(t, v).dump(2) << "\n";
    } else {
        print_verdict(out, t, v);
    }
    return exit_code(v.classification);
}

inline std::string const trace_header = "x,P,Q,R,T,Gyp,u,uprime,v,vprime,m,n,delta";

inline void write_trace(std::ostream& os, AccessoryTrajectory const& traj)
{
    os << trace_header << "\n";
    bool const iso = traj.isoperimetric();
    for (auto const& s : traj.samples()) {
        os << fmt17(s.x) << ',' << fmt17(s.P) << ',' << fmt17(s.Q) << ',' << fmt17(s.R) << ',';
        if (iso) {
            os << fmt17(s.T) << ',' << fmt17(s.Gyp) << ',';
        } else {
            os << ",,";
        }
        os << fmt17(s.u) << ',' << fmt17(s.uprime()) << ',';
        if (iso) {
            os << fmt17(s.v) << ',' << fmt17(s.vprime()) << ',' << fmt17(s.m) << ',' << fmt17(s.n) << ','
               << fmt17(s.delta());
        } else {
            os << ",,,,";
        }
        os << "\n";
    }
}

/// Accessory trajectory in the analysis frame (reflected for a free right end).
inline AccessoryTrajectory trace_trajectory(Target const& t, GlobalFlags const& g)
{
    return with_field(t, [&](auto const& field, std::optional<InitialConditions> const& ics) {
        using F = std::decay_t<decltype(field)>;
        IntegratorOptions io;
        io.rtol *= g.tol_scale;
        io.atol *= g.tol_scale;
        if (field.regime() == RegimeKind::mixed_right_free) {
            Reflected<F> mirror(field);
            auto init = ics.value_or(default_initial_conditions(mirror.regime(), mirror(mirror.interval().a).P));
            return integrate(mirror, init, g.grid, io);
        }
        auto init = ics.value_or(default_initial_conditions(field.regime(), field(field.interval().a).P));
        return integrate(field, init, g.grid, io);
    });
}

inline int cmd_trace(std::string const& target, std::string const& out_path, BuiltinFlags const& bf,
                     GlobalFlags const& g, std::ostream& out, std::ostream& err)
{
    Target t = load_target(target, bf);
    auto traj = trace_trajectory(t, g);
    if (t.file && t.file->problem.regime.kind == RegimeKind::mixed_right_free) {
        err << "note: free right end; trace is in the reflected coordinate a + b - x\n";
    }
    if (out_path.empty() || out_path == "-") {
        write_trace(out, traj);
        return 0;
    }
    std::ofstream os(out_path);
    if (!os) {
        throw std::runtime_error("cannot write '" + out_path + "'");
    }
    write_trace(os, traj);
    if (!os) {
        throw std::runtime_error("error writing '" + out_path + "'");
    }
    if (!g.json) {
        out << "wrote " << traj.samples().size() << " rows to " << out_path << "\n";
    }
    return 0;
}

inline int cmd_oracle(std::string const& target, int n_elements, BuiltinFlags const& bf, GlobalFlags const& g,
                      std::ostream& out)
{
    if (n_elements < 8) {
        throw UsageError("--elements must be at least 8");
    }
    Target t  = load_target(target, bf);
    Verdict v = run_verdict(t, g);

    auto [q, scale] = with_field(t, [&](auto const& field, auto const&) {
        DiscreteForm form = assemble(field, n_elements);
        QuotientResult r  = min_quotient(form, field.isoperimetric());
        return std::pair{r.value, discretization_scale(form)};
    });
    Agreement ag = compare(v.classification, q, scale);

    if (g.json) {
        nlohmann::json j;
        j["target"]               = t.name;
        j["elements"]             = n_elements;
        j["min_quotient"]         = q;
        j["sign"]                 = q > 0.0 ? "positive" : (q < 0.0 ? "negative" : "zero");
        j["discretization_scale"] = scale;
        j["classification"]       = to_string(v.classification);
        j["agreement"]            = to_string(ag);
        out << j.dump(2) << "\n";
    } else {
        out << "target:          " << t.name << "\n";
        out << "elements:        " << n_elements << "\n";
        out << "min quotient:    " << fmt17(q) << " (" << (q > 0.0 ? "positive" : "non-positive") << ")\n";
        out << "noise scale:     " << fmt17(10.0 * scale) << "\n";
        out << "jacobi verdict:  " << to_string(v.classification) << "\n";
        out << "agreement:       " << to_string(ag) << "\n";
    }
    if (v.classification == Classification::precondition_failed) {
        return exit_precond;
    }
    return ag == Agreement::disagree ? exit_disagree : 0;
}

inline int cmd_examples(std::ostream& out)
{
    out << catenary::fixed_height_name
        << "   hanging chain, apex at a, y(b) = y_b   flags: --a --b --yb --branch {high,low}\n";
    out << catenary::fixed_length_name
        << "   hanging chain of length ell, apex at a  flags: --a --b --ell [--yb]\n";
    out << "both accept --omega w to fix the catenary parameter directly\n";
    return 0;
}

/// Entry point shared by the executable and the tests.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Second-variation definiteness via Jacobi conjugate points", "jacobi"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    BuiltinFlags bf;
    std::string sweep;
    app.add_flag("--json", g.json, "machine-readable output");
    app.add_option("--grid", g.grid, "output rows / precondition grid")->check(CLI::PositiveNumber);
    app.add_option("--tol-scale", g.tol_scale, "multiplies default tolerances")->check(CLI::PositiveNumber);
    app.add_option("--a", bf.a, "builtin: left end");
    app.add_option("--b", bf.b, "builtin: right end");
    auto* yb_opt = app.add_option("--yb", bf.yb, "builtin: height at b");
    app.add_option("--ell", bf.ell, "builtin: chain length");
    app.add_option("--omega", bf.omega, "builtin: prescribe w instead of solving for it")->check(CLI::PositiveNumber);
    app.add_option("--branch", bf.branch, "builtin: high or low root")->check(CLI::IsMember({"high", "low"}));

    std::string target;
    std::string out_path;
    int n_elements = 256;

    auto* check = app.add_subcommand("check", "classify the second variation");
    check->add_option("target", target, "problem file or builtin name")->required();
    check->add_option("--sweep", sweep, "builtins: omega=lo:hi:n");

    auto* trace = app.add_subcommand("trace", "write the accessory trajectory as CSV");
    trace->add_option("target", target, "problem file or builtin name")->required();
    trace->add_option("-o,--out", out_path, "CSV path (stdout if omitted)");

    auto* oracle = app.add_subcommand("oracle", "discretized quadratic-form cross-check");
    oracle->add_option("target", target, "problem file or builtin name")->required();
    oracle->add_option("--elements", n_elements, "number of finite elements (>= 8)");

    app.add_subcommand("examples", "list builtin problems");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (CLI::ParseError const& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : exit_usage;
    }
    if (yb_opt->count() > 0) {
        bf.yb_given = bf.yb;
    }
    if (g.grid < 16) {
        err << "error: --grid must be at least 16\n";
        return exit_usage;
    }

    try {
        if (check->parsed()) {
            return cmd_check(target, bf, g, sweep, out);
        }
        if (trace->parsed()) {
            return cmd_trace(target, out_path, bf, g, out, err);
        }
        if (oracle->parsed()) {
            return cmd_oracle(target, n_elements, bf, g, out);
        }
        return cmd_examples(out);
    } catch (UsageError const& e) {
        err << "usage error: " << e.what() << "\n";
    } catch (std::exception const& e) {
        err << "error: " << e.what() << "\n";
    }
    return exit_usage;
}

} // namespace jacobi::cli
