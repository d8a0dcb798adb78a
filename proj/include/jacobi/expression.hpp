/** \file expression.hpp
 *
 *  \brief Scalar expressions in x, y, yp with named constants, plus
 *  central finite-difference partial derivatives.
 */

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

namespace jacobi {

/// Syntax error or unknown identifier while parsing.
class ParseError : public std::runtime_error
{
  public:
    ParseError(std::size_t position, std::string const& message)
        : std::runtime_error(message + " at offset " + std::to_string(position))
        , position_(position)
    {
    }

    std::size_t position() const noexcept
    {
        return position_;
    }

  private:
    std::size_t position_;
};

/// Identifier that is neither a variable, a builtin constant nor a declared parameter.
class UnknownIdentifier : public ParseError
{
  public:
    UnknownIdentifier(std::size_t position, std::string name)
        : ParseError(position, "unknown identifier '" + name + "'")
        , name_(std::move(name))
    {
    }

    std::string const& name() const noexcept
    {
        return name_;
    }

  private:
    std::string name_;
};

/// Evaluation left the domain of an operator (log/sqrt of a negative, division by zero, ...).
class DomainError : public std::runtime_error
{
  public:
    DomainError(std::string const& message, std::string subterm)
        : std::runtime_error(message + " in '" + subterm + "'")
        , subterm_(std::move(subterm))
    {
    }

    std::string const& subterm() const noexcept
    {
        return subterm_;
    }

  private:
    std::string subterm_;
};

enum class Var : int
{
    x  = 0,
    y  = 1,
    yp = 2
};

/// Evaluation point (x, y, y').
using Point = std::array<double, 3>;

using Params = std::map<std::string, double, std::less<>>;

namespace detail {

enum class Op
{
    number,
    constant,
    variable,
    neg,
    add,
    sub,
    mul,
    div,
    pow,
    call
};

enum class Fn
{
    sin,
    cos,
    tan,
    sinh,
    cosh,
    tanh,
    exp,
    log,
    sqrt,
    abs
};

struct FnName
{
    std::string_view name;
    Fn fn;
};

inline constexpr std::array<FnName, 10> functions{{{"sin", Fn::sin},
                                                   {"cos", Fn::cos},
                                                   {"tan", Fn::tan},
                                                   {"sinh", Fn::sinh},
                                                   {"cosh", Fn::cosh},
                                                   {"tanh", Fn::tanh},
                                                   {"exp", Fn::exp},
                                                   {"log", Fn::log},
                                                   {"sqrt", Fn::sqrt},
                                                   {"abs", Fn::abs}}};

inline std::string_view fn_name(Fn f)
{
    for (auto const& e : functions) {
        if (e.fn == f) {
            return e.name;
        }
    }
    return "?";
}

struct Node
{
    Op op{Op::number};
    double value{0.0};
    Var var{Var::x};
    Fn fn{Fn::sin};
    std::string name; // for Op::constant
    int lhs{-1};
    int rhs{-1};
};

inline std::string format_number(double v)
{
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace detail

/// Immutable expression tree. Copies share the node storage.
class Expr
{
  public:
    Expr() = default;

    /// Value at (x, y, yp). Throws DomainError on log/sqrt of negatives, division by zero or a NaN power.
    double evaluate(double x, double y, double yp) const
    {
        Point p{x, y, yp};
        return eval<double>(root_, p);
    }

    double evaluate(Point const& p) const
    {
        return eval<double>(root_, p);
    }

    /// Value in extended precision; finite-difference stencils use this so
    /// that cancellation does not eat the digits of the result.
    long double evaluate_extended(Point const& p) const
    {
        return eval(root_, std::array<long double, 3>{p[0], p[1], p[2]});
    }

    /// True if the variable occurs anywhere in the tree.
    bool uses(Var v) const
    {
        if (!nodes_) {
            return false;
        }
        for (auto const& n : *nodes_) {
            if (n.op == detail::Op::variable && n.var == v) {
                return true;
            }
        }
        return false;
    }

    bool empty() const noexcept
    {
        return !nodes_;
    }

    /// Fully parenthesized text that parses back (with the same parameters) to an equivalent tree.
    std::string to_string() const
    {
        return empty() ? std::string{} : text(root_);
    }

  private:
    friend class ExprParser;

    Expr(std::shared_ptr<std::vector<detail::Node> const> nodes, int root)
        : nodes_(std::move(nodes))
        , root_(root)
    {
    }

    std::string text(int i) const
    {
        using detail::Op;
        auto const& n = (*nodes_)[i];
        switch (n.op) {
            case Op::number:
                return detail::format_number(n.value);
            case Op::constant:
                return n.name;
            case Op::variable:
                return n.var == Var::x ? "x" : (n.var == Var::y ? "y" : "yp");
            case Op::neg:
                return "(-" + text(n.lhs) + ")";
            case Op::add:
                return "(" + text(n.lhs) + " + " + text(n.rhs) + ")";
            case Op::sub:
                return "(" + text(n.lhs) + " - " + text(n.rhs) + ")";
            case Op::mul:
                return "(" + text(n.lhs) + " * " + text(n.rhs) + ")";
            case Op::div:
                return "(" + text(n.lhs) + " / " + text(n.rhs) + ")";
            case Op::pow:
                return "(" + text(n.lhs) + " ^ " + text(n.rhs) + ")";
            case Op::call:
                return std::string(detail::fn_name(n.fn)) + "(" + text(n.lhs) + ")";
        }
        return {};
    }

    template <class Real>
    Real eval(int i, std::array<Real, 3> const& p) const
    {
        using detail::Fn;
        using detail::Op;
        auto const& n = (*nodes_)[i];
        switch (n.op) {
            case Op::number:
            case Op::constant:
                return static_cast<Real>(n.value);
            case Op::variable:
                return p[static_cast<int>(n.var)];
            case Op::neg:
                return -eval(n.lhs, p);
            case Op::add:
                return eval(n.lhs, p) + eval(n.rhs, p);
            case Op::sub:
                return eval(n.lhs, p) - eval(n.rhs, p);
            case Op::mul:
                return eval(n.lhs, p) * eval(n.rhs, p);
            case Op::div: {
                Real den = eval(n.rhs, p);
                if (den == 0) {
                    throw DomainError("division by zero", text(i));
                }
                return eval(n.lhs, p) / den;
            }
            case Op::pow: {
                Real base = eval(n.lhs, p);
                Real expo = eval(n.rhs, p);
                Real r    = std::pow(base, expo);
                if (std::isnan(r) && !std::isnan(base) && !std::isnan(expo)) {
                    throw DomainError("non-real power", text(i));
                }
                if (base == 0 && expo < 0) {
                    throw DomainError("division by zero", text(i));
                }
                return r;
            }
            case Op::call: {
                Real arg = eval(n.lhs, p);
                switch (n.fn) {
                    case Fn::sin:
                        return std::sin(arg);
                    case Fn::cos:
                        return std::cos(arg);
                    case Fn::tan:
                        return std::tan(arg);
                    case Fn::sinh:
                        return std::sinh(arg);
                    case Fn::cosh:
                        return std::cosh(arg);
                    case Fn::tanh:
                        return std::tanh(arg);
                    case Fn::exp:
                        return std::exp(arg);
                    case Fn::log:
                        if (!(arg > 0)) {
                            throw DomainError("log of non-positive value", text(i));
                        }
                        return std::log(arg);
                    case Fn::sqrt:
                        if (arg < 0) {
                            throw DomainError("sqrt of negative value", text(i));
                        }
                        return std::sqrt(arg);
                    case Fn::abs:
                        return std::abs(arg);
                }
            }
        }
        return std::numeric_limits<Real>::quiet_NaN();
    }

    std::shared_ptr<std::vector<detail::Node> const> nodes_;
    int root_{-1};
};

/// Recursive-descent parser for
///   expr := term (('+'|'-') term)*
///   term := factor (('*'|'/') factor)*
///   factor := unary ('^' factor)?
///   unary := '-'? primary
///   primary := number | ident | ident '(' expr ')' | '(' expr ')'
class ExprParser
{
  public:
    ExprParser(std::string_view src, Params const& params)
        : src_(src)
        , params_(params)
    {
    }

    Expr parse()
    {
        skip_ws();
        int root = expr();
        skip_ws();
        if (pos_ != src_.size()) {
            throw ParseError(pos_, "unexpected '" + std::string(1, src_[pos_]) + "'");
        }
        return Expr(std::make_shared<std::vector<detail::Node> const>(std::move(nodes_)), root);
    }

  private:
    int add(detail::Node n)
    {
        nodes_.push_back(std::move(n));
        return static_cast<int>(nodes_.size()) - 1;
    }

    int binary(detail::Op op, int l, int r)
    {
        detail::Node n;
        n.op  = op;
        n.lhs = l;
        n.rhs = r;
        return add(std::move(n));
    }

    void skip_ws()
    {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    int expr()
    {
        int lhs = term();
        for (;;) {
            if (accept('+')) {
                lhs = binary(detail::Op::add, lhs, term());
            } else if (accept('-')) {
                lhs = binary(detail::Op::sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }

    int term()
    {
        int lhs = factor();
        for (;;) {
            if (accept('*')) {
                lhs = binary(detail::Op::mul, lhs, factor());
            } else if (accept('/')) {
                lhs = binary(detail::Op::div, lhs, factor());
            } else {
                return lhs;
            }
        }
    }

    int factor()
    {
        int base = unary();
        if (accept('^')) {
            return binary(detail::Op::pow, base, factor());
        }
        return base;
    }

    int unary()
    {
        if (accept('-')) {
            detail::Node n;
            n.op  = detail::Op::neg;
            n.lhs = primary();
            return add(std::move(n));
        }
        return primary();
    }

    int primary()
    {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError(pos_, "unexpected end of input");
        }
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = expr();
            if (!accept(')')) {
                throw ParseError(pos_, "expected ')'");
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return number();
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            return identifier();
        }
        throw ParseError(pos_, "unexpected '" + std::string(1, c) + "'");
    }

    int number()
    {
        std::size_t start = pos_;
        auto digits       = [&] {
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
        };
        digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            digits();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) {
                ++pos_;
            }
            if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                digits();
            } else {
                pos_ = save;
            }
        }
        double v{};
        auto res = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (res.ec != std::errc{} || res.ptr != src_.data() + pos_) {
            throw ParseError(start, "malformed number");
        }
        detail::Node n;
        n.op    = detail::Op::number;
        n.value = v;
        return add(std::move(n));
    }

    int identifier()
    {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        std::string name(src_.substr(start, pos_ - start));

        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == '(') {
            for (auto const& f : detail::functions) {
                if (f.name == name) {
                    ++pos_;
                    detail::Node n;
                    n.op  = detail::Op::call;
                    n.fn  = f.fn;
                    n.lhs = expr();
                    if (!accept(')')) {
                        throw ParseError(pos_, "expected ')'");
                    }
                    return add(std::move(n));
                }
            }
            throw UnknownIdentifier(start, name);
        }

        detail::Node n;
        if (name == "x" || name == "y" || name == "yp") {
            n.op  = detail::Op::variable;
            n.var = name == "x" ? Var::x : (name == "y" ? Var::y : Var::yp);
            return add(std::move(n));
        }
        n.op   = detail::Op::constant;
        n.name = name;
        if (auto it = params_.find(name); it != params_.end()) {
            n.value = it->second;
        } else if (name == "pi") {
            n.value = std::numbers::pi;
        } else if (name == "e") {
            n.value = std::numbers::e;
        } else {
            throw UnknownIdentifier(start, name);
        }
        return add(std::move(n));
    }

    std::string_view src_;
    Params const& params_;
    std::size_t pos_{0};
    std::vector<detail::Node> nodes_;
};

/// Parses `source`. User parameters shadow the builtin constants pi and e.
inline Expr parse(std::string_view source, Params const& params = {})
{
    return ExprParser(source, params).parse();
}

inline double evaluate(Expr const& e, double x, double y, double yp)
{
    return e.evaluate(x, y, yp);
}

namespace fd {

inline constexpr double eps = std::numeric_limits<double>::epsilon();

/// Step scaled to the magnitude of the coordinate and rounded so that p+h is exact.
inline double step(double coordinate, double root_of_eps)
{
    double h             = root_of_eps * std::max(1.0, std::abs(coordinate));
    volatile double temp = coordinate + h;
    return temp - coordinate;
}

/// Central-difference first or second partial of any callable f(Point).
/// Both stencil offsets are exactly representable and the differences are
/// formed in long double, so the result is exact for quadratics up to the
/// precision of f.
template <class F>
double partial(F const& f, std::span<Var const> wrt, Point const& p)
{
    using Real = long double;
    if (wrt.size() == 1) {
        int i     = static_cast<int>(wrt[0]);
        double h  = step(p[i], std::cbrt(eps));
        Point hi  = p, lo = p;
        hi[i]    += h;
        lo[i]    -= h;
        Real span = static_cast<Real>(hi[i]) - static_cast<Real>(lo[i]);
        return static_cast<double>((static_cast<Real>(f(hi)) - static_cast<Real>(f(lo))) / span);
    }
    if (wrt.size() == 2) {
        int i = static_cast<int>(wrt[0]);
        int j = static_cast<int>(wrt[1]);
        if (i == j) {
            double h = step(p[i], std::pow(eps, 0.25));
            Point hi = p, lo = p;
            hi[i] += h;
            lo[i] -= h;
            Real hp = static_cast<Real>(hi[i]) - p[i];
            Real hm = static_cast<Real>(p[i]) - lo[i];
            Real f0 = f(p);
            Real d  = (static_cast<Real>(f(hi)) - f0) / hp - (f0 - static_cast<Real>(f(lo))) / hm;
            return static_cast<double>(2 * d / (hp + hm));
        }
        double hi_ = step(p[i], std::pow(eps, 0.25));
        double hj  = step(p[j], std::pow(eps, 0.25));
        auto at    = [&](double si, double sj) -> Real {
            Point q = p;
            q[i] += si * hi_;
            q[j] += sj * hj;
            return f(q);
        };
        Real si = static_cast<Real>(p[i] + hi_) - static_cast<Real>(p[i] - hi_);
        Real sj = static_cast<Real>(p[j] + hj) - static_cast<Real>(p[j] - hj);
        return static_cast<double>((at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (si * sj));
    }
    throw std::invalid_argument("partial: wrt must name one or two variables");
}

/// Third partial by nested central differences. Needed for the total
/// derivative dR/dx where R is itself a second partial. The step is the fifth
/// root of the epsilon of f's result type, which balances O(h^2) truncation
/// against eps / h^3 cancellation.
template <class F>
double partial3(F const& f, std::array<Var, 3> const& wrt, Point const& p)
{
    using Real            = long double;
    using Value           = std::decay_t<decltype(f(p))>;
    double const root_eps = static_cast<double>(std::pow(std::numeric_limits<Value>::epsilon(), Value(0.2)));
    std::array<double, 3> h{};
    for (int k = 0; k < 3; ++k) {
        h[k] = step(p[static_cast<int>(wrt[k])], root_eps);
    }
    Real sum = 0;
    for (int mask = 0; mask < 8; ++mask) {
        Point q     = p;
        double sign = 1.0;
        for (int k = 0; k < 3; ++k) {
            double s = (mask >> k) & 1 ? -1.0 : 1.0;
            q[static_cast<int>(wrt[k])] += s * h[k];
            sign *= s;
        }
        sum += sign * static_cast<Real>(f(q));
    }
    return static_cast<double>(sum / (8 * static_cast<Real>(h[0]) * h[1] * h[2]));
}

} // namespace fd

/// Finite-difference partial of an expression with respect to one or two variables.
inline double partial(Expr const& e, std::initializer_list<Var> wrt, double x, double y, double yp)
{
    auto f = [&e](Point const& p) { return e.evaluate_extended(p); };
    return fd::partial(f, std::span<Var const>(wrt.begin(), wrt.size()), Point{x, y, yp});
}

inline double partial(Expr const& e, std::span<Var const> wrt, Point const& p)
{
    auto f = [&e](Point const& q) { return e.evaluate_extended(q); };
    return fd::partial(f, wrt, p);
}

} // namespace jacobi
