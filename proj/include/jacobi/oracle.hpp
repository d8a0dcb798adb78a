/** \file oracle.hpp
 *
 *  \brief Discretized second variation: piecewise-linear Ritz assembly of
 *  int (P h'^2 + Q h^2) dx, its minimal Rayleigh quotient against int h^2,
 *  optionally restricted to int h T dx = 0, and direct evaluation of the
 *  second variation on sampled variations.
 *
 *  This path shares no code with the accessory integration; agreement of the
 *  two is the cross-check.
 */

#pragma once

#include <jacobi/accessory.hpp>
#include <jacobi/conjugate.hpp>
#include <jacobi/problem.hpp>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jacobi {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Assembled quadratic form on the boundary-reduced hat basis.
struct DiscreteForm
{
    Interval interval;
    RegimeKind regime{RegimeKind::dirichlet}; ///< after reduction; never mixed_right_free
    bool reflected{false};
    bool isoperimetric{false};
    int n_elements{0};

    std::vector<double> nodes; ///< all n_elements + 1 grid nodes
    std::vector<int> dofs;     ///< node index of each unknown

    SparseMatrix K;   ///< int P phi_i' phi_j'
    SparseMatrix Mq;  ///< int Q phi_i phi_j
    SparseMatrix M;   ///< int phi_i phi_j
    Eigen::VectorXd t; ///< int T phi_j, minus dG/dy'(a) at a free left node

    double boundary_term{0.0}; ///< -R(a) on the free node at a (zero for Dirichlet)

    double max_P{0.0};
    double max_abs_Q{0.0};

    int dimension() const
    {
        return static_cast<int>(dofs.size());
    }

    /// K + Mq plus the boundary contribution of R h^2 |_a^b.
    SparseMatrix quadratic() const
    {
        SparseMatrix A = K + Mq;
        if (boundary_term != 0.0 && regime == RegimeKind::mixed_left_free) {
            A.coeffRef(0, 0) += boundary_term;
        }
        return A;
    }
};

/// Magnitude of O(h^2) discretization error in the minimal quotient.
inline double discretization_scale(DiscreteForm const& form)
{
    double L = form.interval.length();
    double n = form.n_elements;
    return (form.max_P / (L * L) + form.max_abs_Q) / (n * n);
}

namespace detail {

template <CoefficientField F>
DiscreteForm assemble_left(F const& field, int n_elements)
{
    auto const [a, b] = field.interval();
    int const n       = n_elements;
    double const h    = (b - a) / n;

    DiscreteForm form;
    form.interval      = field.interval();
    form.regime        = field.regime();
    form.isoperimetric = field.isoperimetric();
    form.n_elements    = n;
    form.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        form.nodes[i] = i == n ? b : a + h * i;
    }

    int const first = form.regime == RegimeKind::dirichlet ? 1 : 0;
    int const last  = n - 1;
    std::vector<int> index(n + 1, -1);
    for (int i = first; i <= last; ++i) {
        index[i] = static_cast<int>(form.dofs.size());
        form.dofs.push_back(i);
    }
    int const dim = form.dimension();

    std::vector<Eigen::Triplet<double>> tk, tq, tm;
    form.t = Eigen::VectorXd::Zero(dim);

    double const g = h / (2.0 * std::sqrt(3.0));
    for (int e = 0; e < n; ++e) {
        double const xl = form.nodes[e];
        double const xr = form.nodes[e + 1];
        double const xm = 0.5 * (xl + xr);
        double const he = xr - xl;

        double k = 0.0;
        double q[2][2]{};
        double tv[2]{};
        for (double xq : {xm - g, xm + g}) {
            Coefficients c = field(xq);
            double w       = 0.5 * he;
            double phi[2]  = {(xr - xq) / he, (xq - xl) / he};
            k += w * c.P;
            for (int r = 0; r < 2; ++r) {
                tv[r] += w * c.T * phi[r];
                for (int s = 0; s < 2; ++s) {
                    q[r][s] += w * c.Q * phi[r] * phi[s];
                }
            }
            form.max_P     = std::max(form.max_P, std::abs(c.P));
            form.max_abs_Q = std::max(form.max_abs_Q, std::abs(c.Q));
        }
        k /= he * he;
        double const kk[2][2] = {{k, -k}, {-k, k}};
        double const mm[2][2] = {{he / 3.0, he / 6.0}, {he / 6.0, he / 3.0}};
        int const gl[2]       = {index[e], index[e + 1]};
        for (int r = 0; r < 2; ++r) {
            if (gl[r] < 0) {
                continue;
            }
            form.t(gl[r]) += tv[r];
            for (int s = 0; s < 2; ++s) {
                if (gl[s] < 0) {
                    continue;
                }
                tk.emplace_back(gl[r], gl[s], kk[r][s]);
                tq.emplace_back(gl[r], gl[s], q[r][s]);
                tm.emplace_back(gl[r], gl[s], mm[r][s]);
            }
        }
    }
    form.K.resize(dim, dim);
    form.Mq.resize(dim, dim);
    form.M.resize(dim, dim);
    form.K.setFromTriplets(tk.begin(), tk.end());
    form.Mq.setFromTriplets(tq.begin(), tq.end());
    form.M.setFromTriplets(tm.begin(), tm.end());

    if (form.regime == RegimeKind::mixed_left_free) {
        Coefficients c     = field(a);
        form.boundary_term = -c.R;
        if (form.isoperimetric) {
            form.t(0) -= c.Gyp;
        }
    }
    return form;
}

} // namespace detail

/// Hat-function assembly on n_elements uniform elements with 2-point Gauss
/// quadrature. Dirichlet removes both end nodes; a free left end keeps the
/// node at a, where h'(a) = 0 holds as the natural condition. A free right
/// end is assembled on the reflected interval.
template <CoefficientField F>
DiscreteForm assemble(F const& field, int n_elements)
{
    if (n_elements < 8) {
        throw std::invalid_argument("assemble: n_elements must be at least 8");
    }
    if (field.regime() == RegimeKind::mixed_right_free) {
        DiscreteForm form = detail::assemble_left(Reflected<F>(field), n_elements);
        form.reflected    = true;
        return form;
    }
    return detail::assemble_left(field, n_elements);
}

class QuotientNonConvergence : public std::runtime_error
{
  public:
    explicit QuotientNonConvergence(double residual)
        : std::runtime_error("inverse iteration did not converge, residual " + std::to_string(residual))
        , residual_(residual)
    {
    }

    double residual() const noexcept
    {
        return residual_;
    }

  private:
    double residual_;
};

enum class QuotientMethod
{
    automatic, ///< dense below dimension 512, inverse iteration above
    dense,
    inverse_iteration
};

struct QuotientResult
{
    double value{0.0};
    Eigen::VectorXd minimizer; ///< in dof coordinates, normalised to h^T M h = 1
    double residual{0.0};
};

namespace detail {

inline QuotientResult min_quotient_dense(Eigen::MatrixXd const& A, Eigen::MatrixXd const& M,
                                         Eigen::VectorXd const* t)
{
    int const n = static_cast<int>(A.rows());
    Eigen::MatrixXd Z;
    if (t) {
        Eigen::MatrixXd tm = *t;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(tm);
        Eigen::MatrixXd Q = qr.householderQ();
        Z                 = Q.rightCols(n - 1);
    } else {
        Z = Eigen::MatrixXd::Identity(n, n);
    }
    Eigen::MatrixXd Az = Z.transpose() * A * Z;
    Eigen::MatrixXd Mz = Z.transpose() * M * Z;
    Az                 = 0.5 * (Az + Az.transpose()).eval();
    Mz                 = 0.5 * (Mz + Mz.transpose()).eval();

    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Az, Mz);
    if (es.info() != Eigen::Success) {
        throw QuotientNonConvergence(std::numeric_limits<double>::infinity());
    }
    QuotientResult r;
    r.value       = es.eigenvalues()(0);
    r.minimizer   = Z * es.eigenvectors().col(0);
    double nrm    = std::sqrt(r.minimizer.dot(M * r.minimizer));
    r.minimizer  /= nrm;
    Eigen::VectorXd res = Az * es.eigenvectors().col(0) - r.value * Mz * es.eigenvectors().col(0);
    r.residual    = res.norm() / std::max(1.0, std::abs(r.value));
    return r;
}

/// Gershgorin lower bound on the smallest eigenvalue of a symmetric matrix.
inline double gershgorin_lower(SparseMatrix const& A)
{
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(A.rows());
    Eigen::VectorXd off  = Eigen::VectorXd::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
            if (it.row() == it.col()) {
                diag(it.row()) += it.value();
            } else {
                off(it.row()) += std::abs(it.value());
            }
        }
    }
    return (diag - off).minCoeff();
}

inline SparseMatrix bordered(SparseMatrix const& B, Eigen::VectorXd const* t)
{
    if (!t) {
        return B;
    }
    int const n = static_cast<int>(B.rows());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(B.nonZeros() + 2 * n);
    for (int k = 0; k < B.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(B, k); it; ++it) {
            trip.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (int i = 0; i < n; ++i) {
        if ((*t)(i) != 0.0) {
            trip.emplace_back(i, n, (*t)(i));
            trip.emplace_back(n, i, (*t)(i));
        }
    }
    SparseMatrix out(n + 1, n + 1);
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<int>>;

/// Number of (constrained) generalized eigenvalues below sigma, by Sylvester's law
/// of inertia on the LDL^T factors of A - sigma M (bordered by t when constrained).
inline int count_below(SparseMatrix const& A, SparseMatrix const& M, Eigen::VectorXd const* t, double sigma)
{
    Ldlt ldlt(bordered(A - sigma * M, t));
    if (ldlt.info() != Eigen::Success) {
        return -1;
    }
    auto const& D = ldlt.vectorD();
    int neg       = 0;
    for (int i = 0; i < D.size(); ++i) {
        neg += D(i) < 0.0 ? 1 : 0;
    }
    return t ? neg - 1 : neg;
}

inline QuotientResult min_quotient_inverse(SparseMatrix const& A, SparseMatrix const& M, Eigen::VectorXd const* t)
{
    int const n = static_cast<int>(A.rows());

    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    if (t) {
        w -= *t * (t->dot(w) / t->squaredNorm());
    }
    double hi = w.dot(A * w) / w.dot(M * w);
    hi += 1e-12 * std::max(1.0, std::abs(hi));

    double const gA = gershgorin_lower(A);
    double const gM = gershgorin_lower(M);
    if (!(gM > 0.0)) {
        throw std::invalid_argument("min_quotient: norm matrix is not diagonally dominant");
    }
    double lo = gA < 0.0 ? gA / gM - 1.0 : -1.0;

    // bisection on the eigenvalue count brackets the smallest eigenvalue
    for (int it = 0; it < 200 && hi - lo > 1e-11 * std::max(1.0, std::abs(hi)); ++it) {
        double mid = 0.5 * (lo + hi);
        int c      = count_below(A, M, t, mid);
        if (c < 0) {
            mid = std::nextafter(mid, hi);
            c   = count_below(A, M, t, mid);
        }
        if (c >= 1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    // shifted inverse iteration from just below the bracket for the eigenvector
    double const sigma = lo - 1e-9 * std::max(1.0, std::abs(lo));
    Ldlt ldlt(bordered(A - sigma * M, t));
    if (ldlt.info() != Eigen::Success) {
        throw QuotientNonConvergence(std::numeric_limits<double>::infinity());
    }
    Eigen::VectorXd x = w / std::sqrt(w.dot(M * w));
    QuotientResult r;
    r.residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 50; ++it) {
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(t ? n + 1 : n);
        rhs.head(n)         = M * x;
        Eigen::VectorXd sol = ldlt.solve(rhs);
        x                   = sol.head(n);
        x /= std::sqrt(x.dot(M * x));
        r.value               = x.dot(A * x);
        Eigen::VectorXd resid = A * x - r.value * (M * x);
        if (t) {
            resid -= *t * (t->dot(resid) / t->squaredNorm());
        }
        r.residual = resid.norm() / std::max(1.0, std::abs(r.value));
        if (r.residual < 1e-9) {
            break;
        }
    }
    if (!(r.residual < 1e-6)) {
        throw QuotientNonConvergence(r.residual);
    }
    r.minimizer = x;
    return r;
}

} // namespace detail

/// Minimal generalized Rayleigh quotient of the assembled form against int h^2,
/// over all dofs or over { h : t^T h = 0 } when constrained. Its sign is the
/// discrete definiteness signal.
inline QuotientResult min_quotient(DiscreteForm const& form, bool constrained,
                                   QuotientMethod method = QuotientMethod::automatic)
{
    if (constrained && !(form.t.norm() > 0.0)) {
        throw std::invalid_argument("min_quotient: constraint vector vanishes");
    }
    SparseMatrix const A     = form.quadratic();
    Eigen::VectorXd const* t = constrained ? &form.t : nullptr;

    bool dense = method == QuotientMethod::dense ||
                 (method == QuotientMethod::automatic && form.dimension() < 512);
    if (dense) {
        return detail::min_quotient_dense(Eigen::MatrixXd(A), Eigen::MatrixXd(form.M), t);
    }
    return detail::min_quotient_inverse(A, form.M, t);
}

/// A variation sampled on an increasing grid; linear between samples.
struct VariationSamples
{
    std::vector<double> x;
    std::vector<double> h;
};

struct SecondVariationValue
{
    double value{0.0};         ///< R h^2 |_a^b + int (P h'^2 + Q h^2)
    double norm_squared{0.0};  ///< int h^2
    double constraint{0.0};    ///< G_{y'} h |_a^b + int h T
    std::vector<std::string> warnings;
};

/// Second variation of a sampled h: trapezoidal int Q h^2, int P h'^2 with h'
/// constant on each interval, plus the boundary term R h^2 |_a^b.
template <CoefficientField F>
SecondVariationValue second_variation_of(VariationSamples const& var, F const& field)
{
    auto const& xs = var.x;
    auto const& hs = var.h;
    if (xs.size() != hs.size() || xs.size() < 2) {
        throw std::invalid_argument("second_variation_of: need matching x and h samples");
    }
    std::vector<Coefficients> c(xs.size());
    double hmax = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        c[i] = field(xs[i]);
        hmax = std::max(hmax, std::abs(hs[i]));
    }

    SecondVariationValue out;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double dx = xs[i + 1] - xs[i];
        if (!(dx > 0.0)) {
            throw std::invalid_argument("second_variation_of: abscissae must increase");
        }
        double dh = (hs[i + 1] - hs[i]) / dx;
        out.value += 0.5 * (c[i].P + c[i + 1].P) * dh * dh * dx;
        out.value += 0.5 * (c[i].Q * hs[i] * hs[i] + c[i + 1].Q * hs[i + 1] * hs[i + 1]) * dx;
        out.norm_squared += 0.5 * (hs[i] * hs[i] + hs[i + 1] * hs[i + 1]) * dx;
        out.constraint += 0.5 * (c[i].T * hs[i] + c[i + 1].T * hs[i + 1]) * dx;
    }
    auto const& ca = c.front();
    auto const& cb = c.back();
    out.value += cb.R * hs.back() * hs.back() - ca.R * hs.front() * hs.front();
    if (field.isoperimetric()) {
        out.constraint += cb.Gyp * hs.back() - ca.Gyp * hs.front();
    } else {
        out.constraint = 0.0;
    }

    double const tol = 1e-8 * std::max(hmax, 1e-300);
    RegimeKind const regime = field.regime();
    if (regime != RegimeKind::mixed_left_free && std::abs(hs.front()) > tol) {
        out.warnings.push_back("h(a) != 0 violates the boundary condition");
    }
    if (regime != RegimeKind::mixed_right_free && std::abs(hs.back()) > tol) {
        out.warnings.push_back("h(b) != 0 violates the boundary condition");
    }
    return out;
}

/// u on [a, c] and zero on (c, b]: the variation that makes the second
/// variation vanish when c is a zero of u.
inline VariationSamples cutoff_variation(AccessoryTrajectory const& traj, double c)
{
    VariationSamples out;
    for (auto const& s : traj.samples()) {
        if (s.x < c) {
            out.x.push_back(s.x);
            out.h.push_back(s.u);
        }
    }
    out.x.push_back(c);
    out.h.push_back(0.0);
    for (auto const& s : traj.samples()) {
        if (s.x > c) {
            out.x.push_back(s.x);
            out.h.push_back(0.0);
        }
    }
    return out;
}

/// alpha v - beta u on [a, c] with alpha = m(c), beta = n(c), zero beyond:
/// admissible for the constraint and degenerate when D(c) = 0.
inline VariationSamples isoperimetric_cutoff_variation(AccessoryTrajectory const& traj, double c)
{
    auto const at     = traj.at(c);
    double const alpha = at.m;
    double const beta  = at.n;
    VariationSamples out;
    for (auto const& s : traj.samples()) {
        if (s.x < c) {
            out.x.push_back(s.x);
            out.h.push_back(alpha * s.v - beta * s.u);
        }
    }
    out.x.push_back(c);
    out.h.push_back(0.0);
    for (auto const& s : traj.samples()) {
        if (s.x > c) {
            out.x.push_back(s.x);
            out.h.push_back(0.0);
        }
    }
    return out;
}

enum class Agreement
{
    agree,
    disagree,
    inconclusive ///< quotient within the discretization noise, or no verdict to compare
};

inline std::string to_string(Agreement a)
{
    switch (a) {
        case Agreement::agree:
            return "agree";
        case Agreement::disagree:
            return "disagree";
        case Agreement::inconclusive:
            return "inconclusive";
    }
    return "?";
}

/// Compares the sign of the minimal quotient with a Jacobi verdict. Quotients
/// within 10 x the discretization scale count as zero.
inline Agreement compare(Classification c, double quotient, double scale)
{
    bool const small = std::abs(quotient) <= 10.0 * scale;
    switch (c) {
        case Classification::precondition_failed:
            return Agreement::inconclusive;
        case Classification::degenerate_at_b:
            return small ? Agreement::agree : Agreement::disagree;
        case Classification::positive_definite:
            return small ? Agreement::inconclusive : (quotient > 0.0 ? Agreement::agree : Agreement::disagree);
        case Classification::indefinite:
            return small ? Agreement::inconclusive : (quotient < 0.0 ? Agreement::agree : Agreement::disagree);
    }
    return Agreement::inconclusive;
}

} // namespace jacobi
