#pragma once

// Dirichlet eigenstructure of the (fractional) Laplacian on an interval, the
// phi_n-transform, the killed heat kernel and the eigenfunction series
//   u(t, x) = sum_n fbar(n) phi_n(x) h(t, lambda_n).
// Dense types are templated on the scalar; EigenBasisd etc. are the double aliases.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracdiff/errors.hpp"
#include "fracdiff/speckit.hpp"

namespace fracdiff {

template <typename Scalar = double>
struct IntervalDomain {
    Scalar a;
    Scalar b;

    IntervalDomain(Scalar lo, Scalar hi) : a(lo), b(hi) {
        if (!(lo < hi) || !std::isfinite(double(lo)) || !std::isfinite(double(hi))) {
            throw DomainError("IntervalDomain: need finite a < b");
        }
    }
    Scalar length() const { return b - a; }
    bool contains(Scalar x) const { return x > a && x < b; }
    bool closure_contains(Scalar x) const { return x >= a && x <= b; }
    static constexpr int dimension = 1;
};

/// Eigenpairs (lambda_n, phi_n), n = 1..N, sampled on the M interior points of a uniform
/// grid x_i = a + i h, h = L/(M+1). Quadrature is the trapezoid rule, which on this grid is
/// h times the sample sum since phi vanishes at both endpoints.
template <typename Scalar = double>
class EigenBasis {
public:
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    enum class Provenance { ExactLaplacian, MatrixDiscretized };

    EigenBasis(IntervalDomain<Scalar> domain, Scalar alpha, Vector eigenvalues, Matrix samples,
               Provenance provenance)
        : domain_(domain),
          alpha_(alpha),
          eigenvalues_(std::move(eigenvalues)),
          samples_(std::move(samples)),
          provenance_(provenance) {
        const Eigen::Index m = samples_.rows();
        spacing_ = domain_.length() / Scalar(m + 1);
        grid_ = Vector::LinSpaced(m, domain_.a + spacing_, domain_.b - spacing_);
        sup_norms_ = samples_.cwiseAbs().colwise().maxCoeff().transpose();
    }

    const IntervalDomain<Scalar>& domain() const { return domain_; }
    Scalar alpha() const { return alpha_; }
    Provenance provenance() const { return provenance_; }
    Eigen::Index size() const { return eigenvalues_.size(); }
    Eigen::Index grid_size() const { return samples_.rows(); }
    Scalar spacing() const { return spacing_; }
    const Vector& grid() const { return grid_; }
    const Vector& eigenvalues() const { return eigenvalues_; }
    Scalar eigenvalue(Eigen::Index n) const { return eigenvalues_(n); }
    /// Column n holds phi_{n+1} on the grid.
    const Matrix& samples() const { return samples_; }
    /// max_i |phi_n(x_i)|.
    const Vector& sup_norms() const { return sup_norms_; }

    /// phi_{n+1}(x); zero outside the open interval.
    Scalar phi(Eigen::Index n, Scalar x) const {
        if (!domain_.contains(x)) return Scalar(0);
        if (provenance_ == Provenance::ExactLaplacian) {
            const Scalar len = domain_.length();
            return std::sqrt(Scalar(2) / len) *
                   std::sin(Scalar(n + 1) * std::numbers::pi_v<Scalar> * (x - domain_.a) / len);
        }
        // Linear interpolation between samples, with phi = 0 at both endpoints.
        const Scalar pos = (x - domain_.a) / spacing_;  // grid index, endpoints at 0 and M+1
        const auto left = static_cast<Eigen::Index>(std::floor(pos));
        const Scalar frac = pos - Scalar(left);
        auto sample = [&](Eigen::Index i) -> Scalar {
            return (i <= 0 || i > samples_.rows()) ? Scalar(0) : samples_(i - 1, n);
        };
        return (Scalar(1) - frac) * sample(left) + frac * sample(left + 1);
    }

    /// All N eigenfunctions at x.
    Vector phis(Scalar x) const {
        Vector out(size());
        for (Eigen::Index n = 0; n < size(); ++n) out(n) = phi(n, x);
        return out;
    }

    /// Trapezoid inner product of two grid functions.
    Scalar inner(const Vector& f, const Vector& g) const { return spacing_ * f.dot(g); }

    /// Gram matrix of the sampled eigenfunctions.
    Matrix gram() const { return spacing_ * samples_.transpose() * samples_; }

    /// Samples a callable on the grid.
    template <typename F>
    Vector sample(F&& f) const {
        Vector out(grid_size());
        for (Eigen::Index i = 0; i < grid_size(); ++i) out(i) = f(grid_(i));
        return out;
    }

private:
    IntervalDomain<Scalar> domain_;
    Scalar alpha_;
    Vector eigenvalues_;
    Matrix samples_;
    Provenance provenance_;
    Scalar spacing_;
    Vector grid_;
    Vector sup_norms_;
};

using IntervalDomaind = IntervalDomain<double>;
using EigenBasisd = EigenBasis<double>;

/// Default grid size for the exact basis when none is given.
inline Eigen::Index default_exact_grid(Eigen::Index n_modes) { return std::max<Eigen::Index>(1024, 8 * n_modes); }

/// Classical Dirichlet pairs lambda_n = (n pi / L)^2, phi_n = sqrt(2/L) sin(n pi (x-a)/L).
template <typename Scalar = double>
EigenBasis<Scalar> eigen_exact_laplace(const IntervalDomain<Scalar>& domain, Eigen::Index n_modes,
                                       Eigen::Index grid_points = 0) {
    if (n_modes < 1) throw DomainError("eigen_exact_laplace: need at least one mode");
    const Eigen::Index m = grid_points > 0 ? grid_points : default_exact_grid(n_modes);
    if (m < n_modes) throw DomainError("eigen_exact_laplace: grid smaller than the number of modes");
    const Scalar len = domain.length();
    const Scalar pi = std::numbers::pi_v<Scalar>;
    typename EigenBasis<Scalar>::Vector lambda(n_modes);
    typename EigenBasis<Scalar>::Matrix samples(m, n_modes);
    const Scalar h = len / Scalar(m + 1);
    const Scalar norm = std::sqrt(Scalar(2) / len);
    for (Eigen::Index n = 0; n < n_modes; ++n) {
        lambda(n) = std::pow(Scalar(n + 1) * pi / len, 2);
        for (Eigen::Index i = 0; i < m; ++i) {
            samples(i, n) = norm * std::sin(Scalar(n + 1) * pi * Scalar(i + 1) * h / len);
        }
    }
    return EigenBasis<Scalar>(domain, Scalar(2), std::move(lambda), std::move(samples),
                              EigenBasis<Scalar>::Provenance::ExactLaplacian);
}

/// Normalizing constant of the 1-D fractional Laplacian,
/// C = 2^alpha Gamma((1+alpha)/2) / (sqrt(pi) |Gamma(-alpha/2)|).
template <typename Scalar = double>
Scalar fractional_laplacian_constant(Scalar alpha) {
    using std::tgamma;
    return std::pow(Scalar(2), alpha) * tgamma((Scalar(1) + alpha) / Scalar(2)) /
           (std::sqrt(std::numbers::pi_v<Scalar>) * std::abs(tgamma(-alpha / Scalar(2))));
}

/// Matrix of the restricted fractional Laplacian (-Delta)^{alpha/2} on the M interior grid
/// points with zero exterior values.
///
/// (-Delta)^{alpha/2} u(x_i) = C int_0^inf (2u_i - u(x_i+z) - u(x_i-z)) z^{-1-alpha} dz with u
/// piecewise linear between nodes (and zero outside). On [0, h] the second difference is
/// taken quadratic in z; on [h, inf) it is the hat-function interpolant, so the weights are
/// exact moments of z^{-1-alpha}. Past the domain the integrand is 2u_i z^{-1-alpha},
/// whose tail is summed exactly.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fractional_laplacian_matrix(
    const IntervalDomain<Scalar>& domain, Scalar alpha, Eigen::Index grid_points) {
    if (!(alpha > 0 && alpha < 2)) throw DomainError("fractional_laplacian_matrix: alpha must lie in (0, 2)");
    const Eigen::Index m = grid_points;
    const Scalar h = domain.length() / Scalar(m + 1);
    const Scalar one = 1;
    // Moments over [lo, hi] in units of h: int z^{-1-alpha} dz and int z^{-alpha} dz.
    auto moment0 = [&](Scalar lo, Scalar hi) { return (std::pow(lo, -alpha) - std::pow(hi, -alpha)) / alpha; };
    auto moment1 = [&](Scalar lo, Scalar hi) {
        if (std::abs(alpha - one) < Scalar(1e-12)) return std::log(hi / lo);
        return (std::pow(hi, one - alpha) - std::pow(lo, one - alpha)) / (one - alpha);
    };
    // weight[k]: coefficient of g_k = 2u_i - u_{i+k} - u_{i-k}.
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weight(m + 1);
    weight(0) = 0;
    for (Eigen::Index k = 1; k <= m; ++k) {
        const Scalar kk = Scalar(k);
        Scalar w = 0;
        if (k == 1) {
            w += one / (Scalar(2) - alpha);  // quadratic model on [0, h]
        } else {
            w += moment1(kk - one, kk) - (kk - one) * moment0(kk - one, kk);  // rising hat
        }
        w += (kk + one) * moment0(kk, kk + one) - moment1(kk, kk + one);  // falling hat
        weight(k) = w;
    }
    // sum_{k>=1} weight_k = 1/(2-alpha) + 1/alpha exactly (hats sum to one on [h, inf)).
    const Scalar diagonal = Scalar(2) * (one / (Scalar(2) - alpha) + one / alpha);
    const Scalar scale = fractional_laplacian_constant(alpha) * std::pow(h, -alpha);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> a(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            a(i, j) = i == j ? scale * diagonal : -scale * weight(std::abs(i - j));
        }
    }
    // Toeplitz construction is symmetric; remove any roundoff asymmetry regardless.
    return (a + a.transpose()) / Scalar(2);
}

/// Eigenpairs of the discretized restricted fractional Laplacian, lowest N of M.
template <typename Scalar = double>
EigenBasis<Scalar> eigen_fractional(const IntervalDomain<Scalar>& domain, Scalar alpha,
                                    Eigen::Index grid_points, Eigen::Index n_modes) {
    if (grid_points < 64) throw DomainError("eigen_fractional: need at least 64 grid points");
    if (n_modes < 1 || n_modes > grid_points) throw DomainError("eigen_fractional: need 1 <= N <= M");
    const auto a = fractional_laplacian_matrix(domain, alpha, grid_points);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver(a);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigen_fractional: symmetric eigensolver did not converge (M=" +
                             std::to_string(grid_points) + ", alpha=" + std::to_string(double(alpha)) + ")");
    }
    const Scalar h = domain.length() / Scalar(grid_points + 1);
    typename EigenBasis<Scalar>::Vector lambda = solver.eigenvalues().head(n_modes);
    typename EigenBasis<Scalar>::Matrix samples = solver.eigenvectors().leftCols(n_modes) / std::sqrt(h);
    for (Eigen::Index n = 0; n < n_modes; ++n) {
        // Match the sign convention of sin(n pi (x - a)/L): positive next to the left end.
        const Scalar tol = Scalar(1e-8) * samples.col(n).cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < grid_points; ++i) {
            if (std::abs(samples(i, n)) > tol) {
                if (samples(i, n) < 0) samples.col(n) *= Scalar(-1);
                break;
            }
        }
    }
    return EigenBasis<Scalar>(domain, alpha, std::move(lambda), std::move(samples),
                              EigenBasis<Scalar>::Provenance::MatrixDiscretized);
}

/// fbar(n) = int_D phi_n f dx for f sampled on the basis grid.
template <typename Scalar, typename Derived>
typename EigenBasis<Scalar>::Vector phi_transform(const Eigen::MatrixBase<Derived>& f,
                                                  const EigenBasis<Scalar>& basis) {
    if (f.size() != basis.grid_size()) {
        throw ShapeError("phi_transform: " + std::to_string(f.size()) + " samples for a grid of " +
                         std::to_string(basis.grid_size()));
    }
    return basis.spacing() * (basis.samples().transpose() * f);
}

/// Value of a truncated eigenfunction series with the bound on what was left out.
struct SeriesValue {
    double value = 0;
    double tail_bound = 0;  // bound on the omitted in-basis terms
    Eigen::Index terms = 0;
};

/// Largest omitted contribution the series evaluator accepts.
inline constexpr double kSeriesTailTolerance = 1e-8;

/// u(t, x) = sum fbar(n) phi_n(x) h(t, lambda_n), summed until
/// h(t, lambda_{n+1}) * sum_{m>n} |fbar(m)| sup|phi_m| < 1e-8 (h is nonincreasing in lambda).
/// Zero outside the open interval.
template <typename Scalar>
SeriesValue solve_series(const typename EigenBasis<Scalar>::Vector& coefficients, const EigenBasis<Scalar>& basis,
                         const HEvaluator& h, double t, Scalar x) {
    if (coefficients.size() != basis.size()) throw ShapeError("solve_series: coefficient count differs from basis");
    if (!(t >= 0)) throw DomainError("solve_series: t must be nonnegative");
    SeriesValue out;
    if (!basis.domain().contains(x)) return out;
    const Eigen::Index n_modes = basis.size();
    // suffix[n] = sum_{m >= n} |fbar(m)| sup|phi_m|
    std::vector<double> suffix(n_modes + 1, 0.0);
    for (Eigen::Index n = n_modes - 1; n >= 0; --n) {
        suffix[n] = suffix[n + 1] + std::abs(double(coefficients(n))) * double(basis.sup_norms()(n));
    }
    for (Eigen::Index n = 0; n < n_modes; ++n) {
        if (suffix[n] == 0) break;
        if (coefficients(n) == Scalar(0)) continue;
        const double decay = t == 0 ? 1.0 : h(t, double(basis.eigenvalue(n)));
        out.value += double(coefficients(n)) * double(basis.phi(n, x)) * decay;
        out.terms = n + 1;
        // Every later term carries h(t, lambda_m) <= decay.
        out.tail_bound = decay * suffix[n + 1];
        if (out.tail_bound < kSeriesTailTolerance) break;
    }
    return out;
}

/// Eigenfunction series with a fixed coefficient vector and temporal model.
template <typename Scalar = double>
class SpectralSolution {
public:
    using Vector = typename EigenBasis<Scalar>::Vector;

    SpectralSolution(std::shared_ptr<const EigenBasis<Scalar>> basis, Vector coefficients, HEvaluator h)
        : basis_(std::move(basis)), coefficients_(std::move(coefficients)), h_(std::move(h)) {
        if (coefficients_.size() != basis_->size()) {
            throw ShapeError("SpectralSolution: coefficient count differs from basis");
        }
        if (!coefficients_.allFinite()) throw DomainError("SpectralSolution: non-finite coefficients");
    }

    const EigenBasis<Scalar>& basis() const { return *basis_; }
    std::shared_ptr<const EigenBasis<Scalar>> basis_ptr() const { return basis_; }
    const Vector& coefficients() const { return coefficients_; }
    const HEvaluator& h() const { return h_; }

    SeriesValue evaluate(double t, Scalar x) const { return solve_series(coefficients_, *basis_, h_, t, x); }
    double operator()(double t, Scalar x) const { return evaluate(t, x).value; }

    /// fbar(n) h(t, lambda_n) for every mode (the phi_n-transform of u(t, .)).
    Vector modal(double t) const {
        Vector out(coefficients_.size());
        for (Eigen::Index n = 0; n < out.size(); ++n) {
            out(n) = coefficients_(n) == Scalar(0) || t == 0
                         ? coefficients_(n)
                         : coefficients_(n) * Scalar(h_(t, double(basis_->eigenvalue(n))));
        }
        return out;
    }

    /// u(t, .) on the basis grid, all N modes.
    Vector profile(double t) const { return basis_->samples() * modal(t); }

    /// ||u(t, .)||_2 from Parseval over the N modes.
    double l2_norm(double t) const { return double(modal(t).norm()); }

    /// -(-Delta)^{alpha/2} u(t, x) applied term by term: sum -lambda_n fbar(n) h(t, lambda_n) phi_n(x).
    double generator_applied(double t, Scalar x) const {
        const Vector m = modal(t);
        double sum = 0;
        for (Eigen::Index n = 0; n < m.size(); ++n) {
            sum -= double(basis_->eigenvalue(n)) * double(m(n)) * double(basis_->phi(n, x));
        }
        return sum;
    }

private:
    std::shared_ptr<const EigenBasis<Scalar>> basis_;
    Vector coefficients_;
    HEvaluator h_;
};

using SpectralSolutiond = SpectralSolution<double>;

struct HeatKernelValue {
    double value = 0;
    double tail_estimate = 0;  // e^{-lambda_N t} (max sup|phi|)^2 geometric continuation past N
};

/// p_D(t, x, y) = sum e^{-lambda_n t} phi_n(x) phi_n(y), t > 0.
template <typename Scalar>
HeatKernelValue heat_kernel(const EigenBasis<Scalar>& basis, double t, Scalar x, Scalar y) {
    if (!(t > 0)) throw DomainError("heat_kernel: t must be positive");
    HeatKernelValue out;
    const Eigen::Index n_modes = basis.size();
    for (Eigen::Index n = 0; n < n_modes; ++n) {
        out.value += std::exp(-double(basis.eigenvalue(n)) * t) * double(basis.phi(n, x)) * double(basis.phi(n, y));
    }
    const double sup = double(basis.sup_norms().maxCoeff());
    const double last = std::exp(-double(basis.eigenvalue(n_modes - 1)) * t);
    const double gap = n_modes > 1 ? double(basis.eigenvalue(n_modes - 1) - basis.eigenvalue(n_modes - 2)) : 0.0;
    const double ratio = std::exp(-gap * t);
    out.tail_estimate = ratio < 1 ? last * sup * sup * ratio / (1 - ratio) : std::numeric_limits<double>::infinity();
    return out;
}

/// Fitted power laws behind the smoothness bound on coefficients: |fbar(n)| ~ lambda_n^{slope} and
/// max|phi_n| ~ lambda_n^{phi_slope}, with phi_reference = d/(2 alpha).
///
/// The decay bound is asymptotic and constrains the envelope sup_{m>=n}|fbar(m)|, so the
/// headline exponent is fitted to that envelope over the upper half of the modes. The plain
/// fit of every coefficient over all modes is reported alongside.
struct DecayReport {
    bool degenerate = false;
    double fitted_exponent = 0;     // envelope, modes n > N/2
    double full_range_exponent = 0; // raw |fbar(n)|, all modes
    int k = 0;
    bool meets_order = false;  // fitted_exponent <= -k
    int points_used = 0;
    Eigen::Index window_start = 0;  // first mode (zero-based) of the fitted window
    double phi_exponent = 0;
    double phi_reference = 0;
    std::string note;
};

/// Coefficients below this fraction of the largest are treated as roundoff in the fit.
inline constexpr double kDecayFloor = 1e-13;

namespace detail {
inline double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = double(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace detail

template <typename Scalar>
DecayReport coefficient_decay_check(const typename EigenBasis<Scalar>::Vector& coefficients,
                                    const EigenBasis<Scalar>& basis, int k) {
    if (coefficients.size() != basis.size()) throw ShapeError("coefficient_decay_check: size mismatch");
    const double largest = double(coefficients.cwiseAbs().maxCoeff());
    if (!(largest > 0)) throw NumericalError("coefficient_decay_check: all coefficients vanish; no fit possible");
    const Eigen::Index n_modes = coefficients.size();
    DecayReport report;
    report.k = k;
    report.phi_reference = 1.0 / (2.0 * double(basis.alpha()));
    report.window_start = n_modes / 2;

    std::vector<double> envelope(n_modes);
    double running = 0;
    for (Eigen::Index n = n_modes - 1; n >= 0; --n) {
        running = std::max(running, std::abs(double(coefficients(n))));
        envelope[n] = running;
    }
    const double floor = kDecayFloor * largest;
    std::vector<double> xs, ys, rxs, rys, pxs, pys;
    for (Eigen::Index n = 0; n < n_modes; ++n) {
        const double lx = std::log(double(basis.eigenvalue(n)));
        pxs.push_back(lx);
        pys.push_back(std::log(double(basis.sup_norms()(n))));
        const double c = std::abs(double(coefficients(n)));
        if (c > floor) {
            rxs.push_back(lx);
            rys.push_back(std::log(c));
        }
        if (n >= report.window_start && envelope[n] > floor) {
            xs.push_back(lx);
            ys.push_back(std::log(envelope[n]));
        }
    }
    if (pxs.size() >= 2) report.phi_exponent = detail::least_squares_slope(pxs, pys);
    report.points_used = int(xs.size());
    if (rxs.size() < 3 || xs.size() < 3) {
        report.degenerate = true;
        report.fitted_exponent = -std::numeric_limits<double>::infinity();
        report.full_range_exponent = report.fitted_exponent;
        report.meets_order = true;
        report.note = "degenerate: fewer than three coefficients above the roundoff floor";
        return report;
    }
    report.fitted_exponent = detail::least_squares_slope(xs, ys);
    report.full_range_exponent = detail::least_squares_slope(rxs, rys);
    report.meets_order = report.fitted_exponent <= -double(k);
    return report;
}

/// Named initial data.
namespace datum {

/// exp(-1 / (1 - ((x - center)/radius)^2)) inside the support, 0 outside.
inline std::function<double(double)> bump(double center, double radius) {
    if (!(radius > 0)) throw DomainError("bump: radius must be positive");
    return [center, radius](double x) {
        const double r = (x - center) / radius;
        return std::abs(r) < 1 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0;
    };
}

/// (x - a)(b - x) on the interval, 0 outside; x(pi - x) on (0, pi).
inline std::function<double(double)> poly(const IntervalDomaind& domain) {
    return [domain](double x) { return domain.contains(x) ? (x - domain.a) * (domain.b - x) : 0.0; };
}

/// phi_k of the basis (k one-based).
inline std::function<double(double)> eigenmode(std::shared_ptr<const EigenBasisd> basis, Eigen::Index k) {
    if (k < 1 || k > basis->size()) throw IndexError("eigenmode: mode index out of range");
    return [basis, k](double x) { return basis->phi(k - 1, x); };
}

}  // namespace datum

}  // namespace fracdiff
