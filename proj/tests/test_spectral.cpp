#include <cmath>
#include <memory>
#include <numbers>

#include "doctest.h"
#include "fracdiff/spectral.hpp"

using namespace fracdiff;

namespace {
const double kPi = std::numbers::pi;
}

TEST_CASE("interval domain") {
    IntervalDomaind d(0.0, kPi);
    CHECK(d.length() == kPi);
    CHECK(d.contains(1.0));
    CHECK_FALSE(d.contains(0.0));
    CHECK(d.closure_contains(0.0));
    CHECK_THROWS_AS(IntervalDomaind(1.0, 1.0), DomainError);
}

TEST_CASE("exact Dirichlet basis") {
    IntervalDomaind d(0.0, kPi);
    const auto basis = eigen_exact_laplace(d, 16);
    for (Eigen::Index n = 0; n < 16; ++n) CHECK(basis.eigenvalue(n) == doctest::Approx(double((n + 1) * (n + 1))));
    CHECK((basis.gram() - Eigen::MatrixXd::Identity(16, 16)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(basis.phi(0, kPi / 2) == doctest::Approx(std::sqrt(2 / kPi)).epsilon(1e-15));
    CHECK(basis.phi(3, -0.1) == 0.0);
    CHECK(basis.phi(3, kPi) == 0.0);

    // Shifted interval: lambda_1 = (pi / 2)^2 on (-1, 1).
    const auto shifted = eigen_exact_laplace(IntervalDomaind(-1.0, 1.0), 3);
    CHECK(shifted.eigenvalue(0) == doctest::Approx(kPi * kPi / 4));
    CHECK(shifted.phi(0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("phi transform of x(pi - x)") {
    IntervalDomaind d(0.0, kPi);
    const auto basis = eigen_exact_laplace(d, 12, 4096);
    const Eigen::VectorXd f = basis.sample(datum::poly(d));
    const Eigen::VectorXd fbar = phi_transform(f, basis);
    for (Eigen::Index n = 0; n < 12; ++n) {
        const int k = int(n) + 1;
        const double exact = k % 2 == 1 ? std::sqrt(2 / kPi) * 4.0 / (k * k * k) : 0.0;
        CHECK(std::abs(fbar(n) - exact) < 1e-6);
    }
    CHECK_THROWS_AS(phi_transform(Eigen::VectorXd::Zero(10), basis), ShapeError);
}

TEST_CASE("fractional Laplacian matrix") {
    IntervalDomaind d(-1.0, 1.0);
    const auto a = fractional_laplacian_matrix(d, 1.0, 128);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // Positive definite and row sums positive (exterior is killing).
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    CHECK(llt.info() == Eigen::Success);
    CHECK(a.rowwise().sum().minCoeff() > 0);
    CHECK(fractional_laplacian_constant(1.0) == doctest::Approx(1.0 / kPi).epsilon(1e-14));
    CHECK_THROWS_AS(fractional_laplacian_matrix(d, 2.0, 128), DomainError);
}

TEST_CASE("fractional basis: first eigenvalue for alpha = 1 on (-1, 1)") {
    // Reference lambda_1 = 1.1577738836977 (known to 13 digits).
    IntervalDomaind d(-1.0, 1.0);
    double prev = std::numeric_limits<double>::infinity();
    for (Eigen::Index m : {128, 256, 512}) {
        const auto basis = eigen_fractional(d, 1.0, m, 4);
        const double err = std::abs(basis.eigenvalue(0) - 1.1577738836977);
        CHECK(err < prev);
        prev = err;
        // Orthonormal under the grid inner product.
        CHECK((basis.gram() - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-12);
        // Sign convention: positive next to the left end.
        CHECK(basis.samples()(0, 0) > 0);
        CHECK(basis.phi(1, -0.5) > 0);
    }
    CHECK(prev < 5e-3);
    CHECK_THROWS_AS(eigen_fractional(d, 1.0, 32, 4), DomainError);
    CHECK_THROWS_AS(eigen_fractional(d, 1.0, 64, 65), DomainError);
}

TEST_CASE("fractional basis tends to the classical one as alpha -> 2") {
    IntervalDomaind d(0.0, kPi);
    const auto basis = eigen_fractional(d, 1.98, 512, 3);
    for (Eigen::Index n = 0; n < 3; ++n) {
        const double classical = double((n + 1) * (n + 1));
        CHECK(std::abs(basis.eigenvalue(n) / classical - 1) < 0.05);
    }
}

TEST_CASE("eigenvalue growth exponent is close to alpha") {
    IntervalDomaind d(0.0, kPi);
    for (double alpha : {0.8, 1.5}) {
        const auto basis = eigen_fractional(d, alpha, 512, 32);
        std::vector<double> xs, ys;
        for (Eigen::Index n = 0; n < 32; ++n) {
            xs.push_back(std::log(double(n + 1)));
            ys.push_back(std::log(basis.eigenvalue(n)));
        }
        const double slope = detail::least_squares_slope(xs, ys);
        CHECK(slope >= 0.9 * alpha);
        CHECK(slope <= 1.1 * alpha);
    }
}

TEST_CASE("series solution for the classical heat equation") {
    IntervalDomaind d(0.0, kPi);
    auto basis = std::make_shared<const EigenBasisd>(eigen_exact_laplace(d, 64));
    SUBCASE("eigenmode datum evolves by h(t, lambda_1)") {
        const Eigen::VectorXd f = basis->sample(datum::eigenmode(basis, 1));
        SpectralSolutiond u(basis, phi_transform(f, *basis), HEvaluator::single(0.5));
        for (double t : {0.1, 1.0}) {
            const double expected = std::sqrt(2 / kPi) * h_single(0.5, 1.0, t);
            CHECK(u(t, kPi / 2) == doctest::Approx(expected).epsilon(1e-9));
        }
        CHECK(u(0.5, -1.0) == 0.0);
    }
    SUBCASE("tail bound and truncation") {
        const Eigen::VectorXd f = basis->sample(datum::poly(d));
        SpectralSolutiond u(basis, phi_transform(f, *basis), HEvaluator::multi(FiniteAtoms({{0.3, 1.0}, {0.7, 1.0}})));
        const auto v = u.evaluate(1.0, 1.0);
        CHECK(v.tail_bound < kSeriesTailTolerance);
        CHECK(v.terms <= 64);
        // At t = 0 the series reproduces the datum.
        CHECK(u(0.0, 1.0) == doctest::Approx(1.0 * (kPi - 1.0)).epsilon(1e-4));
    }
    SUBCASE("decay estimate via Parseval") {
        const Eigen::VectorXd f = basis->sample(datum::bump(kPi / 2, 1.0));
        SpectralSolutiond u(basis, phi_transform(f, *basis), HEvaluator::single(0.5));
        const double f_norm = u.l2_norm(0.0);
        for (double t : {0.1, 0.5, 1.0, 2.0}) {
            CHECK(u.l2_norm(t) <= h_single(0.5, 1.0, t) * f_norm + 1e-12);
        }
    }
    SUBCASE("shape errors") {
        CHECK_THROWS_AS(SpectralSolutiond(basis, Eigen::VectorXd::Zero(3), HEvaluator::single(0.5)), ShapeError);
    }
}

TEST_CASE("heat kernel") {
    IntervalDomaind d(0.0, kPi);
    const auto basis = eigen_exact_laplace(d, 64);
    const auto p = heat_kernel(basis, 0.1, 1.0, 1.3);
    CHECK(p.value > 0);
    CHECK(p.tail_estimate < 1e-100);
    // Symmetric and integrates to the survival probability.
    CHECK(heat_kernel(basis, 0.1, 1.3, 1.0).value == doctest::Approx(p.value).epsilon(1e-14));
    double mass = 0;
    for (Eigen::Index i = 0; i < basis.grid_size(); ++i) mass += heat_kernel(basis, 0.5, 1.0, basis.grid()(i)).value;
    mass *= basis.spacing();
    double survival = 0;  // sum e^{-n^2 t} phi_n(1) int phi_n
    for (int n = 1; n < 200; n += 2) survival += std::exp(-n * n * 0.5) * std::sqrt(2 / kPi) * std::sin(n * 1.0) * std::sqrt(2 / kPi) * 2.0 / n;
    CHECK(mass == doctest::Approx(survival).epsilon(1e-5));
    CHECK_THROWS_AS(heat_kernel(basis, 0.0, 1.0, 1.0), DomainError);
}

TEST_CASE("coefficient decay") {
    IntervalDomaind d(0.0, kPi);
    SUBCASE("x(pi - x) decays as lambda^{-3/2}") {
        const auto basis = eigen_exact_laplace(d, 40, 8192);
        const Eigen::VectorXd fbar = phi_transform(basis.sample(datum::poly(d)), basis);
        const auto r = coefficient_decay_check(fbar, basis, 1);
        CHECK_FALSE(r.degenerate);
        CHECK(r.fitted_exponent == doctest::Approx(-1.5).epsilon(0.02));
        CHECK(r.full_range_exponent == doctest::Approx(-1.5).epsilon(0.02));
        CHECK(r.meets_order);
        CHECK(std::abs(r.phi_exponent) < 1e-3);
    }
    SUBCASE("smooth bump decays faster than any fixed power") {
        double prev = 0;
        for (Eigen::Index n_modes : {64, 128, 256}) {
            const auto basis = eigen_exact_laplace(d, n_modes, 8192);
            const Eigen::VectorXd fbar = phi_transform(basis.sample(datum::bump(kPi / 2, 1.0)), basis);
            const auto r = coefficient_decay_check(fbar, basis, 3);
            CHECK(r.fitted_exponent < prev);  // steepens as the window moves out
            CHECK(r.window_start == n_modes / 2);
            prev = r.fitted_exponent;
            if (n_modes >= 128) CHECK(r.meets_order);
        }
    }
    SUBCASE("sup-norm growth on the fractional basis is reported") {
        const auto basis = eigen_fractional(d, 1.5, 512, 32);
        const Eigen::VectorXd fbar = phi_transform(basis.sample(datum::bump(kPi / 2, 1.0)), basis);
        const auto r = coefficient_decay_check(fbar, basis, 3);
        CHECK(r.phi_reference == doctest::Approx(1.0 / 3.0));
        CHECK(r.phi_exponent < r.phi_reference);
    }
    SUBCASE("single mode is degenerate") {
        const auto basis = eigen_exact_laplace(d, 8);
        Eigen::VectorXd fbar = Eigen::VectorXd::Zero(8);
        fbar(0) = 1;
        CHECK(coefficient_decay_check(fbar, basis, 3).degenerate);
        CHECK_THROWS_AS(coefficient_decay_check(Eigen::VectorXd::Zero(8).eval(), basis, 3), NumericalError);
    }
}
