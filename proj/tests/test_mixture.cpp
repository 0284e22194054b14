#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fracdiff/errors.hpp"
#include "fracdiff/mixture.hpp"
#include "fracdiff/special_functions.hpp"

using namespace fracdiff;

namespace {

// Composite trapezoid with n panels; independent of the adaptive Gauss-Legendre path.
template <typename F>
double trapezoid(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = 0.5 * (f(a) + f(b));
    for (int i = 1; i < n; ++i) s += f(a + i * h);
    return s * h;
}

const double kSqrtPi = std::sqrt(std::numbers::pi);

}  // namespace

TEST_CASE("atoms validate their orders and scales") {
    CHECK_THROWS_AS(FiniteAtoms({}), DomainError);
    CHECK_THROWS_AS(FiniteAtoms({{0.0, 1.0}}), DomainError);
    CHECK_THROWS_AS(FiniteAtoms({{1.0, 1.0}}), DomainError);
    CHECK_THROWS_AS(FiniteAtoms({{0.5, 0.0}}), DomainError);
    CHECK_THROWS_AS(FiniteAtoms({{0.7, 1.0}, {0.3, 1.0}}), DomainError);
    CHECK_THROWS_AS(FiniteAtoms({{0.5, 1.0}, {0.5, 2.0}}), DomainError);
    FiniteAtoms a({{0.25, 2.0}});
    CHECK(a.mu_weight(0) == doctest::Approx(std::pow(2.0, 0.25) / std::tgamma(0.75)).epsilon(1e-15));
    CHECK_THROWS_AS(a.psi_coefficient(1), IndexError);
}

TEST_CASE("density support is validated") {
    CHECK_THROWS_AS(ContinuousDensity::uniform(0.0, 0.5), DomainError);
    CHECK_THROWS_AS(ContinuousDensity::uniform(0.6, 0.5), DomainError);
    CHECK_THROWS_AS(ContinuousDensity::uniform(0.2, 1.1), DomainError);
    CHECK_THROWS_AS(ContinuousDensity(0.2, 0.8, [](double) { return 0.0; }), DomainError);
    MixingMeasure m = ContinuousDensity::uniform(0.2, 0.8);
    CHECK(m.total_mass() == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("levy_exponent") {
    SUBCASE("single atom is the square root") {
        MixingMeasure m = FiniteAtoms({{0.5, 1.0}});
        CHECK(levy_exponent(m, 4.0) == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("two unit atoms at s = 1") {
        MixingMeasure m = FiniteAtoms({{0.25, 1.0}, {0.5, 1.0}});
        CHECK(levy_exponent(m, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("uniform density against a 10^6-panel trapezoid oracle") {
        MixingMeasure m = ContinuousDensity::uniform(0.2, 0.8);
        const double oracle =
            trapezoid([](double b) { return std::pow(2.0, b) * std::tgamma(1.0 - b); }, 0.2, 0.8, 1000000);
        CHECK(levy_exponent(m, 2.0) == doctest::Approx(oracle).epsilon(1e-10));
    }
    SUBCASE("atomic closed form holds to machine precision") {
        FiniteAtoms a({{0.3, 1.7}, {0.55, 0.4}, {0.9, 2.5}});
        MixingMeasure m = a;
        for (double s : {1e-3, 0.5, 1.0, 7.0, 1e4}) {
            double closed = 0;
            for (const auto& atom : a.atoms()) closed += std::pow(atom.c * s, atom.beta);
            CHECK(levy_exponent(m, s) == doctest::Approx(closed).epsilon(4e-16));
        }
    }
    SUBCASE("complex evaluation agrees with the real one on the positive axis") {
        MixingMeasure m = ContinuousDensity::uniform(0.2, 0.8);
        const auto z = levy_exponent(m, std::complex<double>(3.0, 0.0));
        CHECK(z.real() == doctest::Approx(levy_exponent(m, 3.0)).epsilon(1e-10));
        CHECK(std::abs(z.imag()) < 1e-12);
        CHECK_THROWS_AS(levy_exponent(m, std::complex<double>(-1.0, 0.0)), NumericalError);
    }
    SUBCASE("domain errors") {
        MixingMeasure m = FiniteAtoms({{0.5, 1.0}});
        CHECK_THROWS_AS(levy_exponent(m, 0.0), DomainError);
        CHECK_THROWS_AS(levy_exponent(m, -1.0), DomainError);
    }
}

TEST_CASE("levy_exponent is increasing, concave and vanishes at zero") {
    for (const MixingMeasure& m : {MixingMeasure(FiniteAtoms({{0.3, 1.0}, {0.7, 1.0}})),
                                   MixingMeasure(ContinuousDensity::uniform(0.2, 0.8))}) {
        double prev = 0;
        double prev_slope = std::numeric_limits<double>::infinity();
        double prev_s = 0;
        for (int i = 1; i <= 40; ++i) {
            const double s = 0.05 * i;
            const double v = levy_exponent(m, s);
            CHECK(v > prev);
            const double slope = (v - prev) / (s - prev_s);
            CHECK(slope < prev_slope);
            prev = v;
            prev_slope = slope;
            prev_s = s;
        }
        CHECK(levy_exponent(m, 1e-12) < 1e-2);
    }
}

TEST_CASE("narrow density bump converges to the atomic exponent") {
    // Density of mass c^beta / Gamma(1 - beta) spread uniformly over (0.5 - w, 0.5 + w).
    const double mass = 1.0 / std::tgamma(0.5);
    MixingMeasure atom = FiniteAtoms({{0.5, 1.0}});
    const double target = levy_exponent(atom, 3.0);
    double prev_err = std::numeric_limits<double>::infinity();
    for (double w : {0.1, 0.05, 0.025, 0.0125}) {
        MixingMeasure bump = ContinuousDensity::uniform(0.5 - w, 0.5 + w, mass / (2 * w));
        const double err = std::abs(levy_exponent(bump, 3.0) - target);
        CHECK(err < prev_err);
        CHECK(err < 2.0 * w);
        prev_err = err;
    }
}

TEST_CASE("levy_tail") {
    MixingMeasure m = FiniteAtoms({{0.5, 1.0}});
    CHECK(levy_tail(m, 1.0) == doctest::Approx(1.0 / kSqrtPi).epsilon(1e-15));
    CHECK(levy_tail(m, 4.0) == doctest::Approx(1.0 / (2.0 * kSqrtPi)).epsilon(1e-15));
    MixingMeasure d = ContinuousDensity::uniform(0.2, 0.8);
    const double oracle = (std::pow(2.0, -0.2) - std::pow(2.0, -0.8)) / std::log(2.0);
    CHECK(levy_tail(d, 2.0) == doctest::Approx(oracle).epsilon(1e-10));
    CHECK_THROWS_AS(levy_tail(d, 0.0), DomainError);

    SUBCASE("strictly decreasing and unbounded at 0") {
        for (const MixingMeasure& mm : {m, d}) {
            double prev = std::numeric_limits<double>::infinity();
            for (double t : {1e-8, 1e-4, 0.01, 0.5, 1.0, 3.0, 100.0}) {
                const double v = levy_tail(mm, t);
                CHECK(v < prev);
                prev = v;
            }
            CHECK(levy_tail(mm, 1e-12) > 100.0);
        }
    }
}

TEST_CASE("moment condition") {
    SUBCASE("single atom") {
        const auto r = check_moment_condition(FiniteAtoms({{0.5, 1.0}}));
        CHECK(r.finite);
        CHECK(r.value == doctest::Approx(2.0 / kSqrtPi).epsilon(1e-14));
    }
    SUBCASE("uniform density away from 1") {
        const auto r = check_moment_condition(ContinuousDensity::uniform(0.2, 0.8));
        CHECK(r.finite);
        CHECK(r.value == doctest::Approx(std::log(4.0)).epsilon(1e-10));
    }
    SUBCASE("p = 1/(1 - beta) on (0.5, 1) diverges") {
        const auto r = check_moment_condition(ContinuousDensity::power(0.5, 1.0, 1.0, -1.0));
        CHECK_FALSE(r.finite);
        CHECK(std::isinf(r.value));
    }
    SUBCASE("uniform density reaching 1 diverges logarithmically") {
        const auto r = check_moment_condition(ContinuousDensity::uniform(0.5, 1.0));
        CHECK_FALSE(r.finite);
    }
    SUBCASE("p = (1 - beta) on (0.5, 1) converges to 1/2") {
        // int_{0.5}^1 (1 - beta)/(1 - beta) d beta = 0.5
        const auto r = check_moment_condition(ContinuousDensity::power(0.5, 1.0, 1.0, 1.0));
        CHECK(r.finite);
        CHECK(r.value == doctest::Approx(0.5).epsilon(1e-8));
    }
}

TEST_CASE("densities reaching beta = 1 integrate through the substitution") {
    // p = (1 - beta)^2: mu(0.5, 1) = 1/24; psi(1) = int Gamma(1-beta)(1-beta)^2 = int Gamma(2-b)(1-b) db
    MixingMeasure m = ContinuousDensity::power(0.5, 1.0, 1.0, 2.0);
    CHECK(m.total_mass() == doctest::Approx(1.0 / 24.0).epsilon(1e-10));
    const double oracle = trapezoid(
        [](double b) { return b < 1 ? std::tgamma(2.0 - b) * (1.0 - b) : 0.0; }, 0.5, 1.0, 1000000);
    CHECK(levy_exponent(m, 1.0) == doctest::Approx(oracle).epsilon(1e-9));
    // Gamma(1 - beta) p(beta) with p = 1 is not integrable at 1.
    MixingMeasure bad = ContinuousDensity::uniform(0.5, 1.0);
    CHECK_THROWS_AS(levy_exponent(bad, 1.0), NumericalError);
}

TEST_CASE("kernel_bound_k") {
    const auto p = ContinuousDensity::uniform(0.25, 0.75);
    const double c_oracle = trapezoid(
        [](double b) { return std::sin(b * std::numbers::pi) * std::tgamma(1.0 - b); }, 0.25, 0.75, 1000000);
    CHECK(sine_gamma_constant(p) == doctest::Approx(c_oracle).epsilon(1e-10));

    SUBCASE("value at t = 1") {
        const double expected = (std::tgamma(0.25) + std::tgamma(0.75)) / (c_oracle * std::numbers::pi);
        CHECK(kernel_bound_k(p, 1.0) == doctest::Approx(expected).epsilon(1e-10));
    }
    SUBCASE("large t is carried by the beta1 term, small t by the beta0 term") {
        const double norm = c_oracle * std::numbers::pi;
        auto term = [&](double beta, double t) { return std::tgamma(1.0 - beta) * std::pow(t, beta - 1.0) / norm; };
        CHECK(kernel_bound_k(p, 1e6) == doctest::Approx(term(0.25, 1e6) + term(0.75, 1e6)).epsilon(1e-10));
        CHECK(term(0.75, 1e6) / kernel_bound_k(p, 1e6) > 0.99);
        CHECK(term(0.25, 1e-6) / kernel_bound_k(p, 1e-6) > 0.99);
    }
    SUBCASE("power-law scaling window") {
        for (double t : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
            const double ratio = kernel_bound_k(p, 4 * t) / kernel_bound_k(p, t);
            CHECK(ratio >= std::pow(4.0, 0.25 - 1.0));
            CHECK(ratio <= std::pow(4.0, 0.75 - 1.0));
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(kernel_bound_k(p, 0.0), DomainError);
        CHECK_THROWS_AS(kernel_bound_k(ContinuousDensity::power(0.5, 1.0, 1.0, 2.0), 1.0), PreconditionError);
    }
}

TEST_CASE("kernel_bound_ke") {
    FiniteAtoms half({{0.5, 1.0}});
    CHECK(kernel_bound_ke(half, 0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kernel_bound_ke(half, 0, 4.0) == doctest::Approx(0.5).epsilon(1e-15));
    FiniteAtoms quarter({{0.25, 2.0}});
    CHECK(kernel_bound_ke(quarter, 0, 1.0) ==
          doctest::Approx(1.0 / (std::pow(2.0, 0.25) * std::sin(std::numbers::pi / 4))).epsilon(1e-15));
    CHECK_THROWS_AS(kernel_bound_ke(half, 1, 1.0), IndexError);
    CHECK_THROWS_AS(kernel_bound_ke(half, 0, 0.0), DomainError);
    // Proof-chain variant carries Gamma(1/2)^2/pi = 1 for beta = 1/2.
    CHECK(kernel_bound_ke_proof_chain(half, 0, 2.0) == doctest::Approx(kernel_bound_ke(half, 0, 2.0)).epsilon(1e-14));
}

TEST_CASE("gamma") {
    CHECK(fracdiff::gamma(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-15));
    CHECK(fracdiff::gamma(5.0) == doctest::Approx(24.0).epsilon(1e-15));
    CHECK(fracdiff::gamma(1.0) == 1.0);
    CHECK(fracdiff::gamma(-0.5) == doctest::Approx(-2.0 * std::sqrt(std::numbers::pi)).epsilon(1e-14));
    CHECK_THROWS_AS(fracdiff::gamma(0.0), DomainError);
    CHECK_THROWS_AS(fracdiff::gamma(-3.0), DomainError);
    // Recurrence Gamma(x+1) = x Gamma(x) across (0, 50].
    for (double x = 0.05; x < 49; x += 0.37) {
        CHECK(fracdiff::gamma(x + 1) == doctest::Approx(x * fracdiff::gamma(x)).epsilon(1e-12));
    }
}
