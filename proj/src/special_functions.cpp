#include "fracdiff/special_functions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fracdiff/errors.hpp"
#include "fracdiff/quadrature.hpp"

namespace fracdiff {

double gamma(double x) {
    if (!std::isfinite(x)) throw DomainError("gamma: non-finite argument");
    if (x <= 0 && x == std::floor(x)) {
        throw DomainError("gamma: pole at nonpositive integer " + std::to_string(x));
    }
    return std::tgamma(x);
}

namespace {

constexpr double kSeriesRadius = 1.0;

double ml_series(double beta, double z) {
    // Neumaier-compensated sum of z^k / Gamma(beta k + 1).
    double sum = 0, comp = 0;
    double zk = 1;
    for (int k = 0; k < 2000; ++k) {
        const double term = zk / std::tgamma(beta * k + 1);
        const double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
        if (k > 2 && std::abs(term) < 1e-18 && std::abs(zk) < 1) break;
        zk *= z;
    }
    return sum + comp;
}

double ml_integral(double beta, double x) {
    const double pi = std::numbers::pi;
    const double cosb = std::cos(beta * pi);
    auto integrand = [=](double v) {
        return std::exp(-std::pow(v, 1.0 / beta)) * x / (v * v + 2 * x * v * cosb + x * x);
    };
    // exp(-v^{1/beta}) < 1e-18 once v^{1/beta} > 41.5.
    const double v_max = std::pow(41.5, beta);
    // Split at the near-resonance v = x when it falls inside the range.
    QuadResult<double> total;
    auto add = [&](double lo, double hi) {
        if (hi <= lo) return;
        const auto part = integrate_adaptive(integrand, lo, hi, 1e-13, 1e-16, 30, 15);
        total.value += part.value;
        total.error += part.error;
        total.converged = total.converged && part.converged;
    };
    if (x < v_max) {
        add(0.0, x);
        add(x, v_max);
    } else {
        add(0.0, v_max);
    }
    if (!total.converged) {
        throw NumericalError("mittag_leffler: quadrature did not converge for beta=" + std::to_string(beta) +
                             ", z=" + std::to_string(-x));
    }
    return std::sin(beta * pi) / (beta * pi) * total.value;
}

}  // namespace

double mittag_leffler(double beta, double z) {
    if (!(beta > 0 && beta <= 1)) throw DomainError("mittag_leffler: beta must lie in (0, 1]");
    if (!(z <= 0)) throw DomainError("mittag_leffler: argument must be nonpositive");
    if (z == 0) return 1.0;
    if (beta == 1) return std::exp(z);
    if (std::abs(z) <= kSeriesRadius) return ml_series(beta, z);
    return ml_integral(beta, -z);
}

}  // namespace fracdiff
