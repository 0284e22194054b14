#pragma once

// Gauss-Legendre rules and a bisection-adaptive integrator built on them.
// Everything is templated on the scalar type so the same code runs in double
// and long double; integrands may return real or complex values.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "fracdiff/errors.hpp"

namespace fracdiff {

template <typename Scalar>
struct GaussRule {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;    // on [-1, 1]
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] by Newton iteration on P_n.
template <typename Scalar = double>
GaussRule<Scalar> gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre: need at least one node");
    GaussRule<Scalar> rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
        Scalar dp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            Scalar p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (x * p1 - p0) / (x * x - 1);
            const Scalar dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= 4 * eps) break;
        }
        {
            Scalar p0 = 1, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const Scalar p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1;
            dp = n * (x * p1 - p0) / (x * x - 1);
        }
        const Scalar w = 2 / ((1 - x * x) * dp * dp);
        rule.nodes(i) = -x;
        rule.nodes(n - 1 - i) = x;
        rule.weights(i) = w;
        rule.weights(n - 1 - i) = w;
    }
    return rule;
}

/// Fixed-rule integral of f over [a, b].
template <typename Scalar, typename F>
auto integrate_fixed(const GaussRule<Scalar>& rule, F&& f, Scalar a, Scalar b) {
    using R = decltype(f(a));
    const Scalar half = (b - a) / 2;
    const Scalar mid = (a + b) / 2;
    R sum{};
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        sum += rule.weights(i) * f(mid + half * rule.nodes(i));
    }
    return half * sum;
}

template <typename R>
struct QuadResult {
    R value{};
    double error = 0;      // estimated absolute error
    bool converged = true;
    int evaluations = 0;
};

namespace detail {

template <typename Scalar, typename R, typename F>
void adaptive_step(const GaussRule<Scalar>& rule, F& f, Scalar a, Scalar b, R whole, double abs_tol,
                   double rel_scale, int level, int max_levels, QuadResult<R>& out) {
    const Scalar mid = (a + b) / 2;
    const R left = integrate_fixed(rule, f, a, mid);
    const R right = integrate_fixed(rule, f, mid, b);
    out.evaluations += 2 * static_cast<int>(rule.nodes.size());
    const R refined = left + right;
    const double diff = static_cast<double>(std::abs(refined - whole));
    // Differences at the level of rounding in the panel value cannot be refined away.
    const double noise = 64 * std::numeric_limits<double>::epsilon() * static_cast<double>(std::abs(refined));
    const bool settled = diff <= abs_tol || diff <= rel_scale || diff <= noise;
    if (settled || level >= max_levels) {
        if (!settled) out.converged = false;
        out.value += refined;
        out.error += diff;
        return;
    }
    adaptive_step(rule, f, a, mid, left, abs_tol / 2, rel_scale / 2, level + 1, max_levels, out);
    adaptive_step(rule, f, mid, b, right, abs_tol / 2, rel_scale / 2, level + 1, max_levels, out);
}

}  // namespace detail

/// Adaptive Gauss-Legendre: a panel is accepted when its n-point value agrees with the
/// sum over its two halves within the share of the tolerance assigned to it.
template <typename Scalar, typename F>
auto integrate_adaptive(F&& f, Scalar a, Scalar b, double rel_tol, double abs_tol = 0,
                        int max_levels = 20, int order = 10) {
    using R = decltype(f(a));
    static thread_local GaussRule<Scalar> rule = gauss_legendre<Scalar>(order);
    if (rule.nodes.size() != order) rule = gauss_legendre<Scalar>(order);
    QuadResult<R> out;
    const R whole = integrate_fixed(rule, f, a, b);
    out.evaluations = order;
    const Scalar mid = (a + b) / 2;
    const double scale = std::max(static_cast<double>(std::abs(whole)),
                                  static_cast<double>(std::abs(integrate_fixed(rule, f, a, mid)) +
                                                      std::abs(integrate_fixed(rule, f, mid, b))));
    out.evaluations += 2 * order;
    detail::adaptive_step(rule, f, a, b, whole, abs_tol, rel_tol * scale, 0, max_levels, out);
    return out;
}

}  // namespace fracdiff
