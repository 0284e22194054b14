#pragma once

namespace fracdiff {

/// Euler Gamma function. Throws DomainError at 0, -1, -2, ...
double gamma(double x);

/// One-parameter Mittag-Leffler function E_beta(z) for 0 < beta <= 1 and real z <= 0.
///
/// Uses the power series for |z| <= 1 and, beyond that, the completely monotone
/// representation
///   E_beta(-x) = sin(beta pi)/(beta pi) * int_0^inf exp(-v^{1/beta}) x / (v^2 + 2 x v cos(beta pi) + x^2) dv,
/// integrated adaptively. Absolute error below 1e-10.
double mittag_leffler(double beta, double z);

}  // namespace fracdiff
