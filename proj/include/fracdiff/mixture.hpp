#pragma once

// Mixing measures on the fractional orders beta in (0, 1) and the scalar
// functionals derived from them: Levy exponent and tail of the subordinator,
// the moment condition that keeps nu finite, and the bounds on d/dt h.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fracdiff {

struct Atom {
    double beta;  // order, strictly inside (0, 1)
    double c;     // scale, > 0
};

/// Finite sum of point masses. Atom j carries mu-weight c_j^{beta_j} / Gamma(1 - beta_j),
/// so that the Levy exponent is sum_j c_j^{beta_j} s^{beta_j} and the time operator
/// is sum_j c_j^{beta_j} d^{beta_j}/dt^{beta_j}.
class FiniteAtoms {
public:
    explicit FiniteAtoms(std::vector<Atom> atoms);

    std::span<const Atom> atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    const Atom& operator[](std::size_t j) const { return atoms_[j]; }

    /// c_j^{beta_j}: coefficient of s^{beta_j} in psi_W and of the j-th Caputo term.
    double psi_coefficient(std::size_t j) const;
    /// c_j^{beta_j} / Gamma(1 - beta_j): the mu-mass of atom j.
    double mu_weight(std::size_t j) const;

    double beta_min() const { return atoms_.front().beta; }
    double beta_max() const { return atoms_.back().beta; }

private:
    std::vector<Atom> atoms_;
};

/// Absolutely continuous mu(d beta) = p(beta) d beta on (beta0, beta1).
class ContinuousDensity {
public:
    using Evaluator = std::function<double(double)>;

    ContinuousDensity(double beta0, double beta1, Evaluator density, std::string name = "custom");

    /// p = scale on (beta0, beta1).
    static ContinuousDensity uniform(double beta0, double beta1, double scale = 1.0);
    /// p(beta) = scale * (1 - beta)^exponent on (beta0, beta1).
    static ContinuousDensity power(double beta0, double beta1, double scale, double exponent);

    double beta0() const { return beta0_; }
    double beta1() const { return beta1_; }
    const std::string& name() const { return name_; }
    double operator()(double beta) const { return density_(beta); }

    /// Integral of g(beta) p(beta) over the support. Adaptive Gauss-Legendre to relative
    /// tolerance 1e-10; when beta1 == 1 the last stretch is mapped by beta = 1 - e^{-u}.
    double integrate(const std::function<double(double)>& g) const;
    std::complex<double> integrate_complex(const std::function<std::complex<double>(double)>& g) const;

private:
    double beta0_;
    double beta1_;
    Evaluator density_;
    std::string name_;
};

class MixingMeasure {
public:
    MixingMeasure(FiniteAtoms atoms);         // NOLINT(google-explicit-constructor)
    MixingMeasure(ContinuousDensity density); // NOLINT(google-explicit-constructor)

    bool is_atomic() const { return std::holds_alternative<FiniteAtoms>(variant_); }
    const FiniteAtoms& atoms() const;
    const ContinuousDensity& density() const;

    /// mu(0, 1).
    double total_mass() const;
    /// Largest order carrying mass (beta_n, or beta1 for a density).
    double beta_max() const;
    std::string describe() const;

private:
    std::variant<FiniteAtoms, ContinuousDensity> variant_;
};

/// psi_W(s) = int s^beta Gamma(1 - beta) mu(d beta), s > 0.
double levy_exponent(const MixingMeasure& measure, double s);

/// psi_W on the cut plane (principal branch of s^beta). Throws NumericalError on the
/// closed negative real axis.
std::complex<double> levy_exponent(const MixingMeasure& measure, std::complex<double> s);

/// Levy-measure tail phi_W(t, inf) = int t^{-beta} mu(d beta), t > 0.
double levy_tail(const MixingMeasure& measure, double t);

struct MomentCondition {
    bool finite;
    double value;  // int mu(d beta)/(1 - beta); +inf when divergent
};

/// int_0^1 mu(d beta) / (1 - beta) < inf.
MomentCondition check_moment_condition(const MixingMeasure& measure);

/// C(beta0, beta1, p) = int sin(beta pi) Gamma(1 - beta) p(beta) d beta.
double sine_gamma_constant(const ContinuousDensity& density);

/// k(t) = [C pi]^{-1} [Gamma(1 - beta1) t^{beta1 - 1} + Gamma(1 - beta0) t^{beta0 - 1}],
/// bounding |d/dt h(t, lambda)| / lambda for a continuous mixing density.
double kernel_bound_k(const ContinuousDensity& density, double t);

/// k_e(t) = (c_j^{beta_j} sin(beta_j pi))^{-1} t^{beta_j - 1} for atom j (zero-based).
double kernel_bound_ke(const FiniteAtoms& atoms, std::size_t j, double t);

/// k_e(t) with the extra Gamma(1 - beta_j)^2 / pi factor carried by the proof chain
/// when the mu-weights are used in the inversion integrand.
double kernel_bound_ke_proof_chain(const FiniteAtoms& atoms, std::size_t j, double t);

}  // namespace fracdiff
