#include "fracdiff/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fracdiff/errors.hpp"
#include "fracdiff/quadrature.hpp"
#include "fracdiff/special_functions.hpp"

namespace fracdiff {

namespace {

constexpr double kRelTol = 1e-10;
constexpr int kMaxLevels = 20;
// Start of the stretch handled by beta = 1 - e^{-u} when the support reaches 1.
constexpr double kSubstitutionStart = 0.9;
// Last u with 1 - e^{-u} still below 1 in double; the remaining stretch is e^{-36} wide.
constexpr double kSubstitutionEnd = 36.0;

std::string fmt_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

template <typename R>
R integrate_density(const ContinuousDensity& density, const std::function<R(double)>& g) {
    auto integrand = [&](double beta) -> R { return g(beta) * density(beta); };
    R total{};
    bool converged = true;
    double err = 0;
    const double b0 = density.beta0();
    const double b1 = density.beta1();
    if (b1 < 1) {
        auto r = integrate_adaptive(integrand, b0, b1, kRelTol, 1e-300, kMaxLevels);
        total = r.value;
        converged = r.converged;
        err = r.error;
    } else {
        const double split = std::max(b0, kSubstitutionStart);
        if (split > b0) {
            auto r = integrate_adaptive(integrand, b0, split, kRelTol, 1e-300, kMaxLevels);
            total += r.value;
            converged = converged && r.converged;
            err += r.error;
        }
        auto mapped = [&](double u) -> R {
            const double one_minus = std::exp(-u);
            return integrand(1.0 - one_minus) * one_minus;
        };
        auto r = integrate_adaptive(mapped, -std::log1p(-split), kSubstitutionEnd, kRelTol, 1e-300,
                                    kMaxLevels);
        total += r.value;
        converged = converged && r.converged;
        err += r.error;
        // A non-negligible integrand at the end of the mapped range means the integral
        // diverges at beta = 1 rather than converging to the truncated value.
        const double end_value = std::abs(mapped(kSubstitutionEnd));
        if (!(end_value <= kRelTol * std::max(std::abs(total), 1e-300))) {
            throw NumericalError("mixture quadrature for density '" + density.name() +
                                 "' diverges at beta = 1");
        }
    }
    if (!converged || !std::isfinite(std::abs(total))) {
        throw NumericalError("mixture quadrature over (" + fmt_double(b0) + ", " + fmt_double(b1) +
                             ") for density '" + density.name() +
                             "' did not converge; estimated error " + fmt_double(err));
    }
    return total;
}

}  // namespace

// ---------------------------------------------------------------- FiniteAtoms

FiniteAtoms::FiniteAtoms(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw DomainError("FiniteAtoms: at least one atom required");
    for (std::size_t j = 0; j < atoms_.size(); ++j) {
        const auto& a = atoms_[j];
        if (!(a.beta > 0 && a.beta < 1)) {
            throw DomainError("FiniteAtoms: beta_" + std::to_string(j + 1) + " = " + fmt_double(a.beta) +
                              " outside (0, 1)");
        }
        if (!(a.c > 0) || !std::isfinite(a.c)) {
            throw DomainError("FiniteAtoms: c_" + std::to_string(j + 1) + " must be positive and finite");
        }
        if (j > 0 && !(atoms_[j - 1].beta < a.beta)) {
            throw DomainError("FiniteAtoms: orders must be strictly increasing");
        }
    }
}

double FiniteAtoms::psi_coefficient(std::size_t j) const {
    if (j >= atoms_.size()) throw IndexError("FiniteAtoms: atom index out of range");
    return std::pow(atoms_[j].c, atoms_[j].beta);
}

double FiniteAtoms::mu_weight(std::size_t j) const {
    return psi_coefficient(j) / gamma(1.0 - atoms_[j].beta);
}

// ---------------------------------------------------------- ContinuousDensity

ContinuousDensity::ContinuousDensity(double beta0, double beta1, Evaluator density, std::string name)
    : beta0_(beta0), beta1_(beta1), density_(std::move(density)), name_(std::move(name)) {
    if (!(beta0_ > 0 && beta0_ < beta1_ && beta1_ <= 1)) {
        throw DomainError("ContinuousDensity: support must satisfy 0 < beta0 < beta1 <= 1, got (" +
                          fmt_double(beta0_) + ", " + fmt_double(beta1_) + ")");
    }
    if (!density_) throw DomainError("ContinuousDensity: empty density evaluator");
    // Positivity is checked away from beta = 1; finiteness of the mass is reported by
    // MixingMeasure::total_mass and the moment-condition check.
    const double inner_end = beta1_ < 1 ? beta1_ : beta0_ + 0.5 * (beta1_ - beta0_);
    const auto mass = integrate_adaptive([this](double b) { return density_(b); }, beta0_, inner_end,
                                         kRelTol, 1e-300, kMaxLevels);
    if (!(mass.value > 0) || !std::isfinite(mass.value)) {
        throw DomainError("ContinuousDensity: mass must be positive, got " + fmt_double(mass.value));
    }
}

ContinuousDensity ContinuousDensity::uniform(double beta0, double beta1, double scale) {
    if (!(scale > 0)) throw DomainError("uniform density: scale must be positive");
    return ContinuousDensity(beta0, beta1, [scale](double) { return scale; }, "uniform");
}

ContinuousDensity ContinuousDensity::power(double beta0, double beta1, double scale, double exponent) {
    if (!(scale > 0)) throw DomainError("power density: scale must be positive");
    return ContinuousDensity(
        beta0, beta1, [scale, exponent](double b) { return scale * std::pow(1.0 - b, exponent); }, "power");
}

double ContinuousDensity::integrate(const std::function<double(double)>& g) const {
    return integrate_density<double>(*this, g);
}

std::complex<double> ContinuousDensity::integrate_complex(
    const std::function<std::complex<double>(double)>& g) const {
    return integrate_density<std::complex<double>>(*this, g);
}

// -------------------------------------------------------------- MixingMeasure

MixingMeasure::MixingMeasure(FiniteAtoms atoms) : variant_(std::move(atoms)) {}
MixingMeasure::MixingMeasure(ContinuousDensity density) : variant_(std::move(density)) {}

const FiniteAtoms& MixingMeasure::atoms() const {
    if (!is_atomic()) throw DomainError("MixingMeasure: not an atomic measure");
    return std::get<FiniteAtoms>(variant_);
}

const ContinuousDensity& MixingMeasure::density() const {
    if (is_atomic()) throw DomainError("MixingMeasure: not a continuous density");
    return std::get<ContinuousDensity>(variant_);
}

double MixingMeasure::total_mass() const {
    if (is_atomic()) {
        const auto& a = atoms();
        double m = 0;
        for (std::size_t j = 0; j < a.size(); ++j) m += a.mu_weight(j);
        return m;
    }
    return density().integrate([](double) { return 1.0; });
}

double MixingMeasure::beta_max() const {
    return is_atomic() ? atoms().beta_max() : density().beta1();
}

std::string MixingMeasure::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (is_atomic()) {
        os << "atoms{";
        const auto& a = atoms();
        for (std::size_t j = 0; j < a.size(); ++j) {
            os << (j ? ", " : "") << "(beta=" << a[j].beta << ", c=" << a[j].c << ")";
        }
        os << "}";
    } else {
        const auto& d = density();
        os << "density{" << d.name() << " on (" << d.beta0() << ", " << d.beta1() << ")}";
    }
    return os.str();
}

// ---------------------------------------------------------------- functionals

double levy_exponent(const MixingMeasure& measure, double s) {
    if (!(s > 0)) throw DomainError("levy_exponent: s must be positive, got " + fmt_double(s));
    if (measure.is_atomic()) {
        const auto& a = measure.atoms();
        double psi = 0;
        for (std::size_t j = 0; j < a.size(); ++j) psi += a.psi_coefficient(j) * std::pow(s, a[j].beta);
        return psi;
    }
    return measure.density().integrate([s](double beta) { return std::pow(s, beta) * gamma(1.0 - beta); });
}

std::complex<double> levy_exponent(const MixingMeasure& measure, std::complex<double> s) {
    if (s.imag() == 0 && s.real() <= 0) {
        throw NumericalError("levy_exponent: s = " + fmt_double(s.real()) +
                             " lies on the branch cut of s^beta");
    }
    const std::complex<double> log_s = std::log(s);
    if (measure.is_atomic()) {
        const auto& a = measure.atoms();
        std::complex<double> psi = 0;
        for (std::size_t j = 0; j < a.size(); ++j) psi += a.psi_coefficient(j) * std::exp(a[j].beta * log_s);
        return psi;
    }
    return measure.density().integrate_complex(
        [log_s](double beta) { return std::exp(beta * log_s) * gamma(1.0 - beta); });
}

double levy_tail(const MixingMeasure& measure, double t) {
    if (!(t > 0)) throw DomainError("levy_tail: t must be positive, got " + fmt_double(t));
    if (measure.is_atomic()) {
        const auto& a = measure.atoms();
        double tail = 0;
        for (std::size_t j = 0; j < a.size(); ++j) tail += a.mu_weight(j) * std::pow(t, -a[j].beta);
        return tail;
    }
    return measure.density().integrate([t](double beta) { return std::pow(t, -beta); });
}

MomentCondition check_moment_condition(const MixingMeasure& measure) {
    if (measure.is_atomic()) {
        const auto& a = measure.atoms();
        double v = 0;
        for (std::size_t j = 0; j < a.size(); ++j) v += a.mu_weight(j) / (1.0 - a[j].beta);
        return {true, v};
    }
    const auto& d = measure.density();
    if (d.beta1() < 1) {
        return {true, d.integrate([](double beta) { return 1.0 / (1.0 - beta); })};
    }
    // Support reaches 1: integrate up to 1 - 2^{-k0}, then examine dyadic shells
    // [1 - 2^{-k}, 1 - 2^{-k-1}]. Geometric decay of the shells means convergence.
    constexpr int k0 = 4;
    const double head_end = 1.0 - std::ldexp(1.0, -k0);
    double head = 0;
    auto integrand = [&](double beta) { return d(beta) / (1.0 - beta); };
    if (d.beta0() < head_end) {
        auto r = integrate_adaptive(integrand, d.beta0(), head_end, kRelTol, 1e-300, kMaxLevels);
        head = r.value;
    }
    // In the shell variable u = -log2(1 - beta) each shell is [k, k+1].
    auto shell = [&](int k) {
        const double lo = std::max(d.beta0(), 1.0 - std::ldexp(1.0, -k));
        const double hi = 1.0 - std::ldexp(1.0, -k - 1);
        if (hi <= lo) return 0.0;
        auto mapped = [&](double u) {
            const double one_minus = std::exp2(-u);
            return integrand(1.0 - one_minus) * one_minus * std::numbers::ln2;
        };
        return integrate_adaptive(mapped, -std::log2(1.0 - lo), double(k + 1), kRelTol, 1e-300,
                                  kMaxLevels)
            .value;
    };
    constexpr int kShells = 40;
    std::vector<double> shells;
    double sum = head;
    for (int k = k0; k < k0 + kShells; ++k) {
        shells.push_back(shell(k));
        sum += shells.back();
    }
    // Ratio of the last few shells decides; geometric tail added when finite.
    const std::size_t n = shells.size();
    double worst_ratio = 0;
    for (std::size_t i = n - 8; i < n; ++i) {
        const double prev = shells[i - 1];
        const double ratio = prev > 0 ? shells[i] / prev : 0.0;
        worst_ratio = std::max(worst_ratio, ratio);
    }
    if (worst_ratio < 0.9) {
        const double tail = shells.back() * worst_ratio / (1.0 - worst_ratio);
        return {true, sum + tail};
    }
    return {false, std::numeric_limits<double>::infinity()};
}

double sine_gamma_constant(const ContinuousDensity& density) {
    return density.integrate(
        [](double beta) { return std::sin(beta * std::numbers::pi) * gamma(1.0 - beta); });
}

double kernel_bound_k(const ContinuousDensity& density, double t) {
    if (!(t > 0)) throw DomainError("kernel_bound_k: t must be positive");
    if (!(density.beta1() < 1)) {
        throw PreconditionError("kernel_bound_k: requires beta1 < 1 (Gamma(1 - beta1) is finite)");
    }
    const double c = sine_gamma_constant(density);
    if (!(c > 0)) {
        throw PreconditionError("kernel_bound_k: C(beta0, beta1, p) = " + fmt_double(c) +
                                " is not positive");
    }
    const double b0 = density.beta0();
    const double b1 = density.beta1();
    return (gamma(1.0 - b1) * std::pow(t, b1 - 1.0) + gamma(1.0 - b0) * std::pow(t, b0 - 1.0)) /
           (c * std::numbers::pi);
}

double kernel_bound_ke(const FiniteAtoms& atoms, std::size_t j, double t) {
    if (j >= atoms.size()) {
        throw IndexError("kernel_bound_ke: atom index " + std::to_string(j) + " out of range");
    }
    if (!(t > 0)) throw DomainError("kernel_bound_ke: t must be positive");
    const double beta = atoms[j].beta;
    return std::pow(t, beta - 1.0) / (atoms.psi_coefficient(j) * std::sin(beta * std::numbers::pi));
}

double kernel_bound_ke_proof_chain(const FiniteAtoms& atoms, std::size_t j, double t) {
    const double base = kernel_bound_ke(atoms, j, t);
    const double g = gamma(1.0 - atoms[j].beta);
    return base * g * g / std::numbers::pi;
}

}  // namespace fracdiff
