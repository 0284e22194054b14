#include "fracdiff/speckit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

namespace fracdiff {

namespace {

constexpr double kHSlack = 1e-6;  // h outside [-slack, 1 + slack] is a numerical failure

std::string describe_args(double lambda, double t) {
    std::ostringstream os;
    os.precision(17);
    os << "lambda=" << lambda << ", t=" << t;
    return os.str();
}

void check_range(double h, const char* where, double lambda, double t) {
    if (!(h >= -kHSlack && h <= 1 + kHSlack)) {
        std::ostringstream os;
        os.precision(17);
        os << where << ": h = " << h << " outside [0, 1] at " << describe_args(lambda, t);
        throw NumericalError(os.str());
    }
}

struct InversionTerms {
    std::vector<double> beta;
    std::vector<double> re;  // c^beta cos(beta pi)
    std::vector<double> im;  // c^beta sin(beta pi)
};

InversionTerms inversion_terms(const FiniteAtoms& atoms) {
    InversionTerms terms;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        const double w = atoms.psi_coefficient(j);
        const double b = atoms[j].beta;
        terms.beta.push_back(b);
        terms.re.push_back(w * std::cos(b * std::numbers::pi));
        terms.im.push_back(w * std::sin(b * std::numbers::pi));
    }
    return terms;
}

// Integrates g(u) * Im psi / |psi + lambda|^2 over the u = log r line, where g carries the
// time factor. The range is cut where the integrand is below double resolution and split
// into unit-width panels so narrow resonances of |psi + lambda| are not stepped over.
template <typename TimeFactor>
double inversion_integral(const FiniteAtoms& atoms, double lambda, double t, TimeFactor&& time_factor,
                          double extra_growth, const char* where) {
    const InversionTerms terms = inversion_terms(atoms);
    double im_total = 0;
    for (double v : terms.im) im_total += v;
    const double beta_min = terms.beta.front() + extra_growth;
    // Left tail ~ im_total e^{beta_min u} / lambda^2.
    const double u_lo = std::log(1e-18 * lambda * lambda * beta_min / im_total) / beta_min;
    // e^{-t r} < e^{-50} past r = 50 / t.
    const double u_hi = std::log(50.0 / t);
    auto integrand = [&](double u) {
        double re = lambda, im = 0;
        for (std::size_t j = 0; j < terms.beta.size(); ++j) {
            const double rb = std::exp(terms.beta[j] * u);
            re += terms.re[j] * rb;
            im += terms.im[j] * rb;
        }
        return time_factor(u) * im / (re * re + im * im);
    };
    if (!(u_hi > u_lo)) return 0.0;
    const int panels = std::max(1, static_cast<int>(std::ceil((u_hi - u_lo) / 1.0)));
    const double width = (u_hi - u_lo) / panels;
    double total = 0;
    for (int p = 0; p < panels; ++p) {
        const double a = u_lo + p * width;
        const auto part = integrate_adaptive(integrand, a, a + width, 1e-14, 1e-17, 30, 15);
        if (!part.converged) {
            throw NumericalError(std::string(where) + ": quadrature did not converge at " +
                                 describe_args(lambda, t));
        }
        total += part.value;
    }
    return lambda / std::numbers::pi * total;
}

}  // namespace

double h_single(double beta, double lambda, double t, double c) {
    if (!(lambda >= 0)) throw DomainError("h_single: lambda must be nonnegative");
    if (!(t >= 0)) throw DomainError("h_single: t must be nonnegative");
    if (!(c > 0)) throw DomainError("h_single: c must be positive");
    if (lambda == 0 || t == 0) return 1.0;
    return mittag_leffler(beta, -lambda * std::pow(t / c, beta));
}

double h_multiterm(const FiniteAtoms& atoms, double lambda, double t) {
    if (!(lambda >= 0)) throw DomainError("h_multiterm: lambda must be nonnegative");
    if (!(t >= 0)) throw DomainError("h_multiterm: t must be nonnegative");
    if (lambda == 0 || t == 0) return 1.0;
    const double h = inversion_integral(
        atoms, lambda, t, [t](double u) { return std::exp(-t * std::exp(u)); }, 0.0, "h_multiterm");
    check_range(h, "h_multiterm", lambda, t);
    return h;
}

double h_multiterm_rate(const FiniteAtoms& atoms, double lambda, double t) {
    if (!(lambda >= 0)) throw DomainError("h_multiterm_rate: lambda must be nonnegative");
    if (!(t > 0)) throw DomainError("h_multiterm_rate: t must be positive");
    if (lambda == 0) return 0.0;
    return inversion_integral(
        atoms, lambda, t, [t](double u) { return std::exp(u - t * std::exp(u)); }, 1.0,
        "h_multiterm_rate");
}

double h_distributed(const MixingMeasure& measure, double lambda, double t, int nodes) {
    if (!(lambda >= 0)) throw DomainError("h_distributed: lambda must be nonnegative");
    if (!(t >= 0)) throw DomainError("h_distributed: t must be nonnegative");
    if (nodes < 8) throw DomainError("h_distributed: at least 8 contour nodes required");
    if (lambda == 0 || t == 0) return 1.0;

    auto transform = [&](std::complex<double> s) {
        const std::complex<double> psi = levy_exponent(measure, s);
        return psi / (s * (psi + lambda));
    };
    // Fixed Talbot contour s(theta) = r theta (cot theta + i), theta in (0, pi).
    const double r = 2.0 * nodes / (5.0 * t);
    double sum = 0.5 * std::exp(r * t) * transform({r, 0.0}).real();
    for (int k = 1; k < nodes; ++k) {
        const double theta = k * std::numbers::pi / nodes;
        const double cot = std::cos(theta) / std::sin(theta);
        const std::complex<double> s(r * theta * cot, r * theta);
        const double sigma = theta + (theta * cot - 1.0) * cot;
        sum += (std::exp(t * s) * transform(s) * std::complex<double>(1.0, sigma)).real();
    }
    const double h = r / nodes * sum;
    check_range(h, "h_distributed", lambda, t);
    return h;
}

// ------------------------------------------------------------------ HEvaluator

HEvaluator HEvaluator::single(double beta, double c) {
    return HEvaluator(Kind::SingleTerm, MixingMeasure(FiniteAtoms({{beta, c}})));
}

HEvaluator HEvaluator::multi(FiniteAtoms atoms) {
    return HEvaluator(Kind::MultiTerm, MixingMeasure(std::move(atoms)));
}

HEvaluator HEvaluator::distributed(MixingMeasure measure, int nodes) {
    HEvaluator e(Kind::Distributed, std::move(measure));
    e.talbot_nodes_ = nodes;
    return e;
}

HEvaluator HEvaluator::for_measure(const MixingMeasure& measure) {
    if (measure.is_atomic()) return multi(measure.atoms());
    return distributed(measure);
}

double HEvaluator::operator()(double t, double lambda) const {
    switch (kind_) {
        case Kind::SingleTerm: {
            const Atom& a = measure_->atoms()[0];
            return h_single(a.beta, lambda, t, a.c);
        }
        case Kind::MultiTerm:
            return h_multiterm(measure_->atoms(), lambda, t);
        case Kind::Distributed:
            return h_distributed(*measure_, lambda, t, talbot_nodes_);
    }
    return 0.0;
}

std::string HEvaluator::method() const {
    switch (kind_) {
        case Kind::SingleTerm:
            return "mittag-leffler";
        case Kind::MultiTerm:
            return "real-inversion";
        case Kind::Distributed:
            return "talbot";
    }
    return "unknown";
}

}  // namespace fracdiff
