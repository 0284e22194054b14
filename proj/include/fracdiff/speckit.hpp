#pragma once

// Temporal kernels: the relaxation function h(t, lambda) = E[exp(-lambda E_t)] in its
// single-order, multi-term and distributed-order forms, and the discrete Caputo and
// distributed-order derivative operators acting on uniformly sampled functions.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fracdiff/errors.hpp"
#include "fracdiff/mixture.hpp"
#include "fracdiff/quadrature.hpp"
#include "fracdiff/special_functions.hpp"

namespace fracdiff {

/// Uniform grid t_k = k dt, k = 0 .. count-1, anchored at t = 0 where the Caputo
/// memory integral starts.
class TimeGrid {
public:
    TimeGrid(double dt, std::size_t count) : dt_(dt), count_(count) {
        if (!(dt > 0) || !std::isfinite(dt)) throw DomainError("TimeGrid: step must be positive");
        if (count < 2) throw DomainError("TimeGrid: need at least two nodes");
    }
    /// Grid covering [0, horizon] with step dt (horizon rounded to the nearest node).
    static TimeGrid covering(double horizon, double dt) {
        return TimeGrid(dt, static_cast<std::size_t>(std::llround(horizon / dt)) + 1);
    }

    double dt() const { return dt_; }
    std::size_t size() const { return count_; }
    double operator[](std::size_t k) const { return static_cast<double>(k) * dt_; }
    double back() const { return (*this)[count_ - 1]; }
    Eigen::VectorXd values() const {
        return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(count_), 0.0, back());
    }

private:
    double dt_;
    std::size_t count_;
};

/// L1 discretization of the Caputo derivative of order beta in (0, 1):
///   D u(t_k) = dt^{-beta}/Gamma(2 - beta) sum_{i<k} w_i (u_{k-i} - u_{k-i-1}),
///   w_i = (i+1)^{1-beta} - i^{1-beta}.
/// Accurate to O(dt^{2-beta}) for C^2 inputs. Node 0 is set to 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> caputo_derivative(
    const Eigen::MatrixBase<Derived>& u, const TimeGrid& grid, double beta) {
    using Scalar = typename Derived::Scalar;
    if (!(beta > 0 && beta < 1)) throw DomainError("caputo_derivative: beta must lie in (0, 1)");
    const Eigen::Index n = u.size();
    if (static_cast<std::size_t>(n) != grid.size()) {
        throw ShapeError("caputo_derivative: " + std::to_string(n) + " samples on a grid of " +
                         std::to_string(grid.size()) + " nodes");
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        weights(i) = Scalar(std::pow(double(i + 1), 1.0 - beta) - std::pow(double(i), 1.0 - beta));
    }
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> increments(n);
    increments(0) = Scalar(0);
    for (Eigen::Index k = 1; k < n; ++k) increments(k) = u(k) - u(k - 1);

    const Scalar scale = Scalar(std::pow(grid.dt(), -beta) / gamma(2.0 - beta));
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
    out(0) = Scalar(0);
    for (Eigen::Index k = 1; k < n; ++k) {
        // sum_{i=0}^{k-1} w_i * increments(k - i)
        out(k) = scale * weights.head(k).dot(increments.segment(1, k).reverse());
    }
    return out;
}

/// Gauss-Legendre node count used in beta for continuous mixing densities.
inline constexpr int kDefaultOrderNodes = 32;

/// D^(nu) u = int caputo(u, beta) nu(d beta), nu(d beta) = Gamma(1 - beta) mu(d beta).
/// Atoms contribute c_j^{beta_j} caputo(u, beta_j) exactly.
template <typename Derived>
Eigen::VectorXd distributed_order_derivative(const Eigen::MatrixBase<Derived>& u, const TimeGrid& grid,
                                             const MixingMeasure& measure,
                                             int order_nodes = kDefaultOrderNodes) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(u.size());
    if (measure.is_atomic()) {
        const auto& atoms = measure.atoms();
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            out += atoms.psi_coefficient(j) * caputo_derivative(u, grid, atoms[j].beta);
        }
        return out;
    }
    const auto& density = measure.density();
    const auto rule = gauss_legendre<double>(order_nodes);
    const double half = (density.beta1() - density.beta0()) / 2;
    const double mid = (density.beta1() + density.beta0()) / 2;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double beta = mid + half * rule.nodes(i);
        const double weight = half * rule.weights(i) * gamma(1.0 - beta) * density(beta);
        out += weight * caputo_derivative(u, grid, beta);
    }
    return out;
}

/// E_beta(-lambda t^beta / c^beta): h for a single atom (beta, c).
double h_single(double beta, double lambda, double t, double c = 1.0);

/// h for finitely many atoms by the real inversion integral
///   h(t, lambda) = (lambda/pi) int_0^inf r^{-1} e^{-t r} Im psi(-r) / |psi(-r) + lambda|^2 dr,
/// psi(-r) = sum_j c_j^{beta_j} r^{beta_j} e^{i pi beta_j}, evaluated in u = log r.
double h_multiterm(const FiniteAtoms& atoms, double lambda, double t);

/// -d/dt h for finitely many atoms (same integral without the r^{-1}).
double h_multiterm_rate(const FiniteAtoms& atoms, double lambda, double t);

/// Fixed-Talbot node count for h_distributed.
inline constexpr int kTalbotNodes = 32;

/// h for any mixing measure by fixed-Talbot inversion of
///   h~(s) = psi_W(s) / (s (psi_W(s) + lambda)).
double h_distributed(const MixingMeasure& measure, double lambda, double t, int nodes = kTalbotNodes);

/// Evaluates h(t, lambda) for a fixed temporal model; chooses the closed form, the
/// real inversion integral or the Talbot contour according to its variant.
class HEvaluator {
public:
    enum class Kind { SingleTerm, MultiTerm, Distributed };

    static HEvaluator single(double beta, double c = 1.0);
    static HEvaluator multi(FiniteAtoms atoms);
    static HEvaluator distributed(MixingMeasure measure, int nodes = kTalbotNodes);
    /// MultiTerm for atomic measures, Distributed for densities.
    static HEvaluator for_measure(const MixingMeasure& measure);

    double operator()(double t, double lambda) const;
    Kind kind() const { return kind_; }
    std::string method() const;
    /// The mixing measure this evaluator realizes.
    const MixingMeasure& measure() const { return *measure_; }

private:
    HEvaluator(Kind kind, MixingMeasure measure) : kind_(kind), measure_(std::move(measure)) {}

    Kind kind_;
    std::optional<MixingMeasure> measure_;
    int talbot_nodes_ = kTalbotNodes;
};

}  // namespace fracdiff
