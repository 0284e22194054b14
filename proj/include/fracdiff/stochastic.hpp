#pragma once

// Monte Carlo side: positive stable and multi-term subordinators, their first-passage
// (inverse subordinator) times, killed symmetric alpha-stable motion, the probabilistic
// solution estimator, and the continuous-time random walk whose scaling limit is E_t.
//
// Every path-indexed sampler draws path m from substream m of a fixed stream, so results
// do not depend on how many workers run the paths.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "fracdiff/mixture.hpp"
#include "fracdiff/rng.hpp"
#include "fracdiff/spectral.hpp"

namespace fracdiff {

/// Stream ids; substream = path index.
namespace streams {
inline constexpr std::uint32_t kSubordinator = 0;
inline constexpr std::uint32_t kSpatial = 1;
inline constexpr std::uint32_t kLaplace = 2;
inline constexpr std::uint32_t kCtrw = 16;  // kCtrw + level for a ladder of scales
}  // namespace streams

/// Standard positive beta-stable S with E[e^{-sS}] = e^{-s^beta} (Kanter).
double sample_positive_stable(double beta, RngStream& rng);

/// dt^{1/beta} S: the increment of a beta-stable subordinator over operational time dt.
double sample_stable_increment(double beta, double dt, RngStream& rng);

/// Symmetric alpha-stable X with E[e^{i xi X}] = e^{-|xi|^alpha}; alpha = 2 is N(0, 2).
double sample_symmetric_stable(double alpha, RngStream& rng);

/// W(k dt), k = 0..K, with W(0) = 0.
struct SubordinatorPath {
    double step = 0;
    std::vector<double> values;

    double horizon() const { return step * double(values.size() - 1); }
};

/// W = sum_j c_j W^{beta_j} on the grid k dt covering [0, horizon].
SubordinatorPath sample_multiterm_path(const FiniteAtoms& atoms, double horizon, double dt, RngStream& rng);

/// dt * min{k : W(k dt) > t}. Throws InsufficientHorizonError when the path stays at or below t.
double sample_inverse_subordinator(const SubordinatorPath& path, double t);

/// Replaces a continuous density by Gauss-Legendre atoms in beta with matching psi-coefficients;
/// atomic measures are returned unchanged.
FiniteAtoms atomize(const MixingMeasure& measure, int nodes = 32);

/// Walks W forward from 0 and records the first-passage times of an increasing list of levels,
/// without storing the path. Level 0 maps to E = 0.
class FirstPassageWalker {
public:
    FirstPassageWalker(const FiniteAtoms& atoms, double dt, double max_operational_time = 1e4);

    /// E_t for each t in `levels` (nondecreasing, nonnegative).
    std::vector<double> passage_times(const std::vector<double>& levels, RngStream& rng) const;

    /// As passage_times, also returning the operational indices at which W first exceeds each
    /// real time s_i = i * real_step, i >= 1, up to the last level.
    std::vector<double> passage_times(const std::vector<double>& levels, double real_step,
                                      std::vector<std::uint64_t>& crossing_steps, RngStream& rng) const;

    double step() const { return dt_; }

private:
    std::vector<double> beta_;
    std::vector<double> scale_;  // c_j dt^{1/beta_j}
    double dt_;
    std::uint64_t max_steps_;
};

struct KilledPosition {
    double position;
    bool alive;
};

/// Runs symmetric alpha-stable motion from x0 for operational time tau in steps of dx_step
/// (last step shortened), killed at the first grid time it is outside the open interval.
KilledPosition sample_killed_stable_position(double alpha, const IntervalDomaind& domain, double tau, double x0,
                                             double dx_step, RngStream& rng);

/// Which killing event the estimator uses. Operational: X killed when it leaves D before
/// operational time E_t. TimeChanged: X(E_s) is monitored on a real-time grid s = i dt.
enum class KillingRule { Operational, TimeChanged };

struct McOptions {
    std::size_t paths = 100000;
    double dt_op = 1e-3;    // Delta: operational step of the subordinator
    double dx_step = 1e-3;  // delta: step of the killed spatial motion
    std::uint64_t seed = 1;
    unsigned workers = 1;
    KillingRule rule = KillingRule::Operational;
    double max_operational_time = 1e4;
};

struct McEstimate {
    double mean = 0;
    double std_error = 0;
    std::size_t paths = 0;
    double dt_op = 0;
    double dx_step = 0;
    /// Same paths with the exit check made only every second step (or real-time grid point).
    double coarse_mean = 0;
    /// Standard error of the per-path (fine - coarse) difference.
    double coarse_shift_std_error = 0;
};

using Datum = std::function<double(double)>;

/// E_x[f(X(E_t)) 1(alive at E_t)] for every (t, f) pair from one pass over the paths:
/// result[i][j] belongs to times[i], data[j].
std::vector<std::vector<McEstimate>> mc_solution_batch(const std::vector<Datum>& data, double x0,
                                                       const std::vector<double>& times, double alpha,
                                                       const IntervalDomaind& domain, const MixingMeasure& measure,
                                                       const McOptions& options);

McEstimate mc_solution(const Datum& f, double x0, double t, double alpha, const IntervalDomaind& domain,
                       const MixingMeasure& measure, const McOptions& options);

/// Mean of e^{-s W(t)} for every (t, s): result[i][j] belongs to times[i], rates[j]. W(t) is
/// drawn exactly from the stable scaling, paths on stream kLaplace.
std::vector<std::vector<McEstimate>> laplace_functional_mc(const FiniteAtoms& atoms, const std::vector<double>& times,
                                                           const std::vector<double>& rates, std::size_t paths,
                                                           std::uint64_t seed, unsigned workers = 1);

/// paths independent draws of E_t (path m on substream m of kSubordinator).
std::vector<double> inverse_subordinator_samples(const MixingMeasure& measure, double t, double dt, std::size_t paths,
                                                 std::uint64_t seed, unsigned workers = 1);

/// Draws the order B of a waiting time from mu normalized to a probability.
class OrderSampler {
public:
    explicit OrderSampler(const MixingMeasure& measure);
    double operator()(RngStream& rng) const;
    bool deterministic() const { return values_.size() == 1; }

private:
    bool atomic_;
    std::vector<double> values_;  // atom orders, or beta nodes of the inverse-CDF table
    std::vector<double> cdf_;
};

struct CtrwResult {
    std::uint64_t jumps;  // N_t^c
    double scaled;        // N_t^c / c
};

/// Waiting time with P(J > u | B = beta) = c^{-1} u^{-beta} for u >= c^{-1/beta}, 1 below.
double sample_waiting_time(double beta, double c, RngStream& rng);

/// One CTRW run: waiting times J = (c U)^{-1/B}, N_t^c = max{n : J_1 + ... + J_n <= t}.
CtrwResult ctrw_simulate(const OrderSampler& orders, double c, double t, RngStream& rng);
CtrwResult ctrw_simulate(const MixingMeasure& measure, double c, double t, RngStream& rng);

/// runs independent draws of c^{-1} N_t^c on the given stream.
std::vector<double> ctrw_samples(const MixingMeasure& measure, double c, double t, std::size_t runs,
                                 std::uint64_t seed, std::uint32_t stream = streams::kCtrw, unsigned workers = 1);

/// Atoms of the subordinator that is the scaling limit of the CTRW: the waiting-time tail
/// c^{-1} int u^{-beta} mu(d beta)/mu(0,1) gives psi(s) = sum_j p_j Gamma(1 - beta_j) s^{beta_j}.
FiniteAtoms ctrw_limit_atoms(const MixingMeasure& measure, int nodes = 32);

/// sup |F_a - F_b| of two empirical distributions (ties handled).
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// 1.36 sqrt((n + m)/(n m)): the 5% critical value of the two-sample statistic.
double ks_noise_level(std::size_t n, std::size_t m);

}  // namespace fracdiff
