#include "fracdiff/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>

#include "fracdiff/errors.hpp"
#include "fracdiff/quadrature.hpp"
#include "fracdiff/special_functions.hpp"

namespace fracdiff {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Runs body(m) for m in [0, count) on `workers` threads, each owning a contiguous block.
// The first failure by path index is rethrown with the path index attached.
template <typename Body>
void for_each_path(std::size_t count, unsigned workers, const char* where, Body&& body) {
    workers = std::max(1u, std::min<unsigned>(workers, unsigned(std::max<std::size_t>(count, 1))));
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::size_t> failed_at(workers, count);
    auto run_block = [&](unsigned w) {
        const std::size_t lo = count * w / workers;
        const std::size_t hi = count * (w + 1) / workers;
        for (std::size_t m = lo; m < hi; ++m) {
            try {
                body(m);
            } catch (...) {
                errors[w] = std::current_exception();
                failed_at[w] = m;
                return;
            }
        }
    };
    if (workers == 1) {
        run_block(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run_block, w);
        for (auto& th : pool) th.join();
    }
    for (unsigned w = 0; w < workers; ++w) {
        if (!errors[w]) continue;
        try {
            std::rethrow_exception(errors[w]);
        } catch (const InsufficientHorizonError& e) {
            throw InsufficientHorizonError(std::string(where) + ": path " + std::to_string(failed_at[w]) + ": " +
                                           e.what());
        } catch (const std::exception& e) {
            throw NumericalError(std::string(where) + ": path " + std::to_string(failed_at[w]) + ": " + e.what());
        }
    }
}

// Mean and standard error of samples in index order.
struct Moments {
    double mean = 0;
    double std_error = 0;
};

template <typename Get>
Moments moments(std::size_t n, Get&& get) {
    double sum = 0, comp = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double x = get(m);
        const double t = sum + x;
        comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    Moments out;
    out.mean = (sum + comp) / double(n);
    double ss = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double d = get(m) - out.mean;
        ss += d * d;
    }
    out.std_error = n > 1 ? std::sqrt(ss / double(n - 1) / double(n)) : 0.0;
    return out;
}

void check_beta(double beta, const char* where) {
    if (!(beta > 0 && beta < 1)) throw DomainError(std::string(where) + ": beta must lie in (0, 1), got " + fmt(beta));
}

}  // namespace

// ------------------------------------------------------------------ stable variates

double sample_positive_stable(double beta, RngStream& rng) {
    check_beta(beta, "sample_positive_stable");
    const double u = kPi * rng.uniform();
    const double e = rng.exponential();
    const double a = std::sin(beta * u) / std::pow(std::sin(u), 1.0 / beta);
    const double b = std::pow(std::sin((1.0 - beta) * u) / e, (1.0 - beta) / beta);
    return a * b;
}

double sample_stable_increment(double beta, double dt, RngStream& rng) {
    if (!(dt > 0)) throw DomainError("sample_stable_increment: step must be positive");
    return std::pow(dt, 1.0 / beta) * sample_positive_stable(beta, rng);
}

double sample_symmetric_stable(double alpha, RngStream& rng) {
    if (!(alpha > 0 && alpha <= 2)) throw DomainError("sample_symmetric_stable: alpha must lie in (0, 2]");
    if (alpha == 2) return std::numbers::sqrt2 * rng.normal();
    const double v = kPi * (rng.uniform() - 0.5);
    const double w = rng.exponential();
    if (alpha == 1) return std::tan(v);
    return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

// ------------------------------------------------------------------ subordinators

SubordinatorPath sample_multiterm_path(const FiniteAtoms& atoms, double horizon, double dt, RngStream& rng) {
    if (!(dt > 0)) throw DomainError("sample_multiterm_path: step must be positive");
    if (!(horizon > 0)) throw DomainError("sample_multiterm_path: horizon must be positive");
    const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    std::vector<double> scale;
    for (const auto& a : atoms.atoms()) scale.push_back(a.c * std::pow(dt, 1.0 / a.beta));
    SubordinatorPath path{dt, std::vector<double>(steps + 1, 0.0)};
    double w = 0;
    for (std::size_t k = 1; k <= steps; ++k) {
        for (std::size_t j = 0; j < atoms.size(); ++j) w += scale[j] * sample_positive_stable(atoms[j].beta, rng);
        path.values[k] = w;
    }
    return path;
}

double sample_inverse_subordinator(const SubordinatorPath& path, double t) {
    if (!(t > 0)) throw DomainError("sample_inverse_subordinator: t must be positive");
    const auto it = std::upper_bound(path.values.begin(), path.values.end(), t);
    if (it == path.values.end()) {
        throw InsufficientHorizonError("sample_inverse_subordinator: W stays below t = " + fmt(t) +
                                       " up to operational time " + fmt(path.horizon()));
    }
    return path.step * double(it - path.values.begin());
}

FiniteAtoms atomize(const MixingMeasure& measure, int nodes) {
    if (measure.is_atomic()) return measure.atoms();
    const auto& d = measure.density();
    const auto rule = gauss_legendre<double>(nodes);
    const double half = (d.beta1() - d.beta0()) / 2;
    const double mid = (d.beta1() + d.beta0()) / 2;
    std::vector<Atom> atoms;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const double beta = mid + half * rule.nodes(i);
        const double psi_coefficient = half * rule.weights(i) * d(beta) * gamma(1.0 - beta);
        if (psi_coefficient > 0) atoms.push_back({beta, std::pow(psi_coefficient, 1.0 / beta)});
    }
    return FiniteAtoms(std::move(atoms));
}

FirstPassageWalker::FirstPassageWalker(const FiniteAtoms& atoms, double dt, double max_operational_time)
    : dt_(dt) {
    if (!(dt > 0)) throw DomainError("FirstPassageWalker: step must be positive");
    for (const auto& a : atoms.atoms()) {
        beta_.push_back(a.beta);
        scale_.push_back(a.c * std::pow(dt, 1.0 / a.beta));
    }
    max_steps_ = static_cast<std::uint64_t>(std::ceil(max_operational_time / dt));
}

std::vector<double> FirstPassageWalker::passage_times(const std::vector<double>& levels, RngStream& rng) const {
    std::vector<std::uint64_t> unused;
    return passage_times(levels, 0.0, unused, rng);
}

std::vector<double> FirstPassageWalker::passage_times(const std::vector<double>& levels, double real_step,
                                                      std::vector<std::uint64_t>& crossing_steps,
                                                      RngStream& rng) const {
    std::vector<double> out(levels.size(), 0.0);
    crossing_steps.clear();
    if (levels.empty()) return out;
    for (std::size_t i = 1; i < levels.size(); ++i) {
        if (levels[i] < levels[i - 1]) throw DomainError("FirstPassageWalker: levels must be nondecreasing");
    }
    if (levels.front() < 0) throw DomainError("FirstPassageWalker: levels must be nonnegative");
    std::size_t next = 0;
    while (next < levels.size() && levels[next] == 0) ++next;  // E_0 = 0
    double w = 0;
    std::uint64_t real_index = 1;  // next real-time grid point s = real_index * real_step
    for (std::uint64_t k = 1; next < levels.size(); ++k) {
        if (k > max_steps_) {
            throw InsufficientHorizonError("FirstPassageWalker: W stays below t = " + fmt(levels[next]) +
                                           " up to operational time " + fmt(double(max_steps_) * dt_));
        }
        for (std::size_t j = 0; j < beta_.size(); ++j) w += scale_[j] * sample_positive_stable(beta_[j], rng);
        if (real_step > 0 && double(real_index) * real_step < w && double(real_index) * real_step <= levels.back()) {
            crossing_steps.push_back(k);
            real_index = static_cast<std::uint64_t>(std::floor(w / real_step)) + 1;
        }
        while (next < levels.size() && levels[next] < w) out[next++] = dt_ * double(k);
    }
    return out;
}

// ------------------------------------------------------------------ killed motion

KilledPosition sample_killed_stable_position(double alpha, const IntervalDomaind& domain, double tau, double x0,
                                             double dx_step, RngStream& rng) {
    if (!domain.contains(x0)) throw DomainError("sample_killed_stable_position: x0 = " + fmt(x0) + " not in D");
    if (!(tau >= 0)) throw DomainError("sample_killed_stable_position: tau must be nonnegative");
    if (!(dx_step > 0)) throw DomainError("sample_killed_stable_position: step must be positive");
    if (!(alpha > 0 && alpha <= 2)) throw DomainError("sample_killed_stable_position: alpha must lie in (0, 2]");
    const double unit = std::pow(dx_step, 1.0 / alpha);
    const auto full = static_cast<std::uint64_t>(std::floor(tau / dx_step * (1 + 1e-12)));
    double x = x0;
    for (std::uint64_t k = 0; k < full; ++k) {
        x += unit * sample_symmetric_stable(alpha, rng);
        if (!domain.contains(x)) return {x, false};
    }
    const double rest = tau - double(full) * dx_step;
    if (rest > 1e-12 * dx_step) {
        x += std::pow(rest, 1.0 / alpha) * sample_symmetric_stable(alpha, rng);
        if (!domain.contains(x)) return {x, false};
    }
    return {x, true};
}

// ------------------------------------------------------------------ estimator

std::vector<std::vector<McEstimate>> mc_solution_batch(const std::vector<Datum>& data, double x0,
                                                       const std::vector<double>& times, double alpha,
                                                       const IntervalDomaind& domain, const MixingMeasure& measure,
                                                       const McOptions& options) {
    if (!domain.closure_contains(x0)) {
        throw DomainError("mc_solution: x0 = " + fmt(x0) + " lies outside the closed domain");
    }
    if (!(alpha > 0 && alpha <= 2)) throw DomainError("mc_solution: alpha must lie in (0, 2]");
    if (options.paths < 2) throw DomainError("mc_solution: need at least two paths");
    if (!(options.dt_op > 0) || !(options.dx_step > 0)) throw DomainError("mc_solution: steps must be positive");
    for (double t : times) {
        if (!(t >= 0)) throw DomainError("mc_solution: times must be nonnegative");
    }
    const std::size_t n_times = times.size();
    const std::size_t n_data = data.size();

    // Work on sorted times; map back at the end.
    std::vector<std::size_t> order(n_times);
    for (std::size_t i = 0; i < n_times; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });
    std::vector<double> levels;
    for (std::size_t i : order) levels.push_back(times[i]);

    const bool time_changed = options.rule == KillingRule::TimeChanged;
    std::uint64_t ratio = 0;  // spatial steps per operational step
    if (time_changed) {
        const double r = options.dt_op / options.dx_step;
        ratio = static_cast<std::uint64_t>(std::llround(r));
        if (ratio < 1 || std::abs(r - double(ratio)) > 1e-9 * r) {
            throw DomainError("mc_solution: the time-changed killing rule needs dt_op to be a multiple of dx_step");
        }
    }

    const FiniteAtoms atoms = atomize(measure);
    const FirstPassageWalker walker(atoms, options.dt_op, options.max_operational_time);
    const double unit = std::pow(options.dx_step, 1.0 / alpha);
    const bool inside_start = domain.contains(x0);

    // Per path: fine and coarse value for each (sorted time, datum).
    const std::size_t stride = n_times * n_data;
    std::vector<double> fine(options.paths * stride, 0.0), coarse(options.paths * stride, 0.0);

    for_each_path(options.paths, options.workers, "mc_solution", [&](std::size_t m) {
        if (!inside_start) return;  // boundary start: killed at once
        RngStream sub(options.seed, streams::kSubordinator, std::uint32_t(m));
        RngStream space(options.seed, streams::kSpatial, std::uint32_t(m));
        std::vector<std::uint64_t> crossings;
        const std::vector<double> passage = time_changed
                                                ? walker.passage_times(levels, options.dt_op, crossings, sub)
                                                : walker.passage_times(levels, sub);
        double* row_fine = fine.data() + m * stride;
        double* row_coarse = coarse.data() + m * stride;

        double x = x0;
        double tau = 0;
        std::uint64_t step = 0;  // spatial steps taken
        bool alive_fine = true, alive_coarse = true;
        std::size_t next_crossing = 0;  // time-changed rule: index into crossings

        auto record = [&](std::size_t i) {
            const bool inside = domain.contains(x);
            for (std::size_t j = 0; j < n_data; ++j) {
                const double fx = inside ? data[j](x) : 0.0;
                row_fine[i * n_data + j] = alive_fine && inside ? fx : 0.0;
                row_coarse[i * n_data + j] = alive_coarse && inside ? fx : 0.0;
            }
        };
        auto monitor = [&]() {
            const bool inside = domain.contains(x);
            if (inside) return;
            if (time_changed) {
                // Checked only at operational times reached by E_s on the real-time grid;
                // the coarse variant uses every second grid point.
                while (next_crossing < crossings.size() && crossings[next_crossing] * ratio < step) ++next_crossing;
                if (next_crossing < crossings.size() && crossings[next_crossing] * ratio == step) {
                    alive_fine = false;
                    if (next_crossing % 2 == 1) alive_coarse = false;
                }
            } else {
                alive_fine = false;
                if (step % 2 == 0) alive_coarse = false;
            }
        };

        for (std::size_t i = 0; i < n_times; ++i) {
            const double target = passage[i];
            if (alive_coarse) {
                const auto full = static_cast<std::uint64_t>(std::floor((target - tau) / options.dx_step * (1 + 1e-12)));
                for (std::uint64_t k = 0; k < full && alive_coarse; ++k) {
                    x += unit * sample_symmetric_stable(alpha, space);
                    ++step;
                    tau = double(step) * options.dx_step;
                    monitor();
                }
                const double rest = target - tau;
                if (alive_coarse && rest > 1e-9 * options.dx_step) {
                    // Shortened step to land on E_t; always monitored by both variants.
                    x += std::pow(rest, 1.0 / alpha) * sample_symmetric_stable(alpha, space);
                    tau = target;
                    if (!domain.contains(x)) alive_fine = alive_coarse = false;
                }
            }
            record(i);
        }
    });

    std::vector<std::vector<McEstimate>> out(n_times, std::vector<McEstimate>(n_data));
    for (std::size_t s = 0; s < n_times; ++s) {
        for (std::size_t j = 0; j < n_data; ++j) {
            const std::size_t col = s * n_data + j;
            const auto f = moments(options.paths, [&](std::size_t m) { return fine[m * stride + col]; });
            const auto c = moments(options.paths, [&](std::size_t m) { return coarse[m * stride + col]; });
            const auto d = moments(options.paths,
                                   [&](std::size_t m) { return fine[m * stride + col] - coarse[m * stride + col]; });
            McEstimate& e = out[order[s]][j];
            e.mean = f.mean;
            e.std_error = f.std_error;
            e.paths = options.paths;
            e.dt_op = options.dt_op;
            e.dx_step = options.dx_step;
            e.coarse_mean = c.mean;
            e.coarse_shift_std_error = d.std_error;
        }
    }
    return out;
}

McEstimate mc_solution(const Datum& f, double x0, double t, double alpha, const IntervalDomaind& domain,
                       const MixingMeasure& measure, const McOptions& options) {
    return mc_solution_batch({f}, x0, {t}, alpha, domain, measure, options)[0][0];
}

std::vector<std::vector<McEstimate>> laplace_functional_mc(const FiniteAtoms& atoms, const std::vector<double>& times,
                                                           const std::vector<double>& rates, std::size_t paths,
                                                           std::uint64_t seed, unsigned workers) {
    if (paths < 2) throw DomainError("laplace_functional_mc: need at least two paths");
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty() || !(sorted.front() > 0)) throw DomainError("laplace_functional_mc: times must be positive");
    const std::size_t n_t = times.size(), n_s = rates.size();
    std::vector<double> w_at(paths * n_t);
    for_each_path(paths, workers, "laplace_functional_mc", [&](std::size_t m) {
        RngStream rng(seed, streams::kLaplace, std::uint32_t(m));
        double w = 0, prev = 0;
        std::vector<double> at_sorted(n_t);
        for (std::size_t i = 0; i < n_t; ++i) {
            const double dt = sorted[i] - prev;
            if (dt > 0) {
                for (const auto& a : atoms.atoms()) w += a.c * sample_stable_increment(a.beta, dt, rng);
            }
            prev = sorted[i];
            at_sorted[i] = w;
        }
        for (std::size_t i = 0; i < n_t; ++i) {
            const auto pos = std::lower_bound(sorted.begin(), sorted.end(), times[i]) - sorted.begin();
            w_at[m * n_t + i] = at_sorted[pos];
        }
    });
    std::vector<std::vector<McEstimate>> out(n_t, std::vector<McEstimate>(n_s));
    for (std::size_t i = 0; i < n_t; ++i) {
        for (std::size_t j = 0; j < n_s; ++j) {
            const auto mom = moments(paths, [&](std::size_t m) { return std::exp(-rates[j] * w_at[m * n_t + i]); });
            auto& e = out[i][j];
            e.mean = e.coarse_mean = mom.mean;
            e.std_error = mom.std_error;
            e.paths = paths;
        }
    }
    return out;
}

std::vector<double> inverse_subordinator_samples(const MixingMeasure& measure, double t, double dt, std::size_t paths,
                                                 std::uint64_t seed, unsigned workers) {
    if (!(t > 0)) throw DomainError("inverse_subordinator_samples: t must be positive");
    const FiniteAtoms atoms = atomize(measure);
    const FirstPassageWalker walker(atoms, dt);
    std::vector<double> out(paths);
    for_each_path(paths, workers, "inverse_subordinator_samples", [&](std::size_t m) {
        RngStream rng(seed, streams::kSubordinator, std::uint32_t(m));
        out[m] = walker.passage_times({t}, rng)[0];
    });
    return out;
}

// ------------------------------------------------------------------ CTRW

OrderSampler::OrderSampler(const MixingMeasure& measure) : atomic_(measure.is_atomic()) {
    if (atomic_) {
        const auto& a = measure.atoms();
        double total = 0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            values_.push_back(a[j].beta);
            total += a.mu_weight(j);
            cdf_.push_back(total);
        }
        for (double& c : cdf_) c /= total;
        cdf_.back() = 1.0;
        return;
    }
    // Inverse CDF tabulated at 10^4 intervals; cumulative mass by 4-point Gauss per cell.
    const auto& d = measure.density();
    constexpr int kCells = 10000;
    const auto rule = gauss_legendre<double>(4);
    values_.resize(kCells + 1);
    cdf_.resize(kCells + 1);
    const double width = (d.beta1() - d.beta0()) / kCells;
    double total = 0;
    values_[0] = d.beta0();
    cdf_[0] = 0;
    for (int i = 0; i < kCells; ++i) {
        const double lo = d.beta0() + i * width;
        total += integrate_fixed(rule, [&](double b) { return d(b); }, lo, lo + width);
        values_[i + 1] = lo + width;
        cdf_[i + 1] = total;
    }
    if (!(total > 0) || !std::isfinite(total)) throw NumericalError("OrderSampler: density mass not finite and positive");
    for (double& c : cdf_) c /= total;
    cdf_.back() = 1.0;
    values_.back() = std::min(values_.back(), std::nextafter(1.0, 0.0));
}

double OrderSampler::operator()(RngStream& rng) const {
    if (values_.size() == 1) return values_[0];
    const double u = rng.uniform();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t i = std::size_t(it - cdf_.begin());
    if (atomic_) return values_[std::min(i, values_.size() - 1)];
    if (i == 0) return values_[0];
    const double f = (u - cdf_[i - 1]) / (cdf_[i] - cdf_[i - 1]);
    return values_[i - 1] + f * (values_[i] - values_[i - 1]);
}

double sample_waiting_time(double beta, double c, RngStream& rng) {
    check_beta(beta, "sample_waiting_time");
    if (!(c > 0)) throw DomainError("sample_waiting_time: scale c must be positive");
    return std::pow(c * rng.uniform(), -1.0 / beta);
}

CtrwResult ctrw_simulate(const OrderSampler& orders, double c, double t, RngStream& rng) {
    if (!(c > 0)) throw DomainError("ctrw_simulate: scale c must be positive");
    if (!(t > 0)) throw DomainError("ctrw_simulate: t must be positive");
    double clock = 0;
    std::uint64_t n = 0;
    if (orders.deterministic()) {
        const double inv = -1.0 / orders(rng);
        for (;;) {
            clock += std::pow(c * rng.uniform(), inv);
            if (clock > t) break;
            ++n;
        }
    } else {
        for (;;) {
            const double beta = orders(rng);
            clock += std::pow(c * rng.uniform(), -1.0 / beta);
            if (clock > t) break;
            ++n;
        }
    }
    return {n, double(n) / c};
}

CtrwResult ctrw_simulate(const MixingMeasure& measure, double c, double t, RngStream& rng) {
    return ctrw_simulate(OrderSampler(measure), c, t, rng);
}

std::vector<double> ctrw_samples(const MixingMeasure& measure, double c, double t, std::size_t runs,
                                 std::uint64_t seed, std::uint32_t stream, unsigned workers) {
    const OrderSampler orders(measure);
    std::vector<double> out(runs);
    for_each_path(runs, workers, "ctrw_samples", [&](std::size_t m) {
        RngStream rng(seed, stream, std::uint32_t(m));
        out[m] = ctrw_simulate(orders, c, t, rng).scaled;
    });
    return out;
}

FiniteAtoms ctrw_limit_atoms(const MixingMeasure& measure, int nodes) {
    const FiniteAtoms base = atomize(measure, nodes);
    double total = 0;
    for (std::size_t j = 0; j < base.size(); ++j) total += base.mu_weight(j);
    std::vector<Atom> atoms;
    for (std::size_t j = 0; j < base.size(); ++j) {
        const double beta = base[j].beta;
        const double psi_coefficient = base.mu_weight(j) / total * gamma(1.0 - beta);
        atoms.push_back({beta, std::pow(psi_coefficient, 1.0 / beta)});
    }
    return FiniteAtoms(std::move(atoms));
}

// ------------------------------------------------------------------ two-sample statistic

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = double(a.size()), nb = double(b.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    return d;
}

double ks_noise_level(std::size_t n, std::size_t m) {
    return 1.36 * std::sqrt(double(n + m) / (double(n) * double(m)));
}

}  // namespace fracdiff
