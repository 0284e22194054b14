#include "fracdiff/validation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace fracdiff {

std::string to_string(Status status) {
    switch (status) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

std::string format_double(double value) {
    std::ostringstream os;
    os << std::setprecision(17) << value;
    return os.str();
}

void ComparisonReport::add_row(std::vector<double> values, bool pass, std::string row_label) {
    if (values.size() != columns.size()) throw ShapeError("ComparisonReport: row width differs from header");
    rows.push_back(std::move(values));
    row_pass.push_back(pass);
    if (!row_label.empty() || !row_labels.empty()) {
        row_labels.resize(rows.size() - 1);
        row_labels.push_back(std::move(row_label));
    }
}

void ComparisonReport::settle() {
    if (status == Status::Inconclusive) return;
    status = std::all_of(row_pass.begin(), row_pass.end(), [](bool p) { return p; }) ? Status::Pass : Status::Fail;
}

std::string ComparisonReport::csv() const {
    std::ostringstream os;
    const bool labelled = !row_labels.empty();
    if (labelled) os << "case,";
    for (const auto& c : columns) os << c << ',';
    os << "pass\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (labelled) os << row_labels[i] << ',';
        for (double v : rows[i]) os << format_double(v) << ',';
        os << (row_pass[i] ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string ComparisonReport::summary() const {
    std::ostringstream os;
    os << label << ": " << to_string(status) << '\n';
    const auto passed_rows = std::count(row_pass.begin(), row_pass.end(), true);
    os << "  points within tolerance: " << passed_rows << " / " << rows.size() << '\n';
    os << "  max discrepancy: " << format_double(max_discrepancy) << '\n';
    if (!std::isnan(max_z)) os << "  max z: " << format_double(max_z) << '\n';
    for (const auto& [k, v] : tolerances) os << "  tolerance " << k << " = " << format_double(v) << '\n';
    for (const auto& [k, v] : metrics) os << "  " << k << " = " << format_double(v) << '\n';
    for (const auto& n : notes) os << "  note: " << n << '\n';
    return os.str();
}

namespace {

struct Levels {
    std::vector<double> steps;
    std::vector<std::size_t> strides;  // level l samples the finest grid every strides[l] nodes
    TimeGrid finest;
};

Levels make_levels(const ResidualOptions& o) {
    if (!(o.dt > 0) || o.halvings < 1) throw DomainError("residual: need a positive step and at least one halving");
    if (!(o.window_start > 0 && o.window_start < o.horizon)) throw DomainError("residual: window must lie inside (0, horizon)");
    const std::size_t finest_stride = std::size_t(1) << o.halvings;
    const double fine_dt = o.dt / double(finest_stride);
    const auto coarse_count = static_cast<std::size_t>(std::llround(o.horizon / o.dt));
    Levels levels{{}, {}, TimeGrid(fine_dt, coarse_count * finest_stride + 1)};
    for (int l = 0; l <= o.halvings; ++l) {
        levels.steps.push_back(o.dt / double(std::size_t(1) << l));
        levels.strides.push_back(finest_stride >> l);
    }
    return levels;
}

Eigen::VectorXd subsample(const Eigen::VectorXd& v, std::size_t stride) {
    const Eigen::Index n = (v.size() - 1) / Eigen::Index(stride) + 1;
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = v(i * Eigen::Index(stride));
    return out;
}

struct WindowMax {
    double value = 0;
    double at = 0;
};

/// max |lhs + rhs| over grid nodes in [start, horizon].
WindowMax window_max(const Eigen::VectorXd& derivative, const Eigen::VectorXd& reaction, double dt, double start) {
    WindowMax m;
    for (Eigen::Index k = 0; k < derivative.size(); ++k) {
        const double t = double(k) * dt;
        if (t < start - 1e-12) continue;
        const double r = std::abs(derivative(k) + reaction(k));
        if (r > m.value) {
            m.value = r;
            m.at = t;
        }
    }
    return m;
}

void declare_residual_tolerances(ComparisonReport& r, const ResidualOptions& o, double expected) {
    r.tolerances = {{"dt", o.dt},
                    {"halvings", double(o.halvings)},
                    {"window_start", o.window_start},
                    {"horizon", o.horizon},
                    {"expected_order", expected}};
}

}  // namespace

ComparisonReport residual_eigen(const HEvaluator& h, double lambda, const ResidualOptions& options) {
    if (!(lambda >= 0)) throw DomainError("residual_eigen: lambda must be nonnegative");
    const Levels levels = make_levels(options);
    const MixingMeasure& measure = h.measure();
    const double expected = 2.0 - measure.beta_max();

    ComparisonReport r;
    r.label = "eigenrelation lambda=" + format_double(lambda);
    r.columns = {"lambda", "dt", "max_residual", "t_at_max", "observed_order"};
    declare_residual_tolerances(r, options, expected);
    r.tolerances.push_back({"order_tolerance", options.order_tolerance});

    Eigen::VectorXd samples(levels.finest.size());
    for (std::size_t k = 0; k < levels.finest.size(); ++k) samples(Eigen::Index(k)) = h(levels.finest[k], lambda);

    std::vector<double> maxima;
    for (std::size_t l = 0; l < levels.steps.size(); ++l) {
        const Eigen::VectorXd u = subsample(samples, levels.strides[l]);
        const TimeGrid grid(levels.steps[l], std::size_t(u.size()));
        const Eigen::VectorXd lhs = distributed_order_derivative(u, grid, measure);
        const WindowMax m = window_max(lhs, lambda * u, grid.dt(), options.window_start);
        maxima.push_back(m.value);
        r.max_discrepancy = std::max(r.max_discrepancy, m.value);
        double order = std::numeric_limits<double>::quiet_NaN();
        bool pass = true;
        if (l > 0) {
            if (maxima[l] == 0 && maxima[l - 1] == 0) {
                pass = true;  // exact at both resolutions (h constant)
            } else {
                order = std::log2(maxima[l - 1] / maxima[l]);
                pass = std::abs(order - expected) <= options.order_tolerance;
            }
        }
        r.add_row({lambda, grid.dt(), m.value, m.at, order}, pass);
    }
    if (maxima.back() == 0) {
        r.notes.push_back("residual vanishes identically");
    } else {
        r.metrics.push_back({"fitted_constant", maxima.back() / std::pow(levels.steps.back(), expected)});
    }
    r.settle();
    return r;
}

ComparisonReport residual_pde(const SpectralSolutiond& solution, const std::vector<double>& xs,
                              const ResidualOptions& options) {
    const Levels levels = make_levels(options);
    const MixingMeasure& measure = solution.h().measure();
    const double expected = 2.0 - measure.beta_max();
    const double target = std::exp2(expected);
    const auto& basis = solution.basis();
    const auto& coef = solution.coefficients();

    ComparisonReport r;
    r.label = "pde residual";
    r.columns = {"x", "dt", "max_residual", "t_at_max", "reduction_factor"};
    declare_residual_tolerances(r, options, expected);
    r.tolerances.push_back({"ratio_low", target * (1 - options.ratio_tolerance)});
    r.tolerances.push_back({"ratio_high", target * (1 + options.ratio_tolerance)});

    const double largest = coef.size() > 0 ? coef.cwiseAbs().maxCoeff() : 0.0;
    std::vector<Eigen::Index> active;
    for (Eigen::Index n = 0; n < coef.size(); ++n) {
        if (largest > 0 && std::abs(coef(n)) > 1e-14 * largest) active.push_back(n);
    }
    // h(t_k, lambda_n) on the finest grid for the active modes.
    const Eigen::Index nt = Eigen::Index(levels.finest.size());
    Eigen::MatrixXd hs(nt, Eigen::Index(active.size()));
    for (std::size_t j = 0; j < active.size(); ++j) {
        const double lambda = basis.eigenvalue(active[j]);
        for (Eigen::Index k = 0; k < nt; ++k) hs(k, Eigen::Index(j)) = solution.h()(levels.finest[std::size_t(k)], lambda);
    }

    double last_constant = 0;
    for (double x : xs) {
        Eigen::VectorXd weights(Eigen::Index(active.size()));  // fbar(n) phi_n(x)
        Eigen::VectorXd rates(Eigen::Index(active.size()));     // lambda_n fbar(n) phi_n(x)
        for (std::size_t j = 0; j < active.size(); ++j) {
            weights(Eigen::Index(j)) = coef(active[j]) * basis.phi(active[j], x);
            rates(Eigen::Index(j)) = basis.eigenvalue(active[j]) * weights(Eigen::Index(j));
        }
        const Eigen::VectorXd u = hs * weights;
        const Eigen::VectorXd reaction = hs * rates;  // = -(right side)
        std::vector<double> maxima;
        for (std::size_t l = 0; l < levels.steps.size(); ++l) {
            const Eigen::VectorXd ul = subsample(u, levels.strides[l]);
            const TimeGrid grid(levels.steps[l], std::size_t(ul.size()));
            const Eigen::VectorXd lhs = distributed_order_derivative(ul, grid, measure);
            const WindowMax m = window_max(lhs, subsample(reaction, levels.strides[l]), grid.dt(), options.window_start);
            maxima.push_back(m.value);
            r.max_discrepancy = std::max(r.max_discrepancy, m.value);
            double factor = std::numeric_limits<double>::quiet_NaN();
            bool pass = true;
            if (l > 0 && !(maxima[l] == 0 && maxima[l - 1] == 0)) {
                factor = maxima[l - 1] / maxima[l];
                pass = std::abs(factor / target - 1) <= options.ratio_tolerance;
            }
            r.add_row({x, grid.dt(), m.value, m.at, factor}, pass);
        }
        if (maxima.back() > 0) {
            last_constant = std::max(last_constant, maxima.back() / std::pow(levels.steps.back(), expected));
        }
    }
    if (active.empty()) r.notes.push_back("zero datum: residual vanishes identically");
    if (last_constant > 0) r.metrics.push_back({"fitted_constant", last_constant});
    r.metrics.push_back({"modes_used", double(active.size())});
    r.settle();
    return r;
}

namespace {

bool same_measure(const MixingMeasure& a, const MixingMeasure& b) { return a.describe() == b.describe(); }

/// |f(x) - sum fbar(n) phi_n(x)|.
double projection_gap(const McCase& c, double x) {
    const auto& basis = c.series.basis();
    if (!basis.domain().contains(x)) return 0.0;
    return std::abs(c.datum(x) - double(basis.phis(x).dot(c.series.coefficients())));
}

/// sum min(1, lambda_n Delta) |fbar(n) phi_n(x)|.
double overshoot_allowance(const SpectralSolutiond& s, double x, double delta) {
    const auto& basis = s.basis();
    if (!basis.domain().contains(x)) return 0.0;
    double sum = 0;
    for (Eigen::Index n = 0; n < basis.size(); ++n) {
        sum += std::min(1.0, basis.eigenvalue(n) * delta) * std::abs(s.coefficients()(n) * basis.phi(n, x));
    }
    return sum;
}

}  // namespace

ComparisonReport compare_analytic_mc(const std::vector<McCase>& cases,
                                     const std::vector<std::pair<double, double>>& points,
                                     const McComparisonOptions& options) {
    if (cases.empty() || points.empty()) throw PreconditionError("compare_analytic_mc: need at least one case and point");
    const auto& basis0 = cases.front().series.basis();
    const MixingMeasure& measure = cases.front().series.h().measure();
    const IntervalDomaind domain = basis0.domain();
    const double alpha = basis0.alpha();
    for (const auto& c : cases) {
        const auto& b = c.series.basis();
        if (b.alpha() != alpha || b.domain().a != domain.a || b.domain().b != domain.b ||
            !same_measure(c.series.h().measure(), measure)) {
            throw PreconditionError("compare_analytic_mc: cases must share domain, alpha and mixing measure");
        }
    }

    // Group points by starting position; one estimator pass per position covers all times and data.
    std::map<double, std::vector<double>> by_x;
    for (const auto& [t, x] : points) {
        if (!(t >= 0)) throw DomainError("compare_analytic_mc: t must be nonnegative");
        auto& ts = by_x[x];
        if (std::find(ts.begin(), ts.end(), t) == ts.end()) ts.push_back(t);
    }
    std::vector<Datum> data;
    for (const auto& c : cases) data.push_back(c.datum);

    // max |u(t, .)| on the basis grid, per case and time.
    std::map<std::pair<std::size_t, double>, double> scale;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        for (const auto& [t, x] : points) {
            auto key = std::make_pair(i, t);
            if (!scale.count(key)) scale[key] = cases[i].series.profile(t).cwiseAbs().maxCoeff();
        }
    }

    McOptions mc = options.mc;
    std::map<double, std::vector<std::vector<McEstimate>>> estimates;
    bool inconclusive = false;
    for (;;) {
        estimates.clear();
        for (const auto& [x, ts] : by_x) {
            if (domain.contains(x)) {
                estimates[x] = mc_solution_batch(data, x, ts, alpha, domain, measure, mc);
            } else {  // killed at time 0
                McEstimate zero;
                zero.paths = mc.paths;
                zero.dt_op = mc.dt_op;
                zero.dx_step = mc.dx_step;
                estimates[x].assign(ts.size(), std::vector<McEstimate>(data.size(), zero));
            }
        }
        bool enough = true;
        for (const auto& [x, ts] : by_x) {
            for (std::size_t it = 0; it < ts.size(); ++it) {
                for (std::size_t i = 0; i < cases.size(); ++i) {
                    const double s = scale[{i, ts[it]}];
                    if (s > 0 && estimates[x][it][i].std_error > options.se_fraction * s) enough = false;
                }
            }
        }
        if (enough) break;
        if (mc.paths * 2 > options.max_paths) {
            inconclusive = true;
            break;
        }
        mc.paths *= 2;
    }

    ComparisonReport r;
    r.label = "series vs monte carlo";
    r.columns = {"t",          "x",          "series",      "mc",          "std_error",       "coarse_mc",
                 "allow_time", "allow_kill", "allow_tail",  "allow_basis", "allow_projection", "tolerance",
                 "discrepancy", "z",         "paths"};
    r.tolerances = {{"z_threshold", options.z_threshold},
                    {"se_fraction", options.se_fraction},
                    {"dt_op", mc.dt_op},
                    {"dx_step", mc.dx_step},
                    {"max_paths", double(options.max_paths)}};
    r.max_z = 0;
    const double richardson = 1.0 / (std::sqrt(2.0) - 1.0);
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const McCase& c = cases[i];
        for (const auto& [t, x] : points) {
            const auto& ts = by_x[x];
            const std::size_t it = std::size_t(std::find(ts.begin(), ts.end(), t) - ts.begin());
            const McEstimate& e = estimates[x][it][i];
            const SeriesValue sv = c.series.evaluate(t, x);
            const double lambda_n = c.series.basis().eigenvalue(c.series.basis().size() - 1);
            const double allow_time = t > 0 ? overshoot_allowance(c.series, x, mc.dt_op) : 0.0;
            const double allow_kill = richardson * std::abs(e.mean - e.coarse_mean);
            const double allow_basis = c.refined ? std::abs((*c.refined)(t, x) - sv.value) : 0.0;
            const double allow_projection = (t > 0 ? c.series.h()(t, lambda_n) : 1.0) * projection_gap(c, x);
            const double allowance = allow_time + allow_kill + sv.tail_bound + allow_basis + allow_projection;
            const double tolerance = options.z_threshold * e.std_error + allowance;
            const double diff = std::abs(sv.value - e.mean);
            // No spread (t = 0 or outside D): the comparison is deterministic and has no z-score.
            const double z = e.std_error > 0 ? diff / e.std_error : std::numeric_limits<double>::quiet_NaN();
            r.max_discrepancy = std::max(r.max_discrepancy, diff);
            if (!std::isnan(z)) r.max_z = std::max(r.max_z, z);
            r.add_row({t, x, sv.value, e.mean, e.std_error, e.coarse_mean, allow_time, allow_kill, sv.tail_bound,
                       allow_basis, allow_projection, tolerance, diff, z, double(e.paths)},
                      diff <= tolerance, c.label);
        }
    }
    r.metrics.push_back({"paths", double(mc.paths)});
    if (inconclusive) {
        r.status = Status::Inconclusive;
        r.notes.push_back("standard error stayed above " + format_double(options.se_fraction) +
                          " of max|u| at the path cap");
    }
    r.settle();
    return r;
}

ComparisonReport ctrw_convergence(const MixingMeasure& measure, double t, const std::vector<double>& c_ladder,
                                  const CtrwOptions& options) {
    if (c_ladder.size() < 3) throw PreconditionError("ctrw_convergence: need at least three scales");
    for (std::size_t i = 1; i < c_ladder.size(); ++i) {
        if (!(c_ladder[i] > c_ladder[i - 1])) throw PreconditionError("ctrw_convergence: scales must increase");
    }
    if (!(t > 0)) throw DomainError("ctrw_convergence: t must be positive");

    ComparisonReport r;
    r.label = "ctrw convergence t=" + format_double(t);
    r.columns = {"c", "ks", "noise_level", "rise"};
    r.tolerances = {{"runs", double(options.runs)}, {"dt_op", options.dt_op}, {"allowed_rises", 1.0}};

    const FiniteAtoms limit = ctrw_limit_atoms(measure);
    const std::vector<double> reference =
        inverse_subordinator_samples(limit, t, options.dt_op, options.runs, options.seed, options.workers);
    auto degenerate = [](const std::vector<double>& v) {
        return v.empty() || std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
    };
    bool inconclusive = degenerate(reference);

    const double noise = ks_noise_level(options.runs, options.runs);
    int rises = 0;
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t level = 0; level < c_ladder.size(); ++level) {
        const double c = c_ladder[level];
        const std::vector<double> scaled =
            ctrw_samples(measure, c, t, options.runs, options.seed, streams::kCtrw + std::uint32_t(level), options.workers);
        if (degenerate(scaled)) inconclusive = true;
        const double ks = ks_two_sample(scaled, reference);
        const double rise = std::isfinite(previous) ? std::max(0.0, ks - previous) : 0.0;
        bool pass = true;
        if (rise > 0) {
            ++rises;
            pass = rises <= 1 && rise <= noise;
        }
        r.max_discrepancy = std::max(r.max_discrepancy, ks);
        r.add_row({c, ks, noise, rise}, pass);
        previous = ks;
    }
    r.metrics.push_back({"rises", double(rises)});
    if (inconclusive) {
        r.status = Status::Inconclusive;
        r.notes.push_back("a sample is degenerate (all values equal)");
    }
    r.settle();
    return r;
}

namespace {

double grid_norm(const EigenBasisd& basis, const Eigen::VectorXd& v) { return std::sqrt(basis.spacing() * v.squaredNorm()); }

void check_samples(const SpectralSolutiond& s, const Eigen::VectorXd& f, const char* where) {
    if (f.size() != s.basis().grid_size()) throw ShapeError(std::string(where) + ": datum samples differ from basis grid");
}

}  // namespace

ComparisonReport decay_estimate_report(const SpectralSolutiond& solution, const Eigen::VectorXd& f_samples,
                                       const std::vector<double>& times, double allowance) {
    check_samples(solution, f_samples, "decay_estimate_report");
    const double f_norm = grid_norm(solution.basis(), f_samples);
    const double lambda1 = solution.basis().eigenvalue(0);

    ComparisonReport r;
    r.label = "decay estimate";
    r.columns = {"t", "u_norm", "h_lambda1", "bound"};
    r.tolerances = {{"allowance", allowance}};
    r.metrics = {{"f_norm", f_norm}, {"lambda1", lambda1}};
    for (double t : times) {
        const double u_norm = solution.l2_norm(t);
        const double h1 = t > 0 ? solution.h()(t, lambda1) : 1.0;
        const double bound = h1 * f_norm + allowance;
        r.max_discrepancy = std::max(r.max_discrepancy, std::max(0.0, u_norm - h1 * f_norm));
        r.add_row({t, u_norm, h1, bound}, u_norm <= bound);
    }
    r.settle();
    return r;
}

ComparisonReport initial_datum_report(const SpectralSolutiond& solution, const Eigen::VectorXd& f_samples,
                                      const std::vector<double>& times, double tail_fraction) {
    check_samples(solution, f_samples, "initial_datum_report");
    const auto& basis = solution.basis();
    const auto& coef = solution.coefficients();
    const double f_norm = grid_norm(basis, f_samples);
    const double f_sq = f_norm * f_norm;

    // Parseval tail rule: the first n0 whose remainder drops below tail_fraction ||f||^2.
    Eigen::Index n0 = basis.size() - 1;
    double head = 0;
    for (Eigen::Index n = 0; n < basis.size(); ++n) {
        head += coef(n) * coef(n);
        if (f_sq - head < tail_fraction * f_sq) {
            n0 = n;
            break;
        }
    }
    double eps = 0;
    for (Eigen::Index n = 0; n <= n0; ++n) eps += coef(n) * coef(n);
    eps = std::max(0.0, f_sq - eps);
    const double lambda_n0 = basis.eigenvalue(n0);
    const double rounding = 1e-12 * f_norm;

    ComparisonReport r;
    r.label = "initial datum";
    r.columns = {"t", "distance", "h_lambda_n0", "bound"};
    r.tolerances = {{"tail_fraction", tail_fraction}, {"rounding", rounding}};
    r.metrics = {{"n0", double(n0 + 1)}, {"lambda_n0", lambda_n0}, {"tail_eps", eps}, {"f_norm", f_norm}};
    double previous = std::numeric_limits<double>::infinity();
    for (double t : times) {
        const double distance = grid_norm(basis, solution.profile(t) - f_samples);
        const double hn0 = t > 0 ? solution.h()(t, lambda_n0) : 1.0;
        const double bound = (1 - hn0) * f_norm + std::sqrt(eps) + rounding;
        r.max_discrepancy = std::max(r.max_discrepancy, distance);
        r.add_row({t, distance, hn0, bound}, distance <= bound && distance < previous);
        previous = distance;
    }
    r.notes.push_back("distance must shrink from each time to the next (times listed in decreasing order)");
    r.settle();
    return r;
}

ComparisonReport decay_order_report(const SpectralSolutiond& solution, int k) {
    const DecayReport d = coefficient_decay_check(solution.coefficients(), solution.basis(), k);
    ComparisonReport r;
    r.label = "coefficient decay";
    r.columns = {"k", "fitted_exponent", "full_range_exponent", "window_start", "points_used", "phi_exponent",
                 "phi_reference"};
    r.tolerances = {{"required_exponent", -double(k)}};
    r.add_row({double(k), d.fitted_exponent, d.full_range_exponent, double(d.window_start), double(d.points_used),
               d.phi_exponent, d.phi_reference},
              d.meets_order);
    r.max_discrepancy = std::max(0.0, d.fitted_exponent + double(k));
    r.metrics = {{"phi_exponent_minus_reference", d.phi_exponent - d.phi_reference}};
    r.notes.push_back("sup-norm growth against lambda^(1/(2 alpha)) is reported, not checked");
    if (d.degenerate) r.notes.push_back(d.note);
    r.settle();
    return r;
}

}  // namespace fracdiff
