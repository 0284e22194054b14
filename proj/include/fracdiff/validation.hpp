#pragma once

// Cross-checks between the independent computations: residuals of the discrete time
// operator against the spectral identity, series vs Monte Carlo, CTRW vs the inverse
// subordinator, and the L2 decay / initial-datum properties of the series solution.
//
// Every check returns a ComparisonReport: a table of points, each with its own declared
// tolerance, and a status that is Pass exactly when every point is within tolerance.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracdiff/speckit.hpp"
#include "fracdiff/spectral.hpp"
#include "fracdiff/stochastic.hpp"

namespace fracdiff {

enum class Status { Pass, Fail, Inconclusive };

std::string to_string(Status status);

struct ComparisonReport {
    std::string label;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> row_labels;  // optional leading "case" column
    std::vector<bool> row_pass;
    double max_discrepancy = 0;
    double max_z = std::numeric_limits<double>::quiet_NaN();  // stochastic comparisons only
    std::vector<std::pair<std::string, double>> tolerances;
    std::vector<std::pair<std::string, double>> metrics;
    std::vector<std::string> notes;
    Status status = Status::Pass;

    bool passed() const { return status == Status::Pass; }
    void add_row(std::vector<double> values, bool pass, std::string row_label = {});
    /// Pass iff every row passed; an Inconclusive status is kept.
    void settle();
    /// Header plus one line per row; numbers with 17 significant digits.
    std::string csv() const;
    std::string summary() const;
};

/// Decimal with 17 significant digits (round-trips a double exactly).
std::string format_double(double value);

struct ResidualOptions {
    double dt = 1e-3;            // coarsest step; each halving adds a level
    int halvings = 2;
    double horizon = 2.0;
    double window_start = 0.05;  // the weak singularity at t = 0 dominates before this
    double order_tolerance = 0.15;  // residual_eigen: |observed - (2 - beta_max)|
    double ratio_tolerance = 0.10;  // residual_pde: relative band around 2^{2 - beta_max}
};

/// max over the window of |D^(nu) h + lambda h| with the L1 scheme, at each step size, and the
/// observed self-convergence orders. Passes when every order is within order_tolerance of
/// 2 - beta_max.
ComparisonReport residual_eigen(const HEvaluator& h, double lambda, const ResidualOptions& options = {});

/// The same study for u(., x) of a series solution at each x: left side by the L1 scheme on
/// samples of u, right side by the spectral identity sum -lambda_n fbar(n) h(t, lambda_n) phi_n(x).
/// Passes when every halving reduces the residual by 2^{2 - beta_max} within ratio_tolerance.
/// Modes whose coefficient is below 1e-14 of the largest are left out of both sides.
ComparisonReport residual_pde(const SpectralSolutiond& solution, const std::vector<double>& xs,
                              const ResidualOptions& options = {});

/// One initial datum for the Monte Carlo comparison: its series solution, the function handed to
/// the estimator, and optionally the series on a refined basis (its difference joins the allowance).
struct McCase {
    std::string label;
    SpectralSolutiond series;
    Datum datum;
    std::optional<SpectralSolutiond> refined;
};

struct McComparisonOptions {
    McOptions mc;
    double z_threshold = 3.0;
    double se_fraction = 0.10;         // SE must stay below this fraction of max|u(t, .)|
    std::size_t max_paths = 1600000;  // path count is doubled up to this cap
};

/// |series - mc| <= z SE + allowance at each (t, x). The allowance adds
///   sum min(1, lambda_n Delta)|fbar(n) phi_n(x)|  (operational grid overshoot of E_t),
///   |fine - coarse| / (sqrt 2 - 1)                (Richardson estimate of the killing bias),
///   the series tail bound, the refined-basis difference, and
///   h(t, lambda_N) |f(x) - sum fbar(n) phi_n(x)|  (the part of f outside the basis).
/// All cases must share domain, alpha and mixing measure.
ComparisonReport compare_analytic_mc(const std::vector<McCase>& cases,
                                     const std::vector<std::pair<double, double>>& points,
                                     const McComparisonOptions& options);

struct CtrwOptions {
    std::size_t runs = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    double dt_op = 1e-3;  // operational step for the E_t reference samples
};

/// Two-sample KS distance between c^{-1} N_t^c and E_t of the limit subordinator along the
/// c-ladder. Passes when the sequence is nonincreasing except for at most one rise, and that
/// rise no larger than the 5% two-sample noise level.
ComparisonReport ctrw_convergence(const MixingMeasure& measure, double t, const std::vector<double>& c_ladder,
                                  const CtrwOptions& options);

/// ||u(t, .)||_2 <= h(t, lambda_1) ||f||_2 + allowance at each t.
ComparisonReport decay_estimate_report(const SpectralSolutiond& solution, const Eigen::VectorXd& f_samples,
                                       const std::vector<double>& times, double allowance = 1e-6);

/// ||u(t, .) - f||_2 at the given times against (1 - h(t, lambda_n0)) ||f||_2 + sqrt(eps), where n0
/// is the first mode with ||f||^2 - sum_{n<=n0} fbar(n)^2 < tail_fraction ||f||^2 and eps is that
/// remainder. Also requires the distance to shrink as t decreases (times in decreasing order).
ComparisonReport initial_datum_report(const SpectralSolutiond& solution, const Eigen::VectorXd& f_samples,
                                      const std::vector<double>& times, double tail_fraction = 1e-6);

/// Coefficient decay and sup-norm growth as a report; fails when the envelope exponent
/// exceeds -k. The sup-norm comparison is informational.
ComparisonReport decay_order_report(const SpectralSolutiond& solution, int k);

}  // namespace fracdiff
