#include "fracdiff/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "fracdiff/config.hpp"
#include "fracdiff/validation.hpp"

namespace fracdiff::cli {

namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kSuites = {"eigenrelation", "pde-residual", "mc-cross", "ctrw", "decay", "initial-datum"};

struct Context {
    RunConfig config;
    ConfigDocument doc;
    fs::path out;
    std::vector<std::string> files;

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (out / name).string());
        f << content;
        files.push_back(name);
    }
};

std::string csv_line(std::initializer_list<double> values) {
    std::string s;
    for (double v : values) {
        if (!s.empty()) s += ',';
        s += format_double(v);
    }
    return s + '\n';
}

SpectralSolutiond make_solution(const RunConfig& c, std::shared_ptr<const EigenBasisd> basis) {
    const Datum f = c.make_datum(basis);
    return SpectralSolutiond(basis, phi_transform(basis->sample(f), *basis), HEvaluator::for_measure(*c.measure));
}

Status cmd_eigen(Context& ctx) {
    const auto basis = ctx.config.make_basis();
    std::ostringstream values, functions;
    values << "n,lambda\n";
    for (Eigen::Index n = 0; n < basis.size(); ++n) values << n + 1 << ',' << format_double(basis.eigenvalue(n)) << '\n';
    functions << "x";
    for (Eigen::Index n = 0; n < basis.size(); ++n) functions << ",phi_" << n + 1;
    functions << '\n';
    for (double x : ctx.config.x_grid) {
        functions << format_double(x);
        for (Eigen::Index n = 0; n < basis.size(); ++n) functions << ',' << format_double(basis.phi(n, x));
        functions << '\n';
    }
    ctx.write("eigen.csv", values.str());
    ctx.write("eigenfunctions.csv", functions.str());
    return Status::Pass;
}

Status cmd_h_eval(Context& ctx) {
    const auto h = HEvaluator::for_measure(*ctx.config.measure);
    std::ostringstream os;
    os << "t,lambda,h,method\n";
    for (double t : ctx.config.t_grid) {
        for (double lambda : ctx.config.lambda_grid) {
            os << format_double(t) << ',' << format_double(lambda) << ',' << format_double(h(t, lambda)) << ','
               << h.method() << '\n';
        }
    }
    ctx.write("h.csv", os.str());
    return Status::Pass;
}

Status cmd_solve(Context& ctx) {
    const auto basis = std::make_shared<const EigenBasisd>(ctx.config.make_basis());
    const auto u = make_solution(ctx.config, basis);
    std::ostringstream os;
    os << "t,x,u\n";
    for (double t : ctx.config.t_grid) {
        for (double x : ctx.config.x_grid) os << csv_line({t, x, u(t, x)});
    }
    ctx.write("solution.csv", os.str());
    return Status::Pass;
}

Status cmd_simulate(Context& ctx) {
    const auto& c = ctx.config;
    std::shared_ptr<const EigenBasisd> basis;
    if (c.datum.type == "eigenmode") basis = std::make_shared<const EigenBasisd>(c.make_basis());
    const Datum f = c.make_datum(basis);
    std::ostringstream os;
    os << "x,t,estimate,stderr,M,delta_op,delta_space\n";
    for (double x : c.x_grid) {
        const auto est = mc_solution_batch({f}, x, c.t_grid, c.alpha, c.domain, *c.measure, c.mc);
        for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
            const McEstimate& e = est[i][0];
            os << csv_line({x, c.t_grid[i], e.mean, e.std_error, double(e.paths), e.dt_op, e.dx_step});
        }
    }
    ctx.write("simulate.csv", os.str());
    return Status::Pass;
}

Status cmd_ctrw(Context& ctx) {
    const auto& c = ctx.config;
    std::ostringstream os;
    os << "c,run,N_t,scaled\n";
    for (std::size_t level = 0; level < c.ctrw_c.size(); ++level) {
        const double scale = c.ctrw_c[level];
        const auto samples = ctrw_samples(*c.measure, scale, c.ctrw_t, c.ctrw_runs, c.mc.seed,
                                          streams::kCtrw + std::uint32_t(level), c.mc.workers);
        for (std::size_t r = 0; r < samples.size(); ++r) {
            os << format_double(scale) << ',' << r << ',' << std::llround(samples[r] * scale) << ','
               << format_double(samples[r]) << '\n';
        }
    }
    ctx.write("ctrw.csv", os.str());
    return Status::Pass;
}

/// Stacks reports with identical columns into one.
ComparisonReport merge(const std::vector<ComparisonReport>& parts, const std::string& label) {
    ComparisonReport r;
    r.label = label;
    r.columns = parts.front().columns;
    r.tolerances = parts.front().tolerances;
    bool inconclusive = false;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < p.rows.size(); ++i) r.add_row(p.rows[i], p.row_pass[i], p.row_labels.empty() ? "" : p.row_labels[i]);
        r.max_discrepancy = std::max(r.max_discrepancy, p.max_discrepancy);
        for (const auto& [k, v] : p.metrics) r.metrics.push_back({p.label + ": " + k, v});
        for (const auto& n : p.notes) r.notes.push_back(p.label + ": " + n);
        inconclusive = inconclusive || p.status == Status::Inconclusive;
    }
    if (inconclusive) r.status = Status::Inconclusive;
    r.settle();
    return r;
}

ComparisonReport run_suite(const std::string& suite, const RunConfig& c) {
    if (suite == "eigenrelation") {
        const auto h = HEvaluator::for_measure(*c.measure);
        std::vector<ComparisonReport> parts;
        for (double lambda : c.validate_lambda) parts.push_back(residual_eigen(h, lambda, c.residual));
        return merge(parts, "eigenrelation");
    }
    if (suite == "ctrw") {
        CtrwOptions o;
        o.runs = c.ctrw_runs;
        o.seed = c.mc.seed;
        o.workers = c.mc.workers;
        o.dt_op = c.mc.dt_op;
        return ctrw_convergence(*c.measure, c.ctrw_t, c.ctrw_c, o);
    }
    const auto basis = std::make_shared<const EigenBasisd>(c.make_basis());
    const auto u = make_solution(c, basis);
    if (suite == "pde-residual") return residual_pde(u, c.x_grid, c.residual);
    if (suite == "decay") return decay_estimate_report(u, basis->sample(c.make_datum(basis)), c.t_grid);
    if (suite == "initial-datum") return initial_datum_report(u, basis->sample(c.make_datum(basis)), c.initial_times);
    // mc-cross
    McCase mc_case{c.datum.type, u, c.make_datum(basis), std::nullopt};
    if (!c.basis.exact) {
        const auto fine = std::make_shared<const EigenBasisd>(c.make_basis(2 * c.basis.grid));
        mc_case.refined = make_solution(c, fine);
    }
    std::vector<std::pair<double, double>> points;
    for (double t : c.t_grid) {
        for (double x : c.x_grid) points.emplace_back(t, x);
    }
    McComparisonOptions o;
    o.mc = c.mc;
    o.z_threshold = c.z_threshold;
    o.se_fraction = c.se_fraction;
    o.max_paths = std::max(c.max_paths, c.mc.paths);
    return compare_analytic_mc({mc_case}, points, o);
}

int exit_code(Status s) {
    switch (s) {
        case Status::Pass: return kOk;
        case Status::Fail: return kValidationFailed;
        case Status::Inconclusive: return kInconclusive;
    }
    return kError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Series and Monte Carlo solutions of fractional diffusion on an interval", "fracdiff"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::vector<std::string> sets;
    std::string suite;
    for (const char* name : {"eigen", "h-eval", "solve", "simulate", "ctrw", "validate"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "run-config file")->required();
        sub->add_option("--seed", seed, "random seed (overrides run.seed)");
        sub->add_option("--out", out_dir, "output directory (overrides run.out)");
        sub->add_option("--set", sets, "key=value override, repeatable");
        if (std::string(name) == "validate") {
            sub->add_option("suite", suite, "eigenrelation | pde-residual | mc-cross | ctrw | decay | initial-datum")
                ->required()
                ->check(CLI::IsMember(kSuites));
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        Context ctx;
        ctx.doc = ConfigDocument::load(config_path);
        for (const auto& s : sets) ctx.doc.set(s);
        if (seed) ctx.doc.set("run.seed=" + std::to_string(*seed));
        if (!out_dir.empty()) ctx.doc.values["run.out"] = ConfigEntry{out_dir, 0, '"' + out_dir + '"'};
        ctx.config = RunConfig::from(ctx.doc);
        ctx.out = ctx.config.out_dir;
        fs::create_directories(ctx.out);

        Status status = Status::Pass;
        std::string report_text;
        if (command == "eigen") {
            status = cmd_eigen(ctx);
        } else if (command == "h-eval") {
            status = cmd_h_eval(ctx);
        } else if (command == "solve") {
            status = cmd_solve(ctx);
        } else if (command == "simulate") {
            status = cmd_simulate(ctx);
        } else if (command == "ctrw") {
            status = cmd_ctrw(ctx);
        } else {
            const ComparisonReport report = run_suite(suite, ctx.config);
            report_text = report.summary();
            ctx.write(suite + ".csv", report.csv());
            ctx.write(suite + "_summary.txt", report_text);
            status = report.status;
        }

        std::ostringstream summary;
        summary << "command: " << command << (suite.empty() ? "" : " " + suite) << '\n';
        summary << "status: " << to_string(status) << '\n';
        summary << "measure: " << ctx.config.measure->describe() << '\n';
        summary << "files:";
        for (const auto& f : ctx.files) summary << ' ' << f;
        summary << "\n\n";
        if (!report_text.empty()) summary << report_text << '\n';
        summary << "# effective configuration\n" << ctx.doc.dump();
        ctx.write("summary.txt", summary.str());
        out << command << (suite.empty() ? "" : " " + suite) << ": " << to_string(status) << " -> " << ctx.out.string()
            << '\n';
        return exit_code(status);
    } catch (const std::exception& e) {
        err << "error: " << command << ": " << e.what() << '\n';
        return kError;
    }
}

}  // namespace fracdiff::cli
