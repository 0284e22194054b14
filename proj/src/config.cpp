#include "fracdiff/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace fracdiff {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string where(const std::string& key, int line) {
    std::string out = "config: key '" + key + "'";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    return out;
}

/// Removes a trailing # comment that is not inside a string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'; });
}

double parse_number(std::string text, const std::string& key, int line) {
    // TOML digit separators: 100_000.
    text.erase(std::remove(text.begin(), text.end(), '_'), text.end());
    if (text.empty()) throw ConfigError(where(key, line) + ": missing value");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
        throw ConfigError(where(key, line) + ": cannot read '" + text + "' as a number");
    }
    return v;
}

}  // namespace

ConfigValue parse_config_value(const std::string& raw, const std::string& key, int line) {
    const std::string text = trim(raw);
    if (text.empty()) throw ConfigError(where(key, line) + ": missing value");
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"') throw ConfigError(where(key, line) + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < text.size(); ++i) {
            if (text[i] == '\\' && i + 2 < text.size()) {
                ++i;
                out += text[i] == 'n' ? '\n' : text[i] == 't' ? '\t' : text[i];
            } else {
                out += text[i];
            }
        }
        return out;
    }
    if (text == "true") return true;
    if (text == "false") return false;
    if (text.front() == '[') {
        if (text.back() != ']') throw ConfigError(where(key, line) + ": unterminated array");
        std::vector<double> out;
        std::stringstream items(text.substr(1, text.size() - 2));
        std::string item;
        while (std::getline(items, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;  // trailing comma
            out.push_back(parse_number(item, key, line));
        }
        return out;
    }
    return parse_number(text, key, line);
}

ConfigDocument ConfigDocument::parse(const std::string& text) {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::map<std::string, ConfigEntry>* table = nullptr;  // current [[...]] entry
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.rfind("[[", 0) == 0) {
            if (s.size() < 4 || s.substr(s.size() - 2) != "]]") throw ConfigError("config: line " + std::to_string(line) + ": malformed table header");
            section = trim(s.substr(2, s.size() - 4));
            if (!valid_key(section)) throw ConfigError("config: line " + std::to_string(line) + ": bad table name");
            auto& list = doc.tables[section];
            list.emplace_back();
            table = &list.back();
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("config: line " + std::to_string(line) + ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!valid_key(section)) throw ConfigError("config: line " + std::to_string(line) + ": bad section name");
            table = nullptr;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("config: line " + std::to_string(line) + ": expected key = value");
        const std::string name = trim(s.substr(0, eq));
        const std::string full = section.empty() ? name : section + "." + name;
        if (!valid_key(name)) throw ConfigError(where(full, line) + ": bad key name");
        const std::string value_text = trim(s.substr(eq + 1));
        ConfigEntry entry{parse_config_value(value_text, full, line), line, value_text};
        if (table) {
            if (!table->emplace(name, std::move(entry)).second) throw ConfigError(where(full, line) + ": duplicate key");
        } else if (!doc.values.emplace(full, std::move(entry)).second) {
            throw ConfigError(where(full, line) + ": duplicate key");
        }
    }
    return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str());
}

void ConfigDocument::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("config: override '" + assignment + "' is not key=value");
    const std::string key = trim(assignment.substr(0, eq));
    if (!valid_key(key) || key.find('.') == std::string::npos) {
        throw ConfigError("config: override key '" + key + "' must be section.key");
    }
    const std::string text = trim(assignment.substr(eq + 1));
    values[key] = ConfigEntry{parse_config_value(text, key, 0), 0, text};
}

std::string ConfigDocument::dump() const {
    std::ostringstream os;
    std::string current = "\x01";
    for (const auto& [key, entry] : values) {
        const auto dot = key.rfind('.');
        const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
        if (section != current) {
            if (current != "\x01") os << '\n';
            if (!section.empty()) os << '[' << section << "]\n";
            current = section;
        }
        os << key.substr(dot + 1) << " = " << entry.text << '\n';
    }
    for (const auto& [name, list] : tables) {
        for (const auto& t : list) {
            os << "\n[[" << name << "]]\n";
            for (const auto& [key, entry] : t) os << key << " = " << entry.text << '\n';
        }
    }
    return os.str();
}

namespace {

/// Typed access with key/line in every error; records which keys were consumed.
class Reader {
public:
    explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

    const ConfigEntry* find(const std::string& key) {
        used_.insert(key);
        const auto it = doc_.values.find(key);
        return it == doc_.values.end() ? nullptr : &it->second;
    }
    const ConfigEntry& require(const std::string& key) {
        const ConfigEntry* e = find(key);
        if (!e) throw ConfigError("config: missing required key '" + key + "'");
        return *e;
    }

    static double number(const ConfigEntry& e, const std::string& key) {
        if (const auto* v = std::get_if<double>(&e.value)) return *v;
        throw ConfigError(where(key, e.line) + ": expected a number");
    }
    static std::size_t count(const ConfigEntry& e, const std::string& key) {
        const double v = number(e, key);
        if (!(v >= 0) || v != std::floor(v) || v > 9.0e15) throw ConfigError(where(key, e.line) + ": expected a nonnegative integer");
        return static_cast<std::size_t>(v);
    }
    static std::string string(const ConfigEntry& e, const std::string& key) {
        if (const auto* v = std::get_if<std::string>(&e.value)) return *v;
        throw ConfigError(where(key, e.line) + ": expected a string");
    }
    static std::vector<double> list(const ConfigEntry& e, const std::string& key) {
        if (const auto* v = std::get_if<std::vector<double>>(&e.value)) return *v;
        if (const auto* v = std::get_if<double>(&e.value)) return {*v};
        throw ConfigError(where(key, e.line) + ": expected a number or an array of numbers");
    }

    double number(const std::string& key, double fallback) {
        const ConfigEntry* e = find(key);
        return e ? number(*e, key) : fallback;
    }
    std::size_t count(const std::string& key, std::size_t fallback) {
        const ConfigEntry* e = find(key);
        return e ? count(*e, key) : fallback;
    }
    std::string string(const std::string& key, const std::string& fallback) {
        const ConfigEntry* e = find(key);
        return e ? string(*e, key) : fallback;
    }
    std::vector<double> list(const std::string& key, std::vector<double> fallback) {
        const ConfigEntry* e = find(key);
        return e ? list(*e, key) : fallback;
    }

    void reject_unknown() const {
        for (const auto& [key, entry] : doc_.values) {
            if (!used_.count(key)) throw ConfigError(where(key, entry.line) + ": unknown key");
        }
        for (const auto& [name, list] : doc_.tables) {
            if (name != "measure.atom") {
                const int line = list.empty() || list.front().empty() ? 0 : list.front().begin()->second.line;
                throw ConfigError(where(name, line) + ": unknown table");
            }
        }
    }

private:
    const ConfigDocument& doc_;
    std::set<std::string> used_;
};

void fail(const std::string& key, const ConfigEntry* e, const std::string& why) {
    throw ConfigError(where(key, e ? e->line : 0) + ": " + why);
}

}  // namespace

RunConfig RunConfig::from(const ConfigDocument& doc) {
    Reader in(doc);
    RunConfig c;

    const double a = Reader::number(in.require("domain.a"), "domain.a");
    const double b = Reader::number(in.require("domain.b"), "domain.b");
    if (!(a < b)) fail("domain.b", in.find("domain.b"), "interval must satisfy a < b");
    c.domain = IntervalDomaind(a, b);
    c.alpha = Reader::number(in.require("space.alpha"), "space.alpha");
    if (!(c.alpha > 0 && c.alpha <= 2)) fail("space.alpha", in.find("space.alpha"), "alpha must lie in (0, 2]");

    // Mixing measure.
    const std::string type = Reader::string(in.require("measure.type"), "measure.type");
    const auto atoms_it = doc.tables.find("measure.atom");
    if (type == "atoms") {
        if (atoms_it == doc.tables.end() || atoms_it->second.empty()) {
            throw ConfigError("config: measure.type = \"atoms\" needs at least one [[measure.atom]] table");
        }
        std::vector<Atom> atoms;
        for (const auto& t : atoms_it->second) {
            for (const auto& [k, e] : t) {
                if (k != "beta" && k != "c") fail("measure.atom." + k, &e, "unknown key");
            }
            const auto beta = t.find("beta");
            const auto scale = t.find("c");
            if (beta == t.end()) throw ConfigError("config: missing required key 'measure.atom.beta'");
            atoms.push_back({Reader::number(beta->second, "measure.atom.beta"),
                             scale == t.end() ? 1.0 : Reader::number(scale->second, "measure.atom.c")});
        }
        try {
            c.measure.emplace(FiniteAtoms(std::move(atoms)));
        } catch (const std::exception& ex) {
            throw ConfigError(std::string("config: [[measure.atom]]: ") + ex.what());
        }
    } else if (type == "density") {
        if (atoms_it != doc.tables.end()) throw ConfigError("config: [[measure.atom]] given with measure.type = \"density\"");
        const std::string builtin = Reader::string(in.require("measure.builtin"), "measure.builtin");
        const double b0 = Reader::number(in.require("measure.beta0"), "measure.beta0");
        const double b1 = Reader::number(in.require("measure.beta1"), "measure.beta1");
        const double scale = in.number("measure.scale", 1.0);
        try {
            if (builtin == "uniform") {
                c.measure.emplace(ContinuousDensity::uniform(b0, b1, scale));
            } else if (builtin == "power") {
                c.measure.emplace(ContinuousDensity::power(b0, b1, scale, in.number("measure.exponent", 1.0)));
            } else {
                fail("measure.builtin", in.find("measure.builtin"), "expected \"uniform\" or \"power\"");
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ConfigError(std::string("config: measure: ") + ex.what());
        }
    } else {
        fail("measure.type", in.find("measure.type"), "expected \"atoms\" or \"density\"");
    }

    // Basis.
    const std::string kind = in.string("basis.kind", c.alpha == 2 ? "exact" : "discretized");
    if (kind != "exact" && kind != "discretized") fail("basis.kind", in.find("basis.kind"), "expected \"exact\" or \"discretized\"");
    c.basis.exact = kind == "exact";
    if (c.basis.exact && c.alpha != 2) fail("basis.kind", in.find("basis.kind"), "the exact basis requires space.alpha = 2");
    if (!c.basis.exact && c.alpha == 2) fail("basis.kind", in.find("basis.kind"), "the discretized basis requires space.alpha < 2");
    c.basis.modes = Eigen::Index(in.count("basis.N", c.basis.exact ? 64 : 32));
    c.basis.grid = Eigen::Index(in.count("basis.M", c.basis.exact ? 0 : 512));
    if (c.basis.modes < 1) fail("basis.N", in.find("basis.N"), "need at least one mode");
    if (!c.basis.exact && c.basis.modes > c.basis.grid) fail("basis.N", in.find("basis.N"), "N must not exceed M");

    // Initial datum.
    c.datum.type = in.string("datum.type", "eigenmode");
    if (c.datum.type == "eigenmode") {
        c.datum.k = Eigen::Index(in.count("datum.k", 1));
        if (c.datum.k < 1 || c.datum.k > c.basis.modes) fail("datum.k", in.find("datum.k"), "mode index outside 1..N");
    } else if (c.datum.type == "bump") {
        c.datum.center = in.number("datum.center", (a + b) / 2);
        c.datum.radius = in.number("datum.radius", (b - a) / 4);
        if (!(c.datum.radius > 0)) fail("datum.radius", in.find("datum.radius"), "radius must be positive");
    } else if (c.datum.type != "poly") {
        fail("datum.type", in.find("datum.type"), "expected \"eigenmode\", \"bump\" or \"poly\"");
    }

    // Grids.
    c.t_grid = in.list("grid.t", {0.0, 0.5, 1.0});
    c.x_grid = in.list("grid.x", {(a + b) / 2});
    c.lambda_grid = in.list("grid.lambda", {1.0});
    for (double t : c.t_grid) {
        if (!(t >= 0)) fail("grid.t", in.find("grid.t"), "times must be nonnegative");
    }
    for (double x : c.x_grid) {
        if (!c.domain.closure_contains(x)) fail("grid.x", in.find("grid.x"), "points must lie in the closed interval");
    }
    for (double l : c.lambda_grid) {
        if (!(l >= 0)) fail("grid.lambda", in.find("grid.lambda"), "lambda must be nonnegative");
    }

    // Run and Monte Carlo.
    c.mc.seed = in.count("run.seed", 1);
    c.mc.workers = unsigned(in.count("run.workers", 1));
    if (c.mc.workers < 1) fail("run.workers", in.find("run.workers"), "need at least one worker");
    c.out_dir = in.string("run.out", "out");
    c.mc.paths = in.count("mc.paths", 100000);
    if (c.mc.paths < 2) fail("mc.paths", in.find("mc.paths"), "need at least two paths");
    c.mc.dt_op = in.number("mc.delta_op", 1e-3);
    c.mc.dx_step = in.number("mc.delta_space", 1e-3);
    if (!(c.mc.dt_op > 0)) fail("mc.delta_op", in.find("mc.delta_op"), "must be positive");
    if (!(c.mc.dx_step > 0)) fail("mc.delta_space", in.find("mc.delta_space"), "must be positive");
    const std::string rule = in.string("mc.rule", "operational");
    if (rule == "operational") {
        c.mc.rule = KillingRule::Operational;
    } else if (rule == "time-changed") {
        c.mc.rule = KillingRule::TimeChanged;
    } else {
        fail("mc.rule", in.find("mc.rule"), "expected \"operational\" or \"time-changed\"");
    }
    c.max_paths = in.count("mc.max_paths", 1600000);
    c.z_threshold = in.number("mc.z", 3.0);
    c.se_fraction = in.number("mc.se_fraction", 0.10);
    if (!(c.se_fraction > 0)) fail("mc.se_fraction", in.find("mc.se_fraction"), "must be positive");

    // CTRW.
    c.ctrw_c = in.list("ctrw.c", {1e2, 1e3, 1e4});
    c.ctrw_runs = in.count("ctrw.runs", 100000);
    c.ctrw_t = in.number("ctrw.t", 1.0);
    for (double s : c.ctrw_c) {
        if (!(s > 0)) fail("ctrw.c", in.find("ctrw.c"), "scales must be positive");
    }
    if (!(c.ctrw_t > 0)) fail("ctrw.t", in.find("ctrw.t"), "must be positive");

    // Validation suites.
    c.validate_lambda = in.list("validate.lambda", c.validate_lambda);
    c.initial_times = in.list("validate.initial_times", c.initial_times);
    c.residual.dt = in.number("validate.dt", c.residual.dt);
    c.residual.halvings = int(in.count("validate.halvings", std::size_t(c.residual.halvings)));
    c.residual.window_start = in.number("validate.window_start", 0.1);
    c.residual.horizon = in.number("validate.horizon", c.residual.horizon);
    if (c.residual.dt > 1e-3) fail("validate.dt", in.find("validate.dt"), "residual studies need dt <= 1e-3");

    in.reject_unknown();
    return c;
}

EigenBasisd RunConfig::make_basis() const { return make_basis(basis.grid); }

EigenBasisd RunConfig::make_basis(Eigen::Index grid) const {
    if (basis.exact) {
        return grid > 0 ? eigen_exact_laplace(domain, basis.modes, grid) : eigen_exact_laplace(domain, basis.modes);
    }
    return eigen_fractional(domain, alpha, grid, basis.modes);
}

Datum RunConfig::make_datum(std::shared_ptr<const EigenBasisd> b) const {
    if (datum.type == "eigenmode") return datum::eigenmode(std::move(b), datum.k);
    if (datum.type == "bump") return datum::bump(datum.center, datum.radius);
    return datum::poly(domain);
}

}  // namespace fracdiff
