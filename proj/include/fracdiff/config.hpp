#pragma once

// Run configuration: a small TOML subset (sections, [[array.of.tables]], scalar and
// one-line numeric array values, # comments) and the validated RunConfig built from it.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "fracdiff/mixture.hpp"
#include "fracdiff/spectral.hpp"
#include "fracdiff/stochastic.hpp"
#include "fracdiff/validation.hpp"

namespace fracdiff {

/// Malformed or inconsistent configuration; the message names the key and, when it came from
/// a file, the line.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ConfigValue = std::variant<double, std::string, bool, std::vector<double>>;

struct ConfigEntry {
    ConfigValue value;
    int line = 0;  // 0 for command-line overrides
    std::string text;  // value as written
};

/// Flat view of a parsed file: "section.key" -> entry, plus the arrays of tables.
struct ConfigDocument {
    std::map<std::string, ConfigEntry> values;
    std::map<std::string, std::vector<std::map<std::string, ConfigEntry>>> tables;

    static ConfigDocument parse(const std::string& text);
    static ConfigDocument load(const std::string& path);

    /// Applies "key=value"; the key shadows any value from the file.
    void set(const std::string& assignment);
    /// Canonical text form (sections sorted, tables last).
    std::string dump() const;
};

ConfigValue parse_config_value(const std::string& text, const std::string& key, int line);

struct BasisSpec {
    bool exact = true;
    Eigen::Index modes = 64;
    Eigen::Index grid = 0;  // 0: default for the kind
};

struct DatumSpec {
    std::string type = "eigenmode";  // eigenmode | bump | poly
    Eigen::Index k = 1;
    double center = 0;
    double radius = 1;
};

struct RunConfig {
    IntervalDomaind domain{0.0, 1.0};
    double alpha = 2.0;
    std::optional<MixingMeasure> measure;
    DatumSpec datum;
    BasisSpec basis;
    std::vector<double> t_grid;
    std::vector<double> x_grid;
    std::vector<double> lambda_grid;
    McOptions mc;
    std::vector<double> ctrw_c;
    std::size_t ctrw_runs = 100000;
    double ctrw_t = 1.0;
    std::vector<double> validate_lambda{1.0, 5.0};
    std::vector<double> initial_times{1e-1, 1e-2, 1e-3};
    ResidualOptions residual;
    double z_threshold = 3.0;
    double se_fraction = 0.10;
    std::size_t max_paths = 1600000;
    std::string out_dir = "out";

    /// Reads and cross-checks every field; unknown keys are errors.
    static RunConfig from(const ConfigDocument& doc);

    /// Eigenbasis of the configured kind (M grid points, N modes).
    EigenBasisd make_basis() const;
    /// The same basis kind on a grid of the given size (refinement studies).
    EigenBasisd make_basis(Eigen::Index grid) const;
    Datum make_datum(std::shared_ptr<const EigenBasisd> basis) const;
};

}  // namespace fracdiff
