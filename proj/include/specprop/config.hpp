#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "specprop/common.hpp"
#include "specprop/grid.hpp"
#include "specprop/solver.hpp"
#include "specprop/symbol.hpp"

namespace specprop {

/// Line-based `section.key = value` configuration. Arrays are comma separated,
/// `#` starts a comment. Symbol sections may be named: `symbol.<name>.<field>`.
class Config {
public:
    static const std::map<std::string, std::string>& defaults() {
        static const std::map<std::string, std::string> d = {
            {"symbol.kind", "fractional-laplacian"},
            {"symbol.dimension", "1"},
            {"symbol.gamma", "2"},
            {"symbol.nu", "1"},
            {"symbol.rho", "0"},
            {"symbol.coeffs", ""},
            {"symbol.profile", "0:1"},
            {"grid.d", "1"},
            {"grid.n", "256"},
            {"grid.l", "16"},
            {"ensemble.n", "256"},
            {"ensemble.l", "3.141592653589793"},
            {"time.t", "1"},
            {"time.steps", "256"},
            {"experiment.name", "kernel-decay"},
            {"experiment.a", "0"},
            {"experiment.b", "0"},
            {"experiment.alpha", "0"},
            {"experiment.m", "1"},
            {"experiment.p", "2"},
            {"experiment.family", "lipschitz"},
            {"experiment.gaps", "0.25,0.5,1"},
            {"experiment.bands", "2,3,4"},
            {"experiment.lambda", "0.25"},
            {"experiment.lambda_count", "31"},
            {"experiment.decades", "3"},
            {"experiment.ensemble_size", "30"},
            {"experiment.seed", "1"},
            {"experiment.band_lo", "4"},
            {"experiment.band_hi", "32"},
            {"output.directory", "out"},
            {"output.formats", "csv"},
        };
        return d;
    }

    Config() : values_(defaults()) {}

    static bool is_symbol_field(const std::string& f) {
        static const std::vector<std::string> fields{"kind", "dimension", "gamma", "nu", "rho", "coeffs", "profile"};
        return std::find(fields.begin(), fields.end(), f) != fields.end();
    }

    static bool is_known_key(const std::string& key) {
        if (defaults().count(key)) return true;
        // symbol.<name>.<field>
        if (key.rfind("symbol.", 0) == 0) {
            const auto dot = key.rfind('.');
            return dot > 7 && is_symbol_field(key.substr(dot + 1));
        }
        return false;
    }

    void set(const std::string& key, const std::string& value) {
        if (!is_known_key(key)) throw ConfigurationError("config: unknown key '" + key + "'");
        values_[key] = value;
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    const std::string& get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigurationError("config: missing key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key) const {
        const std::string& v = get(key);
        if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
        try {
            std::size_t used = 0;
            const double x = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigurationError("config: " + key + " = '" + v + "' is not a number");
        }
    }

    long long get_int(const std::string& key) const {
        const std::string& v = get(key);
        try {
            std::size_t used = 0;
            const long long x = std::stoll(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigurationError("config: " + key + " = '" + v + "' is not an integer");
        }
    }

    std::vector<double> get_list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(get(key));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            try {
                out.push_back(std::stod(item));
            } catch (const std::exception&) {
                throw ConfigurationError("config: " + key + " has a non-numeric entry '" + item + "'");
            }
        }
        return out;
    }

    void parse(std::istream& is, const std::string& origin = "<input>") {
        std::string line;
        int number = 0;
        while (std::getline(is, line)) {
            ++number;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigurationError(origin + ":" + std::to_string(number) + ": expected 'section.key = value'");
            const std::string key = trim(line.substr(0, eq));
            if (key.find('.') == std::string::npos)
                throw ConfigurationError(origin + ":" + std::to_string(number) + ": key '" + key + "' lacks a section");
            set(key, trim(line.substr(eq + 1)));
        }
    }

    void load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigurationError("config: cannot open '" + path + "'");
        parse(in, path);
    }

    /// SPECPROP_<SECTION>_<KEY>=value overrides section.key (key lower-cased;
    /// the first underscore after the prefix separates section from key).
    void apply_environment(char** envp) {
        if (envp == nullptr) return;
        for (char** e = envp; *e; ++e) {
            const std::string entry(*e);
            if (entry.rfind("SPECPROP_", 0) != 0) continue;
            const auto eq = entry.find('=');
            if (eq == std::string::npos) continue;
            std::string name = entry.substr(9, eq - 9);
            std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
            const auto us = name.find('_');
            if (us == std::string::npos) continue;
            set(name.substr(0, us) + "." + name.substr(us + 1), entry.substr(eq + 1));
        }
    }

    /// Sorted `key=value` lines; the input of the config hash.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
        return out;
    }

    std::string hash() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
        return buf;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

private:
    std::map<std::string, std::string> values_;
};

/// "0:1, 0.5:0.5" -> pieces (breakpoint:level).
inline TimeProfile parse_profile(const std::string& text) {
    std::vector<TimeProfile::Piece> pieces;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = Config::trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigurationError("profile entry '" + item + "' must be breakpoint:level");
        try {
            pieces.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
        } catch (const std::exception&) {
            throw ConfigurationError("profile entry '" + item + "' is not numeric");
        }
    }
    return TimeProfile(pieces);
}

/// Builds the symbol of section `symbol` (name empty) or `symbol.<name>`; fields
/// missing from a named section fall back to the unnamed one.
inline SymbolSpec symbol_from_config(const Config& c, const std::string& name = "") {
    auto key = [&](const std::string& field) {
        const std::string named = "symbol." + name + "." + field;
        return (!name.empty() && c.has(named)) ? named : "symbol." + field;
    };
    if (!name.empty() && !c.has("symbol." + name + ".kind"))
        throw ConfigurationError("config: symbol section '" + name + "' is not defined (missing symbol." + name + ".kind)");
    const SymbolKind kind = parse_symbol_kind(c.get(key("kind")));
    const int d = static_cast<int>(c.get_int(key("dimension")));
    const double gamma = c.get_double(key("gamma"));
    const double nu = c.get_double(key("nu"));
    const TimeProfile profile = parse_profile(c.get(key("profile")));
    switch (kind) {
        case SymbolKind::FractionalLaplacian: return SymbolSpec::fractional_laplacian(d, gamma, nu, profile);
        case SymbolKind::ComplexRotation:
            return SymbolSpec::complex_rotation(d, gamma, nu, c.get_double(key("rho")), profile);
        case SymbolKind::AnisotropicSum: {
            std::vector<double> coeffs = c.get_list(key("coeffs"));
            if (coeffs.empty()) coeffs.assign(static_cast<std::size_t>(d), 1.0);
            return SymbolSpec::anisotropic_sum(d, gamma, nu, coeffs, profile);
        }
        case SymbolKind::Tabulated:
            throw ConfigurationError("config: tabulated symbols need a callback and cannot be declared in a file");
    }
    throw ConfigurationError("config: unknown symbol kind");
}

inline SpectralGrid grid_from_config(const Config& c) {
    return SpectralGrid(static_cast<int>(c.get_int("grid.d")), static_cast<int>(c.get_int("grid.n")),
                        c.get_double("grid.l"));
}

/// Grid of the random-field ensembles (period 2 pi by default, so the band
/// [4, 32] sits on integer wavenumbers below Nyquist).
inline SpectralGrid ensemble_grid_from_config(const Config& c) {
    return SpectralGrid(static_cast<int>(c.get_int("grid.d")), static_cast<int>(c.get_int("ensemble.n")),
                        c.get_double("ensemble.l"));
}

inline TimeGrid time_from_config(const Config& c) {
    return TimeGrid(c.get_double("time.t"), static_cast<int>(c.get_int("time.steps")));
}

/// Cross-field checks; messages name the offending key.
inline void validate_config(const Config& c) {
    const SymbolSpec spec = symbol_from_config(c);
    const SpectralGrid g = grid_from_config(c);
    time_from_config(c);
    if (spec.dimension() != g.d) throw ConfigurationError("symbol.dimension: differs from grid.d");
    const double p = c.get_double("experiment.p");
    if (!(p > 1)) throw ConfigurationError("experiment.p: must exceed 1");
    const std::string family = c.get("experiment.family");
    parse_norm_family(family);
    if (family == "holder") {
        const double alpha = c.get_double("experiment.alpha");
        if (!(alpha > 0 && alpha < 1)) throw ConfigurationError("experiment.alpha: must lie in (0, 1)");
        if (is_positive_integer(spec.gamma() + alpha))
            throw ConfigurationError("experiment.alpha: gamma + alpha must not be a positive integer");
    }
    static const std::vector<std::string> ensemble_experiments{"norm-equivalence", "smoothing", "verify-estimate",
                                                               "weak11"};
    const bool uses_ensemble = std::find(ensemble_experiments.begin(), ensemble_experiments.end(),
                                         c.get("experiment.name")) != ensemble_experiments.end();
    if (!(c.get_double("experiment.band_lo") > 0 && c.get_double("experiment.band_lo") < c.get_double("experiment.band_hi")))
        throw ConfigurationError("experiment.band_lo: must be positive and below experiment.band_hi");
    const SpectralGrid eg = ensemble_grid_from_config(c);
    if (uses_ensemble && c.get_double("experiment.band_hi") >= eg.nyquist())
        throw ConfigurationError("experiment.band_hi: must be below the ensemble Nyquist frequency " +
                                 std::to_string(eg.nyquist()));
    if (c.get_int("experiment.ensemble_size") < 1) throw ConfigurationError("experiment.ensemble_size: must be >= 1");
    if (!(c.get_double("experiment.m") > 0)) throw ConfigurationError("experiment.m: must be positive");
}

// ---------------------------------------------------------------------------
// CSV tables and atomic output
// ---------------------------------------------------------------------------

/// Formats a double with 17 significant digits in the C locale.
inline std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Comma-separated table with a mandatory header; every row carries the config
/// hash and seed as its last two columns.
class CsvTable {
public:
    CsvTable(std::vector<std::string> header, std::string config_hash, std::uint64_t seed)
        : header_(std::move(header)), hash_(std::move(config_hash)), seed_(seed) {}

    void add(std::vector<std::string> row) {
        if (row.size() != header_.size()) throw ArgumentError("csv: row width differs from the header");
        rows_.push_back(std::move(row));
    }

    std::string str() const {
        std::string out;
        for (const auto& h : header_) out += h + ",";
        out += "config_hash,seed\n";
        for (const auto& r : rows_) {
            for (const auto& v : r) out += v + ",";
            out += hash_ + "," + std::to_string(seed_) + "\n";
        }
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::string hash_;
    std::uint64_t seed_;
};

/// Writes to a temporary sibling and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace specprop
