#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specprop/specprop.hpp"

extern char** environ;

namespace {

using namespace specprop;

constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

struct Globals {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
};

Config load_config(const Globals& g) {
    Config c;
    if (!g.config_path.empty()) c.load(g.config_path);
    c.apply_environment(environ);
    if (g.seed) c.set("experiment.seed", std::to_string(*g.seed));
    return c;
}

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = Config::trim(item);
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigurationError(flag + ": '" + item + "' is not a number");
        }
    }
    return out;
}

/// Warns when `dir` already holds artifacts produced under a different config hash.
void flag_replay(const std::filesystem::path& dir, const std::string& hash) {
    std::ifstream in(dir / "summary.txt");
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("config_hash=", 0) == 0 && line.substr(12) != hash)
            std::cerr << "warning: " << dir.string() << " holds artifacts from config " << line.substr(12)
                      << ", replacing with " << hash << "\n";
}

void emit(const Globals& g, const Config& c, const Bundle& b) {
    if (g.out.empty()) return;
    flag_replay(g.out, c.hash());
    write_bundle(b, g.out);
}

int cmd_validate_symbol(const Globals& g, const std::string& symbol) {
    const Config c = load_config(g);
    const auto report = validate_symbol(symbol_from_config(c, symbol));
    const std::string text = format_report(report);
    std::cout << text;
    emit(g, c, {{{"validation.txt", text}}, text, report.passed});
    return report.passed ? 0 : kExitFail;
}

int cmd_kernel_norms(const Globals& g, const std::string& symbol, int a, double b, const std::string& alpha_text,
                     const std::string& gaps_text) {
    Config c = load_config(g);
    const SymbolSpec spec = symbol_from_config(c, symbol);
    const SpectralGrid grid = grid_from_config(c);
    std::array<int, 3> alpha{0, 0, 0};
    const auto al = parse_list(alpha_text, "--alpha");
    if (static_cast<int>(al.size()) > spec.dimension()) throw ConfigurationError("--alpha: more entries than dimensions");
    for (std::size_t i = 0; i < al.size(); ++i) {
        if (al[i] < 0 || al[i] != std::floor(al[i])) throw ConfigurationError("--alpha: entries must be integers >= 0");
        alpha[i] = static_cast<int>(al[i]);
    }
    const auto gaps = gaps_text.empty() ? c.get_list("experiment.gaps") : parse_list(gaps_text, "--gaps");
    if (gaps.empty()) throw ConfigurationError("--gaps: empty list");
    double slope = 0;
    const std::string csv =
        detail::kernel_norm_table(spec, grid, a, b, alpha, gaps, c.get_double("time.t"), c.hash(),
                                  static_cast<std::uint64_t>(c.get_int("experiment.seed")), &slope)
            .str();
    std::cout << csv;
    std::ostringstream sum;
    sum << "config_hash=" << c.hash() << "\nslope=" << fmt(slope) << "\nexpected_slope=" << fmt(-a - b / spec.gamma())
        << "\n";
    emit(g, c, {{{"kernel_norms.csv", csv}, {"summary.txt", sum.str()}}, sum.str(), true});
    return 0;
}

/// `gaussian[:width]`, `random[:lo:hi]`, `bump[:t_center:t_halfwidth:x_width]`,
/// `ensemble:<index>`, or a path to a space-time dump.
SpacetimeField make_forcing(const std::string& text, const Config& c, const SpectralGrid& grid, const TimeGrid& tg) {
    if (std::filesystem::exists(text)) {
        std::ifstream in(text, std::ios::binary);
        return io::read_spacetime_binary(in);
    }
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.empty()) throw ConfigurationError("--f: empty generator");
    auto num = [&](std::size_t i, double fallback) {
        return i < parts.size() ? parse_list(parts[i], "--f").at(0) : fallback;
    };
    const std::uint64_t seed = static_cast<std::uint64_t>(c.get_int("experiment.seed"));
    auto constant_in_time = [&](const Field& base) {
        SpacetimeField f(tg, grid);
        for (auto& s : f.slices) s = base;
        return f;
    };
    if (parts[0] == "gaussian") return constant_in_time(gaussian_bump(grid, num(1, 1.0)));
    if (parts[0] == "random") return constant_in_time(band_limited_random(grid, num(1, 1.0), num(2, 4.0), seed));
    if (parts[0] == "bump") {
        BumpParams bp;
        bp.t_center = num(1, tg.horizon / 2);
        bp.t_halfwidth = num(2, tg.horizon / 4);
        bp.x_width = num(3, 2.0);
        return compact_bump_spacetime(grid, tg, bp);
    }
    if (parts[0] == "ensemble") {
        EnsembleSpec e;
        e.grid = grid;
        e.time = tg;
        e.band_lo = c.get_double("experiment.band_lo");
        e.band_hi = c.get_double("experiment.band_hi");
        e.seed = seed;
        return make_member(e, static_cast<int>(num(1, 0)));
    }
    throw ConfigurationError("--f: unknown generator '" + parts[0] + "' and no such file");
}

int cmd_solve(const Globals& g, const std::string& symbol, const std::string& forcing, int steps) {
    Config c = load_config(g);
    if (steps > 0) c.set("time.steps", std::to_string(steps));
    const SymbolSpec spec = symbol_from_config(c, symbol);
    const SpacetimeField f = make_forcing(forcing, c, grid_from_config(c), time_from_config(c));
    if (spec.dimension() != f.grid().d) throw ConfigurationError("--f: field dimension differs from the symbol");
    const SolveResult r = solve_mild(spec, f, g.threads);
    CsvTable norms({"t", "max_abs", "l2"}, c.hash(), static_cast<std::uint64_t>(c.get_int("experiment.seed")));
    for (int k = 0; k <= r.u.time.steps; ++k)
        norms.add({fmt(r.u.time.time(k)), fmt(max_abs(r.u.slices[k])), fmt(l2_norm(r.u.slices[k]))});
    std::ostringstream sum;
    sum << "config_hash=" << c.hash() << "\nsteps=" << r.steps << "\ninner_quadrature=" << r.inner_quadrature
        << "\nmax_abs_propagator="
        << fmt(*std::max_element(r.max_abs_propagator.begin(), r.max_abs_propagator.end()))
        << "\nmin_re_integral=" << fmt(*std::min_element(r.min_re_integral.begin(), r.min_re_integral.end()))
        << "\nsup_u=" << fmt(std::accumulate(r.u.slices.begin(), r.u.slices.end(), 0.0,
                                             [](double m, const Field& s) { return std::max(m, max_abs(s)); }))
        << "\n";
    std::cout << sum.str();
    std::ostringstream dump;
    io::write_binary(dump, r.u);
    emit(g, c, {{{"u.bin", dump.str()}, {"u_norms.csv", norms.str()}, {"summary.txt", sum.str()}}, sum.str(), true});
    return 0;
}

int cmd_norms(const Globals& g, const std::string& input, double m, double p, const std::string& route) {
    const Config c = load_config(g);
    if (route != "lp" && route != "fd" && route != "both") throw ConfigurationError("--route: expected lp, fd or both");
    if (!(m > 0)) throw ConfigurationError("--m: must be positive");
    if (!(p > 1)) throw ConfigurationError("--p: must exceed 1");
    std::ifstream in(input, std::ios::binary);
    if (!in) throw ConfigurationError("--input: cannot open '" + input + "'");
    // a single-field dump has a 20-byte header and 16 bytes per sample
    const auto size = std::filesystem::file_size(input);
    std::vector<Field> slices;
    double dt = 1.0;
    {
        std::optional<Field> probe;
        try {
            probe = io::read_binary(in);
        } catch (const ConfigurationError&) {
        }
        if (probe && 20 + 16 * probe->size() == size) {
            slices.push_back(std::move(*probe));
        } else {
            in.clear();
            in.seekg(0);
            SpacetimeField f = io::read_spacetime_binary(in);
            dt = f.time.dt();
            slices = std::move(f.slices);
        }
    }
    for (auto& s : slices)
        if (s.space == Space::Frequency) s = inverse_transform(s);
    const SpectralGrid& grid = slices.front().grid;
    const LPBank bank = build_bank(grid, highest_band(grid));
    std::vector<NormReport> reps;
    for (const auto& s : slices) reps.push_back(norm_report(bank, s, m));
    auto over_time = [&](auto get) {
        std::vector<double> v;
        for (const auto& r : reps) {
            v.push_back(get(r));
            if (std::isnan(v.back())) return v.back();
        }
        return v.size() == 1 ? v.front() : lp_time_norm(v, dt, p);
    };
    const bool lp = route != "fd", fd = route != "lp";
    std::ostringstream block;
    block << "config_hash=" << c.hash() << "\nslices=" << reps.size() << "\nm=" << fmt(m) << "\np=" << fmt(p)
          << "\nl_inf=" << fmt(over_time([](const NormReport& r) { return r.l_inf; })) << "\n";
    if (lp)
        block << "lambda_hom=" << fmt(over_time([](const NormReport& r) { return r.lambda_hom; }))
              << "\nlambda_inhom=" << fmt(over_time([](const NormReport& r) { return r.lambda_inhom; }))
              << "\ns0_sup=" << fmt(over_time([](const NormReport& r) { return r.s0_sup; })) << "\n";
    if (fd)
        block << "lambda_fd=" << fmt(over_time([](const NormReport& r) { return r.lambda_fd; }))
              << "\nholder=" << fmt(over_time([](const NormReport& r) { return r.holder; })) << "\n";
    CsvTable bands({"slice", "n", "weighted_sup"}, c.hash(), static_cast<std::uint64_t>(c.get_int("experiment.seed")));
    for (std::size_t k = 0; k < reps.size(); ++k)
        for (const auto& bv : reps[k].bands) bands.add({std::to_string(k), std::to_string(bv.n), fmt(bv.weighted_sup)});
    std::cout << block.str() << "\n" << bands.str();
    emit(g, c, {{{"norms.txt", block.str()}, {"norm_bands.csv", bands.str()}}, block.str(), true});
    return 0;
}

int cmd_verify_estimate(const Globals& g, const std::string& symbol, std::optional<double> m, std::optional<double> p,
                        const std::string& family, std::optional<int> size) {
    Config c = load_config(g);
    c.set("experiment.name", "verify-estimate");
    if (m) c.set(family == "holder" ? "experiment.alpha" : "experiment.m", fmt(*m));
    if (p) c.set("experiment.p", fmt(*p));
    if (!family.empty()) c.set("experiment.family", family);
    if (size) c.set("experiment.ensemble_size", std::to_string(*size));
    if (!symbol.empty())
        for (const char* f : {"kind", "dimension", "gamma", "nu", "rho", "coeffs", "profile"})
            if (c.has("symbol." + symbol + "." + f)) c.set(std::string("symbol.") + f, c.get("symbol." + symbol + "." + f));
    const Bundle b = run_experiment(c, g.threads);
    for (const auto& f : b.files)
        if (f.name == "estimate.csv") std::cout << f.content;
    std::cout << "\n" << b.summary;
    emit(g, c, b);
    return 0;
}

int cmd_cz_demo(const Globals& g, const std::string& breaks, const std::string& values, double lambda) {
    const Config c = load_config(g);
    const StepFunction f(parse_list(breaks, "--breakpoints"), parse_list(values, "--values"));
    const auto dec = cz_decompose(f, lambda);
    const auto rep = verify_cz(dec);
    const std::string text = format_cz(dec, rep);
    std::cout << text;
    emit(g, c, {{{"cz.txt", text}}, text, rep.all()});
    return rep.all() ? 0 : kExitFail;
}

int cmd_reproduce(const Globals& g, const std::string& suite, bool list, bool skip_determinism) {
    if (suite != "smoke" && suite != "full") throw ConfigurationError("--suite: expected smoke or full");
    if (list) {
        for (const auto& cr : criteria_list()) std::cout << cr.id << " " << cr.name << "\n";
        std::cout << 14 << " " << determinism_name() << "\n";
        return 0;
    }
    const Config c = load_config(g);
    RunContext ctx = context_from_config(c, g.threads);
    ctx.full = suite == "full";
    auto print = [](const CriterionResult& r) {
        std::cout << "criterion " << r.id << " " << r.name << ": " << (r.passed ? "PASS" : "FAIL") << " | " << r.detail
                  << std::endl;
    };
    const SuiteRun first = run_suite(ctx, print);
    const std::filesystem::path out(g.out.empty() ? c.get("output.directory") : g.out);
    flag_replay(out, c.hash());
    write_bundle(first.bundle, out);
    bool ok = first.passed();
    if (!skip_determinism) {
        const SuiteRun second = run_suite(ctx);
        std::string diff;
        const bool same = bundles_identical(first.bundle, second.bundle, &diff);
        const double budget = ctx.full ? 1800.0 : 120.0;
        const bool pass = same && first.seconds < budget;
        std::cout << "criterion 14 " << determinism_name() << ": " << (pass ? "PASS" : "FAIL")
                  << " | identical=" << (same ? "true" : "false (" + diff + ")") << "; seconds=" << first.seconds
                  << " < " << budget << std::endl;
        ok = ok && pass;
    }
    std::cout << (ok ? "all criteria passed" : "some criteria failed") << "; artifacts in " << out.string() << "\n";
    return ok ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"specprop: spectral propagators for parabolic equations with time-measurable symbols"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "configuration file (section.key = value)");
    app.add_option("--seed", g.seed, "experiment seed (overrides experiment.seed)");
    app.add_option("--out", g.out, "artifact directory");
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

    std::function<int()> action;

    auto* vs = app.add_subcommand("validate-symbol", "check the symbol conditions on sampled frequencies");
    std::string vs_symbol;
    vs->add_option("--symbol", vs_symbol, "named symbol section (default: symbol.*)");
    vs->callback([&] { action = [&] { return cmd_validate_symbol(g, vs_symbol); }; });

    auto* kn = app.add_subcommand("kernel-norms", "L1/L2/weighted norms of p_{alpha,a,b} over a gap sweep");
    std::string kn_symbol, kn_alpha = "0", kn_gaps;
    int kn_a = 0;
    double kn_b = 0;
    kn->add_option("--symbol", kn_symbol, "named symbol section");
    kn->add_option("--a", kn_a, "time-derivative order")->check(CLI::NonNegativeNumber);
    kn->add_option("--b", kn_b, "frequency power")->check(CLI::NonNegativeNumber);
    kn->add_option("--alpha", kn_alpha, "moment multi-index, comma separated");
    kn->add_option("--gaps", kn_gaps, "gaps t - s, comma separated (default experiment.gaps)");
    kn->callback([&] { action = [&] { return cmd_kernel_norms(g, kn_symbol, kn_a, kn_b, kn_alpha, kn_gaps); }; });

    auto* so = app.add_subcommand("solve", "mild solution by exponential time stepping");
    std::string so_symbol, so_f = "bump";
    int so_steps = 0;
    so->add_option("--symbol", so_symbol, "named symbol section");
    so->add_option("--f", so_f, "space-time dump path or generator (gaussian[:w], random[:lo:hi], bump[:tc:th:w], ensemble:i)");
    so->add_option("--steps", so_steps, "time steps K (default time.steps)")->check(CLI::NonNegativeNumber);
    so->callback([&] { action = [&] { return cmd_solve(g, so_symbol, so_f, so_steps); }; });

    auto* nm = app.add_subcommand("norms", "Lipschitz / Hoelder norms of a field or space-time dump");
    std::string nm_input, nm_route = "both";
    double nm_m = 1.0, nm_p = 2.0;
    nm->add_option("--input", nm_input, "field or space-time dump")->required();
    nm->add_option("--m", nm_m, "smoothness order");
    nm->add_option("--p", nm_p, "time exponent for space-time input (inf allowed)");
    nm->add_option("--route", nm_route, "lp, fd or both");
    nm->callback([&] { action = [&] { return cmd_norms(g, nm_input, nm_m, nm_p, nm_route); }; });

    auto* ve = app.add_subcommand("verify-estimate", "ratio of solution to forcing norms over a random ensemble");
    std::string ve_symbol, ve_family;
    std::optional<double> ve_m, ve_p;
    std::optional<int> ve_size;
    ve->add_option("--symbol", ve_symbol, "named symbol section");
    ve->add_option("--m", ve_m, "m (lipschitz) or alpha (holder)");
    ve->add_option("--p", ve_p, "time exponent (inf allowed)");
    ve->add_option("--family", ve_family, "lipschitz or holder");
    ve->add_option("--ensemble-size", ve_size, "members")->check(CLI::PositiveNumber);
    ve->callback([&] { action = [&] { return cmd_verify_estimate(g, ve_symbol, ve_m, ve_p, ve_family, ve_size); }; });

    auto* cz = app.add_subcommand("cz-demo", "Calderon-Zygmund decomposition of a step function");
    std::string cz_breaks = "0,1", cz_values = "1";
    double cz_lambda = 0.25;
    cz->add_option("--breakpoints", cz_breaks, "increasing breakpoints, comma separated");
    cz->add_option("--values", cz_values, "nonnegative values, one per piece");
    cz->add_option("--lambda", cz_lambda, "level");
    cz->callback([&] { action = [&] { return cmd_cz_demo(g, cz_breaks, cz_values, cz_lambda); }; });

    auto* rp = app.add_subcommand("reproduce", "run the acceptance criteria");
    std::string rp_suite = "smoke";
    bool rp_list = false, rp_skip = false;
    rp->add_option("--suite", rp_suite, "smoke or full");
    rp->add_flag("--list", rp_list, "print criterion ids without running");
    rp->add_flag("--skip-determinism", rp_skip, "do not rerun the suite for the determinism check");
    rp->callback([&] { action = [&] { return cmd_reproduce(g, rp_suite, rp_list, rp_skip); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    try {
        return action();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
