#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "specprop/grid.hpp"
#include "specprop/kernel.hpp"
#include "specprop/lp.hpp"
#include "specprop/symbol.hpp"

namespace specprop {

// ---------------------------------------------------------------------------
// Exponential integrator
// ---------------------------------------------------------------------------

namespace detail {

/// (e^{z tau} - 1) / z, with the Taylor series near z tau = 0 (limit tau).
inline Complex phi1(Complex z, double tau) {
    const Complex w = z * tau;
    if (std::abs(w) < 1e-3) return tau * (1.0 + w / 2.0 + w * w / 6.0 + w * w * w / 24.0 + w * w * w * w / 120.0);
    return (std::exp(w) - 1.0) / z;
}

inline Vec lattice_vec(const std::array<double, 3>& xi, int d) { return Vec(xi.data(), static_cast<std::size_t>(d)); }

/// E(a,b,xi) and Phi_1(a,b,xi) = int_a^b E(r,b,xi) dr on the whole lattice.
struct StepMultipliers {
    std::vector<Complex> e;
    std::vector<Complex> phi;
};

inline StepMultipliers step_multipliers(const SymbolSpec& spec, double a, double b, const SpectralGrid& g,
                                        const std::vector<Complex>& base) {
    StepMultipliers out{std::vector<Complex>(g.size()), std::vector<Complex>(g.size())};
    if (spec.is_builtin()) {
        // exact on every constant segment: walk the segments backwards from b
        const auto segs = spec.profile().segments(a, b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            Complex area = 0.0;
            Complex acc = 0.0;
            for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
                const Complex z = it->level * base[i];
                const double len = it->end - it->begin;
                acc += std::exp(area) * phi1(z, len);
                area += z * len;
            }
            out.e[i] = std::exp(area);
            out.phi[i] = acc;
        }
        return out;
    }
    const int m = spec.quadrature_steps();
    const double tau = (b - a) / m;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto xi = g.frequency(i);
        const Vec v = lattice_vec(xi, g.d);
        out.e[i] = std::exp(spec.integrate(a, b, v));
        Complex acc = 0.0;
        for (int j = 0; j < m; ++j) acc += std::exp(spec.integrate(a + (j + 0.5) * tau, b, v));
        out.phi[i] = acc * tau;
    }
    return out;
}

inline std::vector<Complex> base_samples(const SymbolSpec& spec, const SpectralGrid& g) {
    std::vector<Complex> base;
    if (!spec.is_builtin()) return base;
    base.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) base[i] = spec.base(lattice_vec(g.frequency(i), g.d));
    return base;
}

inline void check_dimensions(const SymbolSpec& spec, const SpectralGrid& g) {
    if (spec.dimension() != g.d) throw ConfigurationError("solver: symbol and grid dimensions differ");
}

inline std::vector<Field> transform_all(const std::vector<Field>& slices, bool forward, unsigned threads) {
    std::vector<Field> out(slices.size());
    parallel_for(slices.size(), threads, [&](std::size_t k) {
        out[k] = forward ? forward_transform(slices[k]) : inverse_transform(slices[k]);
    });
    return out;
}

}  // namespace detail

struct SolveResult {
    SpacetimeField u;
    /// Per step: max |E(t_k, t_{k+1}, xi)| and min Re int psi over the lattice.
    std::vector<double> max_abs_propagator;
    std::vector<double> min_re_integral;
    int steps = 0;
    int inner_quadrature = 0;
};

/// Frequency-space time stepping: u^_{k+1} = E u^_k + Phi_1 f^_k, u^_0 = 0.
/// Returns the K+1 frequency slices of u.
inline std::vector<Field> solve_mild_hat(const SymbolSpec& spec, const std::vector<Field>& f_hat, const TimeGrid& tg,
                                         SolveResult* diagnostics = nullptr) {
    require(f_hat.size() == static_cast<std::size_t>(tg.steps + 1), "solve_mild: need K+1 forcing slices");
    const SpectralGrid& g = f_hat.front().grid;
    detail::check_dimensions(spec, g);
    const auto base = detail::base_samples(spec, g);
    std::vector<Field> u(f_hat.size(), Field(g, Space::Frequency));
    detail::StepMultipliers mult;
    std::vector<TimeProfile::Segment> last_shape;
    bool have = false;
    for (int k = 0; k < tg.steps; ++k) {
        const double a = tg.time(k), b = tg.time(k + 1);
        // steps with the same segment layout share their multipliers
        std::vector<TimeProfile::Segment> shape;
        bool reuse = false;
        if (spec.is_builtin()) {
            for (auto s : spec.profile().segments(a, b)) shape.push_back({s.begin - a, s.end - a, s.level});
            reuse = have && shape.size() == last_shape.size() &&
                    std::equal(shape.begin(), shape.end(), last_shape.begin(), [](auto& x, auto& y) {
                        return x.begin == y.begin && x.end == y.end && x.level == y.level;
                    });
        }
        if (!reuse) {
            mult = detail::step_multipliers(spec, a, b, g, base);
            last_shape = shape;
            have = true;
        }
        const Field& prev = u[k];
        Field& next = u[k + 1];
        const Field& fk = f_hat[k];
        double max_e = 0, min_re = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            next.values[i] = mult.e[i] * prev.values[i] + mult.phi[i] * fk.values[i];
            max_e = std::max(max_e, std::abs(mult.e[i]));
            min_re = std::min(min_re, std::log(std::max(std::abs(mult.e[i]), 1e-300)));
        }
        if (diagnostics) {
            diagnostics->max_abs_propagator.push_back(max_e);
            diagnostics->min_re_integral.push_back(min_re);
        }
    }
    return u;
}

/// Mild solution u = G f of du/dt = psi(t, i grad) u + f, u(0) = 0.
inline SolveResult solve_mild(const SymbolSpec& spec, const SpacetimeField& f, unsigned threads = 1) {
    if (f.slices.front().space != Space::Physical) throw ArgumentError("solve_mild: forcing must be in physical space");
    SolveResult r;
    r.steps = f.time.steps;
    r.inner_quadrature = spec.is_builtin() ? 0 : spec.quadrature_steps();
    const auto f_hat = detail::transform_all(f.slices, true, threads);
    const auto u_hat = solve_mild_hat(spec, f_hat, f.time, &r);
    r.u = SpacetimeField(f.time, detail::transform_all(u_hat, false, threads));
    return r;
}

/// Left Riemann-Duhamel sum sum_{j<k} E(t_j, t_k) f^(t_j) dt at t = t_k.
/// Independent O(K^2) oracle for solve_mild.
inline Field apply_G_quadrature(const SymbolSpec& spec, const SpacetimeField& f, int k) {
    require(k >= 0 && k <= f.time.steps, "apply_G_quadrature: time index out of range");
    const SpectralGrid& g = f.grid();
    detail::check_dimensions(spec, g);
    Field acc(g, Space::Frequency);
    const double dt = f.time.dt();
    for (int j = 0; j < k; ++j) {
        const Field fh = forward_transform(f.slices[j]);
        const Field e = propagator(spec, f.time.time(j), f.time.time(k), g);
        for (std::size_t i = 0; i < g.size(); ++i) acc.values[i] += e.values[i] * fh.values[i] * dt;
    }
    return inverse_transform(acc);
}

/// sup_t int_0^t ||p(s,t,.)||_{L1} ds by a left Riemann sum on the time grid;
/// the constant of sup_t ||G f(t)||_inf <= C sup_t ||f(t)||_inf.
inline double linf_bound_constant(const SymbolSpec& spec, const SpectralGrid& g, const TimeGrid& tg) {
    double c = 0;
    for (int k = 1; k <= tg.steps; ++k) {
        double acc = 0;
        for (int j = 0; j < k; ++j) acc += l1_norm(kernel_p(spec, {0, 0.0, {0, 0, 0}, tg.time(j), tg.time(k)}, g));
        c = std::max(c, acc * tg.dt());
    }
    return c;
}

// ---------------------------------------------------------------------------
// Smoothing probes
// ---------------------------------------------------------------------------

struct ProbeRow {
    double gap = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    double ratio = 0.0;
};

struct ProbeTable {
    std::vector<ProbeRow> rows;
    double max_ratio = 0.0;
};

inline double lambda_norm_hat(const LPBank& bank, const Field& hat, double m, LipschitzVariant v) {
    return lipschitz_norm_lp_hat(bank, hat, m, v).value;
}

/// ||p(s,t,.) * f||_{Lambda_{gamma+m}} / ((1 + gap^{-1}) ||f||_{Lambda_m}) with s = t - gap;
/// the homogeneous variant uses the homogeneous norms and the bound gap^{-1}.
inline ProbeTable smoothing_probe(const SymbolSpec& spec, const LPBank& bank, const Field& f, double m,
                                  const std::vector<double>& gaps, double t,
                                  LipschitzVariant variant = LipschitzVariant::Inhomogeneous) {
    const Field fh = forward_transform(f);
    const double fn = lambda_norm_hat(bank, fh, m, variant);
    if (!(fn > 0)) throw ArgumentError("smoothing_probe: f has zero norm");
    ProbeTable table;
    for (double gap : gaps) {
        require(gap > 0 && gap <= t, "smoothing_probe: need 0 < gap <= t");
        const Field e = propagator(spec, t - gap, t, f.grid);
        Field uh = fh;
        for (std::size_t i = 0; i < uh.size(); ++i) uh.values[i] *= e.values[i];
        ProbeRow row;
        row.gap = gap;
        row.numerator = lambda_norm_hat(bank, uh, spec.gamma() + m, variant);
        const double factor = variant == LipschitzVariant::Inhomogeneous ? 1.0 + 1.0 / gap : 1.0 / gap;
        row.denominator = factor * fn;
        row.ratio = row.numerator / row.denominator;
        table.max_ratio = std::max(table.max_ratio, row.ratio);
        table.rows.push_back(row);
    }
    return table;
}

/// ||(p(s,t,.) - p(t0,t,.)) * f||_{Lambda_{gamma+m}} / (|s - t0| (1 + (t - max(s,t0))^{-2}) ||f||_{Lambda_m})
/// with s = t - gap and t0 = s - gap / 2.
inline ProbeTable smoothing_difference_probe(const SymbolSpec& spec, const LPBank& bank, const Field& f, double m,
                                             const std::vector<double>& gaps, double t) {
    const Field fh = forward_transform(f);
    const double fn = lambda_norm_hat(bank, fh, m, LipschitzVariant::Inhomogeneous);
    if (!(fn > 0)) throw ArgumentError("smoothing_difference_probe: f has zero norm");
    ProbeTable table;
    for (double gap : gaps) {
        const double s = t - gap;
        const double t0 = s - gap / 2;
        require(gap > 0 && t0 >= 0, "smoothing_difference_probe: need 0 < gap and t - 3 gap / 2 >= 0");
        const Field e1 = propagator(spec, s, t, f.grid);
        const Field e0 = propagator(spec, t0, t, f.grid);
        Field uh = fh;
        for (std::size_t i = 0; i < uh.size(); ++i) uh.values[i] *= e1.values[i] - e0.values[i];
        const double near = t - std::max(s, t0);
        ProbeRow row;
        row.gap = gap;
        row.numerator = lambda_norm_hat(bank, uh, spec.gamma() + m, LipschitzVariant::Inhomogeneous);
        row.denominator = std::abs(s - t0) * (1.0 + 1.0 / (near * near)) * fn;
        row.ratio = row.numerator / row.denominator;
        table.max_ratio = std::max(table.max_ratio, row.ratio);
        table.rows.push_back(row);
    }
    return table;
}

/// L1 norms of F^{-1}[zeta(2^{-n} xi) E(0, gap, xi)] against the scaled time x = gap 2^{n gamma}.
struct BandDecay {
    int n = 0;
    std::vector<double> scaled;
    std::vector<double> gaps;
    std::vector<double> norms;
    LineFit fit;
};

inline BandDecay band_kernel_decay(const SymbolSpec& spec, int n, const std::vector<double>& scaled,
                                   const SpectralGrid& g) {
    if (!(4.0 * std::ldexp(1.0, n) < g.nyquist()))
        throw ResolutionError("band_kernel_decay: cutoff support exceeds the Nyquist frequency");
    if (!(0.25 * std::ldexp(1.0, n) >= 2.0 * g.dxi()))
        throw ResolutionError("band_kernel_decay: band too narrow for the lattice spacing");
    require(scaled.size() >= 2, "band_kernel_decay: need at least two samples");
    detail::check_dimensions(spec, g);
    BandDecay out;
    out.n = n;
    const auto radii = g.frequency_radii();
    std::vector<double> logs;
    for (double x : scaled) {
        require(x >= 0, "band_kernel_decay: scaled gaps must be nonnegative");
        const double gap = x / std::pow(2.0, n * spec.gamma());
        const Field e = propagator(spec, 0.0, gap, g);
        Field hat(g, Space::Frequency);
        for (std::size_t i = 0; i < hat.size(); ++i)
            hat.values[i] = annulus_cutoff(std::ldexp(radii[i], -n)) * e.values[i];
        const double norm = l1_norm(inverse_transform(hat));
        out.scaled.push_back(x);
        out.gaps.push_back(gap);
        out.norms.push_back(norm);
        logs.push_back(std::log(norm));
    }
    out.fit = fit_line(out.scaled, logs);
    return out;
}

// ---------------------------------------------------------------------------
// Adjoint reproduction and weak residual
// ---------------------------------------------------------------------------

namespace detail {

/// phi_t by centered differences (one-sided at the ends).
inline Field time_derivative(const SpacetimeField& phi, int k) {
    const int K = phi.time.steps;
    const double dt = phi.time.dt();
    const int lo = std::max(0, k - 1), hi = std::min(K, k + 1);
    Field out = phi.slices[hi] - phi.slices[lo];
    out *= Complex(1.0 / ((hi - lo) * dt));
    return out;
}

/// f_phi^ = -phi_t^ - psi(t, -xi) phi^ at time index k (frequency space).
inline Field adjoint_forcing_hat(const SymbolSpec& spec, const SpacetimeField& phi, int k) {
    const SpectralGrid& g = phi.grid();
    const double t = phi.time.time(k);
    Field out = forward_transform(time_derivative(phi, k));
    const Field ph = forward_transform(phi.slices[k]);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Complex adj = spec.adjoint(t, lattice_vec(g.frequency(i), g.d));
        out.values[i] = -out.values[i] - adj * ph.values[i];
    }
    return out;
}

inline std::size_t nearest_index(const SpectralGrid& g, const std::array<double, 3>& y) {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = 0; a < g.d; ++a) idx[a] = static_cast<int>(std::lround((y[a] + g.half_width) / g.spacing()));
    return g.flatten(idx);
}

}  // namespace detail

struct Probe {
    double s = 0.5;
    std::array<double, 3> y{0, 0, 0};
};

struct AdjointResult {
    double max_error = 0.0;
    double phi_sup = 0.0;
    std::vector<double> errors;
    int steps = 0;
};

/// Reconstructs phi(s, y) as int_s^T int p(s,t,x-y) f_phi(t,x) dx dt with
/// f_phi = -phi_t - psi*(t, i grad) phi. phi is sampled on a grid `refine`
/// times finer than the outer time grid; phi_t uses the fine grid and the
/// t-integral is a left Riemann sum on the outer grid.
inline AdjointResult adjoint_reproduce(const SymbolSpec& spec, const SpacetimeField& phi,
                                       const std::vector<Probe>& probes, int refine = 4) {
    const SpectralGrid& g = phi.grid();
    detail::check_dimensions(spec, g);
    require(refine >= 1 && phi.time.steps % refine == 0, "adjoint_reproduce: fine steps must be a multiple of refine");
    if (max_abs(phi.slices.front()) != 0.0 || max_abs(phi.slices.back()) != 0.0)
        throw PreconditionError("adjoint_reproduce: phi must vanish at t = 0 and t = T");
    const int K = phi.time.steps / refine;
    const TimeGrid outer(phi.time.horizon, K);
    AdjointResult res;
    res.steps = K;
    for (const auto& slice : phi.slices) res.phi_sup = std::max(res.phi_sup, max_abs(slice));
    if (res.phi_sup == 0.0) {
        res.errors.assign(probes.size(), 0.0);
        return res;
    }
    std::vector<Field> forcing(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) forcing[k] = detail::adjoint_forcing_hat(spec, phi, k * refine);
    std::vector<std::size_t> neg(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) neg[i] = g.negated(i);
    for (const auto& probe : probes) {
        const int ks = static_cast<int>(std::lround(probe.s / outer.dt()));
        if (ks < 0 || ks > K || std::abs(ks * outer.dt() - probe.s) > 1e-9)
            throw ArgumentError("adjoint_reproduce: probe time must be a point of the outer time grid");
        Field acc(g, Space::Frequency);
        for (int k = ks; k < K; ++k) {
            const Field e = propagator(spec, probe.s, outer.time(k), g);
            for (std::size_t i = 0; i < g.size(); ++i) acc.values[i] += e.values[neg[i]] * forcing[k].values[i];
        }
        acc *= Complex(outer.dt());
        const Field rec = inverse_transform(acc);
        const std::size_t yi = detail::nearest_index(g, probe.y);
        const double err = std::abs(rec.values[yi] - phi.slices[ks * refine].values[yi]);
        res.errors.push_back(err);
        res.max_error = std::max(res.max_error, err);
    }
    return res;
}

struct WeakResidual {
    double max_normalized = 0.0;
    std::vector<double> normalized;
    std::vector<double> raw;
};

namespace detail {

inline double trapezoid(const std::vector<double>& v, double dt) {
    double acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += (i == 0 || i + 1 == v.size() ? 0.5 : 1.0) * v[i];
    return acc * dt;
}

inline Complex trapezoid(const std::vector<Complex>& v, double dt) {
    Complex acc = 0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += (i == 0 || i + 1 == v.size() ? 0.5 : 1.0) * v[i];
    return acc * dt;
}

inline Complex pair_integral(const Field& a, const Field& b) {
    Complex acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.values[i] * b.values[i];
    return acc * a.grid.cell_volume();
}

inline double spacetime_l2(const SpacetimeField& f) {
    std::vector<double> sq;
    for (const auto& s : f.slices) sq.push_back(std::pow(l2_norm(s), 2));
    return std::sqrt(trapezoid(sq, f.time.dt()));
}

}  // namespace detail

/// max over phi of |int int u (-phi_t - psi* phi) - int int f phi| / (||f||_{L2} ||phi||_{L2}),
/// space by the grid sum, time by the trapezoid rule.
inline WeakResidual weak_residual(const SymbolSpec& spec, const SpacetimeField& u, const SpacetimeField& f,
                                  const std::vector<SpacetimeField>& phis) {
    if (!(u.time == f.time) || !(u.grid() == f.grid())) throw ConfigurationError("weak_residual: u and f grids differ");
    detail::check_dimensions(spec, u.grid());
    const double fnorm = detail::spacetime_l2(f);
    WeakResidual res;
    for (const auto& phi : phis) {
        if (!(phi.time == u.time) || !(phi.grid() == u.grid()))
            throw ConfigurationError("weak_residual: test function grids differ from the solution grids");
        std::vector<Complex> lhs, rhs;
        for (int k = 0; k <= u.time.steps; ++k) {
            const Field w = inverse_transform(detail::adjoint_forcing_hat(spec, phi, k));
            lhs.push_back(detail::pair_integral(u.slices[k], w));
            rhs.push_back(detail::pair_integral(f.slices[k], phi.slices[k]));
        }
        const double raw = std::abs(detail::trapezoid(lhs, u.time.dt()) - detail::trapezoid(rhs, u.time.dt()));
        const double scale = fnorm * detail::spacetime_l2(phi);
        const double normalized = scale > 0 ? raw / scale : 0.0;
        res.raw.push_back(raw);
        res.normalized.push_back(normalized);
        res.max_normalized = std::max(res.max_normalized, normalized);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Ensembles and the main estimates
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Random piecewise-constant profile on [0, T] with levels in [nu, 1/nu].
inline TimeProfile random_profile(double nu, double horizon, int pieces, std::uint64_t seed) {
    require(pieces >= 1, "random_profile: need at least one piece");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> when(0.0, horizon), level(nu, 1.0 / nu);
    std::vector<double> cuts;
    for (int i = 1; i < pieces; ++i) cuts.push_back(when(rng));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<TimeProfile::Piece> out{{0.0, level(rng)}};
    for (double c : cuts)
        if (c > 0) out.push_back({c, level(rng)});
    return TimeProfile(out);
}

/// f(t,x) = sum_c theta_c(t) g_c(x): g_c band-limited random in [band_lo, band_hi],
/// theta_c piecewise constant with a random number of pieces and values in [-1, 1].
struct EnsembleSpec {
    SpectralGrid grid{1, 256, kPi};
    TimeGrid time{1.0, 64};
    double band_lo = 4.0;
    double band_hi = 32.0;
    int min_pieces = 4;
    int max_pieces = 16;
    int components = 2;
    std::uint64_t seed = 1;
};

inline std::uint64_t member_seed(const EnsembleSpec& e, int index) {
    return splitmix64(e.seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

inline SpacetimeField make_member(const EnsembleSpec& e, int index) {
    const std::uint64_t seed = member_seed(e, index);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(e.min_pieces, e.max_pieces);
    std::uniform_real_distribution<double> when(0.0, e.time.horizon), value(-1.0, 1.0);
    SpacetimeField f(e.time, e.grid);
    for (int c = 0; c < e.components; ++c) {
        Field g = band_limited_random(e.grid, e.band_lo, e.band_hi, splitmix64(seed + 17 * (c + 1)));
        g *= Complex(1.0 / max_abs(g));
        const int pieces = count(rng);
        std::vector<double> cuts{0.0};
        for (int i = 1; i < pieces; ++i) cuts.push_back(when(rng));
        std::sort(cuts.begin(), cuts.end());
        std::vector<double> values;
        for (int i = 0; i < pieces; ++i) values.push_back(value(rng));
        for (int k = 0; k <= e.time.steps; ++k) {
            const double t = e.time.time(k);
            const auto pos = std::upper_bound(cuts.begin(), cuts.end(), t) - cuts.begin() - 1;
            const double theta = values[static_cast<std::size_t>(std::max<std::ptrdiff_t>(pos, 0))];
            for (std::size_t i = 0; i < g.size(); ++i) f.slices[k].values[i] += theta * g.values[i];
        }
    }
    return f;
}

enum class NormFamily { Lipschitz, Holder };

inline std::string to_string(NormFamily f) { return f == NormFamily::Lipschitz ? "lipschitz" : "holder"; }

inline NormFamily parse_norm_family(const std::string& s) {
    if (s == "lipschitz") return NormFamily::Lipschitz;
    if (s == "holder") return NormFamily::Holder;
    throw ConfigurationError("unknown norm family '" + s + "' (expected lipschitz or holder)");
}

/// True when x is (numerically) a positive integer.
inline bool is_positive_integer(double x) { return x > 0.5 && std::abs(x - std::round(x)) < 1e-9; }

struct EstimateRow {
    int member = 0;
    double numerator = 0.0;
    double denominator = 0.0;
    double ratio = 0.0;
};

struct EstimateTable {
    std::vector<EstimateRow> rows;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
};

namespace detail {

inline void summarize(EstimateTable& t) {
    std::vector<double> r;
    for (auto& row : t.rows) r.push_back(row.ratio);
    if (r.empty()) return;
    t.max_ratio = *std::max_element(r.begin(), r.end());
    std::sort(r.begin(), r.end());
    const std::size_t n = r.size();
    t.median_ratio = n % 2 ? r[n / 2] : 0.5 * (r[n / 2 - 1] + r[n / 2]);
}

/// Norm of one time slice for the requested family and order.
inline double slice_norm(const LPBank& bank, const Field& hat, double order, NormFamily family, const HPlan& plan) {
    if (family == NormFamily::Lipschitz) return lambda_norm_hat(bank, hat, order, LipschitzVariant::Inhomogeneous);
    return holder_norm_of_order(inverse_transform(hat), order, plan);
}

}  // namespace detail

struct EstimateOptions {
    double m = 1.0;
    double p = 2.0;
    NormFamily family = NormFamily::Lipschitz;
    int members = 30;
    /// Index of the first member, so ensembles can be grown without recomputing.
    int first_member = 0;
    unsigned threads = 1;
    HPlan holder_plan{};
};

/// Per member: (int ||u(t)||^p_{X_{gamma+m}} dt)^{1/p} / (int ||f(t)||^p_{X_m} dt)^{1/p},
/// X = Lambda (inhomogeneous) or C (Hoelder, m = n + alpha with gamma + m not an integer).
inline EstimateTable estimate_ratio(const SymbolSpec& spec, const EnsembleSpec& ens, const EstimateOptions& opt) {
    if (!(opt.p > 1)) throw ConfigurationError("estimate: p must exceed 1");
    if (opt.family == NormFamily::Holder) {
        if (is_positive_integer(spec.gamma() + opt.m))
            throw ConfigurationError("estimate: gamma + alpha must not be a positive integer for the holder family");
        const double frac = opt.m - std::floor(opt.m);
        if (frac < 1e-9 || frac > 1 - 1e-9) throw ConfigurationError("estimate: holder order must not be an integer");
    }
    detail::check_dimensions(spec, ens.grid);
    const LPBank bank = build_bank(ens.grid, highest_band(ens.grid));
    EstimateTable table;
    table.rows.resize(static_cast<std::size_t>(opt.members));
    parallel_for(table.rows.size(), opt.threads, [&](std::size_t i) {
        const int id = opt.first_member + static_cast<int>(i);
        const SpacetimeField f = make_member(ens, id);
        const auto f_hat = detail::transform_all(f.slices, true, 1);
        const auto u_hat = solve_mild_hat(spec, f_hat, f.time);
        std::vector<double> un, fn;
        for (std::size_t k = 0; k < f_hat.size(); ++k) {
            un.push_back(detail::slice_norm(bank, u_hat[k], spec.gamma() + opt.m, opt.family, opt.holder_plan));
            fn.push_back(detail::slice_norm(bank, f_hat[k], opt.m, opt.family, opt.holder_plan));
        }
        EstimateRow row;
        row.member = id;
        row.numerator = lp_time_norm(un, f.time.dt(), opt.p);
        row.denominator = lp_time_norm(fn, f.time.dt(), opt.p);
        row.ratio = row.numerator / row.denominator;
        table.rows[i] = row;
    });
    detail::summarize(table);
    return table;
}

struct Weak11Row {
    int member = 0;
    double lambda = 0.0;
    double measure = 0.0;
    double f_norm = 0.0;
    double ratio = 0.0;
};

struct Weak11Table {
    std::vector<Weak11Row> rows;
    double max_ratio = 0.0;
};

/// lambda |{t : ||G f(t)||_{hom Lambda_{m+gamma}} > lambda}| / int ||f(t)||_{hom Lambda_m} dt over a
/// log-spaced lambda sweep of `decades` decades centred on the median of t -> ||G f(t)||.
/// The level set is measured on the grid points t_1..t_K, each carrying weight dt.
inline Weak11Table weak11_probe(const SymbolSpec& spec, const EnsembleSpec& ens, double m, int members,
                                int first_member = 0, int lambda_count = 31, double decades = 3.0,
                                unsigned threads = 1) {
    require(lambda_count >= 2 && decades > 0, "weak11_probe: invalid lambda sweep");
    detail::check_dimensions(spec, ens.grid);
    const LPBank bank = build_bank(ens.grid, highest_band(ens.grid));
    std::vector<std::vector<Weak11Row>> per(static_cast<std::size_t>(members));
    parallel_for(per.size(), threads, [&](std::size_t i) {
        const int id = first_member + static_cast<int>(i);
        const SpacetimeField f = make_member(ens, id);
        const auto f_hat = detail::transform_all(f.slices, true, 1);
        const auto u_hat = solve_mild_hat(spec, f_hat, f.time);
        std::vector<double> a, fn;
        for (std::size_t k = 0; k < f_hat.size(); ++k) {
            a.push_back(lambda_norm_hat(bank, u_hat[k], spec.gamma() + m, LipschitzVariant::Homogeneous));
            fn.push_back(lambda_norm_hat(bank, f_hat[k], m, LipschitzVariant::Homogeneous));
        }
        const double fl1 = detail::trapezoid(fn, f.time.dt());
        std::vector<double> sorted(a.begin() + 1, a.end());
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        for (int j = 0; j < lambda_count; ++j) {
            const double lambda = median * std::pow(10.0, -decades / 2 + decades * j / (lambda_count - 1));
            int above = 0;
            for (std::size_t k = 1; k < a.size(); ++k) above += a[k] > lambda;
            Weak11Row row{id, lambda, above * f.time.dt(), fl1, 0.0};
            row.ratio = lambda * row.measure / fl1;
            per[i].push_back(row);
        }
    });
    Weak11Table table;
    for (auto& rows : per)
        for (auto& row : rows) {
            table.max_ratio = std::max(table.max_ratio, row.ratio);
            table.rows.push_back(row);
        }
    return table;
}

}  // namespace specprop
