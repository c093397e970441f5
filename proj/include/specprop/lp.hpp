#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "specprop/grid.hpp"
#include "specprop/symbol.hpp"

namespace specprop {

// ---------------------------------------------------------------------------
// Smooth cutoffs
// ---------------------------------------------------------------------------

/// exp(-1/u) for u > 0, exactly 0 otherwise.
inline double smooth_step_kernel(double u) { return u > 0 ? std::exp(-1.0 / u) : 0.0; }

/// Radial bump: 1 for r <= 1, 0 for r >= 2, smooth and monotone in between.
inline double eta(double r) {
    const double up = smooth_step_kernel(2.0 - r);
    const double down = smooth_step_kernel(r - 1.0);
    return up / (up + down);
}

/// delta_n(r) = eta(2^{-n} r) - eta(2^{-n+1} r), supported in (2^{n-1}, 2^{n+1}).
inline double lp_delta(int n, double r) { return eta(std::ldexp(r, -n)) - eta(std::ldexp(r, -n + 1)); }

/// Annular cutoff equal to 1 on [1/2, 2] and supported in [1/4, 4].
inline double annulus_cutoff(double r) {
    // rising edge on [1/4, 1/2] and falling edge on [2, 4]
    const double rise = smooth_step_kernel(r - 0.25) / (smooth_step_kernel(r - 0.25) + smooth_step_kernel(0.5 - r));
    const double fall = smooth_step_kernel(4.0 - r) / (smooth_step_kernel(4.0 - r) + smooth_step_kernel(r - 2.0));
    if (r <= 0.25 || r >= 4.0) return 0.0;
    return rise * fall;
}

// ---------------------------------------------------------------------------
// Littlewood-Paley bank
// ---------------------------------------------------------------------------

/// Samples of eta and delta_n on the dual lattice for n in [n_min, n_max].
class LPBank {
public:
    LPBank(const SpectralGrid& g, int n_min, int n_max) : grid_(g), n_min_(n_min), n_max_(n_max) {
        if (n_max < n_min) throw ArgumentError("lp bank: n_max < n_min");
        if (!(std::ldexp(1.0, n_max + 1) < g.nyquist()))
            throw ResolutionError("lp bank: band 2^(n_max+1) = " + std::to_string(std::ldexp(1.0, n_max + 1)) +
                                  " is not below the Nyquist frequency " + std::to_string(g.nyquist()));
        radii_ = g.frequency_radii();
        eta_.resize(radii_.size());
        for (std::size_t i = 0; i < radii_.size(); ++i) eta_[i] = eta(radii_[i]);
        for (int n = n_min; n <= n_max; ++n) {
            std::vector<double> dn(radii_.size());
            for (std::size_t i = 0; i < radii_.size(); ++i) dn[i] = lp_delta(n, radii_[i]);
            delta_.push_back(std::move(dn));
        }
    }

    const SpectralGrid& grid() const { return grid_; }
    int n_min() const { return n_min_; }
    int n_max() const { return n_max_; }
    bool contains(int n) const { return n >= n_min_ && n <= n_max_; }

    const std::vector<double>& eta_samples() const { return eta_; }
    const std::vector<double>& delta_samples(int n) const {
        if (!contains(n)) throw ArgumentError("lp bank: band " + std::to_string(n) + " outside the bank range");
        return delta_[static_cast<std::size_t>(n - n_min_)];
    }

    /// eta * hat, in frequency space.
    Field s0_hat(const Field& hat) const { return scale(hat, eta_); }
    /// delta_n * hat, in frequency space.
    Field delta_hat(int n, const Field& hat) const { return scale(hat, delta_samples(n)); }

private:
    Field scale(const Field& hat, const std::vector<double>& m) const {
        if (hat.space != Space::Frequency) throw ArgumentError("lp bank: expected a frequency field");
        if (!(hat.grid == grid_)) throw ArgumentError("lp bank: field lives on a different grid");
        Field out = hat;
        for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= m[i];
        return out;
    }

    SpectralGrid grid_;
    int n_min_;
    int n_max_;
    std::vector<double> radii_;
    std::vector<double> eta_;
    std::vector<std::vector<double>> delta_;
};

/// Smallest band with lattice support: 2^{n+1} must exceed the lattice spacing pi/L.
inline int lowest_band(const SpectralGrid& g) { return static_cast<int>(std::floor(std::log2(g.dxi()))); }

/// Bank over [lowest_band(g), n_max].
inline LPBank build_bank(const SpectralGrid& g, int n_max) { return LPBank(g, std::min(lowest_band(g), n_max), n_max); }

/// Largest band admissible on the grid, 2^{n+1} < Nyquist.
inline int highest_band(const SpectralGrid& g) {
    int n = static_cast<int>(std::floor(std::log2(g.nyquist()))) - 1;
    while (!(std::ldexp(1.0, n + 1) < g.nyquist())) --n;
    return n;
}

inline Field apply_s0(const LPBank& bank, const Field& f) {
    return inverse_transform(bank.s0_hat(forward_transform(f)));
}

inline Field apply_delta_n(const LPBank& bank, int n, const Field& f) {
    return inverse_transform(bank.delta_hat(n, forward_transform(f)));
}

// ---------------------------------------------------------------------------
// Lipschitz norms: Littlewood-Paley route
// ---------------------------------------------------------------------------

enum class LipschitzVariant { Homogeneous, Inhomogeneous };

struct BandValue {
    int n;
    /// 2^{n m} ||Delta_n f||_inf
    double weighted_sup;
};

struct LPNorm {
    double value = 0.0;
    double s0_sup = 0.0;
    std::vector<BandValue> bands;
};

/// Homogeneous: sup_n 2^{nm} ||Delta_n f||_inf over the bank's bands.
/// Inhomogeneous: ||S_0 f||_inf + sup_{n >= 1} 2^{nm} ||Delta_n f||_inf.
inline LPNorm lipschitz_norm_lp_hat(const LPBank& bank, const Field& hat, double m, LipschitzVariant variant) {
    require(m > 0, "lipschitz_norm_lp: m must be positive");
    LPNorm out;
    const int first = variant == LipschitzVariant::Homogeneous ? bank.n_min() : std::max(1, bank.n_min());
    double sup = 0;
    for (int n = first; n <= bank.n_max(); ++n) {
        const double v = std::pow(2.0, n * m) * max_abs(inverse_transform(bank.delta_hat(n, hat)));
        out.bands.push_back({n, v});
        sup = std::max(sup, v);
    }
    if (variant == LipschitzVariant::Inhomogeneous) {
        out.s0_sup = max_abs(inverse_transform(bank.s0_hat(hat)));
        out.value = out.s0_sup + sup;
    } else {
        out.value = sup;
    }
    return out;
}

inline LPNorm lipschitz_norm_lp(const LPBank& bank, const Field& f, double m, LipschitzVariant variant) {
    return lipschitz_norm_lp_hat(bank, forward_transform(f), m, variant);
}

// ---------------------------------------------------------------------------
// Lipschitz and Hoelder norms: finite-difference route
// ---------------------------------------------------------------------------

/// Lattice-aligned sampling of the increments h.
struct HPlan {
    /// Largest magnitude; 0 means L/4.
    double max_magnitude = 0.0;
    /// Number of halvings below the largest magnitude.
    int octaves = 16;
    /// Magnitudes per octave (1 = dyadic only).
    int per_octave = 1;
    /// Number of lattice directions used (axes first, then diagonals).
    int directions = 1;
};

namespace detail {

inline std::vector<std::array<int, 3>> lattice_directions(int d) {
    if (d == 1) return {{1, 0, 0}};
    if (d == 2) return {{1, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, -1, 0}};
    return {{1, 0, 0}, {0, 1, 0},  {0, 0, 1},  {1, 1, 0},  {1, -1, 0}, {1, 0, 1},  {1, 0, -1},
            {0, 1, 1}, {0, 1, -1}, {1, 1, 1},  {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}};
}

struct Increment {
    std::array<int, 3> steps;
    double magnitude;
};

inline std::vector<Increment> increments(const SpectralGrid& g, const HPlan& plan) {
    const double top = plan.max_magnitude > 0 ? plan.max_magnitude : g.half_width / 4;
    if (top > g.half_width / 4 * (1 + 1e-12)) throw ArgumentError("h plan: magnitudes must not exceed L/4");
    if (top < g.spacing() * (1 - 1e-12)) throw ArgumentError("h plan: magnitude below the grid spacing");
    require(plan.per_octave >= 1 && plan.octaves >= 0 && plan.directions >= 1, "h plan: invalid counts");
    auto dirs = lattice_directions(g.d);
    const std::size_t ndir = std::min<std::size_t>(dirs.size(), static_cast<std::size_t>(plan.directions));
    std::vector<Increment> out;
    for (std::size_t k = 0; k < ndir; ++k) {
        const auto& dir = dirs[k];
        double dlen = 0;
        for (int a = 0; a < g.d; ++a) dlen += dir[a] * dir[a];
        dlen = std::sqrt(dlen);
        std::vector<int> seen;
        for (int j = 0; j <= plan.octaves * plan.per_octave; ++j) {
            const double target = top * std::pow(2.0, -static_cast<double>(j) / plan.per_octave);
            const int count = static_cast<int>(std::lround(target / (g.spacing() * dlen)));
            if (count < 1) break;
            if (std::find(seen.begin(), seen.end(), count) != seen.end()) continue;
            if (count * g.spacing() * dlen > g.half_width / 4 * (1 + 1e-12)) continue;
            seen.push_back(count);
            Increment inc;
            for (int a = 0; a < 3; ++a) inc.steps[a] = dir[a] * count;
            inc.magnitude = count * g.spacing() * dlen;
            out.push_back(inc);
        }
    }
    return out;
}

inline double binomial(int k, int j) {
    double r = 1;
    for (int i = 1; i <= j; ++i) r = r * (k - j + i) / i;
    return r;
}

/// sup_x |D_h^order f(x)| for a lattice increment, using periodic shifts.
inline double sup_difference(const Field& f, const std::array<int, 3>& steps, int order) {
    const auto& g = f.grid;
    std::vector<double> coef(order + 1);
    for (int j = 0; j <= order; ++j) coef[j] = ((order - j) % 2 == 0 ? 1.0 : -1.0) * binomial(order, j);
    double sup = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto idx = g.unflatten(i);
        Complex acc = 0.0;
        for (int j = 0; j <= order; ++j) {
            std::array<int, 3> shifted = idx;
            for (int a = 0; a < g.d; ++a) shifted[a] += j * steps[a];
            acc += coef[j] * f.values[g.flatten(shifted)];
        }
        sup = std::max(sup, std::abs(acc));
    }
    return sup;
}

}  // namespace detail

/// Sampled sup over (x, h) of |D_h^{floor(m)+1} f(x)| / |h|^m; a lower bound
/// for the homogeneous Lipschitz seminorm.
inline double lipschitz_norm_fd(const Field& f, double m, const HPlan& plan = {}) {
    require(m > 0, "lipschitz_norm_fd: m must be positive");
    if (f.space != Space::Physical) throw ArgumentError("lipschitz_norm_fd: field must be in physical space");
    const int order = static_cast<int>(std::floor(m)) + 1;
    double sup = 0;
    for (const auto& inc : detail::increments(f.grid, plan))
        sup = std::max(sup, detail::sup_difference(f, inc.steps, order) / std::pow(inc.magnitude, m));
    return sup;
}

/// Spectral derivative D^beta f of a physical field; the unpaired Nyquist
/// mode is dropped.
inline Field spectral_derivative(const Field& f, const std::array<int, 3>& beta) {
    Field hat = forward_transform(f);
    const auto& g = f.grid;
    for (std::size_t i = 0; i < hat.size(); ++i) {
        const auto idx = g.unflatten(i);
        Complex w = 1.0;
        for (int a = 0; a < g.d; ++a) {
            if (beta[a] == 0) continue;
            if (g.wavenumber(idx[a]) == -g.n / 2) {
                w = 0.0;
                break;
            }
            const Complex ixi(0.0, g.dxi() * g.wavenumber(idx[a]));
            for (int k = 0; k < beta[a]; ++k) w *= ixi;
        }
        hat.values[i] *= w;
    }
    return inverse_transform(hat);
}

/// Hoelder seminorm part of C^{n+alpha}: sum_{|beta|=n} sup |D_h D^beta f| / |h|^alpha.
inline double holder_seminorm(const Field& f, int n, double alpha, const HPlan& plan = {}) {
    require(n >= 0, "holder_norm: n must be nonnegative");
    require(alpha > 0 && alpha < 1, "holder_norm: alpha must lie in (0, 1)");
    const auto incs = detail::increments(f.grid, plan);
    double total = 0;
    for (const auto& beta : detail::multi_indices(f.grid.d, n)) {
        const Field deriv = n == 0 ? f : spectral_derivative(f, beta);
        double sup = 0;
        for (const auto& inc : incs)
            sup = std::max(sup, detail::sup_difference(deriv, inc.steps, 1) / std::pow(inc.magnitude, alpha));
        total += sup;
    }
    return total;
}

/// ||f||_{C^{n+alpha}} = ||f||_inf + Hoelder seminorm.
inline double holder_norm(const Field& f, int n, double alpha, const HPlan& plan = {}) {
    return max_abs(f) + holder_seminorm(f, n, alpha, plan);
}

/// C^{order} norm for a non-integer order, split as n + alpha.
inline double holder_norm_of_order(const Field& f, double order, const HPlan& plan = {}) {
    const double n = std::floor(order);
    const double alpha = order - n;
    if (alpha <= 1e-12 || alpha >= 1 - 1e-12) throw ArgumentError("holder norm: order must not be an integer");
    return holder_norm(f, static_cast<int>(n), alpha, plan);
}

// ---------------------------------------------------------------------------
// Time norms and reports
// ---------------------------------------------------------------------------

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// (int_0^T v(t)^p dt)^{1/p} by the composite trapezoid rule on a uniform
/// grid with step dt, or the maximum when p is infinite.
inline double lp_time_norm(const std::vector<double>& values, double dt, double p) {
    if (!(p > 1)) throw ArgumentError("lp_time_norm: p must exceed 1");
    require(values.size() >= 2, "lp_time_norm: need at least two samples");
    for (double v : values) require(v >= 0, "lp_time_norm: values must be nonnegative");
    if (std::isinf(p)) return *std::max_element(values.begin(), values.end());
    double acc = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double w = (i == 0 || i + 1 == values.size()) ? 0.5 : 1.0;
        acc += w * std::pow(values[i], p);
    }
    return std::pow(acc * dt, 1.0 / p);
}

struct NormReport {
    double l_inf = 0.0;
    double m = 0.0;
    double lambda_hom = 0.0;
    double lambda_inhom = 0.0;
    double lambda_fd = 0.0;
    /// ||f||_inf + Hoelder seminorm of order m when m is not an integer, else NaN.
    double holder = std::numeric_limits<double>::quiet_NaN();
    double s0_sup = 0.0;
    std::vector<BandValue> bands;
};

inline NormReport norm_report(const LPBank& bank, const Field& f, double m, const HPlan& plan = {}) {
    NormReport r;
    r.m = m;
    r.l_inf = max_abs(f);
    const Field hat = forward_transform(f);
    const LPNorm hom = lipschitz_norm_lp_hat(bank, hat, m, LipschitzVariant::Homogeneous);
    const LPNorm inh = lipschitz_norm_lp_hat(bank, hat, m, LipschitzVariant::Inhomogeneous);
    r.lambda_hom = hom.value;
    r.lambda_inhom = inh.value;
    r.s0_sup = inh.s0_sup;
    r.bands = hom.bands;
    r.lambda_fd = lipschitz_norm_fd(f, m, plan);
    const double frac = m - std::floor(m);
    if (frac > 1e-12 && frac < 1 - 1e-12) r.holder = holder_norm_of_order(f, m, plan);
    return r;
}

}  // namespace specprop
