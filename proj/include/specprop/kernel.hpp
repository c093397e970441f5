#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "specprop/grid.hpp"
#include "specprop/symbol.hpp"

namespace specprop {

/// Indices of a kernel p_{alpha,a,b}(s,t,.) or q_{alpha,a,b}(s,t,.).
struct KernelRequest {
    int a = 0;
    double b = 0.0;
    std::array<int, 3> alpha{0, 0, 0};
    double s = 0.0;
    double t = 1.0;

    int order() const { return alpha[0] + alpha[1] + alpha[2]; }
};

namespace detail {

inline void check_request(const SymbolSpec& spec, const KernelRequest& req, const SpectralGrid& g) {
    if (spec.dimension() != g.d) throw ArgumentError("kernel: symbol and grid dimensions differ");
    if (req.a < 0) throw ArgumentError("kernel: a must be a nonnegative integer");
    if (!(req.s < req.t)) throw ArgumentError("kernel: need s < t");
    for (int k = 0; k < 3; ++k)
        if (req.alpha[k] < 0 || (k >= g.d && req.alpha[k] != 0))
            throw ArgumentError("kernel: invalid multi-index");
    if (req.order() > spec.d0()) throw ArgumentError("kernel: |alpha| exceeds d0 = floor(d/2)+1");
}

inline Complex ipow(Complex z, int a) {
    Complex r = 1.0;
    for (int i = 0; i < a; ++i) r *= z;
    return r;
}

inline double radial_power(double r, double b) {
    if (b == 0.0) return 1.0;
    if (r == 0.0) return 0.0;  // for b < 0 the origin is removable: it carries no weight in any norm
    return std::pow(r, b);
}

// Multiply a physical field by (-i x)^alpha.
inline void apply_moment(Field& f, const std::array<int, 3>& alpha) {
    if (alpha[0] + alpha[1] + alpha[2] == 0) return;
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto x = f.grid.position(i);
        Complex w = 1.0;
        for (int a = 0; a < f.grid.d; ++a) w *= ipow(Complex(0.0, -x[a]), alpha[a]);
        f.values[i] *= w;
    }
}

}  // namespace detail

/// Multiplier of p_{0,a,b}: psi(t,xi)^a |xi|^b exp(int_s^t psi(r,xi) dr).
inline Complex p_multiplier(const SymbolSpec& spec, int a, double b, double s, double t, Vec xi) {
    const double r = norm2(xi);
    if (b < 0 && r == 0.0) return 0.0;
    Complex m = std::exp(spec.integrate(s, t, xi)) * detail::radial_power(r, b);
    if (a > 0) m *= detail::ipow(spec.eval(t, xi), a);
    return m;
}

/// Multiplier of q_{0,a,b}: the self-similar rescaling of p's multiplier,
/// ((t-s) psi(t, lam xi))^a |xi|^b exp(int_s^t psi(r, lam xi) dr), lam = (t-s)^{-1/gamma}.
inline Complex q_multiplier(const SymbolSpec& spec, int a, double b, double s, double t, Vec xi) {
    const double r = norm2(xi);
    if (b < 0 && r == 0.0) return 0.0;
    const double lam = std::pow(t - s, -1.0 / spec.gamma());
    std::array<double, 3> scaled{0, 0, 0};
    for (std::size_t j = 0; j < xi.size(); ++j) scaled[j] = lam * xi[j];
    const Vec sv(scaled.data(), xi.size());
    Complex m = std::exp(spec.integrate(s, t, sv)) * detail::radial_power(r, b);
    if (a > 0) m *= detail::ipow((t - s) * spec.eval(t, sv), a);
    return m;
}

/// Propagator E(s,t,xi) = exp(int_s^t psi(r,xi) dr) on the dual lattice.
inline Field propagator(const SymbolSpec& spec, double s, double t, const SpectralGrid& g) {
    if (s > t) throw ArgumentError("propagator: s > t");
    if (spec.dimension() != g.d) throw ArgumentError("propagator: symbol and grid dimensions differ");
    Field e(g, Space::Frequency);
    if (spec.is_builtin()) {
        const double area = spec.profile().integral(s, t);
        for (std::size_t i = 0; i < e.size(); ++i) {
            auto xi = g.frequency(i);
            e.values[i] = std::exp(area * spec.base(Vec(xi.data(), static_cast<std::size_t>(g.d))));
        }
        return e;
    }
    for (std::size_t i = 0; i < e.size(); ++i) {
        auto xi = g.frequency(i);
        e.values[i] = std::exp(spec.integrate(s, t, Vec(xi.data(), static_cast<std::size_t>(g.d))));
    }
    return e;
}

/// p_{alpha,a,b}(s,t,.) via F^{-1}[D^alpha g](x) = (-i x)^alpha F^{-1}[g](x).
/// For b < 0 the multiplier is set to 0 at xi = 0.
inline Field kernel_p(const SymbolSpec& spec, const KernelRequest& req, const SpectralGrid& g) {
    detail::check_request(spec, req, g);
    Field hat(g, Space::Frequency);
    for (std::size_t i = 0; i < hat.size(); ++i) {
        auto xi = g.frequency(i);
        hat.values[i] = p_multiplier(spec, req.a, req.b, req.s, req.t, Vec(xi.data(), static_cast<std::size_t>(g.d)));
    }
    Field out = inverse_transform(hat);
    detail::apply_moment(out, req.alpha);
    return out;
}

/// Cross-check route for kernel_p: D^alpha of the multiplier by central
/// differences in xi (step h, off-lattice), then the inverse transform.
inline Field kernel_p_finite_difference(const SymbolSpec& spec, const KernelRequest& req, const SpectralGrid& g,
                                        double h = 1e-3) {
    detail::check_request(spec, req, g);
    auto mult = [&](Vec xi) { return p_multiplier(spec, req.a, req.b, req.s, req.t, xi); };
    Field hat(g, Space::Frequency);
    for (std::size_t i = 0; i < hat.size(); ++i)
        hat.values[i] = detail::central_derivative(mult, g.frequency(i), g.d, req.alpha, h);
    return inverse_transform(hat);
}

/// q_{alpha,a,b}(s,t,.), the kernel of the rescaled multiplier.
inline Field kernel_q(const SymbolSpec& spec, const KernelRequest& req, const SpectralGrid& g) {
    detail::check_request(spec, req, g);
    Field hat(g, Space::Frequency);
    for (std::size_t i = 0; i < hat.size(); ++i) {
        auto xi = g.frequency(i);
        hat.values[i] = q_multiplier(spec, req.a, req.b, req.s, req.t, Vec(xi.data(), static_cast<std::size_t>(g.d)));
    }
    Field out = inverse_transform(hat);
    detail::apply_moment(out, req.alpha);
    return out;
}

/// Largest admissible weight exponent delta for the weighted L2 bound:
/// delta < 1/2 min (gamma a + b), or 1/2 min gamma when a = b = 0.
inline double max_weight_delta(double gamma, int a, double b) {
    if (a == 0 && b == 0.0) return std::min(0.5, gamma);
    return std::min(0.5, gamma * a + b);
}

struct WeightRequest {
    double delta;
    double gamma;
    int a = 0;
    double b = 0.0;
};

struct KernelNorms {
    double l1 = 0.0;
    double l2 = 0.0;
    /// (int |x|^{d+2 delta} |k(x)|^2 dx)^{1/2}
    std::optional<double> weighted_l2;
    /// Upper estimate of the L1 mass outside the domain, from the weighted L2 norm.
    std::optional<double> tail_bound;
};

inline KernelNorms kernel_norms(const Field& k, std::optional<WeightRequest> weight = std::nullopt) {
    if (k.space != Space::Physical) throw ArgumentError("kernel_norms: kernel must be in physical space");
    KernelNorms out;
    out.l1 = l1_norm(k);
    out.l2 = l2_norm(k);
    if (weight) {
        const double cap = max_weight_delta(weight->gamma, weight->a, weight->b);
        if (!(weight->delta > 0 && weight->delta < cap))
            throw ArgumentError("kernel_norms: weight delta outside the admissible range (0, " + std::to_string(cap) + ")");
        const int d = k.grid.d;
        const double power = d + 2.0 * weight->delta;
        double acc = 0;
        for (std::size_t i = 0; i < k.size(); ++i) {
            auto x = k.grid.position(i);
            const double r = norm2(Vec(x.data(), static_cast<std::size_t>(d)));
            acc += std::pow(r, power) * std::norm(k.values[i]);
        }
        const double w2 = acc * k.grid.cell_volume();
        out.weighted_l2 = std::sqrt(w2);
        const double sphere = d == 1 ? 2.0 : d == 2 ? 2.0 * kPi : 4.0 * kPi;
        out.tail_bound = std::sqrt(w2 * sphere / (2.0 * weight->delta)) * std::pow(k.grid.half_width, -weight->delta);
    }
    return out;
}

/// How the interval [s, t] is placed for a given gap t - s.
struct GapPlacement {
    double origin = 0.0;
    /// When true the interval is centered on `origin`, otherwise it starts there.
    bool centered = false;

    std::pair<double, double> interval(double gap) const {
        if (centered) return {origin - gap / 2, origin + gap / 2};
        return {origin, origin + gap};
    }
};

struct DecayFit {
    std::vector<double> gaps;
    std::vector<double> norms;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
};

/// Throws ResolutionError when the narrowest kernel of the sweep spans fewer
/// than four grid spacings.
inline void check_gap_resolution(const SymbolSpec& spec, const SpectralGrid& g, const GapPlacement& place,
                                 double gap) {
    auto [s, t] = place.interval(gap);
    const double area = spec.is_builtin() ? spec.profile().integral(s, t) : spec.nu() * gap;
    const double width = std::pow(area, 1.0 / spec.gamma());
    if (width < 4.0 * g.spacing())
        throw ResolutionError("gap " + std::to_string(gap) + " is not resolved: kernel width " +
                              std::to_string(width) + " < 4 spacings");
}

/// Fits log ||p_{a,b}(s,t,.)||_{L1} against log(t - s).
inline DecayFit l1_decay_fit(const SymbolSpec& spec, int a, double b, const std::vector<double>& gaps,
                             const SpectralGrid& g, const GapPlacement& place = {}) {
    if (gaps.size() < 4) throw ArgumentError("l1_decay_fit: need at least 4 gaps");
    if (!(a == 0 && b == 0.0) && !(spec.gamma() * a + b > 0))
        throw ArgumentError("l1_decay_fit: need a = b = 0 or gamma a + b > 0");
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        if (!(gaps[i] > 0) || (i > 0 && !(gaps[i] > gaps[i - 1])))
            throw ArgumentError("l1_decay_fit: gaps must be positive and strictly increasing");
        check_gap_resolution(spec, g, place, gaps[i]);
    }
    DecayFit fit;
    std::vector<double> lx, ly;
    for (double gap : gaps) {
        auto [s, t] = place.interval(gap);
        KernelRequest req{a, b, {0, 0, 0}, s, t};
        const double n1 = l1_norm(kernel_p(spec, req, g));
        fit.gaps.push_back(gap);
        fit.norms.push_back(n1);
        lx.push_back(std::log(gap));
        ly.push_back(std::log(n1));
    }
    const LineFit lf = fit_line(lx, ly);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.residual = lf.rms_residual;
    return fit;
}

/// Exponent e of the frequency bound |q^_{alpha,a,b}(xi)| <= C |xi|^e exp(-nu |xi|^gamma).
inline double frequency_bound_exponent(double gamma, const KernelRequest& req) {
    if (req.a == 0 && req.b == 0.0 && req.order() != 0) return gamma - req.order();
    return gamma * req.a + req.b - req.order();
}

/// Smallest C with |q^_{alpha,a,b}(s,t,xi)| <= C |xi|^e exp(-nu |xi|^gamma) on the
/// sampled lattice points (xi != 0); derivatives by central differences.
inline double frequency_bound_constant(const SymbolSpec& spec, const KernelRequest& req, const SpectralGrid& g) {
    detail::check_request(spec, req, g);
    const double e = frequency_bound_exponent(spec.gamma(), req);
    auto mult = [&](Vec xi) { return q_multiplier(spec, req.a, req.b, req.s, req.t, xi); };
    double c = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto xi = g.frequency(i);
        const double r = norm2(Vec(xi.data(), static_cast<std::size_t>(g.d)));
        if (r == 0.0) continue;
        const double envelope = std::pow(r, e) * std::exp(-spec.nu() * std::pow(r, spec.gamma()));
        if (envelope < 1e-250) continue;
        const double h = 1e-3 * std::min(1.0, r);
        const Complex v = detail::central_derivative(mult, xi, g.d, req.alpha, h);
        c = std::max(c, std::abs(v) / envelope);
    }
    return c;
}

}  // namespace specprop
