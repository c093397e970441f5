#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "specprop/common.hpp"

namespace specprop {

/// Frequency or position vector of dimension d <= 3.
using Vec = std::span<const double>;

inline double norm2(Vec v) {
    double s = 0;
    for (double c : v) s += c * c;
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Time profile
// ---------------------------------------------------------------------------

/// Piecewise-constant modulation a(t). Piece i holds `level` on
/// [breakpoint_i, breakpoint_{i+1}); the last piece extends to +infinity and
/// times before 0 are clamped to the first level.
class TimeProfile {
public:
    struct Piece {
        double breakpoint;
        double level;
    };

    struct Segment {
        double begin;
        double end;
        double level;
    };

    TimeProfile() : pieces_{{0.0, 1.0}} {}

    explicit TimeProfile(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
        if (pieces_.empty()) throw ConfigurationError("time profile: at least one piece required");
        if (pieces_.front().breakpoint != 0.0)
            throw ConfigurationError("time profile: first breakpoint must be 0");
        for (std::size_t i = 1; i < pieces_.size(); ++i)
            if (!(pieces_[i].breakpoint > pieces_[i - 1].breakpoint))
                throw ConfigurationError("time profile: breakpoints must be strictly increasing");
    }

    static TimeProfile constant(double level) { return TimeProfile({{0.0, level}}); }

    const std::vector<Piece>& pieces() const { return pieces_; }

    double level_at(double t) const {
        auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                                   [](double v, const Piece& p) { return v < p.breakpoint; });
        if (it == pieces_.begin()) return pieces_.front().level;
        return std::prev(it)->level;
    }

    double min_level() const {
        double m = pieces_.front().level;
        for (auto& p : pieces_) m = std::min(m, p.level);
        return m;
    }
    double max_level() const {
        double m = pieces_.front().level;
        for (auto& p : pieces_) m = std::max(m, p.level);
        return m;
    }

    /// Maximal constant segments covering [s, t].
    std::vector<Segment> segments(double s, double t) const {
        std::vector<Segment> out;
        if (!(t > s)) return out;
        double cur = s;
        while (cur < t) {
            const double level = level_at(cur);
            auto it = std::upper_bound(pieces_.begin(), pieces_.end(), cur,
                                       [](double v, const Piece& p) { return v < p.breakpoint; });
            const double next = (it == pieces_.end()) ? t : std::min(t, it->breakpoint);
            out.push_back({cur, next, level});
            cur = next;
        }
        return out;
    }

    /// Exact integral of a(r) over [s, t].
    double integral(double s, double t) const {
        double acc = 0;
        for (const auto& seg : segments(s, t)) acc += seg.level * (seg.end - seg.begin);
        return acc;
    }

    bool is_constant_on(double s, double t) const { return segments(s, t).size() <= 1; }

private:
    std::vector<Piece> pieces_;
};

// ---------------------------------------------------------------------------
// Symbol
// ---------------------------------------------------------------------------

enum class SymbolKind { FractionalLaplacian, ComplexRotation, AnisotropicSum, Tabulated };

inline std::string to_string(SymbolKind k) {
    switch (k) {
        case SymbolKind::FractionalLaplacian: return "fractional-laplacian";
        case SymbolKind::ComplexRotation: return "complex-rotation";
        case SymbolKind::AnisotropicSum: return "anisotropic-sum";
        case SymbolKind::Tabulated: return "tabulated";
    }
    return "?";
}

inline SymbolKind parse_symbol_kind(const std::string& s) {
    if (s == "fractional-laplacian") return SymbolKind::FractionalLaplacian;
    if (s == "complex-rotation") return SymbolKind::ComplexRotation;
    if (s == "anisotropic-sum") return SymbolKind::AnisotropicSum;
    if (s == "tabulated") return SymbolKind::Tabulated;
    throw ConfigurationError("unknown symbol kind '" + s + "'");
}

/// User-provided psi(t, xi) for the tabulated kind.
using SymbolCallback = std::function<Complex(double t, Vec xi)>;

/// A time-measurable symbol psi(t, xi). Immutable after construction.
///
/// Builtin kinds factor as psi(t, xi) = a(t) * base(xi) with a(t) the
/// piecewise-constant profile, which makes the time integral exact.
class SymbolSpec {
public:
    static SymbolSpec fractional_laplacian(int d, double gamma, double nu,
                                           TimeProfile profile = TimeProfile{}) {
        SymbolSpec s(SymbolKind::FractionalLaplacian, d, gamma, nu, std::move(profile));
        s.check_levels();
        return s;
    }

    /// psi = -a(t) (1 - i rho) |xi|^gamma.
    static SymbolSpec complex_rotation(int d, double gamma, double nu, double rho,
                                       TimeProfile profile = TimeProfile{}) {
        SymbolSpec s(SymbolKind::ComplexRotation, d, gamma, nu, std::move(profile));
        const double rho_max = std::tan(std::acos(nu * nu));
        if (std::abs(rho) > rho_max + 1e-12)
            throw ConfigurationError("complex-rotation: |rho| exceeds tan(arccos(nu^2))");
        s.rho_ = rho;
        s.check_levels();
        return s;
    }

    /// psi = -a(t) sum_j c_j |xi^j|^gamma.
    static SymbolSpec anisotropic_sum(int d, double gamma, double nu, std::vector<double> coeffs,
                                      TimeProfile profile = TimeProfile{}) {
        SymbolSpec s(SymbolKind::AnisotropicSum, d, gamma, nu, std::move(profile));
        if (static_cast<int>(coeffs.size()) != d)
            throw ConfigurationError("anisotropic-sum: need one coefficient per axis");
        for (double c : coeffs)
            if (c < nu - 1e-15 || c > 1.0 / nu + 1e-12)
                throw ConfigurationError("anisotropic-sum: coefficients must lie in [nu, 1/nu]");
        s.coeffs_ = std::move(coeffs);
        s.check_levels();
        return s;
    }

    /// A callback may be attached later with `with_callback`; evaluating
    /// without one is a configuration error.
    static SymbolSpec tabulated(int d, double gamma, double nu, SymbolCallback cb = {},
                                int quadrature_steps = 64) {
        SymbolSpec s(SymbolKind::Tabulated, d, gamma, nu, TimeProfile{});
        s.callback_ = std::move(cb);
        if (quadrature_steps < 1) throw ConfigurationError("tabulated: quadrature steps must be >= 1");
        s.quadrature_steps_ = quadrature_steps;
        return s;
    }

    SymbolSpec with_callback(SymbolCallback cb) const {
        SymbolSpec s = *this;
        s.callback_ = std::move(cb);
        return s;
    }

    SymbolSpec with_profile(TimeProfile profile) const {
        SymbolSpec s = *this;
        s.profile_ = std::move(profile);
        s.check_levels();
        return s;
    }

    SymbolKind kind() const { return kind_; }
    int dimension() const { return d_; }
    double gamma() const { return gamma_; }
    double nu() const { return nu_; }
    double rho() const { return rho_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    const TimeProfile& profile() const { return profile_; }
    int quadrature_steps() const { return quadrature_steps_; }
    bool is_builtin() const { return kind_ != SymbolKind::Tabulated; }

    /// Minimal number of xi-derivatives controlled by the symbol bound, floor(d/2)+1.
    int d0() const { return d_ / 2 + 1; }

    /// Time-independent factor base(xi) of a builtin symbol.
    Complex base(Vec xi) const {
        check_dim(xi);
        switch (kind_) {
            case SymbolKind::FractionalLaplacian:
                return -std::pow(norm2(xi), gamma_);
            case SymbolKind::ComplexRotation:
                return -Complex(1.0, -rho_) * std::pow(norm2(xi), gamma_);
            case SymbolKind::AnisotropicSum: {
                double acc = 0;
                for (int j = 0; j < d_; ++j) acc += coeffs_[j] * std::pow(std::abs(xi[j]), gamma_);
                return -acc;
            }
            case SymbolKind::Tabulated:
                break;
        }
        throw ConfigurationError("tabulated symbol has no separable base");
    }

    /// psi(t, xi).
    Complex eval(double t, Vec xi) const {
        check_dim(xi);
        if (kind_ == SymbolKind::Tabulated) {
            if (!callback_) throw ConfigurationError("tabulated symbol evaluated without a callback");
            return callback_(t, xi);
        }
        return profile_.level_at(t) * base(xi);
    }

    /// Integral of psi(r, xi) over r in [s, t]; exact for builtin kinds,
    /// composite midpoint rule otherwise.
    Complex integrate(double s, double t, Vec xi) const {
        if (s > t) throw ArgumentError("integrate_symbol: s > t");
        if (s == t) return 0.0;
        if (is_builtin()) return profile_.integral(s, t) * base(xi);
        const int m = quadrature_steps_;
        const double h = (t - s) / m;
        Complex acc = 0.0;
        for (int i = 0; i < m; ++i) acc += eval(s + (i + 0.5) * h, xi);
        return acc * h;
    }

    /// psi(t, -xi): the multiplier of the adjoint operator.
    Complex adjoint(double t, Vec xi) const {
        check_dim(xi);
        std::array<double, 3> neg{};
        for (int j = 0; j < d_; ++j) neg[j] = -xi[j];
        return eval(t, Vec(neg.data(), static_cast<std::size_t>(d_)));
    }

    /// Upper bound of sup |D^alpha base(w)| over |w| = 1, |alpha| <= d0, used
    /// to normalize the derivative check of builtin kinds. 1 for tabulated.
    double derivative_constant() const {
        const double g = gamma_;
        double c = 1.0;
        if (d0() >= 1) c = std::max(c, g);
        if (d0() >= 2) c = std::max(c, g * std::max({1.0, std::abs(g - 1.0), std::abs(g - 2.0) / 2.0}));
        switch (kind_) {
            case SymbolKind::FractionalLaplacian: return c;
            case SymbolKind::ComplexRotation: return c * std::sqrt(1.0 + rho_ * rho_);
            case SymbolKind::AnisotropicSum: {
                double cmax = *std::max_element(coeffs_.begin(), coeffs_.end());
                return c * cmax * std::pow(static_cast<double>(d_), std::max(0.0, 1.0 - g / 2.0));
            }
            case SymbolKind::Tabulated: return 1.0;
        }
        return 1.0;
    }

    std::string describe() const {
        std::ostringstream os;
        os << "kind=" << to_string(kind_) << " d=" << d_ << " gamma=" << gamma_ << " nu=" << nu_;
        if (kind_ == SymbolKind::ComplexRotation) os << " rho=" << rho_;
        return os.str();
    }

private:
    SymbolSpec(SymbolKind k, int d, double gamma, double nu, TimeProfile profile)
        : kind_(k), d_(d), gamma_(gamma), nu_(nu), profile_(std::move(profile)) {
        if (d < 1 || d > 3) throw ConfigurationError("symbol: dimension must be 1, 2 or 3");
        if (!(gamma > 0)) throw ConfigurationError("symbol: gamma must be positive");
        if (!(nu > 0 && nu <= 1)) throw ConfigurationError("symbol: nu must lie in (0, 1]");
    }

    void check_levels() const {
        const double tol = 1e-12;
        for (auto& p : profile_.pieces())
            if (p.level < nu_ - tol || p.level > 1.0 / nu_ + tol)
                throw ConfigurationError("time profile: levels must lie in [nu, 1/nu]");
    }

    void check_dim(Vec xi) const {
        if (static_cast<int>(xi.size()) != d_)
            throw ArgumentError("symbol: frequency vector has wrong dimension");
    }

    SymbolKind kind_;
    int d_;
    double gamma_;
    double nu_;
    double rho_ = 0.0;
    std::vector<double> coeffs_;
    TimeProfile profile_;
    SymbolCallback callback_;
    int quadrature_steps_ = 64;
};

inline Complex eval_symbol(const SymbolSpec& spec, double t, Vec xi) { return spec.eval(t, xi); }
inline Complex integrate_symbol(const SymbolSpec& spec, double s, double t, Vec xi) {
    return spec.integrate(s, t, xi);
}
inline Complex adjoint_multiplier(const SymbolSpec& spec, double t, Vec xi) {
    return spec.adjoint(t, xi);
}

// ---------------------------------------------------------------------------
// Validation of the ellipticity and derivative bounds
// ---------------------------------------------------------------------------

struct SamplePlan {
    std::vector<double> radii{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0};
    int directions = 8;
    int times = 4;
    double horizon = 1.0;
};

struct ValidationReport {
    bool passed = false;
    /// min over samples of (-Re psi - nu |xi|^gamma) / |xi|^gamma.
    double worst_sym1_margin = 0.0;
    /// max over samples and |alpha| <= d0 of nu |D^alpha psi| |xi|^{|alpha|-gamma},
    /// divided by the kind's derivative constant.
    double worst_sym2_ratio = 0.0;
    /// max of |D^alpha psi| |xi|^{|alpha|-gamma} before any normalization.
    double effective_constant = 0.0;
    long sample_count = 0;
    int d0 = 1;
    std::vector<std::string> notes;
};

namespace detail {

inline std::vector<std::array<double, 3>> sample_directions(int d, int count) {
    std::vector<std::array<double, 3>> dirs;
    if (d == 1) {
        dirs.push_back({1.0, 0, 0});
        dirs.push_back({-1.0, 0, 0});
        return dirs;
    }
    if (d == 2) {
        for (int k = 0; k < count; ++k) {
            const double a = 2 * kPi * (k + 0.37) / count;
            dirs.push_back({std::cos(a), std::sin(a), 0});
        }
        return dirs;
    }
    // Fibonacci sphere
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        dirs.push_back({r * std::cos(golden * k), r * std::sin(golden * k), z});
    }
    return dirs;
}

inline void multi_indices(int d, int order, std::array<int, 3>& cur, int axis, int remaining,
                          std::vector<std::array<int, 3>>& out) {
    if (axis == d - 1) {
        cur[axis] = remaining;
        out.push_back(cur);
        return;
    }
    for (int k = 0; k <= remaining; ++k) {
        cur[axis] = k;
        multi_indices(d, order, cur, axis + 1, remaining - k, out);
    }
}

/// All multi-indices of total order exactly `order` in d variables.
inline std::vector<std::array<int, 3>> multi_indices(int d, int order) {
    std::vector<std::array<int, 3>> out;
    std::array<int, 3> cur{0, 0, 0};
    multi_indices(d, order, cur, 0, order, out);
    return out;
}

// Tensor-product central difference of f at xi along multi-index alpha.
inline Complex central_derivative(const std::function<Complex(Vec)>& f, std::array<double, 3> xi,
                                  int d, const std::array<int, 3>& alpha, double h, int axis = 0) {
    while (axis < d && alpha[axis] == 0) ++axis;
    if (axis >= d) return f(Vec(xi.data(), static_cast<std::size_t>(d)));
    auto shifted = [&](double delta) {
        auto x = xi;
        x[axis] += delta;
        return central_derivative(f, x, d, alpha, h, axis + 1);
    };
    switch (alpha[axis]) {
        case 1:
            return (shifted(h) - shifted(-h)) / (2 * h);
        case 2:
            return (shifted(h) - 2.0 * shifted(0) + shifted(-h)) / (h * h);
        case 3:
            return (shifted(2 * h) - 2.0 * shifted(h) + 2.0 * shifted(-h) - shifted(-2 * h)) /
                   (2 * h * h * h);
        default:
            throw ArgumentError("central_derivative: order > 3 per axis unsupported");
    }
}

}  // namespace detail

/// Samples the symbol on spheres of the given radii and checks the
/// ellipticity bound and the derivative bound for |alpha| <= d0 using
/// central differences with step 1e-3 |xi|.
inline ValidationReport validate_symbol(const SymbolSpec& spec, const SamplePlan& plan = {},
                                        double tol = 1e-4) {
    require(tol > 0, "validate_symbol: tol must be positive");
    for (double r : plan.radii) require(r > 0, "validate_symbol: radii must be positive");
    ValidationReport rep;
    const int d = spec.dimension();
    rep.d0 = spec.d0();
    rep.worst_sym1_margin = std::numeric_limits<double>::infinity();
    const double g = spec.gamma();
    const double nu = spec.nu();
    const double kind_constant = spec.derivative_constant();

    std::vector<double> times;
    for (int i = 0; i < plan.times; ++i) times.push_back(plan.horizon * (i + 0.5) / plan.times);
    for (const auto& seg : spec.profile().segments(0.0, plan.horizon))
        times.push_back(0.5 * (seg.begin + seg.end));

    std::vector<std::vector<std::array<int, 3>>> alphas;
    for (int k = 0; k <= rep.d0; ++k) alphas.push_back(detail::multi_indices(d, k));

    for (double t : times) {
        auto f = [&](Vec xi) { return spec.eval(t, xi); };
        for (const auto& dir : detail::sample_directions(d, plan.directions)) {
            for (double r : plan.radii) {
                std::array<double, 3> xi{};
                for (int j = 0; j < d; ++j) xi[j] = r * dir[j];
                const Vec v(xi.data(), static_cast<std::size_t>(d));
                const Complex psi = spec.eval(t, v);
                const double rg = std::pow(r, g);
                rep.worst_sym1_margin = std::min(rep.worst_sym1_margin, (-psi.real() - nu * rg) / rg);
                const double h = 1e-3 * r;
                for (int k = 0; k <= rep.d0; ++k) {
                    for (const auto& alpha : alphas[k]) {
                        const Complex der = detail::central_derivative(f, xi, d, alpha, h);
                        const double raw = std::abs(der) * std::pow(r, k - g);
                        rep.effective_constant = std::max(rep.effective_constant, raw);
                        rep.worst_sym2_ratio = std::max(rep.worst_sym2_ratio, raw * nu / kind_constant);
                    }
                }
                ++rep.sample_count;
            }
        }
    }
    rep.passed = rep.worst_sym1_margin >= -tol && rep.worst_sym2_ratio <= 1.0 + tol;
    if (spec.kind() == SymbolKind::AnisotropicSum && g > 2.0) {
        rep.passed = false;
        rep.notes.push_back("anisotropic-sum is only admissible for gamma <= 2");
    }
    if (spec.kind() != SymbolKind::Tabulated && spec.kind() != SymbolKind::AnisotropicSum)
        rep.notes.push_back("derivative ratio normalized by kind constant " + std::to_string(kind_constant));
    return rep;
}

inline std::string format_report(const ValidationReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << "passed=" << (r.passed ? "true" : "false") << "\n";
    os << "worst_sym1_margin=" << r.worst_sym1_margin << "\n";
    os << "worst_sym2_ratio=" << r.worst_sym2_ratio << "\n";
    os << "effective_constant=" << r.effective_constant << "\n";
    os << "sample_count=" << r.sample_count << "\n";
    os << "d0=" << r.d0 << "\n";
    for (const auto& n : r.notes) os << "note=" << n << "\n";
    return os.str();
}

}  // namespace specprop
