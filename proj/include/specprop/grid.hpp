#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "specprop/common.hpp"
#include "specprop/fft.hpp"
#include "specprop/symbol.hpp"

namespace specprop {

/// Periodic sampling of [-L, L)^d with N points per axis. The dual lattice is
/// xi_k = (pi / L) k, k in [-N/2, N/2), stored in FFT order per axis.
struct SpectralGrid {
    int d = 1;
    int n = 256;
    double half_width = 16.0;

    SpectralGrid() = default;
    SpectralGrid(int dim, int points, double l) : d(dim), n(points), half_width(l) {
        if (d < 1 || d > 3) throw ConfigurationError("grid: dimension must be 1, 2 or 3");
        if (!is_power_of_two(n) || n < 4) throw ConfigurationError("grid: N must be a power of two >= 4");
        if (!(l > 0)) throw ConfigurationError("grid: half width must be positive");
    }

    /// Default resolution per dimension: 256 (d=1), 128 (d=2), 64 (d=3), L = 16.
    static SpectralGrid standard(int dim) {
        const int pts = dim == 1 ? 256 : dim == 2 ? 128 : 64;
        return SpectralGrid(dim, pts, 16.0);
    }

    double spacing() const { return 2.0 * half_width / n; }
    double dxi() const { return kPi / half_width; }
    double nyquist() const { return dxi() * (n / 2); }
    std::size_t size() const {
        std::size_t s = 1;
        for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(n);
        return s;
    }
    double cell_volume() const { return std::pow(spacing(), d); }
    double dual_cell_volume() const { return std::pow(dxi(), d); }

    /// Per-axis indices of a flat row-major index.
    std::array<int, 3> unflatten(std::size_t flat) const {
        std::array<int, 3> idx{0, 0, 0};
        for (int a = d - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % n);
            flat /= n;
        }
        return idx;
    }

    std::size_t flatten(const std::array<int, 3>& idx) const {
        std::size_t flat = 0;
        for (int a = 0; a < d; ++a) flat = flat * n + static_cast<std::size_t>(((idx[a] % n) + n) % n);
        return flat;
    }

    /// Signed wavenumber of FFT-ordered index j.
    int wavenumber(int j) const { return j < n / 2 ? j : j - n; }

    std::array<double, 3> position(std::size_t flat) const {
        auto idx = unflatten(flat);
        std::array<double, 3> x{0, 0, 0};
        for (int a = 0; a < d; ++a) x[a] = -half_width + idx[a] * spacing();
        return x;
    }

    std::array<double, 3> frequency(std::size_t flat) const {
        auto idx = unflatten(flat);
        std::array<double, 3> xi{0, 0, 0};
        for (int a = 0; a < d; ++a) xi[a] = dxi() * wavenumber(idx[a]);
        return xi;
    }

    /// Flat index of -xi for the frequency at `flat`.
    std::size_t negated(std::size_t flat) const {
        auto idx = unflatten(flat);
        for (int a = 0; a < d; ++a) idx[a] = (n - idx[a]) % n;
        return flatten(idx);
    }

    std::vector<double> frequency_radii() const {
        std::vector<double> r(size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            auto xi = frequency(i);
            r[i] = norm2(Vec(xi.data(), static_cast<std::size_t>(d)));
        }
        return r;
    }

    bool operator==(const SpectralGrid& o) const {
        return d == o.d && n == o.n && half_width == o.half_width;
    }
};

enum class Space : std::uint32_t { Physical = 0, Frequency = 1 };

/// Complex samples on a grid, tagged with the space they live in.
struct Field {
    SpectralGrid grid;
    Space space = Space::Physical;
    std::vector<Complex> values;

    Field() = default;
    Field(const SpectralGrid& g, Space s) : grid(g), space(s), values(g.size()) {}
    Field(const SpectralGrid& g, Space s, std::vector<Complex> v) : grid(g), space(s), values(std::move(v)) {
        if (values.size() != grid.size()) throw ArgumentError("field: value count must equal N^d");
    }

    std::size_t size() const { return values.size(); }
    Complex& operator[](std::size_t i) { return values[i]; }
    const Complex& operator[](std::size_t i) const { return values[i]; }

    Field& operator+=(const Field& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
        return *this;
    }
    Field& operator*=(Complex c) {
        for (auto& v : values) v *= c;
        return *this;
    }
    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, Complex c) { return a *= c; }
    friend Field operator*(Complex c, Field a) { return a *= c; }

    void check_compatible(const Field& o) const {
        if (!(grid == o.grid) || space != o.space)
            throw ArgumentError("field: grid or space mismatch");
    }
};

/// Maximum modulus over the samples.
inline double max_abs(const Field& f) {
    double m = 0;
    for (auto& v : f.values) m = std::max(m, std::abs(v));
    return m;
}

/// Quadrature L1 norm of a physical field.
inline double l1_norm(const Field& f) {
    double s = 0;
    for (auto& v : f.values) s += std::abs(v);
    return s * f.grid.cell_volume();
}

inline double l2_norm(const Field& f) {
    double s = 0;
    for (auto& v : f.values) s += std::norm(v);
    return std::sqrt(s * f.grid.cell_volume());
}

/// Fraction of the L1 mass located within `margin` of the domain boundary.
inline double boundary_mass_fraction(const Field& f, double margin) {
    double total = 0, edge = 0;
    const double inner = f.grid.half_width - margin;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double a = std::abs(f.values[i]);
        total += a;
        auto x = f.grid.position(i);
        bool near = false;
        for (int k = 0; k < f.grid.d; ++k) near = near || std::abs(x[k]) >= inner;
        if (near) edge += a;
    }
    return total > 0 ? edge / total : 0.0;
}

namespace detail {

// (-1)^{sum of wavenumbers}; same parity as the FFT-ordered index because N is even.
inline double lattice_sign(const SpectralGrid& g, std::size_t flat) {
    auto idx = g.unflatten(flat);
    int s = 0;
    for (int a = 0; a < g.d; ++a) s += idx[a];
    return (s % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace detail

/// Discrete continuum Fourier transform F[f](xi) = int exp(-i x.xi) f(x) dx
/// using the rectangle rule on the grid.
inline Field forward_transform(const Field& f) {
    if (f.space != Space::Physical) throw ArgumentError("forward_transform: field is not in physical space");
    Field out(f.grid, Space::Frequency, f.values);
    fft::transform(out.values, f.grid.d, f.grid.n, FFTW_FORWARD);
    const double w = f.grid.cell_volume();
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= w * detail::lattice_sign(f.grid, i);
    return out;
}

/// Inverse transform (2 pi)^{-d} int exp(i x.xi) g(xi) dxi on the dual lattice.
inline Field inverse_transform(const Field& g) {
    if (g.space != Space::Frequency) throw ArgumentError("inverse_transform: field is not in frequency space");
    Field out(g.grid, Space::Physical, g.values);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= detail::lattice_sign(g.grid, i);
    fft::transform(out.values, g.grid.d, g.grid.n, FFTW_BACKWARD);
    const double w = 1.0 / std::pow(2.0 * g.grid.half_width, g.grid.d);
    for (auto& v : out.values) v *= w;
    return out;
}

/// Sup norm of a physical field evaluated on a grid refined `oversample`
/// times per axis by spectral zero padding. With oversample = 1 this is the
/// plain grid maximum, a lower bound for the true supremum.
inline double sup_norm(const Field& f, int oversample = 1) {
    if (f.space != Space::Physical) throw ArgumentError("sup_norm: field is not in physical space");
    if (oversample <= 1) return max_abs(f);
    require(is_power_of_two(oversample), "sup_norm: oversample factor must be a power of two");
    const Field hat = forward_transform(f);
    SpectralGrid fine(f.grid.d, f.grid.n * oversample, f.grid.half_width);
    Field fine_hat(fine, Space::Frequency);
    for (std::size_t i = 0; i < hat.size(); ++i) {
        auto idx = f.grid.unflatten(i);
        // drop the unpaired Nyquist mode so real fields stay real
        bool nyquist = false;
        for (int a = 0; a < f.grid.d; ++a) {
            idx[a] = f.grid.wavenumber(idx[a]);
            nyquist = nyquist || idx[a] == -f.grid.n / 2;
        }
        if (nyquist) continue;
        fine_hat.values[fine.flatten(idx)] = hat.values[i];
    }
    return max_abs(inverse_transform(fine_hat));
}

/// Multiply a frequency field by m(xi) evaluated per lattice point.
template <typename Multiplier>
Field apply_multiplier(const Field& hat, Multiplier&& m) {
    if (hat.space != Space::Frequency) throw ArgumentError("apply_multiplier: field is not in frequency space");
    Field out = hat;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto xi = hat.grid.frequency(i);
        out.values[i] *= m(Vec(xi.data(), static_cast<std::size_t>(hat.grid.d)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Space-time fields
// ---------------------------------------------------------------------------

/// Uniform time grid t_k = k T / K, k = 0..K.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 256;

    TimeGrid() = default;
    TimeGrid(double t, int k) : horizon(t), steps(k) {
        if (!(t > 0)) throw ConfigurationError("time grid: horizon must be positive");
        if (k < 1) throw ConfigurationError("time grid: need at least one step");
    }
    double dt() const { return horizon / steps; }
    double time(int k) const { return horizon * k / steps; }
    bool operator==(const TimeGrid& o) const { return horizon == o.horizon && steps == o.steps; }
};

/// Sequence of K+1 fields on a shared spatial grid and uniform time grid.
struct SpacetimeField {
    TimeGrid time;
    std::vector<Field> slices;

    SpacetimeField() = default;
    SpacetimeField(const TimeGrid& tg, std::vector<Field> s) : time(tg), slices(std::move(s)) {
        if (slices.size() != static_cast<std::size_t>(tg.steps + 1))
            throw ArgumentError("spacetime field: need K+1 slices");
        for (auto& f : slices)
            if (!(f.grid == slices.front().grid) || f.space != slices.front().space)
                throw ArgumentError("spacetime field: slices must share one grid and space");
    }
    SpacetimeField(const TimeGrid& tg, const SpectralGrid& g, Space s = Space::Physical)
        : time(tg), slices(static_cast<std::size_t>(tg.steps + 1), Field(g, s)) {}

    const SpectralGrid& grid() const { return slices.front().grid; }
};

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// exp(-|x - c|^2 / (2 w^2)).
inline Field gaussian_bump(const SpectralGrid& g, double width, std::array<double, 3> center = {0, 0, 0}) {
    require(width > 0, "gaussian_bump: width must be positive");
    Field f(g, Space::Physical);
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto x = g.position(i);
        double r2 = 0;
        for (int a = 0; a < g.d; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
        f.values[i] = std::exp(-r2 / (2 * width * width));
    }
    return f;
}

/// Smooth compactly supported bump exp(1 - 1/(1 - r^2)) on r in (-1, 1), 0 outside; peak 1.
inline double smooth_bump(double r) {
    if (!(std::abs(r) < 1.0)) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

inline double smooth_bump_derivative(double r) {
    if (!(std::abs(r) < 1.0)) return 0.0;
    const double q = 1.0 - r * r;
    return smooth_bump(r) * (-2.0 * r / (q * q));
}

/// Real field sum_k c_k exp(i xi_k . x) over lattice points with
/// lo <= |xi_k| <= hi, with c_k independent unit-variance complex normals
/// made Hermitian so the field is real.
inline Field band_limited_random(const SpectralGrid& g, double lo, double hi, std::uint64_t seed) {
    require(lo >= 0 && hi >= lo, "band_limited_random: need 0 <= lo <= hi");
    if (hi >= g.nyquist()) throw ResolutionError("band_limited_random: band exceeds the Nyquist frequency");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    const auto radii = g.frequency_radii();
    std::vector<Complex> raw(g.size(), 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        // draw for every lattice point so the stream does not depend on the band
        const Complex c(normal(rng), normal(rng));
        if (radii[i] >= lo && radii[i] <= hi && radii[i] > 0) raw[i] = c;
    }
    Field hat(g, Space::Frequency);
    const double scale = std::pow(2.0 * g.half_width, g.d);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const Complex sym = (raw[i] + std::conj(raw[g.negated(i)])) / std::sqrt(2.0);
        hat.values[i] = scale * sym;
    }
    Field f = inverse_transform(hat);
    for (auto& v : f.values) v = v.real();
    return f;
}

/// Parameters of a space-time bump phi(t, x) = b((t - tc) / tw) * s(x).
struct BumpParams {
    double t_center = 0.5;
    double t_halfwidth = 0.25;
    std::array<double, 3> x_center{0, 0, 0};
    double x_width = 2.0;
    /// Gaussian in x when true, compact smooth bump of radius x_width otherwise.
    bool gaussian_in_x = true;
    double amplitude = 1.0;

    double time_factor(double t) const { return smooth_bump((t - t_center) / t_halfwidth); }
    double time_factor_derivative(double t) const {
        return smooth_bump_derivative((t - t_center) / t_halfwidth) / t_halfwidth;
    }
};

inline Field bump_spatial_factor(const SpectralGrid& g, const BumpParams& p) {
    if (p.gaussian_in_x) return gaussian_bump(g, p.x_width, p.x_center);
    Field f(g, Space::Physical);
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto x = g.position(i);
        double r2 = 0;
        for (int a = 0; a < g.d; ++a) r2 += (x[a] - p.x_center[a]) * (x[a] - p.x_center[a]);
        f.values[i] = smooth_bump(std::sqrt(r2) / p.x_width);
    }
    return f;
}

/// phi sampled on the time grid; slices outside the time support are exactly zero.
inline SpacetimeField compact_bump_spacetime(const SpectralGrid& g, const TimeGrid& tg, const BumpParams& p) {
    if (p.t_center - p.t_halfwidth < 0 || p.t_center + p.t_halfwidth > tg.horizon)
        throw PreconditionError("compact bump: time support must lie inside [0, T]");
    for (int a = 0; a < g.d; ++a) {
        const double reach = p.gaussian_in_x ? 8.0 * p.x_width : p.x_width;
        if (std::abs(p.x_center[a]) + reach > g.half_width)
            throw PreconditionError("compact bump: spatial support must lie inside the domain");
    }
    const Field spatial = bump_spatial_factor(g, p);
    SpacetimeField out(tg, g);
    for (int k = 0; k <= tg.steps; ++k) out.slices[k] = spatial * Complex(p.amplitude * p.time_factor(tg.time(k)));
    return out;
}

enum class TestFunctionKind { GaussianBump, BandLimitedRandom, CompactBumpSpacetime };

struct TestFunctionParams {
    SpectralGrid grid;
    double width = 1.0;
    double band_lo = 4.0;
    double band_hi = 32.0;
    TimeGrid time;
    BumpParams bump;
};

inline std::variant<Field, SpacetimeField> make_test_function(TestFunctionKind kind, const TestFunctionParams& p,
                                                              std::uint64_t seed) {
    switch (kind) {
        case TestFunctionKind::GaussianBump: return gaussian_bump(p.grid, p.width);
        case TestFunctionKind::BandLimitedRandom: return band_limited_random(p.grid, p.band_lo, p.band_hi, seed);
        case TestFunctionKind::CompactBumpSpacetime: return compact_bump_spacetime(p.grid, p.time, p.bump);
    }
    throw ArgumentError("make_test_function: unknown kind");
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace io {

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ConfigurationError("binary dump: truncated input");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

/// CSV with one row per sample: i0[,i1[,i2]],re,im.
inline void write_csv(std::ostream& os, const Field& f) {
    for (int a = 0; a < f.grid.d; ++a) os << "i" << a << ",";
    os << "re,im\n";
    char buf[64];
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto idx = f.grid.unflatten(i);
        for (int a = 0; a < f.grid.d; ++a) os << idx[a] << ",";
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", f.values[i].real(), f.values[i].imag());
        os << buf << "\n";
    }
}

/// Binary dump: u32 d, u32 N, f64 L, u32 space tag, then N^d interleaved
/// (re, im) f64 pairs; all little-endian.
inline void write_binary(std::ostream& os, const Field& f) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.d));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.grid.n));
    write_le<double>(os, f.grid.half_width);
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.space));
    for (auto& v : f.values) {
        write_le<double>(os, v.real());
        write_le<double>(os, v.imag());
    }
}

inline Field read_binary(std::istream& is) {
    const auto d = read_le<std::uint32_t>(is);
    const auto n = read_le<std::uint32_t>(is);
    const auto l = read_le<double>(is);
    const auto tag = read_le<std::uint32_t>(is);
    if (tag > 1) throw ConfigurationError("binary dump: bad space tag");
    if (d < 1 || d > 3 || n < 4 || n > (1u << 24)) throw ConfigurationError("binary dump: bad header");
    SpectralGrid g(static_cast<int>(d), static_cast<int>(n), l);
    Field f(g, static_cast<Space>(tag));
    for (auto& v : f.values) {
        const double re = read_le<double>(is);
        const double im = read_le<double>(is);
        v = Complex(re, im);
    }
    return f;
}

/// Space-time dump: u32 slice count K+1, f64 T, then K+1 field dumps.
inline void write_binary(std::ostream& os, const SpacetimeField& f) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(f.slices.size()));
    write_le<double>(os, f.time.horizon);
    for (auto& s : f.slices) write_binary(os, s);
}

inline SpacetimeField read_spacetime_binary(std::istream& is) {
    const auto count = read_le<std::uint32_t>(is);
    const double horizon = read_le<double>(is);
    if (count < 2) throw ConfigurationError("spacetime dump: need at least two slices");
    std::vector<Field> slices;
    slices.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) slices.push_back(read_binary(is));
    return SpacetimeField(TimeGrid(horizon, static_cast<int>(count) - 1), std::move(slices));
}

}  // namespace io

}  // namespace specprop
