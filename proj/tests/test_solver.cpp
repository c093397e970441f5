#include <gtest/gtest.h>

#include "specprop/solver.hpp"

using namespace specprop;

namespace {

const auto kHeat = SymbolSpec::fractional_laplacian(1, 2.0, 1.0);

SpacetimeField constant_in_time(const TimeGrid& tg, const Field& g) {
    SpacetimeField f(tg, g.grid);
    for (auto& s : f.slices) s = g;
    return f;
}

Field cosine(const SpectralGrid& g, double k) {
    Field out(g, Space::Physical);
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] = std::cos(k * g.position(i)[0]);
    return out;
}

double rel_l2(const Field& a, const Field& b) {
    Field d = a;
    d -= b;
    return l2_norm(d) / l2_norm(b);
}

}  // namespace

TEST(Solver, DuhamelForSingleMode) {
    const SpectralGrid g(1, 64, kPi);
    const Field c = cosine(g, 1.0);
    const auto r = solve_mild(kHeat, constant_in_time(TimeGrid(1.0, 16), c));
    // u(t) = (1 - e^{-t}) cos x
    for (int k : {4, 16}) {
        Field expected = c;
        expected *= Complex(1 - std::exp(-r.u.time.time(k)));
        Field d = r.u.slices[k];
        d -= expected;
        EXPECT_LT(max_abs(d), 1e-13);
    }
    EXPECT_NEAR(r.u.slices[16].values[g.n / 2].real(), 0.63212055882855767, 1e-13);
    EXPECT_EQ(r.steps, 16);
    EXPECT_EQ(r.max_abs_propagator.size(), 16u);
}

TEST(Solver, ZeroFrequencyIsPlainTimeIntegral) {
    const SpectralGrid g(1, 32, 2.0);
    Field one(g, Space::Physical);
    for (auto& v : one.values) v = 2.0;
    const auto two_piece = SymbolSpec::fractional_laplacian(1, 1.5, 0.5, TimeProfile({{0.0, 1.0}, {0.3, 2.0}}));
    const auto r = solve_mild(two_piece, constant_in_time(TimeGrid(1.0, 10), one));
    for (int k = 0; k <= 10; ++k) EXPECT_NEAR(max_abs(r.u.slices[k]), 2.0 * r.u.time.time(k), 1e-13);
}

TEST(Solver, PiecewiseConstantForcingIsIntegratedExactly) {
    // two-piece profile with a break inside a step; single mode has the closed form
    // u(1) = int_0^1 exp(-int_s^1 a(r) dr) ds
    const SpectralGrid g(1, 64, kPi);
    const auto spec = SymbolSpec::fractional_laplacian(1, 2.0, 0.5, TimeProfile({{0.0, 1.0}, {0.35, 0.5}}));
    const auto r = solve_mild(spec, constant_in_time(TimeGrid(1.0, 4), cosine(g, 1.0)));
    const double tail = 1 - 0.35;
    const double exact = (1 - std::exp(-0.5 * tail)) / 0.5 + std::exp(-0.5 * tail) * (1 - std::exp(-0.35));
    EXPECT_NEAR(r.u.slices[4].values[g.n / 2].real(), exact, 1e-13);
}

TEST(Solver, AgreesWithRiemannDuhamelOracle) {
    EnsembleSpec ens;
    ens.time = TimeGrid(1.0, 256);
    ens.band_lo = 1.0;
    ens.band_hi = 6.0;
    const auto spec = SymbolSpec::complex_rotation(1, 1.5, 0.5, 0.6, random_profile(0.5, 1.0, 4, 3));
    const SpacetimeField f = make_member(ens, 0);
    const auto r = solve_mild(spec, f);
    // left Riemann sum is first order in dt
    EXPECT_LT(rel_l2(apply_G_quadrature(spec, f, 256), r.u.slices[256]), 2e-2);
    EXPECT_LT(rel_l2(apply_G_quadrature(spec, f, 128), r.u.slices[128]), 2e-2);
}

TEST(Solver, ZeroForcingGivesZero) {
    const SpacetimeField f(TimeGrid(1.0, 8), SpectralGrid(1, 32, 4.0));
    const auto r = solve_mild(kHeat, f);
    for (const auto& s : r.u.slices) EXPECT_EQ(max_abs(s), 0.0);
}

TEST(Solver, ThreadCountDoesNotChangeBits) {
    EnsembleSpec ens;
    ens.time = TimeGrid(1.0, 16);
    const SpacetimeField f = make_member(ens, 2);
    const auto a = solve_mild(kHeat, f, 1);
    const auto b = solve_mild(kHeat, f, 3);
    for (int k = 0; k <= 16; ++k) EXPECT_EQ(a.u.slices[k].values, b.u.slices[k].values);
}

TEST(Adjoint, ZeroTestFunctionHasZeroError) {
    const SpacetimeField phi(TimeGrid(1.0, 16), SpectralGrid::standard(1));
    const auto r = adjoint_reproduce(kHeat, phi, {Probe{0.5, {0, 0, 0}}}, 4);
    EXPECT_EQ(r.max_error, 0.0);
}

TEST(Adjoint, ReproducesBumpAndConverges) {
    const auto g = SpectralGrid::standard(1);
    BumpParams bp;
    bp.x_width = 2.0;
    std::vector<double> err;
    for (int K : {256, 512}) {
        const auto phi = compact_bump_spacetime(g, TimeGrid(1.0, 4 * K), bp);
        const auto r = adjoint_reproduce(kHeat, phi, {Probe{0.5, {0, 0, 0}}, Probe{0.5, {1.5, 0, 0}}}, 4);
        err.push_back(r.max_error / r.phi_sup);
    }
    EXPECT_LT(err[1], 1e-3);
    EXPECT_NEAR(err[0] / err[1], 2.0, 0.4);
}

TEST(Adjoint, ErrorIsTranslationInvariant) {
    const auto g = SpectralGrid::standard(1);
    BumpParams bp;
    bp.x_width = 1.0;
    const auto phi0 = compact_bump_spacetime(g, TimeGrid(1.0, 256), bp);
    bp.x_center = {2.0, 0, 0};
    const auto phi1 = compact_bump_spacetime(g, TimeGrid(1.0, 256), bp);
    const auto a = adjoint_reproduce(kHeat, phi0, {Probe{0.5, {0.5, 0, 0}}}, 4);
    const auto b = adjoint_reproduce(kHeat, phi1, {Probe{0.5, {2.5, 0, 0}}}, 4);
    EXPECT_NEAR(a.max_error, b.max_error, 1e-12);
}

TEST(Adjoint, RejectsTestFunctionsThatDoNotVanish) {
    const auto g = SpectralGrid::standard(1);
    SpacetimeField phi(TimeGrid(1.0, 16), g);
    phi.slices.front() = gaussian_bump(g, 1.0);
    EXPECT_THROW(adjoint_reproduce(kHeat, phi, {Probe{}}, 4), PreconditionError);
}

TEST(WeakResidual, ZeroForcingAndSolvedForcing) {
    const auto g = SpectralGrid::standard(1);
    const TimeGrid tg(1.0, 256);
    BumpParams bp;
    bp.x_width = 1.0;
    const std::vector<SpacetimeField> phis{compact_bump_spacetime(g, tg, bp)};
    const SpacetimeField zero(tg, g);
    EXPECT_EQ(weak_residual(kHeat, zero, zero, phis).max_normalized, 0.0);
    const auto f = constant_in_time(tg, gaussian_bump(g, 1.5));
    const auto u = solve_mild(kHeat, f).u;
    EXPECT_LT(weak_residual(kHeat, u, f, phis).max_normalized, 1e-3);
    const SpacetimeField other(TimeGrid(1.0, 128), g);
    EXPECT_THROW(weak_residual(kHeat, u, other, phis), ConfigurationError);
}

TEST(Seeds, SplitmixAndProfiles) {
    EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
    const auto a = random_profile(0.5, 2.0, 8, 9);
    const auto b = random_profile(0.5, 2.0, 8, 9);
    ASSERT_EQ(a.pieces().size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(a.pieces()[i].level, b.pieces()[i].level);
        EXPECT_GE(a.pieces()[i].level, 0.5);
        EXPECT_LE(a.pieces()[i].level, 2.0);
    }
    EnsembleSpec e;
    EXPECT_NE(member_seed(e, 0), member_seed(e, 1));
}

TEST(Estimate, RatiosAreFiniteAndThreadIndependent) {
    EnsembleSpec ens;
    ens.time = TimeGrid(1.0, 16);
    EstimateOptions opt;
    opt.members = 3;
    for (double p : {2.0, kInfinity}) {
        opt.p = p;
        opt.threads = 1;
        const auto a = estimate_ratio(kHeat, ens, opt);
        opt.threads = 2;
        const auto b = estimate_ratio(kHeat, ens, opt);
        ASSERT_EQ(a.rows.size(), 3u);
        for (std::size_t i = 0; i < 3; ++i) {
            EXPECT_TRUE(std::isfinite(a.rows[i].ratio));
            EXPECT_GT(a.rows[i].ratio, 0.0);
            EXPECT_EQ(a.rows[i].ratio, b.rows[i].ratio);
        }
        EXPECT_GE(a.max_ratio, a.median_ratio);
    }
}

TEST(Estimate, HolderRejectsIntegerOrders) {
    EnsembleSpec ens;
    ens.time = TimeGrid(1.0, 8);
    EstimateOptions opt;
    opt.family = NormFamily::Holder;
    opt.m = 1.0;
    EXPECT_THROW(estimate_ratio(kHeat, ens, opt), ConfigurationError);
    opt.m = 0.5;
    EXPECT_THROW(estimate_ratio(SymbolSpec::fractional_laplacian(1, 1.5, 1.0), ens, opt), ConfigurationError);
    opt.p = 1.0;
    EXPECT_THROW(estimate_ratio(kHeat, ens, opt), ConfigurationError);
}

TEST(Weak11, LevelSetMeasureIsMonotone) {
    EnsembleSpec ens;
    ens.time = TimeGrid(1.0, 32);
    const auto t = weak11_probe(kHeat, ens, 0.5, 2, 0, 9, 6.0);
    ASSERT_EQ(t.rows.size(), 18u);
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        if (t.rows[i].member != t.rows[i - 1].member) continue;
        EXPECT_LE(t.rows[i].measure, t.rows[i - 1].measure);
    }
    // lowest lambda sits three decades under the median: every t > 0 is counted
    EXPECT_DOUBLE_EQ(t.rows.front().measure, 1.0);
    EXPECT_DOUBLE_EQ(t.rows.back().measure, 0.0);
}
